// Batch workbench CLI: loads JSON fixtures, runs analyses and constructions,
// emits deterministic reports. Exit codes: 0 ok, 1 verification failure,
// 2 input error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "coarse/suites.hpp"

using namespace coarse;

namespace {

struct CommonFlags {
  std::string fixture_path;
  std::string out_path;
  std::string format = "text";
  std::uint64_t seed = 0;
  std::size_t atom_limit = kDefaultAtomLimit;
  std::optional<double> tolerance;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_fixture = true) {
  auto* f = cmd->add_option("--fixture", flags.fixture_path, "fixture JSON file");
  if (needs_fixture) f->required();
  cmd->add_option("--out", flags.out_path, "write the report to this path");
  cmd->add_option("--format", flags.format, "json|text")
      ->check(CLI::IsMember({"json", "text"}));
  cmd->add_option("--seed", flags.seed, "seed for randomized tie-breaking");
  cmd->add_option("--atom-limit", flags.atom_limit, "exact quasi-locality atom limit");
  cmd->add_option("--tolerance", flags.tolerance, "operator zero tolerance override");
}

ordered_json envelope(const std::string& command, const CommonFlags& flags,
                      const Fixture* fx, const std::vector<std::string>& input_names) {
  ordered_json out;
  out["command"] = command;
  out["tool_version"] = kToolVersion;
  ordered_json inputs = ordered_json::object();
  if (fx)
    for (const auto& name : input_names) {
      auto it = fx->hashes.find(name);
      inputs[name] = it == fx->hashes.end() ? "?" : it->second;
    }
  out["inputs"] = std::move(inputs);
  ordered_json settings = ordered_json::object();
  settings["atom_limit"] = flags.atom_limit;
  settings["seed"] = flags.seed;
  if (flags.tolerance) settings["tolerance"] = *flags.tolerance;
  out["settings"] = std::move(settings);
  return out;
}

void emit(const ordered_json& report, const CommonFlags& flags) {
  std::string text;
  if (flags.format == "json") {
    text = report.dump(2);
    text += "\n";
  } else {
    // flat text rendering: one "key: value" line per leaf, canonical order
    std::function<void(const ordered_json&, const std::string&)> walk =
        [&](const ordered_json& j, const std::string& prefix) {
          if (j.is_object()) {
            for (const auto& [k, v] : j.items())
              walk(v, prefix.empty() ? k : prefix + "." + k);
          } else if (j.is_array() && !j.empty() && (j[0].is_object() || j[0].is_array())) {
            for (std::size_t i = 0; i < j.size(); ++i)
              walk(j[i], prefix + "[" + std::to_string(i) + "]");
          } else {
            text += prefix + ": " + j.dump() + "\n";
          }
        };
    walk(report, "");
  }
  if (flags.out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(flags.out_path, std::ios::binary);
    if (!out) fail(errc::fixture_error, "cannot write " + flags.out_path);
    out << text;
  }
}

BlockOperator with_tolerance(const BlockOperator& op, const std::optional<double>& tol) {
  if (!tol) return op;
  return BlockOperator(op.domain_module(), op.codomain_module(), op.matrix(), *tol);
}

ordered_json scale_list(const std::vector<ScaleIndex>& xs) {
  ordered_json out = ordered_json::array();
  for (auto s : xs) out.push_back(scale_to_json(s));
  return out;
}

ordered_json report_operator_analysis(const BlockOperator& op, std::size_t atom_limit) {
  const OperatorReport r = analyze(op, atom_limit);
  ordered_json out;
  out["norm"] = r.norm;
  out["tolerance"] = r.tolerance;
  out["propagation"] = scale_to_json(r.propagation);
  out["support_atom_pairs"] = relation_to_json(r.supp.atom_level)["pairs"];
  out["support_points"] = relation_to_json(r.supp.point_level)["pairs"];
  out["ql_mode"] = r.ql.exact ? "exact" : "bounds";
  out["ql_profile"] = r.ql.values;
  out["ql_upper"] = r.ql.upper;
  out["trunc_profile"] = r.trunc;
  out["controlled"] = r.controlled;
  if (r.controlled) {
    out["controlled_modulus"] = scale_list(r.controlled_modulus);
  } else if (r.controlled_witness) {
    out["controlled_witness"] = r.controlled_witness->to_string();
  }
  out["proper"] = r.properness.proper;
  out["properness_characterizations_agree"] = r.properness.characterizations_agree;
  out["local_rank_rows"] = r.local_ranks.chi_t;
  out["local_rank_cols"] = r.local_ranks.t_chi;
  return out;
}

ordered_json report_map_check(const Fixture& fx, const Fixture::MapEntry& entry) {
  const CoarseSpace& sx = fx.space(entry.source);
  const CoarseSpace& sy = fx.space(entry.target);
  ordered_json out;
  const ControlledCheck check = check_controlled(sx, sy, entry.relation);
  out["controlled"] = check.ok();
  if (!check.ok()) {
    out["witness"] = check.witness->to_string();
    return out;
  }
  const ControlledMap& f = *check.map;
  out["modulus"] = scale_list(f.modulus_table());
  out["everywhere_defined_scale"] = scale_to_json(f.everywhere_defined_scale());
  const PropernessReport prop = is_proper(f);
  out["proper"] = prop.proper;
  const EmbeddingModulus em = embedding_modulus(f);
  out["embedding"] = em.embedding;
  out["embedding_modulus"] = scale_list(em.omega);
  const EquivalenceReport eq = is_coarse_equivalence(f);
  out["coarse_equivalence"] = eq.equivalence;
  if (!eq.equivalence) out["equivalence_failure"] = eq.failure;
  if (eq.cert_f_finv) out["cert_f_finv"] = eq.cert_f_finv->to_string();
  if (eq.cert_finv_f) out["cert_finv_f"] = eq.cert_finv_f->to_string();
  return out;
}

int run_verify(const CommonFlags& flags, const std::string& suite, double fraction,
               bool inject_bug) {
  std::optional<Fixture> fx;
  if (!flags.fixture_path.empty()) fx = load_fixture(flags.fixture_path);

  suites::Options opt;
  opt.seed = flags.seed;
  opt.fraction = fraction;
  opt.inject_bug = inject_bug;
  const suites::SuiteResult r = suites::run(suite, opt, fx ? &*fx : nullptr);

  ordered_json report = envelope("verify", flags, nullptr, {});
  report["settings"]["suite"] = suite;
  report["settings"]["fraction"] = fraction;
  if (inject_bug) report["settings"]["inject_bug"] = true;
  // reports are byte-stable: volatile data (timings, instance tallies) only
  // appears on failing checks, where the nonzero exit already marks the run
  ordered_json checks = ordered_json::array();
  for (const auto& c : r.checks) {
    ordered_json cj;
    cj["name"] = c.name;
    cj["pass"] = c.pass;
    if (!c.pass && !c.detail.empty()) cj["detail"] = c.detail;
    checks.push_back(std::move(cj));
  }
  report["results"] = ordered_json{{"suite", r.suite},
                                   {"passed", r.passed()},
                                   {"checks", std::move(checks)}};
  emit(report, flags);
  return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite coarse-space and Roe-operator workbench"};
  app.require_subcommand(1);

  CommonFlags flags;

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "full operator report");
  std::string operator_name;
  add_common(analyze_cmd, flags);
  analyze_cmd->add_option("--operator", operator_name, "operator name")->required();

  // classify-module
  auto* classify_cmd = app.add_subcommand("classify-module", "module classification scales");
  std::string module_name;
  add_common(classify_cmd, flags);
  classify_cmd->add_option("--module", module_name, "module name")->required();

  // check-map
  auto* checkmap_cmd = app.add_subcommand("check-map", "controlledness and moduli of a map");
  std::string map_name;
  add_common(checkmap_cmd, flags);
  checkmap_cmd->add_option("--map", map_name, "map name")->required();

  // cover
  auto* cover_cmd = app.add_subcommand("cover", "build a covering operator");
  std::string cover_map, cover_source, cover_target, cover_kind = "isometry";
  std::string cover_out_op;
  bool cover_seeded = false;
  add_common(cover_cmd, flags);
  cover_cmd->add_option("--map", cover_map)->required();
  cover_cmd->add_option("--source-module", cover_source)->required();
  cover_cmd->add_option("--target-module", cover_target)->required();
  cover_cmd->add_option("--kind", cover_kind, "partial-isometry|isometry|coisometry|unitary")
      ->check(CLI::IsMember({"partial-isometry", "isometry", "coisometry", "unitary"}));
  cover_cmd->add_flag("--seeded", cover_seeded, "use --seed for tie-breaking");
  cover_cmd->add_option("--out-operator", cover_out_op, "write the matrix as a fixture file");

  // band
  auto* band_cmd = app.add_subcommand("band", "band decomposition of an operator");
  std::string band_operator;
  add_common(band_cmd, flags);
  band_cmd->add_option("--operator", band_operator)->required();

  // expect
  auto* expect_cmd = app.add_subcommand("expect", "conditional expectation onto the atoms");
  std::string expect_operator;
  add_common(expect_cmd, flags);
  expect_cmd->add_option("--operator", expect_operator)->required();

  // approx-unit
  auto* approx_cmd = app.add_subcommand("approx-unit", "approximate unit witness");
  std::string approx_operator;
  double approx_epsilon = 0.1;
  add_common(approx_cmd, flags);
  approx_cmd->add_option("--operator", approx_operator)->required();
  approx_cmd->add_option("--epsilon", approx_epsilon, "per-anulus accuracy");

  // k-unitary
  auto* kun_cmd = app.add_subcommand("k-unitary", "2x2 unitary witness for two isometries");
  std::string kun_t0, kun_t1;
  add_common(kun_cmd, flags);
  kun_cmd->add_option("--t0", kun_t0)->required();
  kun_cmd->add_option("--t1", kun_t1)->required();

  // components
  auto* comp_cmd = app.add_subcommand("components", "component structure");
  std::string comp_operator, comp_space;
  add_common(comp_cmd, flags);
  comp_cmd->add_option("--operator", comp_operator, "decompose this operator");
  comp_cmd->add_option("--space", comp_space, "or list components of this space");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run a law suite");
  std::string suite_name;
  double fraction = 0.2;
  bool inject_bug = false;
  add_common(verify_cmd, flags, /*needs_fixture=*/false);
  verify_cmd->add_option("--suite", suite_name, "suite name")->required();
  verify_cmd->add_option("--fraction", fraction, "instance-count fraction of the full gate");
  verify_cmd->add_flag("--inject-bug", inject_bug, "negative control: sabotage and expect failure");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify_cmd->parsed()) return run_verify(flags, suite_name, fraction, inject_bug);

    Fixture fx = load_fixture(flags.fixture_path);

    if (analyze_cmd->parsed()) {
      const BlockOperator op = with_tolerance(fx.op(operator_name).op, flags.tolerance);
      ordered_json report = envelope("analyze", flags, &fx, {operator_name});
      report["results"] = report_operator_analysis(op, flags.atom_limit);
      emit(report, flags);
      return 0;
    }

    if (classify_cmd->parsed()) {
      const GeoModule& m = fx.module(module_name);
      const ModuleReport r = m.classify();
      ordered_json report = envelope("classify-module", flags, &fx, {module_name});
      ordered_json res;
      res["total_dim"] = m.total_dim();
      res["atoms"] = m.atom_count();
      res["nondegeneracy_scale"] = scale_to_json(r.nondegeneracy_scale);
      res["admissibility_scale"] = scale_to_json(r.admissibility_scale);
      res["discreteness_scale"] = scale_to_json(r.discreteness_scale);
      res["faithfulness_scale"] = scale_to_json(r.faithfulness_scale);
      res["ampleness"] = r.ampleness ? ordered_json(*r.ampleness) : ordered_json(nullptr);
      report["results"] = std::move(res);
      emit(report, flags);
      return 0;
    }

    if (checkmap_cmd->parsed()) {
      ordered_json report = envelope("check-map", flags, &fx, {map_name});
      report["results"] = report_map_check(fx, fx.map(map_name));
      emit(report, flags);
      return 0;
    }

    if (cover_cmd->parsed()) {
      const auto& entry = fx.map(cover_map);
      const ControlledMap f = require_controlled(fx.space(entry.source),
                                                 fx.space(entry.target), entry.relation);
      CoverKind kind = CoverKind::isometry;
      if (cover_kind == "partial-isometry") kind = CoverKind::partial_isometry;
      if (cover_kind == "coisometry") kind = CoverKind::coisometry;
      if (cover_kind == "unitary") kind = CoverKind::unitary;
      std::optional<std::uint64_t> seed;
      if (cover_seeded) seed = flags.seed;
      const CoverResult c =
          cover(f, fx.module(cover_source), fx.module(cover_target), kind, seed);

      ordered_json report =
          envelope("cover", flags, &fx, {cover_map, cover_source, cover_target});
      ordered_json res;
      res["kind"] = cover_kind_name(c.kind);
      res["kind_identity_error"] = c.kind_identity_error;
      res["certificate"] = c.certificate.to_string();
      res["routing_scale"] = c.routing_scale;
      ordered_json matching = ordered_json::array();
      for (auto [i, j] : c.matching) matching.push_back({i, j});
      res["matching"] = std::move(matching);
      report["results"] = std::move(res);
      emit(report, flags);

      if (!cover_out_op.empty()) {
        // self-contained fixture: the referenced spaces and modules travel
        // with the operator
        ordered_json opfile;
        ordered_json spaces = ordered_json::object();
        ordered_json modules = ordered_json::object();
        for (const std::string& mn : {cover_source, cover_target}) {
          const std::string& sn = fx.module_space.at(mn);
          spaces[sn] = space_to_json(fx.space(sn));
          ordered_json mj = module_to_json(fx.module(mn));
          mj["space"] = sn;
          modules[mn] = std::move(mj);
        }
        opfile["spaces"] = std::move(spaces);
        opfile["modules"] = std::move(modules);
        opfile["operators"] = {{"cover", {{"module", {cover_source, cover_target}},
                                          {"matrix", matrix_to_json(c.op.matrix())},
                                          {"tolerance", 0.0}}}};
        std::ofstream out(cover_out_op, std::ios::binary);
        if (!out) fail(errc::fixture_error, "cannot write " + cover_out_op);
        out << opfile.dump(2) << "\n";
      }
      return 0;
    }

    if (band_cmd->parsed()) {
      const BlockOperator op = with_tolerance(fx.op(band_operator).op, flags.tolerance);
      const BandDecomposition bd = band_decompose(op, op.domain_module().atoms());
      ordered_json report = envelope("band", flags, &fx, {band_operator});
      ordered_json res;
      res["pieces"] = bd.pieces.size();
      res["max_degree"] = bd.max_degree;
      ordered_json coloring = ordered_json::array();
      for (const auto& [pair, color] : bd.coloring)
        coloring.push_back({pair.first, pair.second, color});
      res["coloring"] = std::move(coloring);
      report["results"] = std::move(res);
      emit(report, flags);
      return 0;
    }

    if (expect_cmd->parsed()) {
      const BlockOperator op = with_tolerance(fx.op(expect_operator).op, flags.tolerance);
      const BlockOperator e = conditional_expectation(op, op.domain_module().atoms());
      ordered_json report = envelope("expect", flags, &fx, {expect_operator});
      ordered_json res;
      res["norm"] = operator_norm(e.matrix());
      res["matrix"] = matrix_to_json(e.matrix());
      report["results"] = std::move(res);
      emit(report, flags);
      return 0;
    }

    if (approx_cmd->parsed()) {
      const BlockOperator op = with_tolerance(fx.op(approx_operator).op, flags.tolerance);
      const ApproxUnitWitness w = approximate_unit(op, approx_epsilon);
      ordered_json report = envelope("approx-unit", flags, &fx, {approx_operator});
      ordered_json res;
      res["epsilon"] = approx_epsilon;
      res["certified_bound"] = w.certified_bound;
      res["measured"] = w.measured;
      res["measured_even"] = w.measured_even;
      res["measured_odd"] = w.measured_odd;
      res["even_part"] = index_set_to_json(w.even_part);
      res["odd_part"] = index_set_to_json(w.odd_part);
      res["kept_rank"] = w.kept_rank;
      res["p_propagation"] = scale_to_json(w.p_propagation);
      ordered_json classes = ordered_json::array();
      for (const auto& cls : w.classes) classes.push_back(cls);
      res["classes"] = std::move(classes);
      ordered_json anuli = ordered_json::array();
      for (const auto& cls : w.anuli) {
        ordered_json per = ordered_json::array();
        for (const auto& b : cls) per.push_back(index_set_to_json(b));
        anuli.push_back(std::move(per));
      }
      res["anuli"] = std::move(anuli);
      report["results"] = std::move(res);
      emit(report, flags);
      return 0;
    }

    if (kun_cmd->parsed()) {
      const BlockOperator t0 = fx.op(kun_t0).op;
      const BlockOperator t1 = fx.op(kun_t1).op;
      const KTheoryUnitary u = ktheory_unitary(t0, t1, 10, flags.seed);
      ordered_json report = envelope("k-unitary", flags, &fx, {kun_t0, kun_t1});
      ordered_json res;
      res["selfadjoint_error"] = u.selfadjoint_error;
      res["involution_error"] = u.involution_error;
      res["unitary_error"] = u.unitary_error;
      res["conjugation_error"] = u.conjugation_error;
      ordered_json props = ordered_json::array();
      for (const auto& s : u.block_propagation) props.push_back(scale_to_json(s));
      res["block_propagation"] = std::move(props);
      res["blocks_controlled"] = u.blocks_controlled;
      report["results"] = std::move(res);
      emit(report, flags);
      return 0;
    }

    if (comp_cmd->parsed()) {
      ordered_json report = envelope("components", flags, &fx,
                                     comp_operator.empty()
                                         ? std::vector<std::string>{comp_space}
                                         : std::vector<std::string>{comp_operator});
      ordered_json res;
      if (!comp_operator.empty()) {
        const BlockOperator op = with_tolerance(fx.op(comp_operator).op, flags.tolerance);
        const ComponentDecomposition cd = component_decompose(op);
        res["pieces"] = cd.pieces.size();
        res["sum_exact"] = cd.sum_exact;
        res["off_blocks_zero"] = cd.off_blocks_zero;
        res["equi_scale"] = scale_to_json(cd.equi_scale);
        res["component_propagation"] = scale_list(cd.component_propagation);
      } else if (!comp_space.empty()) {
        const CoarseSpace& s = fx.space(comp_space);
        res["count"] = s.component_count();
        ordered_json blocks = ordered_json::array();
        for (const auto& b : s.components().blocks()) blocks.push_back(index_set_to_json(b));
        res["blocks"] = std::move(blocks);
      } else {
        fail(errc::fixture_error, "components needs --operator or --space");
      }
      report["results"] = std::move(res);
      emit(report, flags);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
