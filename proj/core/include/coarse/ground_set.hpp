#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "coarse/errors.hpp"

namespace coarse {

/// The underlying finite set X. Elements are the indices 0..n-1; labels are
/// display-only. Each constructed set carries a fresh identity token, and
/// relations refuse to mix sets with different tokens: matching sizes are not
/// enough to compose.
class GroundSet {
 public:
  explicit GroundSet(std::size_t n, std::vector<std::string> labels = {}) {
    require(n >= 1, errc::index_out_of_range, "ground set must be nonempty");
    if (!labels.empty()) {
      require(labels.size() == n, errc::index_out_of_range,
              "label count " + std::to_string(labels.size()) + " != n = " + std::to_string(n));
      std::unordered_set<std::string> seen(labels.begin(), labels.end());
      require(seen.size() == n, errc::index_out_of_range, "labels must be pairwise distinct");
    }
    data_ = std::make_shared<const Data>(Data{n, std::move(labels), next_token()});
  }

  std::size_t size() const { return data_->n; }
  std::uint64_t token() const { return data_->token; }

  bool same_as(const GroundSet& o) const { return data_->token == o.data_->token; }

  std::string label(std::size_t i) const {
    require(i < data_->n, errc::index_out_of_range, "element " + std::to_string(i));
    if (data_->labels.empty()) return std::to_string(i);
    return data_->labels[i];
  }

  bool has_labels() const { return !data_->labels.empty(); }
  const std::vector<std::string>& labels() const { return data_->labels; }

 private:
  struct Data {
    std::size_t n;
    std::vector<std::string> labels;
    std::uint64_t token;
  };

  static std::uint64_t next_token() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
  }

  std::shared_ptr<const Data> data_;
};

inline void require_same_ground(const GroundSet& a, const GroundSet& b, const char* where) {
  require(a.same_as(b), errc::ground_set_mismatch,
          std::string(where) + ": ground sets differ (tokens " + std::to_string(a.token()) +
              " vs " + std::to_string(b.token()) + ")");
}

}  // namespace coarse
