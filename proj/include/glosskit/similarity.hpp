#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glosskit/skb.hpp"

namespace glosskit {

enum class Metric { WuPalmer, Path };

std::string_view metric_tag(Metric metric) noexcept;  // "wup" | "path"
Metric parse_metric(std::string_view tag);           // throws InvalidArgument

// 2*d_lcs / (d_a + d_b) with d_x = d_lcs + shortest edge count from x to the lcs.
double wup_similarity(const SkbGraph& graph, std::string_view a, std::string_view b);

// 1 / (d + 1), d = fewest is-a edges between a and b through a shared subsumer
// (the virtual root included).
double path_similarity(const SkbGraph& graph, std::string_view a, std::string_view b);

double wup_similarity(const SkbGraph& graph, const Ancestry& a, const Ancestry& b);
double path_similarity(const Ancestry& a, const Ancestry& b);

// Row-major, symmetric, unit diagonal, entries in (0, 1].
class SimilarityMatrix {
 public:
  SimilarityMatrix(std::vector<std::string> class_ids, Metric metric, std::vector<double> values);

  std::size_t size() const noexcept { return class_ids_.size(); }
  Metric metric() const noexcept { return metric_; }
  std::span<const std::string> class_ids() const noexcept { return class_ids_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * size() + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * size(), size()}; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<std::string> class_ids_;
  Metric metric_;
  std::vector<double> values_;
};

// All-pairs matrix over class_ids; only the upper triangle is evaluated.
SimilarityMatrix build_similarity_matrix(const SkbGraph& graph, std::span<const std::string> class_ids,
                                         Metric metric, std::size_t threads = 0);

// `simmatrix v1 <metric> <n>`, n id lines, n rows of n scores.
void write_matrix(std::ostream& out, const SimilarityMatrix& matrix);
SimilarityMatrix read_matrix(std::istream& in);

}  // namespace glosskit
