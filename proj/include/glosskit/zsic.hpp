#pragma once

// Zero-shot classification: ensemble prototypes, cosine argmax, and
// accuracy / confusion / false-positive reporting.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace glosskit {

// Finite real vector of fixed dimension.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values);  // throws NonFiniteValue

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const noexcept;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

struct ClassPrototype {
  std::string class_id;
  EmbeddingVector vector;  // unit norm
  std::size_t count = 0;   // descriptions aggregated
};

inline constexpr std::string_view kAggregationRule = "l2-normalize, mean, l2-normalize";

// Normalizes each vector, averages, and normalizes the mean.
EmbeddingVector class_prototype(std::span<const EmbeddingVector> vectors);
ClassPrototype make_prototype(std::string class_id, std::span<const EmbeddingVector> vectors);

struct Prediction {
  std::string class_id;
  double score = 0.0;
  std::vector<double> scores;  // cosine per prototype, prototype order
};

// Cosine argmax; ties go to the smallest class_id.
Prediction classify(std::span<const ClassPrototype> prototypes, const EmbeddingVector& image);

struct LabeledImage {
  std::string image_id;
  EmbeddingVector vector;
  std::string gold;
};

struct ClassTally {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy() const noexcept { return total ? static_cast<double>(correct) / total : 0.0; }
};

struct EvalReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  double top1_accuracy = 0.0;
  std::vector<std::string> class_ids;  // prototype classes, sorted
  std::map<std::string, ClassTally> per_class;
  std::map<std::string, std::map<std::string, std::size_t>> confusion;  // gold -> predicted -> count
  std::vector<std::pair<std::string, std::string>> predictions;          // (image_id, predicted), input order
  std::string aggregation{kAggregationRule};
};

// Per-image classification, parallel over images; counts merged from
// per-worker partials.
EvalReport evaluate(std::span<const ClassPrototype> prototypes, std::span<const LabeledImage> images,
                    std::size_t threads = 0);

// Predicted classes for gold == class_id, excluding correct predictions,
// descending count then ascending class id, at most top_m entries.
std::vector<std::pair<std::string, std::size_t>> false_positive_report(const EvalReport& report,
                                                                       std::string_view class_id,
                                                                       std::size_t top_m);

struct FalsePositiveComparison {
  std::string class_id;
  std::vector<std::pair<std::string, std::size_t>> false_positives;
  std::vector<std::string> contrastive;  // neighbors chosen by the selection step
  std::vector<bool> hits;                // per false positive: also a contrastive neighbor
};

FalsePositiveComparison compare_false_positives(const EvalReport& report, std::string_view class_id,
                                                std::size_t top_m, std::span<const std::string> contrastive);

void write_report_records(std::ostream& out, const EvalReport& report);
std::string render_report_table(const EvalReport& report);
std::string render_false_positive_table(std::span<const FalsePositiveComparison> rows);

}  // namespace glosskit
