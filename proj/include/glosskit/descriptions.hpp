#pragma once

// Normal ensembles, contrastive ensembles over similar neighbors, and the
// single-description silver set.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glosskit/class_mapping.hpp"
#include "glosskit/llm.hpp"
#include "glosskit/prompt.hpp"
#include "glosskit/similarity.hpp"
#include "glosskit/skb.hpp"

namespace glosskit {

enum class DescriptionMode { Normal, Contrastive, Silver };

std::string_view mode_name(DescriptionMode mode) noexcept;
DescriptionMode parse_mode(std::string_view name);

struct DescriptionRecord {
  std::string class_id;
  DescriptionMode mode = DescriptionMode::Normal;
  std::optional<std::string> neighbor;  // present iff mode == Contrastive
  std::string text;
  double temperature = 0.0;
  int num_generations = 1;
  int max_tokens = 35;
  std::uint64_t seed = 0;
  std::string prompt_hash;
  std::string backend;
  std::int64_t timestamp = 0;

  bool operator==(const DescriptionRecord&) const = default;
};

struct EnsembleConfig {
  int n_normal = 50;
  double t_normal = 2.5;
  int n_contrastive_total = 20;
  double t_contrastive = 1.5;
  double lambda = 0.5;
  int top_n = 5;  // N: neighbors per class
  int k = 4;      // generations per (class, neighbor) pair
  int max_tokens = 35;

  void validate() const;
};

// Class-by-class similarity over the mapped synsets, rows labelled by class_id
// in mapping order. Gloss-only classes join the graph as detached roots.
SimilarityMatrix build_class_matrix(const SkbGraph& graph, std::span<const ClassMapping> mappings, Metric metric,
                                    std::size_t threads = 0);

// Indices j != i with lambda <= M[i][j] <= 1, by descending score then
// ascending class id, at most n of them.
std::vector<std::size_t> select_contrastive_targets(const SimilarityMatrix& matrix, std::size_t i,
                                                    double lambda, std::size_t n);

// Called once per class, in class order, with that class's records.
using ClassDoneCallback = std::function<void(std::size_t class_index, std::span<const DescriptionRecord>)>;

struct GenerationContext {
  const SkbGraph& graph;
  std::span<const ClassMapping> mappings;
  const PromptBuilder& prompts;
  LlmBackend& backend;
  std::uint64_t seed = 0;
  std::vector<std::string> stop_sequences = default_stop_sequences();
  std::int64_t timestamp = 0;
  std::size_t in_flight = 1;
  std::size_t resume_from = 0;  // classes before this index are skipped
  ClassDoneCallback on_class_done;
};

std::vector<DescriptionRecord> generate_normal_ensemble(const GenerationContext& ctx,
                                                        const EnsembleConfig& config);

// Matrix rows must follow the mapping order.
std::vector<DescriptionRecord> generate_contrastive(const GenerationContext& ctx,
                                                    const SimilarityMatrix& matrix,
                                                    const EnsembleConfig& config);

// One greedy normal description per class, ordered by class_id. Classes are
// processed (and resume_from counted) in that order.
std::vector<DescriptionRecord> build_silver(const GenerationContext& ctx, int max_tokens = 35);

struct ClassDescriptions {
  std::string class_id;
  std::vector<DescriptionRecord> records;  // normal first, then contrastive
};

// Concatenates per class; throws MissingClass when a class ends up empty.
std::vector<ClassDescriptions> combine_ensembles(std::span<const std::string> class_ids,
                                                 std::span<const DescriptionRecord> normal,
                                                 std::span<const DescriptionRecord> contrastive);

std::string format_description_record(const DescriptionRecord& record);
DescriptionRecord parse_description_record(std::string_view line);
void write_descriptions(std::ostream& out, std::span<const DescriptionRecord> records);
std::vector<DescriptionRecord> read_descriptions(std::istream& in);

}  // namespace glosskit
