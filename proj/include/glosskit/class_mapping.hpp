#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glosskit/skb.hpp"

namespace glosskit {

struct ClassSpec {
  std::string class_id;
  std::string label;
  std::optional<std::string> override_synset;
  std::optional<std::string> manual_gloss;
};

enum class MappingSource { Heuristic, Override, Fallback };

std::string_view source_name(MappingSource source) noexcept;

inline constexpr std::string_view kWarnFrequencyUnreliable = "frequency_unreliable";
inline constexpr std::string_view kWarnSharedSynset = "shared_synset";

struct ClassMapping {
  std::string class_id;
  std::string label;
  std::optional<std::string> synset;        // empty for fallback mappings
  std::optional<std::string> manual_gloss;  // payload of fallback mappings
  MappingSource source = MappingSource::Heuristic;
  std::vector<std::string> warnings;

  bool is_fallback() const noexcept { return source == MappingSource::Fallback; }
  // Synset id, or "fallback:<class_id>" for gloss-only classes.
  std::string resolved_key() const;

  bool operator==(const ClassMapping&) const = default;
};

// Lowercase, spaces/hyphens -> underscores, trimmed, repeated separators collapsed.
std::string normalize_label(std::string_view label);

// Override, then most frequent sense of the normalized label, then the manual gloss.
ClassMapping map_class(const SkbGraph& graph, const ClassSpec& spec);

struct MappingFailure {
  std::string class_id;
  std::string message;
};

struct MappingReport {
  std::size_t heuristic = 0;
  std::size_t override_count = 0;
  std::size_t fallback = 0;
  std::vector<std::string> warnings;
  // synset id -> class ids, only synsets claimed by more than one class
  std::map<std::string, std::vector<std::string>> shared_synsets;
  std::vector<MappingFailure> failures;

  bool failed() const noexcept { return !failures.empty(); }
};

struct DatasetMapping {
  std::vector<ClassMapping> mappings;  // successful mappings, input order
  MappingReport report;
};

// Maps every class, collecting per-class failures instead of stopping.
DatasetMapping map_dataset(const SkbGraph& graph, std::span<const ClassSpec> specs);

// Class list: one JSON object per line with class_id, label, optional synset
// and optional gloss.
std::vector<ClassSpec> read_class_specs(std::istream& in);

// Overrides use the same record shape; entries replace synset/gloss by class_id.
void apply_overrides(std::vector<ClassSpec>& specs, std::span<const ClassSpec> overrides);

std::string format_mapping_record(const ClassMapping& mapping);
ClassMapping parse_mapping_record(std::string_view line);

std::string render_mapping_summary(const MappingReport& report);

}  // namespace glosskit
