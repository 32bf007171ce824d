#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "glosskit/class_mapping.hpp"
#include "glosskit/skb.hpp"

namespace glosskit {

inline constexpr std::size_t kHyponymCap = 10;

// Everything the SKB knows about one class, in the shape the prompt renders.
struct SemanticPayload {
  std::optional<std::string> synset_id;  // empty for fallback classes
  std::string lemma;
  std::vector<std::string> synonyms;
  std::string gloss;
  std::vector<std::string> examples;
  std::vector<std::string> hypernyms;
  std::vector<std::string> hyponyms;

  bool operator==(const SemanticPayload&) const = default;
};

SemanticPayload build_semantic_payload(const SkbGraph& graph, const ClassMapping& mapping);

struct Exemplar {
  SemanticPayload input;
  std::string description;
};

// Instruction text and in-context exemplars, loaded from a versioned data file.
struct ExemplarSet {
  std::string version;
  std::string instruction;
  std::string contrast_template;  // {target} and {neighbor} placeholders
  std::vector<Exemplar> exemplars;
  std::string content_hash;  // sha256 of the file bytes
};

ExemplarSet parse_exemplars(std::string_view text);
ExemplarSet load_exemplars(const std::filesystem::path& path);
std::filesystem::path default_exemplar_path();

class PromptBuilder {
 public:
  explicit PromptBuilder(ExemplarSet exemplars);

  std::string normal_prompt(const SemanticPayload& target) const;

  // Throws SameClass when both payloads denote the same concept.
  std::string contrastive_prompt(const SemanticPayload& target, const SemanticPayload& neighbor) const;

  const ExemplarSet& exemplars() const noexcept { return exemplars_; }

 private:
  std::string scaffold() const;

  ExemplarSet exemplars_;
  std::string scaffold_;
};

// "Concept: ..." block in the layout shared by exemplars and targets.
std::string render_payload_block(const SemanticPayload& payload);

// Display form of a lemma: underscores become spaces.
std::string display_lemma(std::string_view lemma);

}  // namespace glosskit
