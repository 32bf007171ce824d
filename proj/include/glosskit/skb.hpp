#pragma once

// Semantic knowledge base (SKB): an immutable is-a graph of synsets plus a
// lemma -> senses index whose order encodes sense frequency.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace glosskit {

// Marker returned by SkbGraph::lcs when the only shared subsumer is the
// virtual root sitting above every parentless synset. Never a valid id.
inline constexpr std::string_view kVirtualRoot = "<root>";

struct Synset {
  std::string id;
  char pos = 'n';
  std::vector<std::string> lemmas;
  std::string gloss;
  std::vector<std::string> examples;
  std::vector<std::string> hypernym_ids;

  bool operator==(const Synset&) const = default;
};

// lemma -> synset ids, most frequent sense first.
using LemmaIndex = std::map<std::string, std::vector<std::string>, std::less<>>;

// Upward reachability from one synset: every ancestor (itself included) with
// its shortest is-a edge distance, plus the distance to the virtual root.
struct Ancestry {
  std::vector<std::pair<std::size_t, int>> nodes;  // sorted by node index
  int virtual_root_distance = 0;
};

class SkbGraph {
 public:
  // Validates the synset invariants, resolves hypernyms, rejects cycles and
  // derives hyponym adjacency. Without an explicit lemma index, the index is
  // derived from synset order (lemma order within the list of records).
  static SkbGraph build(std::vector<Synset> synsets,
                        std::optional<LemmaIndex> lemma_index = std::nullopt,
                        bool frequency_unreliable = false);

  std::size_t size() const noexcept { return synsets_.size(); }
  std::span<const Synset> synsets() const noexcept { return synsets_; }

  bool contains(std::string_view id) const;
  const Synset* find(std::string_view id) const;
  const Synset& at(std::string_view id) const;  // throws UnknownSynset

  std::size_t index_of(std::string_view id) const;  // throws UnknownSynset
  const Synset& node(std::size_t index) const { return synsets_.at(index); }
  std::span<const std::size_t> parent_indices(std::size_t index) const { return parents_.at(index); }
  std::span<const std::size_t> child_indices(std::size_t index) const { return children_.at(index); }

  // Direct hyponym ids, ascending.
  std::vector<std::string> hyponyms(std::string_view id) const;

  // Senses of a lemma, most frequent first; empty when the lemma is unknown.
  std::span<const std::string> senses(std::string_view lemma) const;
  const LemmaIndex& lemma_index() const noexcept { return lemma_index_; }

  // True when sense order came from record order rather than frequency data.
  bool frequency_unreliable() const noexcept { return frequency_unreliable_; }

  // Nodes on the longest hypernym path up to and including the virtual root
  // (depth 1). A parentless synset has depth 2.
  int depth(std::string_view id) const;
  int depth_at(std::size_t index) const { return depth_.at(index); }

  // Deepest common subsumer in the reflexive hypernym closure of both; ties
  // go to the smallest id. Returns kVirtualRoot when nothing is shared.
  std::string lcs(std::string_view a, std::string_view b) const;

  Ancestry ancestry(std::size_t index) const;

 private:
  SkbGraph() = default;

  std::vector<Synset> synsets_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;  // sorted by id
  std::vector<int> depth_;
  LemmaIndex lemma_index_;
  bool frequency_unreliable_ = false;
};

// Deepest shared subsumer of two ancestries; nullopt means the virtual root.
std::optional<std::size_t> lowest_common_subsumer(const SkbGraph& graph, const Ancestry& a,
                                                  const Ancestry& b);

// One JSON object per line with exactly the fields id, pos, lemmas, gloss,
// examples, hypernyms. Blank lines are ignored.
SkbGraph load_skb(std::istream& in);

Synset parse_skb_record(std::string_view line, std::size_t line_number);
std::string format_skb_record(const Synset& synset);

// Writes records in an order from which load_skb re-derives the graph's
// lemma index exactly. Throws SenseOrderConflict when no such order exists.
void write_skb(std::ostream& out, const SkbGraph& graph);

}  // namespace glosskit
