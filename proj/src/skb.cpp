#include "glosskit/skb.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <ostream>
#include <queue>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "glosskit/error.hpp"

namespace glosskit {
namespace {

using ordered_json = nlohmann::ordered_json;

void validate_synset(const Synset& s) {
  if (s.id.empty()) throw Error(ErrorCode::MalformedRecord, "synset with empty id");
  if (s.id == kVirtualRoot) throw Error(ErrorCode::MalformedRecord, "reserved id " + s.id);
  if (std::string_view("nvar").find(s.pos) == std::string_view::npos) {
    throw Error(ErrorCode::MalformedRecord, s.id + ": pos must be one of n,v,a,r");
  }
  if (s.lemmas.empty()) throw Error(ErrorCode::MalformedRecord, s.id + ": lemmas empty");
  for (const auto& lemma : s.lemmas) {
    if (lemma.empty()) throw Error(ErrorCode::MalformedRecord, s.id + ": empty lemma");
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& h : s.hypernym_ids) {
    if (h == s.id) throw Error(ErrorCode::MalformedRecord, s.id + ": lists itself as hypernym");
    if (!seen.insert(h).second) {
      throw Error(ErrorCode::MalformedRecord, s.id + ": duplicate hypernym " + h);
    }
  }
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += " -> ";
    out += id;
  }
  return out;
}

}  // namespace

SkbGraph SkbGraph::build(std::vector<Synset> synsets, std::optional<LemmaIndex> lemma_index,
                         bool frequency_unreliable) {
  SkbGraph g;
  g.synsets_ = std::move(synsets);
  g.frequency_unreliable_ = frequency_unreliable;
  const std::size_t n = g.synsets_.size();

  g.by_id_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    validate_synset(g.synsets_[i]);
    if (!g.by_id_.emplace(g.synsets_[i].id, i).second) {
      throw Error(ErrorCode::DuplicateId, g.synsets_[i].id);
    }
  }

  g.parents_.resize(n);
  g.children_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& h : g.synsets_[i].hypernym_ids) {
      const auto it = g.by_id_.find(h);
      if (it == g.by_id_.end()) {
        throw Error(ErrorCode::DanglingHypernym, g.synsets_[i].id + " -> " + h);
      }
      g.parents_[i].push_back(it->second);
      g.children_[it->second].push_back(i);
    }
  }
  for (auto& kids : g.children_) {
    std::sort(kids.begin(), kids.end(), [&](std::size_t a, std::size_t b) {
      return g.synsets_[a].id < g.synsets_[b].id;
    });
  }

  // Longest-path depth via iterative DFS over hypernym edges; a grey node
  // reached again closes a cycle.
  enum : std::uint8_t { kWhite, kGrey, kBlack };
  std::vector<std::uint8_t> colour(n, kWhite);
  g.depth_.assign(n, 0);
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (colour[start] != kWhite) continue;
    stack.emplace_back(start, 0);
    colour[start] = kGrey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < g.parents_[node].size()) {
        const std::size_t parent = g.parents_[node][next++];
        if (colour[parent] == kGrey) {
          std::vector<std::string> cycle;
          auto it = std::find_if(stack.begin(), stack.end(),
                                 [&](const auto& frame) { return frame.first == parent; });
          for (; it != stack.end(); ++it) cycle.push_back(g.synsets_[it->first].id);
          cycle.push_back(g.synsets_[parent].id);
          throw Error(ErrorCode::CycleDetected, join_ids(cycle));
        }
        if (colour[parent] == kWhite) {
          colour[parent] = kGrey;
          stack.emplace_back(parent, 0);
        }
        continue;
      }
      int best = 1;  // virtual root
      for (const auto parent : g.parents_[node]) best = std::max(best, g.depth_[parent]);
      g.depth_[node] = best + 1;
      colour[node] = kBlack;
      stack.pop_back();
    }
  }

  if (lemma_index) {
    for (const auto& [lemma, ids] : *lemma_index) {
      for (const auto& id : ids) {
        if (!g.contains(id)) {
          throw Error(ErrorCode::UnknownSynset, "lemma index entry " + lemma + " -> " + id);
        }
      }
    }
    g.lemma_index_ = std::move(*lemma_index);
  } else {
    for (const auto& s : g.synsets_) {
      std::unordered_set<std::string_view> seen;
      for (const auto& lemma : s.lemmas) {
        if (seen.insert(lemma).second) g.lemma_index_[lemma].push_back(s.id);
      }
    }
  }
  return g;
}

bool SkbGraph::contains(std::string_view id) const { return find(id) != nullptr; }

const Synset* SkbGraph::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &synsets_[it->second];
}

const Synset& SkbGraph::at(std::string_view id) const { return synsets_[index_of(id)]; }

std::size_t SkbGraph::index_of(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) throw Error(ErrorCode::UnknownSynset, std::string(id));
  return it->second;
}

std::vector<std::string> SkbGraph::hyponyms(std::string_view id) const {
  std::vector<std::string> out;
  for (const auto child : children_[index_of(id)]) out.push_back(synsets_[child].id);
  return out;
}

std::span<const std::string> SkbGraph::senses(std::string_view lemma) const {
  const auto it = lemma_index_.find(lemma);
  if (it == lemma_index_.end()) return {};
  return it->second;
}

int SkbGraph::depth(std::string_view id) const { return depth_[index_of(id)]; }

Ancestry SkbGraph::ancestry(std::size_t index) const {
  Ancestry result;
  std::unordered_map<std::size_t, int> dist;
  std::deque<std::size_t> queue{index};
  dist.emplace(index, 0);
  int root_distance = -1;
  while (!queue.empty()) {
    const std::size_t node = queue.front();
    queue.pop_front();
    const int d = dist[node];
    if (parents_[node].empty() && (root_distance < 0 || d + 1 < root_distance)) {
      root_distance = d + 1;
    }
    for (const auto parent : parents_[node]) {
      if (dist.emplace(parent, d + 1).second) queue.push_back(parent);
    }
  }
  result.nodes.assign(dist.begin(), dist.end());
  std::sort(result.nodes.begin(), result.nodes.end());
  result.virtual_root_distance = root_distance;
  return result;
}

std::optional<std::size_t> lowest_common_subsumer(const SkbGraph& graph, const Ancestry& a,
                                                  const Ancestry& b) {
  std::optional<std::size_t> best;
  auto ia = a.nodes.begin();
  auto ib = b.nodes.begin();
  while (ia != a.nodes.end() && ib != b.nodes.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      const std::size_t c = ia->first;
      if (!best || graph.depth_at(c) > graph.depth_at(*best) ||
          (graph.depth_at(c) == graph.depth_at(*best) && graph.node(c).id < graph.node(*best).id)) {
        best = c;
      }
      ++ia;
      ++ib;
    }
  }
  return best;
}

std::string SkbGraph::lcs(std::string_view a, std::string_view b) const {
  const auto anc_a = ancestry(index_of(a));
  const auto anc_b = ancestry(index_of(b));
  const auto best = lowest_common_subsumer(*this, anc_a, anc_b);
  return best ? synsets_[*best].id : std::string(kVirtualRoot);
}

Synset parse_skb_record(std::string_view line, std::size_t line_number) {
  const auto fail = [&](const std::string& why) {
    return Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_number) + ": " + why);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw fail(e.what());
  }
  if (!j.is_object()) throw fail("record is not an object");
  static const std::set<std::string> kFields{"id", "pos", "lemmas", "gloss", "examples", "hypernyms"};
  for (const auto& [key, value] : j.items()) {
    if (!kFields.contains(key)) throw fail("unknown field '" + key + "'");
  }
  for (const auto& key : kFields) {
    if (!j.contains(key)) throw fail("missing field '" + key + "'");
  }
  const auto string_list = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_array()) throw fail(std::string(key) + " must be a list");
    std::vector<std::string> out;
    for (const auto& item : v) {
      if (!item.is_string()) throw fail(std::string(key) + " must contain strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  };
  if (!j["id"].is_string() || !j["gloss"].is_string() || !j["pos"].is_string()) {
    throw fail("id, pos and gloss must be strings");
  }
  Synset s;
  s.id = j["id"].get<std::string>();
  const auto pos = j["pos"].get<std::string>();
  if (pos.size() != 1) throw fail("pos must be a single letter");
  s.pos = pos[0];
  s.lemmas = string_list("lemmas");
  s.gloss = j["gloss"].get<std::string>();
  s.examples = string_list("examples");
  s.hypernym_ids = string_list("hypernyms");
  try {
    validate_synset(s);
  } catch (const Error& e) {
    throw fail(e.what());
  }
  return s;
}

std::string format_skb_record(const Synset& s) {
  ordered_json j;
  j["id"] = s.id;
  j["pos"] = std::string(1, s.pos);
  j["lemmas"] = s.lemmas;
  j["gloss"] = s.gloss;
  j["examples"] = s.examples;
  j["hypernyms"] = s.hypernym_ids;
  return j.dump();
}

SkbGraph load_skb(std::istream& in) {
  std::vector<Synset> synsets;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto s = parse_skb_record(line, line_number);
    if (!ids.insert(s.id).second) throw Error(ErrorCode::DuplicateId, s.id);
    synsets.push_back(std::move(s));
  }
  return SkbGraph::build(std::move(synsets));
}

void write_skb(std::ostream& out, const SkbGraph& graph) {
  // Topological order over "sense X precedes sense Y" constraints taken from
  // the lemma index, smallest original position first.
  const std::size_t n = graph.size();
  std::vector<std::vector<std::size_t>> after(n);
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& [lemma, ids] : graph.lemma_index()) {
    for (std::size_t i = 1; i < ids.size(); ++i) {
      const auto from = graph.index_of(ids[i - 1]);
      const auto to = graph.index_of(ids[i]);
      after[from].push_back(to);
      ++indegree[to];
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const auto node = ready.top();
    ready.pop();
    order.push_back(node);
    for (const auto next : after[node]) {
      if (--indegree[next] == 0) ready.push(next);
    }
  }
  if (order.size() != n) {
    std::vector<std::string> stuck;
    for (std::size_t i = 0; i < n && stuck.size() < 8; ++i) {
      if (indegree[i] > 0) stuck.push_back(graph.node(i).id);
    }
    throw Error(ErrorCode::SenseOrderConflict,
                "sense orders of shared lemmas disagree; involved synsets include " +
                    join_ids(stuck));
  }
  for (const auto i : order) out << format_skb_record(graph.node(i)) << '\n';
}

}  // namespace glosskit
