#include "glosskit/similarity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "glosskit/error.hpp"
#include "glosskit/hash.hpp"

namespace glosskit {
namespace {

int distance_to(const Ancestry& a, std::size_t node) {
  const auto it = std::lower_bound(a.nodes.begin(), a.nodes.end(), std::make_pair(node, 0),
                                   [](const auto& x, const auto& y) { return x.first < y.first; });
  return it->second;
}

}  // namespace

std::string_view metric_tag(Metric metric) noexcept {
  return metric == Metric::WuPalmer ? "wup" : "path";
}

Metric parse_metric(std::string_view tag) {
  if (tag == "wup") return Metric::WuPalmer;
  if (tag == "path") return Metric::Path;
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(tag) + "'");
}

double wup_similarity(const SkbGraph& graph, const Ancestry& a, const Ancestry& b) {
  const auto lcs = lowest_common_subsumer(graph, a, b);
  int d_lcs = 1;
  int up_a = a.virtual_root_distance;
  int up_b = b.virtual_root_distance;
  if (lcs) {
    d_lcs = graph.depth_at(*lcs);
    up_a = distance_to(a, *lcs);
    up_b = distance_to(b, *lcs);
  }
  return 2.0 * d_lcs / static_cast<double>(2 * d_lcs + up_a + up_b);
}

double path_similarity(const Ancestry& a, const Ancestry& b) {
  int best = a.virtual_root_distance + b.virtual_root_distance;
  auto ia = a.nodes.begin();
  auto ib = b.nodes.begin();
  while (ia != a.nodes.end() && ib != b.nodes.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      best = std::min(best, ia->second + ib->second);
      ++ia;
      ++ib;
    }
  }
  return 1.0 / (best + 1.0);
}

double wup_similarity(const SkbGraph& graph, std::string_view a, std::string_view b) {
  return wup_similarity(graph, graph.ancestry(graph.index_of(a)), graph.ancestry(graph.index_of(b)));
}

double path_similarity(const SkbGraph& graph, std::string_view a, std::string_view b) {
  return path_similarity(graph.ancestry(graph.index_of(a)), graph.ancestry(graph.index_of(b)));
}

SimilarityMatrix::SimilarityMatrix(std::vector<std::string> class_ids, Metric metric,
                                   std::vector<double> values)
    : class_ids_(std::move(class_ids)), metric_(metric), values_(std::move(values)) {
  if (class_ids_.empty()) throw Error(ErrorCode::EmptyClassSet, "similarity matrix needs >= 1 class");
  if (values_.size() != class_ids_.size() * class_ids_.size()) {
    throw Error(ErrorCode::MalformedMatrix, "value count does not match n*n");
  }
}

SimilarityMatrix build_similarity_matrix(const SkbGraph& graph, std::span<const std::string> class_ids,
                                         Metric metric, std::size_t threads) {
  const std::size_t n = class_ids.size();
  if (n == 0) throw Error(ErrorCode::EmptyClassSet, "no classes given");

  std::vector<Ancestry> ancestries;
  ancestries.reserve(n);
  for (const auto& id : class_ids) ancestries.push_back(graph.ancestry(graph.index_of(id)));

  std::vector<double> values(n * n, 0.0);
  // Row i owns cells (i, j) and (j, i) for j >= i, so workers never collide.
  const auto fill_rows = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < n; i += stride) {
      values[i * n + i] = 1.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double s = metric == Metric::WuPalmer
                             ? wup_similarity(graph, ancestries[i], ancestries[j])
                             : path_similarity(ancestries[i], ancestries[j]);
        values[i * n + j] = s;
        values[j * n + i] = s;
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    fill_rows(0, 1);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) workers.emplace_back(fill_rows, t, threads);
  }
  return SimilarityMatrix({class_ids.begin(), class_ids.end()}, metric, std::move(values));
}

void write_matrix(std::ostream& out, const SimilarityMatrix& m) {
  out << "simmatrix v1 " << metric_tag(m.metric()) << ' ' << m.size() << '\n';
  for (const auto& id : m.class_ids()) out << id << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (j) out << ' ';
      out << format_double(m.at(i, j));
    }
    out << '\n';
  }
}

SimilarityMatrix read_matrix(std::istream& in) {
  const auto fail = [](const std::string& why) { return Error(ErrorCode::MalformedMatrix, why); };
  std::string line;
  if (!std::getline(in, line)) throw fail("missing header");
  std::istringstream header(line);
  std::string magic, version, tag;
  std::size_t n = 0;
  if (!(header >> magic >> version >> tag >> n) || magic != "simmatrix" || version != "v1") {
    throw fail("bad header '" + line + "'");
  }
  const Metric metric = parse_metric(tag);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line) || line.empty()) throw fail("missing class id " + std::to_string(i));
    ids.push_back(line);
  }
  std::vector<double> values;
  values.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw fail("missing row " + std::to_string(i));
    std::istringstream row(line);
    std::string tok;
    std::size_t count = 0;
    while (row >> tok) {
      double v = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw fail("bad score '" + tok + "'");
      }
      values.push_back(v);
      ++count;
    }
    if (count != n) throw fail("row " + std::to_string(i) + " has " + std::to_string(count) + " entries");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i * n + i] != 1.0) throw fail("diagonal entry " + std::to_string(i) + " is not 1");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = values[i * n + j];
      if (!(v > 0.0 && v <= 1.0)) throw fail("entry outside (0, 1]");
      if (v != values[j * n + i]) throw fail("matrix is not symmetric");
    }
  }
  return SimilarityMatrix(std::move(ids), metric, std::move(values));
}

}  // namespace glosskit
