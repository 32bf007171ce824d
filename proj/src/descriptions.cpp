#include "glosskit/descriptions.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "glosskit/error.hpp"
#include "glosskit/hash.hpp"

namespace glosskit {
namespace {

using ClassTask = std::function<std::vector<DescriptionRecord>(std::size_t position)>;

// Runs task(p) for positions [start, count) on up to `in_flight` threads.
// Completed classes are handed to `done` strictly in position order; on
// failure the completed prefix is still delivered before the first error
// (lowest position) is rethrown.
std::vector<DescriptionRecord> run_in_order(std::size_t count, std::size_t start, std::size_t in_flight,
                                            const ClassTask& task,
                                            const std::function<void(std::size_t, std::span<const DescriptionRecord>)>& done) {
  if (start >= count) return {};
  std::vector<std::optional<std::vector<DescriptionRecord>>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{start};
  std::atomic<bool> stop{false};
  std::mutex flush_mutex;
  std::size_t flushed = start;
  std::vector<DescriptionRecord> out;

  const auto flush = [&] {
    // Caller holds flush_mutex.
    while (flushed < count && slots[flushed]) {
      if (done) done(flushed, *slots[flushed]);
      out.insert(out.end(), slots[flushed]->begin(), slots[flushed]->end());
      slots[flushed].reset();
      ++flushed;
    }
  };
  const auto worker = [&] {
    while (!stop.load()) {
      const auto p = next.fetch_add(1);
      if (p >= count) return;
      try {
        auto records = task(p);
        std::lock_guard lock(flush_mutex);
        slots[p] = std::move(records);
        flush();
      } catch (...) {
        std::lock_guard lock(flush_mutex);
        errors[p] = std::current_exception();
        stop.store(true);
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(in_flight, count - start));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<SemanticPayload> payloads_for(const GenerationContext& ctx) {
  std::vector<SemanticPayload> out;
  out.reserve(ctx.mappings.size());
  for (const auto& m : ctx.mappings) out.push_back(build_semantic_payload(ctx.graph, m));
  return out;
}

DescriptionRecord make_record(const GenerationContext& ctx, const ClassMapping& mapping, DescriptionMode mode,
                              const GenParams& params, const std::string& prompt_hash, std::string text) {
  DescriptionRecord r;
  r.class_id = mapping.class_id;
  r.mode = mode;
  r.text = std::move(text);
  r.temperature = params.temperature;
  r.num_generations = params.effective_generations();
  r.max_tokens = params.max_tokens;
  r.seed = params.seed;
  r.prompt_hash = prompt_hash;
  r.backend = ctx.backend.tag();
  r.timestamp = ctx.timestamp;
  return r;
}

GenParams params_for(const GenerationContext& ctx, double temperature, int count, int max_tokens) {
  GenParams p;
  p.temperature = temperature;
  p.num_generations = count;
  p.max_tokens = max_tokens;
  p.stop_sequences = ctx.stop_sequences;
  p.seed = ctx.seed;
  p.validate();
  return p;
}

}  // namespace

std::string_view mode_name(DescriptionMode mode) noexcept {
  switch (mode) {
    case DescriptionMode::Normal: return "normal";
    case DescriptionMode::Contrastive: return "contrastive";
    case DescriptionMode::Silver: return "silver";
  }
  return "normal";
}

DescriptionMode parse_mode(std::string_view name) {
  if (name == "normal") return DescriptionMode::Normal;
  if (name == "contrastive") return DescriptionMode::Contrastive;
  if (name == "silver") return DescriptionMode::Silver;
  throw Error(ErrorCode::InvalidArgument, "unknown description mode '" + std::string(name) + "'");
}

void EnsembleConfig::validate() const {
  const auto bad = [](const std::string& why) { return Error(ErrorCode::InvalidConfig, why); };
  if (!(lambda > 0.0 && lambda <= 1.0)) throw bad("lambda must lie in (0, 1]");
  if (top_n < 0) throw bad("top_n must be >= 0");
  if (k < 1) throw bad("k must be >= 1");
  if (n_normal < 1) throw bad("n_normal must be >= 1");
  if (max_tokens < 1) throw bad("max_tokens must be >= 1");
  if (!(t_normal >= 0.0) || !(t_contrastive >= 0.0)) throw bad("temperatures must be >= 0");
  if (top_n * k != n_contrastive_total) {
    throw bad("n_contrastive_total (" + std::to_string(n_contrastive_total) + ") must equal top_n * k (" +
              std::to_string(top_n * k) + ")");
  }
}

SimilarityMatrix build_class_matrix(const SkbGraph& graph, std::span<const ClassMapping> mappings, Metric metric,
                                    std::size_t threads) {
  std::vector<std::string> keys;
  std::vector<std::string> class_ids;
  for (const auto& m : mappings) {
    keys.push_back(m.resolved_key());
    class_ids.push_back(m.class_id);
  }
  const bool any_fallback = std::any_of(mappings.begin(), mappings.end(), [](const auto& m) { return m.is_fallback(); });
  std::optional<SimilarityMatrix> by_key;
  if (any_fallback) {
    std::vector<Synset> synsets(graph.synsets().begin(), graph.synsets().end());
    for (const auto& m : mappings) {
      if (!m.is_fallback()) continue;
      Synset s;
      s.id = m.resolved_key();
      s.lemmas = {normalize_label(m.label.empty() ? m.class_id : m.label)};
      s.gloss = m.manual_gloss.value_or("");
      synsets.push_back(std::move(s));
    }
    const auto g = SkbGraph::build(std::move(synsets), graph.lemma_index(), graph.frequency_unreliable());
    by_key.emplace(build_similarity_matrix(g, keys, metric, threads));
  } else {
    by_key.emplace(build_similarity_matrix(graph, keys, metric, threads));
  }
  const auto v = by_key->values();
  return SimilarityMatrix(std::move(class_ids), metric, {v.begin(), v.end()});
}

std::vector<std::size_t> select_contrastive_targets(const SimilarityMatrix& matrix, std::size_t i,
                                                    double lambda, std::size_t n) {
  if (i >= matrix.size()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "class index " + std::to_string(i) + " of " + std::to_string(matrix.size()));
  }
  const auto row = matrix.row(i);
  const auto ids = matrix.class_ids();
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j != i && row[j] >= lambda && row[j] <= 1.0) candidates.push_back(j);
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] > row[b];
    if (ids[a] != ids[b]) return ids[a] < ids[b];
    return a < b;
  });
  if (candidates.size() > n) candidates.resize(n);
  return candidates;
}

std::vector<DescriptionRecord> generate_normal_ensemble(const GenerationContext& ctx,
                                                        const EnsembleConfig& config) {
  config.validate();
  const auto payloads = payloads_for(ctx);
  const auto params = params_for(ctx, config.t_normal, config.n_normal, config.max_tokens);
  const ClassTask task = [&](std::size_t i) {
    const auto prompt = ctx.prompts.normal_prompt(payloads[i]);
    const auto hash = sha256_hex(prompt);
    std::vector<DescriptionRecord> records;
    for (auto& text : generate(ctx.backend, prompt, params)) {
      records.push_back(make_record(ctx, ctx.mappings[i], DescriptionMode::Normal, params, hash, std::move(text)));
    }
    return records;
  };
  return run_in_order(ctx.mappings.size(), ctx.resume_from, ctx.in_flight, task, ctx.on_class_done);
}

std::vector<DescriptionRecord> generate_contrastive(const GenerationContext& ctx, const SimilarityMatrix& matrix,
                                                    const EnsembleConfig& config) {
  config.validate();
  if (matrix.size() != ctx.mappings.size()) {
    throw Error(ErrorCode::InvalidArgument, "similarity matrix size does not match the class list");
  }
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    if (matrix.class_ids()[i] != ctx.mappings[i].class_id) {
      throw Error(ErrorCode::InvalidArgument,
                  "matrix row " + std::to_string(i) + " is " + matrix.class_ids()[i] + ", expected " +
                      ctx.mappings[i].class_id);
    }
  }
  const auto payloads = payloads_for(ctx);
  const auto params = params_for(ctx, config.t_contrastive, config.k, config.max_tokens);
  const ClassTask task = [&](std::size_t i) {
    std::vector<DescriptionRecord> records;
    const auto targets = select_contrastive_targets(matrix, i, config.lambda, static_cast<std::size_t>(config.top_n));
    for (const auto j : targets) {
      // Two classes sharing one synset cannot be contrasted; the mapping
      // report already flags them.
      if (ctx.mappings[j].resolved_key() == ctx.mappings[i].resolved_key()) continue;
      const auto prompt = ctx.prompts.contrastive_prompt(payloads[i], payloads[j]);
      const auto hash = sha256_hex(prompt);
      for (auto& text : generate(ctx.backend, prompt, params)) {
        auto r = make_record(ctx, ctx.mappings[i], DescriptionMode::Contrastive, params, hash, std::move(text));
        r.neighbor = ctx.mappings[j].class_id;
        records.push_back(std::move(r));
      }
    }
    return records;
  };
  return run_in_order(ctx.mappings.size(), ctx.resume_from, ctx.in_flight, task, ctx.on_class_done);
}

std::vector<DescriptionRecord> build_silver(const GenerationContext& ctx, int max_tokens) {
  std::vector<std::size_t> order(ctx.mappings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ctx.mappings[a].class_id < ctx.mappings[b].class_id;
  });
  const auto params = params_for(ctx, 0.0, 1, max_tokens);
  const ClassTask task = [&](std::size_t position) {
    const auto& mapping = ctx.mappings[order[position]];
    const auto prompt = ctx.prompts.normal_prompt(build_semantic_payload(ctx.graph, mapping));
    auto texts = generate(ctx.backend, prompt, params);
    std::vector<DescriptionRecord> records;
    records.push_back(make_record(ctx, mapping, DescriptionMode::Silver, params, sha256_hex(prompt),
                                  std::move(texts.front())));
    return records;
  };
  return run_in_order(order.size(), ctx.resume_from, ctx.in_flight, task, ctx.on_class_done);
}

std::vector<ClassDescriptions> combine_ensembles(std::span<const std::string> class_ids,
                                                 std::span<const DescriptionRecord> normal,
                                                 std::span<const DescriptionRecord> contrastive) {
  std::vector<ClassDescriptions> out;
  std::map<std::string, std::size_t, std::less<>> slot;
  for (const auto& id : class_ids) {
    if (slot.emplace(id, out.size()).second) out.push_back({id, {}});
  }
  const auto add = [&](std::span<const DescriptionRecord> records) {
    for (const auto& r : records) {
      const auto it = slot.find(r.class_id);
      if (it == slot.end()) throw Error(ErrorCode::UnknownClass, "description for unknown class " + r.class_id);
      out[it->second].records.push_back(r);
    }
  };
  add(normal);
  add(contrastive);
  for (const auto& c : out) {
    if (c.records.empty()) throw Error(ErrorCode::MissingClass, "no descriptions for class " + c.class_id);
  }
  return out;
}

std::string format_description_record(const DescriptionRecord& r) {
  nlohmann::ordered_json j;
  j["class_id"] = r.class_id;
  j["mode"] = mode_name(r.mode);
  j["neighbor"] = r.neighbor ? nlohmann::ordered_json(*r.neighbor) : nlohmann::ordered_json(nullptr);
  j["text"] = r.text;
  j["temperature"] = r.temperature;
  j["num_generations"] = r.num_generations;
  j["max_tokens"] = r.max_tokens;
  j["seed"] = r.seed;
  j["prompt_hash"] = r.prompt_hash;
  j["backend"] = r.backend;
  j["timestamp"] = r.timestamp;
  return j.dump();
}

DescriptionRecord parse_description_record(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
  try {
    DescriptionRecord r;
    r.class_id = j.at("class_id").get<std::string>();
    r.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("neighbor") && !j["neighbor"].is_null()) r.neighbor = j["neighbor"].get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.num_generations = j.value("num_generations", 1);
    r.max_tokens = j.at("max_tokens").get<int>();
    r.seed = j.value("seed", std::uint64_t{0});
    r.prompt_hash = j.at("prompt_hash").get<std::string>();
    r.backend = j.at("backend").get<std::string>();
    r.timestamp = j.value("timestamp", std::int64_t{0});
    if (r.neighbor.has_value() != (r.mode == DescriptionMode::Contrastive)) {
      throw Error(ErrorCode::MalformedRecord, "neighbor must be set exactly for contrastive records");
    }
    if (r.text.empty() || r.text.find('\n') != std::string::npos) {
      throw Error(ErrorCode::MalformedRecord, "description text must be a non-empty single line");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
}

void write_descriptions(std::ostream& out, std::span<const DescriptionRecord> records) {
  for (const auto& r : records) out << format_description_record(r) << '\n';
}

std::vector<DescriptionRecord> read_descriptions(std::istream& in) {
  std::vector<DescriptionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_description_record(line));
  }
  return out;
}

}  // namespace glosskit
