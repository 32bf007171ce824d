#include "glosskit/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "glosskit/class_mapping.hpp"
#include "glosskit/embedding_provider.hpp"
#include "glosskit/error.hpp"
#include "glosskit/hash.hpp"
#include "glosskit/prompt.hpp"
#include "glosskit/similarity.hpp"
#include "glosskit/skb.hpp"
#include "glosskit/wordnet.hpp"
#include "glosskit/zsic.hpp"

namespace glosskit {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string_view tool_version() noexcept { return GLOSSKIT_VERSION; }

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

Error config_error(std::string_view key, const std::string& why) {
  return Error(ErrorCode::InvalidConfig, std::string(key) + ": " + why);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string s(value);
    T result{};
    if constexpr (std::is_floating_point_v<T>) {
      result = std::stod(s, &used);
    } else if constexpr (std::is_signed_v<T>) {
      result = static_cast<T>(std::stoll(s, &used));
    } else {
      if (!s.empty() && s.front() == '-') throw std::invalid_argument("negative");
      result = static_cast<T>(std::stoull(s, &used));
    }
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return result;
  } catch (const std::exception&) {
    throw config_error(key, "'" + std::string(value) + "' is not a valid number");
  }
}

std::vector<std::string> parse_stop_list(std::string_view value) {
  std::vector<std::string> out;
  std::string current;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const char c = value[i];
    if (c == '\\' && i + 1 < value.size()) {
      const char e = value[++i];
      current += e == 'n' ? '\n' : e == 't' ? '\t' : e;
    } else if (c == ',') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::string format_stop_list(const std::vector<std::string>& stops) {
  std::string out;
  for (const auto& s : stops) {
    if (!out.empty()) out += ',';
    for (const char c : s) {
      if (c == '\n') {
        out += "\\n";
      } else if (c == '\t') {
        out += "\\t";
      } else if (c == ',' || c == '\\') {
        out += '\\';
        out += c;
      } else {
        out += c;
      }
    }
  }
  return out;
}

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view raw) {
  const auto value = std::string(trim(raw));
  if (key == "skb") skb = value;
  else if (key == "wordnet_dir") wordnet_dir = value;
  else if (key == "classes") classes = value;
  else if (key == "overrides") overrides = value;
  else if (key == "output_dir") output_dir = value;
  else if (key == "exemplars") exemplars = value;
  else if (key == "n_normal") ensemble.n_normal = parse_number<int>(key, value);
  else if (key == "t_normal") ensemble.t_normal = parse_number<double>(key, value);
  else if (key == "n_contrastive_total") ensemble.n_contrastive_total = parse_number<int>(key, value);
  else if (key == "t_contrastive") ensemble.t_contrastive = parse_number<double>(key, value);
  else if (key == "lambda") ensemble.lambda = parse_number<double>(key, value);
  else if (key == "top_n") ensemble.top_n = parse_number<int>(key, value);
  else if (key == "k") ensemble.k = parse_number<int>(key, value);
  else if (key == "max_tokens") ensemble.max_tokens = parse_number<int>(key, value);
  else if (key == "stop") stop_sequences = parse_stop_list(value);
  else if (key == "metric") {
    parse_metric(value);
    metric = value;
  } else if (key == "descriptions") {
    if (value != "combined" && value != "normal" && value != "contrastive" && value != "silver") {
      throw config_error(key, "expected combined, normal, contrastive or silver");
    }
    descriptions = value;
  } else if (key == "backend") {
    if (value != "mock" && value != "remote") throw config_error(key, "expected mock or remote");
    backend = value;
  } else if (key == "endpoint") endpoint = value;
  else if (key == "auth_env") auth_env = value;
  else if (key == "in_flight") in_flight = parse_number<std::size_t>(key, value);
  else if (key == "max_attempts") max_attempts = parse_number<int>(key, value);
  else if (key == "backoff_ms") backoff_ms = parse_number<int>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "provider") {
    if (value != "aligned" && value != "mock" && value != "file" && value != "remote") {
      throw config_error(key, "expected aligned, mock, file or remote");
    }
    provider = value;
  } else if (key == "text_embeddings") text_embeddings = value;
  else if (key == "image_embeddings") image_embeddings = value;
  else if (key == "images") images = value;
  else if (key == "provider_endpoint") provider_endpoint = value;
  else if (key == "provider_auth_env") provider_auth_env = value;
  else if (key == "embed_dim") embed_dim = parse_number<std::size_t>(key, value);
  else if (key == "mock_images_per_class") mock_images_per_class = parse_number<std::size_t>(key, value);
  else if (key == "mock_noise") mock_noise = parse_number<double>(key, value);
  else throw config_error(key, "unknown key");
}

PipelineConfig PipelineConfig::parse(std::string_view text, fs::path base_dir) {
  PipelineConfig cfg;
  cfg.base_dir = std::move(base_dir);
  std::istringstream in{std::string(text)};
  std::string line;
  bool contrastive_total_given = false;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_number) + ": expected key = value");
    }
    const auto key = trim(t.substr(0, eq));
    cfg.set(key, t.substr(eq + 1));
    if (key == "n_contrastive_total") contrastive_total_given = true;
  }
  if (!contrastive_total_given) cfg.ensemble.n_contrastive_total = cfg.ensemble.top_n * cfg.ensemble.k;
  return cfg;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.parent_path());
}

std::string PipelineConfig::canonical() const {
  std::map<std::string, std::string> kv{
      {"skb", skb},
      {"wordnet_dir", wordnet_dir},
      {"classes", classes},
      {"overrides", overrides},
      {"output_dir", output_dir},
      {"exemplars", exemplars},
      {"n_normal", std::to_string(ensemble.n_normal)},
      {"t_normal", format_double(ensemble.t_normal)},
      {"n_contrastive_total", std::to_string(ensemble.n_contrastive_total)},
      {"t_contrastive", format_double(ensemble.t_contrastive)},
      {"lambda", format_double(ensemble.lambda)},
      {"top_n", std::to_string(ensemble.top_n)},
      {"k", std::to_string(ensemble.k)},
      {"max_tokens", std::to_string(ensemble.max_tokens)},
      {"stop", format_stop_list(stop_sequences)},
      {"metric", metric},
      {"descriptions", descriptions},
      {"backend", backend},
      {"endpoint", endpoint},
      {"auth_env", auth_env},
      {"in_flight", std::to_string(in_flight)},
      {"max_attempts", std::to_string(max_attempts)},
      {"backoff_ms", std::to_string(backoff_ms)},
      {"seed", seed ? std::to_string(*seed) : ""},
      {"provider", provider},
      {"text_embeddings", text_embeddings},
      {"image_embeddings", image_embeddings},
      {"images", images},
      {"provider_endpoint", provider_endpoint},
      {"provider_auth_env", provider_auth_env},
      {"embed_dim", std::to_string(embed_dim)},
      {"mock_images_per_class", std::to_string(mock_images_per_class)},
      {"mock_noise", format_double(mock_noise)},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string PipelineConfig::hash() const { return sha256_hex(canonical()); }

fs::path PipelineConfig::resolve(const std::string& path) const {
  const fs::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

fs::path PipelineConfig::output_path(std::string_view name) const { return resolve(output_dir) / fs::path(name); }

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> kNames{
      "import-wordnet", "map-classes", "simmatrix", "select-contrastive", "gen-normal", "gen-contrastive",
      "build-silver", "prototypes", "classify", "eval", "report-fp", "export-zscig-prompts", "config-hash"};
  return kNames;
}

void PipelineConfig::validate(std::string_view sub) const {
  const auto require_file = [&](std::string_view key, const std::string& value) {
    if (value.empty()) throw config_error(key, "required by " + std::string(sub));
    if (!fs::exists(resolve(value))) throw config_error(key, "path does not exist: " + resolve(value).string());
  };
  const auto check_optional = [&](std::string_view key, const std::string& value) {
    if (!value.empty() && !fs::exists(resolve(value))) {
      throw config_error(key, "path does not exist: " + resolve(value).string());
    }
  };
  if (std::find(subcommand_names().begin(), subcommand_names().end(), sub) == subcommand_names().end()) {
    throw Error(ErrorCode::InvalidArgument, "unknown subcommand '" + std::string(sub) + "'");
  }
  if (sub == "config-hash") return;
  if (sub == "import-wordnet") {
    require_file("wordnet_dir", wordnet_dir);
    return;
  }
  if (skb.empty() == wordnet_dir.empty()) throw config_error("skb", "set exactly one of skb or wordnet_dir");
  check_optional("skb", skb);
  check_optional("wordnet_dir", wordnet_dir);
  require_file("classes", classes);
  check_optional("overrides", overrides);
  check_optional("exemplars", exemplars);
  ensemble.validate();
  if (sub == "map-classes" || sub == "simmatrix" || sub == "select-contrastive") return;

  if (backend == "mock" && !seed) throw config_error("seed", "required when backend = mock");
  if (backend == "remote" && endpoint.empty()) throw config_error("endpoint", "required when backend = remote");
  if (in_flight == 0) throw config_error("in_flight", "must be >= 1");
  if (max_attempts < 1) throw config_error("max_attempts", "must be >= 1");
  if (sub == "gen-normal" || sub == "gen-contrastive" || sub == "build-silver" || sub == "export-zscig-prompts") {
    return;
  }
  if (provider == "file") {
    require_file("text_embeddings", text_embeddings);
    require_file("image_embeddings", image_embeddings);
    require_file("images", images);
  } else if (provider == "remote") {
    if (provider_endpoint.empty()) throw config_error("provider_endpoint", "required when provider = remote");
    require_file("images", images);
  } else {
    check_optional("images", images);
  }
  if (embed_dim == 0) throw config_error("embed_dim", "must be >= 1");
}

std::string format_error_record(std::string_view subcommand, const std::exception& error) {
  ordered_json j;
  const auto* e = dynamic_cast<const Error*>(&error);
  j["error"] = e ? std::string(error_code_name(e->code())) : std::string("InternalError");
  j["message"] = error.what();
  j["subcommand"] = subcommand;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::optional<ordered_json> read_meta(const fs::path& artifact) {
  const fs::path meta(artifact.string() + ".meta.json");
  if (!fs::exists(meta) || !fs::exists(artifact)) return std::nullopt;
  try {
    return ordered_json::parse(read_file(meta));
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

struct Item {
  EmbedItem item;
  std::string class_id;
};

class Run {
 public:
  Run(const PipelineConfig& config, std::ostream& out) : cfg_(config), out_(out) {}

  int dispatch(std::string_view name, const SubcommandOptions& options);

 private:
  // provenance
  void write_artifact(std::string_view name, const std::string& content, ordered_json extra = ordered_json::object(),
                      const std::string& inputs_hash = "");
  std::string inputs_hash(DescriptionMode mode);

  // stages
  const SkbGraph& graph();
  DatasetMapping compute_mapping();
  const std::vector<ClassMapping>& mappings();
  const SimilarityMatrix& matrix();
  const PromptBuilder& prompts();
  LlmBackend& backend();
  const std::vector<DescriptionRecord>& descriptions(DescriptionMode mode);
  std::vector<Item> description_items();
  std::vector<ClassPrototype> prototypes();
  std::vector<LabeledImage> labeled_images();
  const EvalReport& report();
  std::vector<std::vector<std::size_t>> all_targets();

  // subcommands
  int import_wordnet();
  int map_classes();
  int simmatrix();
  int select_contrastive();
  int generate(DescriptionMode mode);
  int write_prototypes();
  int classify_images();
  int eval();
  int report_fp(const SubcommandOptions& options);
  int export_zscig();

  const PipelineConfig& cfg_;
  std::ostream& out_;
  std::optional<SkbGraph> graph_;
  std::optional<std::vector<ClassMapping>> mappings_;
  std::optional<SimilarityMatrix> matrix_;
  std::optional<PromptBuilder> prompts_;
  std::unique_ptr<LlmBackend> backend_;
  std::map<DescriptionMode, std::vector<DescriptionRecord>> descriptions_;
  std::optional<std::vector<ClassPrototype>> prototypes_;
  std::optional<EvalReport> report_;
};

void Run::write_artifact(std::string_view name, const std::string& content, ordered_json extra,
                         const std::string& inputs_hash) {
  const auto path = cfg_.output_path(name);
  write_file_atomic(path, content);
  ordered_json meta;
  meta["artifact"] = name;
  meta["tool"] = kToolName;
  meta["version"] = tool_version();
  meta["config_hash"] = cfg_.hash();
  if (!inputs_hash.empty()) meta["inputs_hash"] = inputs_hash;
  meta["content_sha256"] = sha256_hex(content);
  for (auto& [k, v] : extra.items()) meta[k] = v;
  write_file_atomic(fs::path(path.string() + ".meta.json"), meta.dump(2) + "\n");
}

std::string Run::inputs_hash(DescriptionMode mode) {
  // Everything a description file depends on, including input file contents.
  std::string material;
  const auto add = [&](std::string_view k, const std::string& v) { material += std::string(k) + "=" + v + "\n"; };
  add("mode", std::string(mode_name(mode)));
  if (!cfg_.skb.empty()) add("skb", sha256_hex(read_file(cfg_.resolve(cfg_.skb))));
  if (!cfg_.wordnet_dir.empty()) {
    const auto dir = cfg_.resolve(cfg_.wordnet_dir);
    add("data.noun", sha256_hex(read_file(dir / "data.noun")));
    if (fs::exists(dir / "index.noun")) add("index.noun", sha256_hex(read_file(dir / "index.noun")));
  }
  add("classes", sha256_hex(read_file(cfg_.resolve(cfg_.classes))));
  if (!cfg_.overrides.empty()) add("overrides", sha256_hex(read_file(cfg_.resolve(cfg_.overrides))));
  add("exemplars", prompts().exemplars().content_hash);
  add("stop", format_stop_list(cfg_.stop_sequences));
  add("backend", cfg_.backend);
  add("endpoint", cfg_.endpoint);
  add("seed", cfg_.seed ? std::to_string(*cfg_.seed) : "");
  add("max_tokens", std::to_string(cfg_.ensemble.max_tokens));
  if (mode == DescriptionMode::Normal) {
    add("n_normal", std::to_string(cfg_.ensemble.n_normal));
    add("t_normal", format_double(cfg_.ensemble.t_normal));
  } else if (mode == DescriptionMode::Contrastive) {
    add("t_contrastive", format_double(cfg_.ensemble.t_contrastive));
    add("lambda", format_double(cfg_.ensemble.lambda));
    add("top_n", std::to_string(cfg_.ensemble.top_n));
    add("k", std::to_string(cfg_.ensemble.k));
    add("metric", cfg_.metric);
  }
  return sha256_hex(material);
}

const SkbGraph& Run::graph() {
  if (graph_) return *graph_;
  if (!cfg_.skb.empty()) {
    std::ifstream in(cfg_.resolve(cfg_.skb));
    if (!in) throw Error(ErrorCode::Io, "cannot open " + cfg_.skb);
    graph_.emplace(load_skb(in));
  } else {
    const auto dir = cfg_.resolve(cfg_.wordnet_dir);
    std::ifstream data(dir / "data.noun");
    if (!data) throw Error(ErrorCode::Io, "cannot open " + (dir / "data.noun").string());
    std::ifstream index_file(dir / "index.noun");
    std::istringstream empty;
    std::istream& index = index_file ? static_cast<std::istream&>(index_file) : empty;
    graph_.emplace(wordnet::import_wordnet(data, index));
  }
  return *graph_;
}

DatasetMapping Run::compute_mapping() {
  std::ifstream in(cfg_.resolve(cfg_.classes));
  auto specs = read_class_specs(in);
  if (!cfg_.overrides.empty()) {
    std::ifstream ov(cfg_.resolve(cfg_.overrides));
    const auto overrides = read_class_specs(ov);
    apply_overrides(specs, overrides);
  }
  auto result = map_dataset(graph(), specs);
  std::string content;
  for (const auto& m : result.mappings) content += format_mapping_record(m) + "\n";
  ordered_json extra;
  extra["counts"] = {{"heuristic", result.report.heuristic},
                     {"override", result.report.override_count},
                     {"fallback", result.report.fallback},
                     {"failed", result.report.failures.size()}};
  extra["warnings"] = result.report.warnings;
  ordered_json failures = ordered_json::array();
  for (const auto& f : result.report.failures) failures.push_back({{"class_id", f.class_id}, {"error", f.message}});
  extra["failures"] = failures;
  extra["label_normalization"] = "lowercase; spaces, hyphens and underscores collapse to one underscore";
  write_artifact("mapping.jsonl", content, extra);
  return result;
}

const std::vector<ClassMapping>& Run::mappings() {
  if (mappings_) return *mappings_;
  auto result = compute_mapping();
  if (result.report.failed()) {
    std::string msg;
    for (const auto& f : result.report.failures) msg += (msg.empty() ? "" : "; ") + f.message;
    throw Error(ErrorCode::UnresolvedClass, msg);
  }
  mappings_ = std::move(result.mappings);
  return *mappings_;
}

const SimilarityMatrix& Run::matrix() {
  if (matrix_) return *matrix_;
  const auto& ms = mappings();
  matrix_.emplace(build_class_matrix(graph(), ms, parse_metric(cfg_.metric)));
  std::ostringstream content;
  write_matrix(content, *matrix_);
  write_artifact("simmatrix.txt", content.str(), {{"metric", cfg_.metric}, {"classes", ms.size()}});
  return *matrix_;
}

const PromptBuilder& Run::prompts() {
  if (!prompts_) {
    const auto path = cfg_.exemplars.empty() ? default_exemplar_path() : cfg_.resolve(cfg_.exemplars);
    prompts_.emplace(load_exemplars(path));
  }
  return *prompts_;
}

LlmBackend& Run::backend() {
  if (backend_) return *backend_;
  if (cfg_.backend == "mock") {
    backend_ = std::make_unique<MockBackend>();
  } else {
    RemoteBackendConfig rc;
    rc.endpoint = cfg_.endpoint;
    if (!cfg_.auth_env.empty()) {
      const char* token = std::getenv(cfg_.auth_env.c_str());
      if (!token) throw Error(ErrorCode::InvalidConfig, "environment variable " + cfg_.auth_env + " is not set");
      rc.auth_token = token;
    }
    rc.retry.max_attempts = cfg_.max_attempts;
    rc.retry.initial_backoff = std::chrono::milliseconds(cfg_.backoff_ms);
    rc.retry.jitter_seed = cfg_.seed.value_or(0);
    backend_ = std::make_unique<RemoteBackend>(rc, [](const std::string& msg) { std::cerr << msg << '\n'; });
  }
  return *backend_;
}

const std::vector<DescriptionRecord>& Run::descriptions(DescriptionMode mode) {
  if (const auto it = descriptions_.find(mode); it != descriptions_.end()) return it->second;
  const std::string name = mode == DescriptionMode::Silver ? "silver.jsonl"
                                                           : "descriptions_" + std::string(mode_name(mode)) + ".jsonl";
  const auto path = cfg_.output_path(name);
  const auto hash = inputs_hash(mode);

  if (const auto meta = read_meta(path); meta && meta->value("inputs_hash", "") == hash) {
    std::ifstream in(path);
    return descriptions_[mode] = read_descriptions(in);
  }

  // Resume from a checkpoint written by an interrupted run with the same inputs.
  const auto checkpoint_path = cfg_.output_path("checkpoint.json");
  const fs::path partial_path(path.string() + ".partial");
  ordered_json checkpoint = ordered_json::object();
  if (fs::exists(checkpoint_path)) checkpoint = ordered_json::parse(read_file(checkpoint_path));
  const auto mode_key = std::string(mode_name(mode));

  const auto& ms = mappings();
  std::vector<std::string> order;
  for (const auto& m : ms) order.push_back(m.class_id);
  if (mode == DescriptionMode::Silver) std::stable_sort(order.begin(), order.end());

  std::vector<DescriptionRecord> records;
  std::size_t resume_from = 0;
  if (checkpoint.contains(mode_key) && checkpoint[mode_key].value("inputs_hash", "") == hash &&
      fs::exists(partial_path)) {
    const auto last = checkpoint[mode_key].value("last_class", "");
    const auto it = std::find(order.begin(), order.end(), last);
    if (it != order.end()) {
      std::ifstream in(partial_path);
      records = read_descriptions(in);
      resume_from = static_cast<std::size_t>(it - order.begin()) + 1;
      out_ << "resuming " << mode_key << " generation after class " << last << '\n';
    }
  }
  if (resume_from == 0) {
    fs::create_directories(partial_path.parent_path());
    std::ofstream(partial_path, std::ios::trunc);
  }

  std::ofstream partial(partial_path, std::ios::app);
  GenerationContext ctx{graph(), ms, prompts(), backend(), 0, {}, 0, 1, 0, {}};
  ctx.seed = cfg_.seed.value_or(0);
  ctx.stop_sequences = cfg_.stop_sequences;
  ctx.timestamp = cfg_.backend == "mock" ? 0 : static_cast<std::int64_t>(std::time(nullptr));
  ctx.in_flight = cfg_.in_flight;
  ctx.resume_from = resume_from;
  ctx.on_class_done = [&](std::size_t position, std::span<const DescriptionRecord> done) {
    write_descriptions(partial, done);
    partial.flush();
    checkpoint[mode_key] = {{"last_class", order[position]}, {"inputs_hash", hash}};
    write_file_atomic(checkpoint_path, checkpoint.dump(2) + "\n");
  };

  std::vector<DescriptionRecord> fresh;
  switch (mode) {
    case DescriptionMode::Normal: fresh = generate_normal_ensemble(ctx, cfg_.ensemble); break;
    case DescriptionMode::Contrastive: fresh = generate_contrastive(ctx, matrix(), cfg_.ensemble); break;
    case DescriptionMode::Silver: fresh = build_silver(ctx, cfg_.ensemble.max_tokens); break;
  }
  partial.close();
  records.insert(records.end(), std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));

  std::ostringstream content;
  write_descriptions(content, records);
  write_artifact(name, content.str(),
                 {{"mode", mode_key},
                  {"records", records.size()},
                  {"backend", backend().tag()},
                  {"exemplar_version", prompts().exemplars().version},
                  {"exemplar_hash", prompts().exemplars().content_hash}},
                 hash);
  fs::remove(partial_path);
  checkpoint.erase(mode_key);
  if (checkpoint.empty()) {
    fs::remove(checkpoint_path);
  } else {
    write_file_atomic(checkpoint_path, checkpoint.dump(2) + "\n");
  }
  return descriptions_[mode] = std::move(records);
}

std::vector<Item> Run::description_items() {
  const auto& ms = mappings();
  std::vector<std::string> class_ids;
  for (const auto& m : ms) class_ids.push_back(m.class_id);

  std::vector<ClassDescriptions> per_class;
  if (cfg_.descriptions == "combined") {
    per_class = combine_ensembles(class_ids, descriptions(DescriptionMode::Normal),
                                  descriptions(DescriptionMode::Contrastive));
  } else {
    per_class = combine_ensembles(class_ids, descriptions(parse_mode(cfg_.descriptions)), {});
  }
  std::vector<Item> items;
  for (const auto& c : per_class) {
    std::map<DescriptionMode, std::size_t> ordinal;
    for (const auto& r : c.records) {
      Item it;
      it.class_id = c.class_id;
      it.item.id = c.class_id + "/" + std::string(mode_name(r.mode)) + "/" + std::to_string(ordinal[r.mode]++);
      it.item.text = r.text;
      it.item.class_hint = c.class_id;
      items.push_back(std::move(it));
    }
  }
  return items;
}

std::unique_ptr<EmbeddingProvider> make_provider(const PipelineConfig& cfg, const std::vector<ClassMapping>& ms,
                                                 bool images) {
  if (cfg.provider == "aligned") {
    std::vector<std::string> ids;
    for (const auto& m : ms) ids.push_back(m.class_id);
    return std::make_unique<AlignedMockProvider>(ids, cfg.embed_dim, cfg.mock_noise, cfg.seed.value_or(0));
  }
  if (cfg.provider == "mock") return std::make_unique<HashEmbeddingProvider>(cfg.embed_dim, cfg.seed.value_or(0));
  if (cfg.provider == "file") {
    return std::make_unique<FileEmbeddingProvider>(
        FileEmbeddingProvider::open(cfg.resolve(images ? cfg.image_embeddings : cfg.text_embeddings)));
  }
  RemoteProviderConfig rc;
  rc.endpoint = cfg.provider_endpoint;
  rc.dim = cfg.embed_dim;
  if (!cfg.provider_auth_env.empty()) {
    const char* token = std::getenv(cfg.provider_auth_env.c_str());
    if (!token) throw Error(ErrorCode::InvalidConfig, "environment variable " + cfg.provider_auth_env + " is not set");
    rc.auth_token = token;
  }
  return std::make_unique<RemoteEmbeddingProvider>(rc);
}

std::vector<ClassPrototype> Run::prototypes() {
  if (prototypes_) return *prototypes_;
  const auto items = description_items();
  std::vector<EmbedItem> embed_items;
  for (const auto& it : items) embed_items.push_back(it.item);
  auto provider = make_provider(cfg_, mappings(), false);
  const auto vectors = embed_texts(*provider, embed_items);

  std::vector<ClassPrototype> out;
  std::size_t start = 0;
  while (start < items.size()) {
    std::size_t end = start;
    while (end < items.size() && items[end].class_id == items[start].class_id) ++end;
    out.push_back(make_prototype(items[start].class_id,
                                 std::span<const EmbeddingVector>(vectors).subspan(start, end - start)));
    start = end;
  }
  return *(prototypes_ = std::move(out));
}

std::vector<LabeledImage> Run::labeled_images() {
  std::vector<EmbedItem> items;
  std::vector<std::string> gold;
  if (!cfg_.images.empty()) {
    std::ifstream in(cfg_.resolve(cfg_.images));
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const auto j = nlohmann::json::parse(line);
      EmbedItem item;
      item.id = j.at("id").get<std::string>();
      item.is_image = true;
      item.image_ref = j.value("image_ref", item.id);
      item.class_hint = j.at("class_id").get<std::string>();
      gold.push_back(item.class_hint);
      items.push_back(std::move(item));
    }
  } else if (cfg_.provider == "aligned" || cfg_.provider == "mock") {
    for (const auto& m : mappings()) {
      for (std::size_t n = 0; n < cfg_.mock_images_per_class; ++n) {
        EmbedItem item;
        item.id = m.class_id + "/img" + std::to_string(n);
        item.is_image = true;
        item.image_ref = item.id;
        item.class_hint = m.class_id;
        gold.push_back(m.class_id);
        items.push_back(std::move(item));
      }
    }
  } else {
    throw Error(ErrorCode::InvalidConfig, "images: required for provider " + cfg_.provider);
  }
  auto provider = make_provider(cfg_, mappings(), true);
  const auto vectors = embed_images(*provider, items);
  std::vector<LabeledImage> out;
  for (std::size_t i = 0; i < items.size(); ++i) out.push_back({items[i].id, vectors[i], gold[i]});
  return out;
}

const EvalReport& Run::report() {
  if (!report_) {
    const auto protos = prototypes();
    report_ = evaluate(protos, labeled_images());
  }
  return *report_;
}

std::vector<std::vector<std::size_t>> Run::all_targets() {
  const auto& m = matrix();
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.push_back(select_contrastive_targets(m, i, cfg_.ensemble.lambda, static_cast<std::size_t>(cfg_.ensemble.top_n)));
  }
  return out;
}

int Run::import_wordnet() {
  const auto dir = cfg_.resolve(cfg_.wordnet_dir);
  std::ifstream data(dir / "data.noun");
  if (!data) throw Error(ErrorCode::Io, "cannot open " + (dir / "data.noun").string());
  std::ifstream index_file(dir / "index.noun");
  std::istringstream empty;
  std::istream& index = index_file ? static_cast<std::istream&>(index_file) : empty;
  const auto g = wordnet::import_wordnet(data, index);
  std::ostringstream content;
  write_skb(content, g);
  write_artifact("skb.jsonl", content.str(),
                 {{"synsets", g.size()},
                  {"indexed_lemmas", g.lemma_index().size()},
                  {"frequency_unreliable", g.frequency_unreliable()}});
  out_ << "imported " << g.size() << " synsets, " << g.lemma_index().size() << " lemmas";
  if (g.frequency_unreliable()) out_ << " (no index.noun: sense order follows data order)";
  out_ << " -> " << cfg_.output_path("skb.jsonl").string() << '\n';
  return 0;
}

int Run::map_classes() {
  const auto result = compute_mapping();
  out_ << render_mapping_summary(result.report);
  return result.report.failed() ? 1 : 0;
}

int Run::simmatrix() {
  const auto& m = matrix();
  out_ << "wrote " << m.size() << "x" << m.size() << " " << metric_tag(m.metric()) << " matrix -> "
       << cfg_.output_path("simmatrix.txt").string() << '\n';
  return 0;
}

int Run::select_contrastive() {
  const auto& ms = mappings();
  const auto& m = matrix();
  const auto targets = all_targets();
  std::string content;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    ordered_json j;
    j["class_id"] = ms[i].class_id;
    j["neighbors"] = ordered_json::array();
    out_ << ms[i].class_id << ":";
    for (const auto t : targets[i]) {
      j["neighbors"].push_back({{"class_id", ms[t].class_id}, {"score", m.at(i, t)}});
      out_ << ' ' << ms[t].class_id << " (" << format_double(m.at(i, t)) << ")";
    }
    out_ << '\n';
    content += j.dump() + "\n";
  }
  write_artifact("contrastive_targets.jsonl", content,
                 {{"lambda", cfg_.ensemble.lambda}, {"top_n", cfg_.ensemble.top_n}, {"metric", cfg_.metric}});
  return 0;
}

int Run::generate(DescriptionMode mode) {
  const auto& records = descriptions(mode);
  out_ << "wrote " << records.size() << " " << mode_name(mode) << " descriptions\n";
  return 0;
}

int Run::write_prototypes() {
  const auto protos = prototypes();
  EmbeddingFile file;
  file.dim = protos.front().vector.dim();
  ordered_json counts = ordered_json::object();
  for (const auto& p : protos) {
    file.entries.emplace_back(p.class_id, p.vector);
    counts[p.class_id] = p.count;
  }
  std::ostringstream content;
  write_embedding_file(content, file);
  write_artifact("prototypes.emb", content.str(),
                 {{"aggregation", kAggregationRule}, {"descriptions", cfg_.descriptions}, {"counts", counts}});
  out_ << "wrote " << protos.size() << " prototypes (dim " << file.dim << ")\n";
  return 0;
}

int Run::classify_images() {
  const auto protos = prototypes();
  std::string content;
  std::size_t n = 0;
  for (const auto& img : labeled_images()) {
    const auto p = classify(protos, img.vector);
    ordered_json j;
    j["image_id"] = img.image_id;
    j["gold"] = img.gold;
    j["predicted"] = p.class_id;
    j["score"] = p.score;
    content += j.dump() + "\n";
    ++n;
  }
  write_artifact("predictions.jsonl", content, {{"aggregation", kAggregationRule}});
  out_ << "classified " << n << " images\n";
  return 0;
}

int Run::eval() {
  const auto& r = report();
  std::ostringstream records;
  write_report_records(records, r);
  const auto table = render_report_table(r);
  write_artifact("report.jsonl", records.str(), {{"aggregation", r.aggregation}});
  write_artifact("report.txt", table, {{"aggregation", r.aggregation}});
  out_ << table;
  return 0;
}

int Run::report_fp(const SubcommandOptions& options) {
  const auto& r = report();
  const auto& ms = mappings();
  const auto targets = all_targets();
  std::vector<std::string> wanted = options.fp_classes;
  if (wanted.empty()) {
    for (const auto& m : ms) wanted.push_back(m.class_id);
  }
  std::vector<FalsePositiveComparison> rows;
  std::string content;
  for (const auto& cls : wanted) {
    const auto it = std::find_if(ms.begin(), ms.end(), [&](const auto& m) { return m.class_id == cls; });
    if (it == ms.end()) throw Error(ErrorCode::UnknownClass, cls);
    std::vector<std::string> neighbors;
    for (const auto t : targets[static_cast<std::size_t>(it - ms.begin())]) neighbors.push_back(ms[t].class_id);
    rows.push_back(compare_false_positives(r, cls, options.top_m, neighbors));
    const auto& row = rows.back();
    ordered_json j;
    j["class_id"] = cls;
    j["false_positives"] = ordered_json::array();
    for (std::size_t i = 0; i < row.false_positives.size(); ++i) {
      j["false_positives"].push_back({{"class_id", row.false_positives[i].first},
                                      {"count", row.false_positives[i].second},
                                      {"contrastive_hit", static_cast<bool>(row.hits[i])}});
    }
    j["contrastive"] = row.contrastive;
    content += j.dump() + "\n";
  }
  write_artifact("fp_report.jsonl", content, {{"top_m", options.top_m}});
  out_ << render_false_positive_table(rows);
  return 0;
}

int Run::export_zscig() {
  const auto items = description_items();
  std::map<std::string, std::string> labels;
  for (const auto& m : mappings()) labels[m.class_id] = m.label;
  std::string content;
  for (const auto& it : items) {
    ordered_json j;
    j["id"] = it.item.id;
    j["class_id"] = it.class_id;
    j["label"] = labels[it.class_id];
    j["text"] = it.item.text;
    content += j.dump() + "\n";
  }
  write_artifact("zscig_prompts.jsonl", content, {{"descriptions", cfg_.descriptions}, {"records", items.size()}});
  out_ << "exported " << items.size() << " description prompts\n";
  return 0;
}

int Run::dispatch(std::string_view name, const SubcommandOptions& options) {
  if (name == "config-hash") {
    out_ << cfg_.hash() << '\n';
    return 0;
  }
  if (name == "import-wordnet") return import_wordnet();
  if (name == "map-classes") return map_classes();
  if (name == "simmatrix") return simmatrix();
  if (name == "select-contrastive") return select_contrastive();
  if (name == "gen-normal") return generate(DescriptionMode::Normal);
  if (name == "gen-contrastive") return generate(DescriptionMode::Contrastive);
  if (name == "build-silver") return generate(DescriptionMode::Silver);
  if (name == "prototypes") return write_prototypes();
  if (name == "classify") return classify_images();
  if (name == "eval") return eval();
  if (name == "report-fp") return report_fp(options);
  if (name == "export-zscig-prompts") return export_zscig();
  throw Error(ErrorCode::InvalidArgument, "unknown subcommand '" + std::string(name) + "'");
}

}  // namespace

int run_subcommand(std::string_view name, const PipelineConfig& config, const SubcommandOptions& options,
                   std::ostream& out) {
  config.validate(name);
  Run run(config, out);
  return run.dispatch(name, options);
}

}  // namespace glosskit
