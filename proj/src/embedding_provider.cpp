#include "glosskit/embedding_provider.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "glosskit/error.hpp"
#include "glosskit/hash.hpp"

namespace glosskit {
namespace {

std::vector<EmbeddingVector> checked(EmbeddingProvider& provider, std::span<const EmbedItem> items) {
  auto out = provider.embed(items);
  if (out.size() != items.size()) {
    throw Error(ErrorCode::ProviderUnavailable, "provider returned " + std::to_string(out.size()) + " vectors for " +
                                                    std::to_string(items.size()) + " items");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].dim() != provider.dim()) {
      throw Error(ErrorCode::DimensionMismatch, items[i].id + ": dim " + std::to_string(out[i].dim()) +
                                                    ", provider dim " + std::to_string(provider.dim()));
    }
  }
  return out;
}

}  // namespace

std::vector<EmbeddingVector> embed_texts(EmbeddingProvider& provider, std::span<const EmbedItem> items) {
  return checked(provider, items);
}

std::vector<EmbeddingVector> embed_images(EmbeddingProvider& provider, std::span<const EmbedItem> items) {
  return checked(provider, items);
}

EmbeddingFile read_embedding_file(std::istream& in) {
  const auto fail = [](const std::string& why) { return Error(ErrorCode::MalformedEmbeddingFile, why); };
  std::string line;
  if (!std::getline(in, line)) throw fail("missing header");
  std::istringstream header(line);
  std::string magic, version;
  EmbeddingFile file;
  std::size_t count = 0;
  if (!(header >> magic >> version >> file.dim >> count) || magic != "embfile" || version != "v1") {
    throw fail("bad header '" + line + "'");
  }
  if (file.dim == 0) throw fail("dimension must be positive");
  file.entries.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    std::string id;
    if (!std::getline(in, id) || id.empty()) throw fail("missing id for item " + std::to_string(n));
    if (!std::getline(in, line)) throw fail("missing values for " + id);
    std::vector<double> values;
    values.reserve(file.dim);
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p >= end) break;
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw fail("bad value in " + id);
      values.push_back(v);
      p = res.ptr;
    }
    if (values.size() != file.dim) {
      throw Error(ErrorCode::DimensionMismatch, id + ": " + std::to_string(values.size()) + " values, header says " +
                                                    std::to_string(file.dim));
    }
    file.entries.emplace_back(std::move(id), EmbeddingVector(std::move(values)));
  }
  return file;
}

void write_embedding_file(std::ostream& out, const EmbeddingFile& file) {
  out << "embfile v1 " << file.dim << ' ' << file.entries.size() << '\n';
  for (const auto& [id, vec] : file.entries) {
    if (vec.dim() != file.dim) throw Error(ErrorCode::DimensionMismatch, id);
    out << id << '\n';
    for (std::size_t i = 0; i < vec.dim(); ++i) {
      if (i) out << ' ';
      out << format_double(vec[i]);
    }
    out << '\n';
  }
}

FileEmbeddingProvider::FileEmbeddingProvider(EmbeddingFile file) : dim_(file.dim) {
  for (auto& [id, vec] : file.entries) {
    if (vec.dim() != dim_) throw Error(ErrorCode::DimensionMismatch, id);
    vectors_.insert_or_assign(id, std::move(vec));
  }
}

FileEmbeddingProvider FileEmbeddingProvider::open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open embedding file " + path.string());
  return FileEmbeddingProvider(read_embedding_file(in));
}

std::vector<EmbeddingVector> FileEmbeddingProvider::embed(std::span<const EmbedItem> items) {
  std::vector<EmbeddingVector> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    const auto it = vectors_.find(item.id);
    if (it == vectors_.end()) throw Error(ErrorCode::MissingEmbedding, item.id);
    out.push_back(it->second);
  }
  return out;
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

EmbeddingVector HashEmbeddingProvider::embed_content(std::string_view content) const {
  std::vector<double> values;
  values.reserve(dim_);
  const std::string base = std::to_string(seed_) + '\x1f' + std::string(content) + '\x1f';
  for (std::size_t block = 0; values.size() < dim_; ++block) {
    const auto digest = sha256(base + std::to_string(block));
    for (std::size_t w = 0; w < 4 && values.size() < dim_; ++w) {
      std::uint64_t x = 0;
      for (int b = 0; b < 8; ++b) x = (x << 8) | digest[w * 8 + b];
      values.push_back(static_cast<double>(x) / 18446744073709551616.0 * 2.0 - 1.0);
    }
  }
  double norm = 0.0;
  for (const double v : values) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) values[0] = norm = 1.0;
  for (auto& v : values) v /= norm;
  return EmbeddingVector(std::move(values));
}

std::vector<EmbeddingVector> HashEmbeddingProvider::embed(std::span<const EmbedItem> items) {
  std::vector<EmbeddingVector> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(embed_content(item.is_image ? "image:" + item.image_ref : "text:" + item.text));
  return out;
}

AlignedMockProvider::AlignedMockProvider(std::vector<std::string> class_ids, std::size_t dim, double noise,
                                         std::uint64_t seed)
    : dim_(std::max(dim, class_ids.size())), noise_(noise), hash_(std::max<std::size_t>(1, std::max(dim, class_ids.size())), seed) {
  if (class_ids.empty()) throw Error(ErrorCode::EmptyClassSet, "aligned mock needs classes");
  for (auto& id : class_ids) {
    const auto axis = axis_.size();
    if (!axis_.emplace(std::move(id), axis).second) throw Error(ErrorCode::InvalidArgument, "duplicate class id");
  }
  if (!(noise_ >= 0.0 && noise_ < 0.5)) throw Error(ErrorCode::InvalidArgument, "aligned mock noise must be in [0, 0.5)");
}

std::vector<EmbeddingVector> AlignedMockProvider::embed(std::span<const EmbedItem> items) {
  std::vector<EmbeddingVector> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    const auto it = axis_.find(item.class_hint);
    if (it == axis_.end()) throw Error(ErrorCode::MissingEmbedding, item.id + " has no known class hint");
    const auto jitter = hash_.embed_content(item.is_image ? "image:" + item.image_ref : "text:" + item.text);
    std::vector<double> values(dim_);
    for (std::size_t i = 0; i < dim_; ++i) values[i] = noise_ * jitter[i];
    values[it->second] += 1.0;
    out.emplace_back(std::move(values));
  }
  return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteProviderConfig config) : config_(std::move(config)) {
  if (config_.dim == 0) throw Error(ErrorCode::InvalidArgument, "remote provider needs a dimension");
  if (config_.batch_size == 0) config_.batch_size = 64;
  const auto scheme = config_.endpoint.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint must include a scheme");
  const auto slash = config_.endpoint.find('/', scheme + 3);
  base_ = config_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : config_.endpoint.substr(slash);
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed(std::span<const EmbedItem> items) {
  httplib::Client client(base_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.auth_token.empty()) headers.emplace("Authorization", "Bearer " + config_.auth_token);

  std::vector<EmbeddingVector> out;
  out.reserve(items.size());
  for (std::size_t start = 0; start < items.size(); start += config_.batch_size) {
    const auto batch = items.subspan(start, std::min(config_.batch_size, items.size() - start));
    nlohmann::json body;
    body["items"] = nlohmann::json::array();
    for (const auto& item : batch) {
      nlohmann::json j{{"id", item.id}};
      if (item.is_image) {
        j["image_ref"] = item.image_ref;
      } else {
        j["text"] = item.text;
      }
      body["items"].push_back(std::move(j));
    }
    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::ProviderUnavailable, httplib::to_string(res.error()));
    if (res->status != 200) throw Error(ErrorCode::ProviderUnavailable, "HTTP " + std::to_string(res->status));
    std::map<std::string, std::vector<double>> by_id;
    try {
      const auto j = nlohmann::json::parse(res->body);
      for (const auto& v : j.at("vectors")) {
        by_id[v.at("id").get<std::string>()] = v.at("values").get<std::vector<double>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ProviderUnavailable, std::string("malformed response: ") + e.what());
    }
    for (const auto& item : batch) {
      const auto it = by_id.find(item.id);
      if (it == by_id.end()) throw Error(ErrorCode::MissingEmbedding, item.id);
      if (it->second.size() != config_.dim) {
        throw Error(ErrorCode::DimensionMismatch, item.id + ": got " + std::to_string(it->second.size()));
      }
      out.emplace_back(std::move(it->second));
    }
  }
  return out;
}

}  // namespace glosskit
