#pragma once

// Sources of text and image embeddings: precomputed files, a remote encoder
// service, and deterministic mocks for offline runs.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "glosskit/zsic.hpp"

namespace glosskit {

struct EmbedItem {
  std::string id;
  std::string text;       // description text (text items)
  std::string image_ref;  // image reference (image items)
  std::string class_hint; // class the item belongs to; only the aligned mock reads it
  bool is_image = false;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<EmbeddingVector> embed(std::span<const EmbedItem> items) = 0;
};

// One vector per item, request order, dimension checked against the provider.
std::vector<EmbeddingVector> embed_texts(EmbeddingProvider& provider, std::span<const EmbedItem> items);
std::vector<EmbeddingVector> embed_images(EmbeddingProvider& provider, std::span<const EmbedItem> items);

// embfile v1: `embfile v1 <dim> <count>`, then per item an id line and a line
// of dim space-separated decimals.
struct EmbeddingFile {
  std::size_t dim = 0;
  std::vector<std::pair<std::string, EmbeddingVector>> entries;
};

EmbeddingFile read_embedding_file(std::istream& in);
void write_embedding_file(std::ostream& out, const EmbeddingFile& file);

// Looks items up by id in an embfile.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(EmbeddingFile file);
  static FileEmbeddingProvider open(const std::filesystem::path& path);

  std::size_t dim() const override { return dim_; }
  std::vector<EmbeddingVector> embed(std::span<const EmbedItem> items) override;

 private:
  std::size_t dim_;
  std::map<std::string, EmbeddingVector, std::less<>> vectors_;
};

// Unit vector derived from a stable hash of the item content (text or image
// reference). Equal content gives equal vectors.
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dim, std::uint64_t seed = 0);

  std::size_t dim() const override { return dim_; }
  std::vector<EmbeddingVector> embed(std::span<const EmbedItem> items) override;

  EmbeddingVector embed_content(std::string_view content) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Class-aligned mock: an item hinted with class c embeds near basis vector
// e_c, plus a small content-hash perturbation of norm `noise`.
class AlignedMockProvider final : public EmbeddingProvider {
 public:
  AlignedMockProvider(std::vector<std::string> class_ids, std::size_t dim = 0, double noise = 0.1,
                      std::uint64_t seed = 0);

  std::size_t dim() const override { return dim_; }
  std::vector<EmbeddingVector> embed(std::span<const EmbedItem> items) override;

 private:
  std::map<std::string, std::size_t, std::less<>> axis_;
  std::size_t dim_;
  double noise_;
  HashEmbeddingProvider hash_;
};

struct RemoteProviderConfig {
  std::string endpoint;
  std::string auth_token;
  std::size_t dim = 0;
  std::size_t batch_size = 64;
  std::chrono::seconds timeout{60};
};

// POST {items: [{id, text} | {id, image_ref}]} -> {vectors: [{id, values}]}
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteProviderConfig config);

  std::size_t dim() const override { return config_.dim; }
  std::vector<EmbeddingVector> embed(std::span<const EmbedItem> items) override;

 private:
  RemoteProviderConfig config_;
  std::string base_;
  std::string path_;
};

}  // namespace glosskit
