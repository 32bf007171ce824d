#pragma once

// Configuration and subcommands behind the `glosskit` command line tool.
// Each subcommand writes its artifacts into output_dir together with a
// `<artifact>.meta.json` provenance sidecar.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "glosskit/descriptions.hpp"

namespace glosskit {

inline constexpr std::string_view kToolName = "glosskit";
std::string_view tool_version() noexcept;

struct PipelineConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this

  // inputs and outputs
  std::string skb;
  std::string wordnet_dir;
  std::string classes;
  std::string overrides;
  std::string output_dir = "out";
  std::string exemplars;

  EnsembleConfig ensemble;
  std::vector<std::string> stop_sequences = default_stop_sequences();
  std::string metric = "wup";
  std::string descriptions = "combined";  // combined | normal | contrastive | silver

  // text generation
  std::string backend = "mock";  // mock | remote
  std::string endpoint;
  std::string auth_env;  // name of the variable holding the token
  std::size_t in_flight = 4;
  int max_attempts = 6;
  int backoff_ms = 500;
  std::optional<std::uint64_t> seed;

  // embeddings
  std::string provider = "aligned";  // aligned | mock | file | remote
  std::string text_embeddings;
  std::string image_embeddings;
  std::string images;
  std::string provider_endpoint;
  std::string provider_auth_env;
  std::size_t embed_dim = 64;
  std::size_t mock_images_per_class = 5;
  double mock_noise = 0.1;

  // Flat `key = value` text; '#' starts a comment line. Unknown keys are errors.
  static PipelineConfig parse(std::string_view text, std::filesystem::path base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);

  void set(std::string_view key, std::string_view value);

  // Sorted `key=value` lines of every field; the config hash is its SHA-256.
  std::string canonical() const;
  std::string hash() const;

  std::filesystem::path resolve(const std::string& path) const;
  std::filesystem::path output_path(std::string_view name) const;

  // Checks the fields a subcommand needs; throws InvalidConfig.
  void validate(std::string_view subcommand) const;
};

struct SubcommandOptions {
  std::vector<std::string> fp_classes;  // report-fp: empty means every class
  std::size_t top_m = 5;
};

const std::vector<std::string>& subcommand_names();

// Runs one subcommand. Human-readable output goes to `out`; returns the exit
// status. Library errors propagate as glosskit::Error.
int run_subcommand(std::string_view name, const PipelineConfig& config, const SubcommandOptions& options,
                   std::ostream& out);

// Machine-readable error record for standard error.
std::string format_error_record(std::string_view subcommand, const std::exception& error);

}  // namespace glosskit
