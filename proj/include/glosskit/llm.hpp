#pragma once

// Text-generation backends and the post-processing applied to every
// generation (stop sequences, token budget, trimming, refill of empties).

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace glosskit {

std::vector<std::string> default_stop_sequences();  // newline and "--"

struct GenParams {
  double temperature = 0.0;  // 0 means greedy, forcing a single generation
  int num_generations = 1;
  int max_tokens = 35;
  std::vector<std::string> stop_sequences = default_stop_sequences();
  std::uint64_t seed = 0;  // mock backend only

  void validate() const;
  int effective_generations() const noexcept { return temperature == 0.0 ? 1 : num_generations; }
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;

  // Must return exactly params.effective_generations() strings.
  virtual std::vector<std::string> complete(const std::string& prompt, const GenParams& params) = 0;
  virtual std::string tag() const = 0;
};

// Deterministic offline backend: "a <lemma> with feature-<h>", h a stable
// hash of (prompt, seed, temperature, index). The lemma is read from the last
// "Concept:" line of the prompt.
class MockBackend final : public LlmBackend {
 public:
  std::vector<std::string> complete(const std::string& prompt, const GenParams& params) override;
  std::string tag() const override { return "mock"; }
};

struct RetryPolicy {
  int max_attempts = 6;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{20000};
  std::uint64_t jitter_seed = 0;
};

struct RemoteBackendConfig {
  std::string endpoint;    // http(s)://host[:port]/path
  std::string auth_token;  // sent as a bearer token when non-empty
  RetryPolicy retry;
  std::chrono::seconds timeout{60};
};

// POST {prompt, temperature, max_tokens, num_generations, stop}
//   -> {generations: [string]}
// 429 and 5xx responses are retried with exponential backoff plus jitter.
class RemoteBackend final : public LlmBackend {
 public:
  using Logger = std::function<void(const std::string&)>;
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit RemoteBackend(RemoteBackendConfig config, Logger logger = {}, Sleeper sleeper = {});

  std::vector<std::string> complete(const std::string& prompt, const GenParams& params) override;
  std::string tag() const override { return "remote"; }

  // HTTP requests issued so far.
  std::size_t attempts() const noexcept { return attempts_.load(); }

 private:
  std::vector<std::string> request(const std::string& prompt, const GenParams& params, int wanted);
  std::chrono::milliseconds backoff(int attempt);

  RemoteBackendConfig config_;
  std::string base_;
  std::string path_;
  Logger logger_;
  Sleeper sleeper_;
  std::atomic<std::size_t> attempts_{0};
  std::atomic<std::uint64_t> jitter_state_;
};

// Cuts at the first stop sequence or newline, keeps at most max_tokens
// whitespace tokens and 4*max_tokens characters, then trims.
std::string clean_generation(std::string_view raw, const GenParams& params);

// Exactly params.effective_generations() cleaned, non-empty strings. Empty
// results are re-requested up to `refill_rounds` times before giving up with
// ShortfallAfterRetries.
std::vector<std::string> generate(LlmBackend& backend, const std::string& prompt, const GenParams& params,
                                  int refill_rounds = 3);

}  // namespace glosskit
