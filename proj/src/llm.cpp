#include "glosskit/llm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "glosskit/error.hpp"
#include "glosskit/hash.hpp"

namespace glosskit {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string concept_of(std::string_view prompt) {
  constexpr std::string_view kTag = "Concept: ";
  auto pos = prompt.rfind(std::string("\n").append(kTag));
  pos = pos == std::string_view::npos ? (prompt.starts_with(kTag) ? 0 : pos) : pos + 1;
  if (pos == std::string_view::npos) return "thing";
  const auto start = pos + kTag.size();
  const auto end = std::min(prompt.find('\n', start), prompt.size());
  const auto lemma = trim(prompt.substr(start, end - start));
  return lemma.empty() ? "thing" : std::string(lemma);
}

}  // namespace

std::vector<std::string> default_stop_sequences() { return {"\n", "--"}; }

void GenParams::validate() const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be a non-negative number");
  }
  if (num_generations < 1) throw Error(ErrorCode::InvalidArgument, "num_generations must be positive");
  if (max_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
  for (const auto& s : stop_sequences) {
    if (s.empty()) throw Error(ErrorCode::InvalidArgument, "empty stop sequence");
  }
}

std::vector<std::string> MockBackend::complete(const std::string& prompt, const GenParams& params) {
  params.validate();
  const auto lemma = concept_of(prompt);
  const auto base = prompt + '\x1f' + std::to_string(params.seed) + '\x1f' + format_double(params.temperature);
  std::vector<std::string> out;
  const int n = params.effective_generations();
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(stable_hash64(base + '\x1f' + std::to_string(i))));
    out.push_back("a " + lemma + " with feature-" + std::string(hex, 12));
  }
  return out;
}

RemoteBackend::RemoteBackend(RemoteBackendConfig config, Logger logger, Sleeper sleeper)
    : config_(std::move(config)),
      logger_(std::move(logger)),
      sleeper_(std::move(sleeper)),
      jitter_state_(config_.retry.jitter_seed) {
  const auto scheme = config_.endpoint.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "endpoint must start with http:// or https://");
  }
  const auto slash = config_.endpoint.find('/', scheme + 3);
  base_ = config_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : config_.endpoint.substr(slash);
  if (!logger_) logger_ = [](const std::string& msg) { std::clog << "[remote-llm] " << msg << '\n'; };
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (config_.retry.max_attempts < 1) throw Error(ErrorCode::InvalidArgument, "max_attempts must be >= 1");
}

std::chrono::milliseconds RemoteBackend::backoff(int attempt) {
  const auto cap = config_.retry.max_backoff.count();
  const double raw = static_cast<double>(config_.retry.initial_backoff.count()) * std::pow(2.0, attempt);
  const double capped = std::min(raw, static_cast<double>(cap));
  std::mt19937_64 rng(jitter_state_.fetch_add(0x9e3779b97f4a7c15ULL));
  const double jitter = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
  return std::chrono::milliseconds(static_cast<long long>(capped * jitter));
}

std::vector<std::string> RemoteBackend::request(const std::string& prompt, const GenParams& params,
                                                int wanted) {
  nlohmann::json body{{"prompt", prompt},
                      {"temperature", params.temperature},
                      {"max_tokens", params.max_tokens},
                      {"num_generations", wanted},
                      {"stop", params.stop_sequences}};
  const auto payload = body.dump();

  httplib::Client client(base_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.auth_token.empty()) headers.emplace("Authorization", "Bearer " + config_.auth_token);

  ErrorCode last_code = ErrorCode::BackendUnavailable;
  std::string last_reason;
  for (int attempt = 0; attempt < config_.retry.max_attempts; ++attempt) {
    const auto n = ++attempts_;
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_code = ErrorCode::BackendUnavailable;
      last_reason = httplib::to_string(res.error());
    } else if (res->status == 200) {
      try {
        const auto j = nlohmann::json::parse(res->body);
        auto gens = j.at("generations").get<std::vector<std::string>>();
        logger_("request succeeded after " + std::to_string(attempt + 1) + " attempt(s) (total " +
                std::to_string(n) + ")");
        return gens;
      } catch (const std::exception& e) {
        throw Error(ErrorCode::BackendUnavailable, std::string("malformed response: ") + e.what());
      }
    } else if (res->status == 429) {
      last_code = ErrorCode::QuotaExceeded;
      last_reason = "HTTP 429";
    } else if (res->status >= 500) {
      last_code = ErrorCode::BackendUnavailable;
      last_reason = "HTTP " + std::to_string(res->status);
    } else {
      throw Error(ErrorCode::BackendUnavailable, "HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    if (attempt + 1 < config_.retry.max_attempts) {
      const auto delay = backoff(attempt);
      logger_("attempt " + std::to_string(attempt + 1) + " failed (" + last_reason + "), retrying in " +
              std::to_string(delay.count()) + " ms");
      sleeper_(delay);
    }
  }
  throw Error(last_code, last_reason + " after " + std::to_string(config_.retry.max_attempts) + " attempts");
}

std::vector<std::string> RemoteBackend::complete(const std::string& prompt, const GenParams& params) {
  params.validate();
  const int wanted = params.effective_generations();
  std::vector<std::string> out;
  for (int round = 0; round < config_.retry.max_attempts && static_cast<int>(out.size()) < wanted; ++round) {
    auto got = request(prompt, params, wanted - static_cast<int>(out.size()));
    for (auto& g : got) {
      if (static_cast<int>(out.size()) < wanted) out.push_back(std::move(g));
    }
  }
  if (static_cast<int>(out.size()) < wanted) {
    throw Error(ErrorCode::ShortfallAfterRetries,
                "got " + std::to_string(out.size()) + " of " + std::to_string(wanted) + " generations");
  }
  return out;
}

std::string clean_generation(std::string_view raw, const GenParams& params) {
  std::size_t cut = raw.find('\n');
  for (const auto& stop : params.stop_sequences) cut = std::min(cut, raw.find(stop));
  std::string_view text = trim(raw.substr(0, cut));

  std::size_t tokens = 0;
  std::size_t pos = 0;
  std::size_t end = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) break;
    if (tokens == static_cast<std::size_t>(params.max_tokens)) break;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    end = pos;
    ++tokens;
  }
  text = text.substr(0, end);

  const auto char_cap = static_cast<std::size_t>(params.max_tokens) * 4;
  if (text.size() > char_cap) {
    const auto space = text.substr(0, char_cap + 1).find_last_of(" \t");
    text = text.substr(0, space == std::string_view::npos || space == 0 ? char_cap : space);
  }
  return std::string(trim(text));
}

std::vector<std::string> generate(LlmBackend& backend, const std::string& prompt, const GenParams& params,
                                  int refill_rounds) {
  params.validate();
  const int wanted = params.effective_generations();
  std::vector<std::string> out;
  GenParams request = params;
  for (int round = 0; round <= refill_rounds && static_cast<int>(out.size()) < wanted; ++round) {
    request.num_generations = wanted - static_cast<int>(out.size());
    for (const auto& raw : backend.complete(prompt, request)) {
      auto text = clean_generation(raw, params);
      if (!text.empty() && static_cast<int>(out.size()) < wanted) out.push_back(std::move(text));
    }
  }
  if (static_cast<int>(out.size()) < wanted) {
    throw Error(ErrorCode::ShortfallAfterRetries,
                "got " + std::to_string(out.size()) + " of " + std::to_string(wanted) + " generations");
  }
  return out;
}

}  // namespace glosskit
