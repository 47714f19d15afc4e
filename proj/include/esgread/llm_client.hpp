#pragma once

// One-shot readability prompting against a chat-completions endpoint.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "esgread/corpus.hpp"
#include "esgread/error.hpp"
#include "esgread/eval.hpp"
#include "esgread/fileio.hpp"
#include "esgread/text.hpp"

namespace esgread::llm {

inline constexpr std::string_view kMarker = "[Readability Score]";
inline constexpr std::string_view kSentenceTag = "[Sentence]";

inline constexpr std::string_view kSystemPrompt =
    "You are a helpful assistant that rates the readability of German "
    "sentences.";

// Verbatim instruction text, including its original wording.
inline constexpr std::string_view kInstructions =
    "I will give you a sentence and I want you to rate it's readability. If "
    "the sentence has a low readability, choose 1. If the sentence has a low "
    "to medium readability, choose 2. If the sentence has a medium to high "
    "readability, choose 3. If the sentence has a high readability, choose 4. "
    "Please only answer with a single digit corresponding to the readability "
    "level.";

struct PromptBundle {
  std::string system;
  std::string user;
  std::string marker{kMarker};
  std::string shot_id;
};

// Majority vote rounded half-up onto the 1..4 scale.
inline int shot_rating(double majority_vote) {
  return std::clamp(static_cast<int>(std::floor(majority_vote + 0.5)), 1, 4);
}

// Instructions, the labelled shot, then the target sentence followed by the
// marker the reply is expected to start with.
inline PromptBundle build_prompt(std::string_view target,
                                 const corpus::LabeledRecord& shot) {
  PromptBundle b;
  b.system = std::string(kSystemPrompt);
  b.shot_id = shot.record.id;
  b.user.append(kInstructions);
  b.user.append("\n");
  b.user.append(kSentenceTag).append(" ").append(text::trim(shot.record.target));
  b.user.append(" ").append(kMarker).append(" ");
  b.user.append(std::to_string(shot_rating(shot.label.majority_vote)));
  b.user.append("\n");
  b.user.append(kSentenceTag).append(" ").append(text::trim(target));
  b.user.append("\n").append(kMarker);
  return b;
}

struct ParsedScore {
  int score = 0;
  bool fallback = false;  // no marker; took the first standalone digit
};

class ParseFailure : public std::runtime_error {
 public:
  explicit ParseFailure(std::string raw)
      : std::runtime_error("no rating 1-4 in reply"), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

inline ParsedScore parse_score(std::string_view reply) {
  const auto m = reply.find(kMarker);
  if (m != std::string_view::npos) {
    for (size_t i = m + kMarker.size(); i < reply.size(); ++i) {
      if (reply[i] >= '1' && reply[i] <= '4') return {reply[i] - '0', false};
    }
    throw ParseFailure(std::string(reply));
  }
  auto is_alnum = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  };
  for (size_t i = 0; i < reply.size(); ++i) {
    if (reply[i] < '1' || reply[i] > '4') continue;
    const bool left_ok = i == 0 || !is_alnum(reply[i - 1]);
    const bool right_ok = i + 1 == reply.size() || !is_alnum(reply[i + 1]);
    if (left_ok && right_ok) return {reply[i] - '0', true};
  }
  throw ParseFailure(std::string(reply));
}

// Rating 1..4 onto [0,1].
inline double normalize_rating(int r) { return (r - 1) / 3.0; }

// --- transport ---------------------------------------------------------------

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
};

struct ChatResponse {
  enum class Status { kOk, kTransportError, kAuthError, kRetryable, kFatal };
  Status status = Status::kOk;
  int http_status = 0;
  std::string body;  // raw reply content (kOk) or error text
};

using Transport = std::function<ChatResponse(const ChatRequest&)>;

inline std::string request_json(const ChatRequest& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", r.system}},
       {{"role", "user"}, {"content", r.user}}});
  j["temperature"] = 0;
  return j.dump();
}

struct EndpointConfig {
  std::string url = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model_name;
  std::string api_key_env = "ESGREAD_API_KEY";
  double timeout_s = 60;
  unsigned max_parallel = 1;
  int max_retries = 3;
  int backoff_initial_ms = 250;
  int min_interval_ms = 0;  // pacing between request starts
};

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline ParsedUrl parse_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw UsageError("endpoint '" + std::string(url) + "' has no scheme");
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw UsageError("endpoint scheme must be http or https");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  p.origin = std::string(url.substr(0, path_start));
  p.path = path_start == std::string_view::npos
               ? "/v1/chat/completions"
               : std::string(url.substr(path_start));
  return p;
}

// Chat-completions over HTTP(S). The reply text is choices[0].message.content.
inline Transport http_transport(const EndpointConfig& cfg) {
  const ParsedUrl url = parse_url(cfg.url);
  const char* key = std::getenv(cfg.api_key_env.c_str());
  std::string api_key = key ? key : "";
  const double timeout = cfg.timeout_s;
  return [url, api_key, timeout](const ChatRequest& req) {
    using S = ChatResponse::Status;
    httplib::Client cli(url.origin);
    const auto secs = static_cast<time_t>(timeout);
    const auto usecs = static_cast<time_t>((timeout - secs) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + api_key);
    }
    auto res = cli.Post(url.path, headers, request_json(req),
                        "application/json");
    if (!res) {
      return ChatResponse{S::kTransportError, 0,
                          httplib::to_string(res.error())};
    }
    if (res->status == 401 || res->status == 403) {
      return ChatResponse{S::kAuthError, res->status, res->body};
    }
    if (res->status == 429 || res->status >= 500) {
      return ChatResponse{S::kRetryable, res->status, res->body};
    }
    if (res->status != 200) {
      return ChatResponse{S::kFatal, res->status, res->body};
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      return ChatResponse{
          S::kOk, 200,
          j.at("choices").at(0).at("message").at("content").get<std::string>()};
    } catch (const nlohmann::json::exception&) {
      // Unusable body; surfaces as a per-record parse failure.
      return ChatResponse{S::kOk, 200, res->body};
    }
  };
}

// --- scoring run ---------------------------------------------------------------

struct Failure {
  std::string id;
  std::string raw_reply;
};

struct RemoteScores {
  std::vector<eval::Prediction> predictions;  // input order, failures removed
  std::vector<Failure> failures;              // input order
  std::vector<std::string> fallback_ids;      // parsed without the marker
  std::string shot_id;
};

// One shot per run: drawn uniformly from the labelled training records with
// `shot_seed`.
inline const corpus::LabeledRecord& pick_shot(
    const std::vector<corpus::LabeledRecord>& train, uint64_t shot_seed) {
  if (train.empty()) throw DataError("no training records to draw a shot from");
  std::mt19937_64 rng(shot_seed);
  std::uniform_int_distribution<size_t> pick(0, train.size() - 1);
  return train[pick(rng)];
}

inline RemoteScores score_remote(const EndpointConfig& cfg,
                                 const Transport& transport,
                                 const std::vector<corpus::Record>& records,
                                 const corpus::LabeledRecord& shot) {
  using S = ChatResponse::Status;
  struct Slot {
    std::optional<int> score;
    bool fallback = false;
    std::string raw;
  };
  std::vector<Slot> slots(records.size());
  std::atomic<size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex mu;
  auto next_start = std::chrono::steady_clock::now();

  auto pace = [&] {
    if (cfg.min_interval_ms <= 0) return;
    std::chrono::steady_clock::time_point when;
    {
      std::lock_guard<std::mutex> lock(mu);
      when = std::max(next_start, std::chrono::steady_clock::now());
      next_start = when + std::chrono::milliseconds(cfg.min_interval_ms);
    }
    std::this_thread::sleep_until(when);
  };

  auto worker = [&] {
    while (!abort) {
      const size_t i = next++;
      if (i >= records.size()) return;
      const auto prompt = build_prompt(records[i].target, shot);
      const ChatRequest req{cfg.model_name, prompt.system, prompt.user};
      try {
        ChatResponse res;
        int backoff = cfg.backoff_initial_ms;
        for (int attempt = 0;; ++attempt) {
          pace();
          res = transport(req);
          const bool retry = res.status == S::kTransportError ||
                             res.status == S::kRetryable;
          if (!retry || attempt >= cfg.max_retries) break;
          std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
          backoff *= 2;
        }
        switch (res.status) {
          case S::kOk:
            break;
          case S::kAuthError:
            throw RemoteError("authentication failed (HTTP " +
                              std::to_string(res.http_status) + ")");
          case S::kTransportError:
            throw RemoteError("endpoint unreachable: " + res.body);
          case S::kRetryable:
          case S::kFatal:
            throw RemoteError("endpoint error HTTP " +
                              std::to_string(res.http_status) + ": " +
                              res.body.substr(0, 200));
        }
        slots[i].raw = res.body;
        try {
          const auto parsed = parse_score(res.body);
          slots[i].score = parsed.score;
          slots[i].fallback = parsed.fallback;
        } catch (const ParseFailure&) {
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!fatal) fatal = std::current_exception();
        abort = true;
        return;
      }
    }
  };

  const unsigned n_workers = std::max(1u, cfg.max_parallel);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  RemoteScores out;
  out.shot_id = shot.record.id;
  for (size_t i = 0; i < records.size(); ++i) {
    if (slots[i].score) {
      out.predictions.push_back(
          {records[i].id, normalize_rating(*slots[i].score)});
      if (slots[i].fallback) out.fallback_ids.push_back(records[i].id);
    } else {
      out.failures.push_back({records[i].id, slots[i].raw});
    }
  }
  return out;
}

// `id<TAB>raw_reply` lines; tabs, newlines and backslashes in the reply are
// escaped so each failure stays on one line.
inline std::string serialize_failures(const std::vector<Failure>& fs) {
  std::string out;
  for (const auto& f : fs) {
    out += f.id;
    out += '\t';
    for (char c : f.raw_reply) {
      switch (c) {
        case '\\': out += "\\\\"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        default: out += c;
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace esgread::llm
