#pragma once

// In-process chat-completions server for client tests. Replies are a pure
// function of the target sentence in the user prompt.

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace mock {

// The sentence after the last "[Sentence] " tag, up to the end of its line.
inline std::string target_of(const std::string& user) {
  const auto p = user.rfind("[Sentence] ");
  if (p == std::string::npos) return {};
  const auto start = p + 11;
  const auto end = user.find('\n', start);
  return user.substr(start, end == std::string::npos ? end : end - start);
}

// Rating 1..4 from the sentence length, so replies vary but stay stable.
inline std::string default_reply(const std::string& target) {
  return "[Readability Score] " + std::to_string(1 + target.size() % 4);
}

class LlmServer {
 public:
  using Reply = std::function<std::string(const std::string& target)>;

  explicit LlmServer(Reply reply = default_reply) : reply_(std::move(reply)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      ++requests_;
      if (fail_next_ > 0) {
        --fail_next_;
        res.status = 503;
        res.set_content("busy", "text/plain");
        return;
      }
      if (require_key_ &&
          req.get_header_value("Authorization") != "Bearer " + key_) {
        res.status = 401;
        res.set_content("{\"error\":\"bad key\"}", "application/json");
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      const auto& msgs = body.at("messages");
      if (body.value("temperature", -1.0) != 0.0 || msgs.size() != 2 ||
          msgs[0].at("role") != "system" || msgs[1].at("role") != "user") {
        res.status = 400;
        return;
      }
      const auto user = msgs[1].at("content").get<std::string>();
      nlohmann::json out;
      out["choices"] = nlohmann::json::array(
          {{{"message",
             {{"role", "assistant"}, {"content", reply_(target_of(user))}}}}});
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~LlmServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  int requests() const { return requests_; }
  void fail_next(int n) { fail_next_ = n; }
  void require_key(std::string key) {
    require_key_ = true;
    key_ = std::move(key);
  }

 private:
  Reply reply_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::atomic<int> fail_next_{0};
  bool require_key_ = false;
  std::string key_;
};

}  // namespace mock
