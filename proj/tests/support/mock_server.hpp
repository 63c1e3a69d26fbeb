#pragma once

/**
 * In-process completions server for conformance tests: scriptable
 * responses, fault injection, raw-body capture, and a concurrency gauge.
 */

#include <atomic>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace mock {

using nlohmann::json;

class CompletionServer {
 public:
  /// Maps a parsed request body to (status, response json).
  using Handler = std::function<std::pair<int, json>(const json& body)>;

  CompletionServer() {
    server_.Post("/v1/completions", [this](const httplib::Request& req,
                                           httplib::Response& res) {
      {
        const int now = ++in_flight_;
        int peak = peak_in_flight_.load();
        while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
        }
      }
      {
        std::lock_guard<std::mutex> lock(mutex_);
        bodies_.push_back(req.body);
        auto auth = req.headers.find("Authorization");
        auth_headers_.push_back(
            auth == req.headers.end() ? std::string() : auth->second);
      }
      ++calls_;
      if (hold_ms_ > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(hold_ms_));
      }

      std::pair<int, json> reply;
      {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!scripted_.empty()) {
          reply = scripted_.front();
          scripted_.pop_front();
        } else if (handler_) {
          reply = handler_(json::parse(req.body));
        } else {
          reply = {200, echo_response(json::parse(req.body))};
        }
      }
      res.status = reply.first;
      res.set_content(reply.second.dump(), "application/json");
      --in_flight_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~CompletionServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  void set_handler(Handler handler) {
    std::lock_guard<std::mutex> lock(mutex_);
    handler_ = std::move(handler);
  }

  /// Queues one response served before the handler kicks in.
  void push_scripted(int status, json body) {
    std::lock_guard<std::mutex> lock(mutex_);
    scripted_.push_back({status, std::move(body)});
  }

  void set_hold_ms(int ms) { hold_ms_ = ms; }

  int calls() const { return calls_.load(); }
  int peak_in_flight() const { return peak_in_flight_.load(); }

  std::vector<std::string> bodies() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return bodies_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return auth_headers_;
  }

  /// n choices echoing `text`, finish_reason "stop".
  static json completion(const std::string& text, int n = 1,
                         const std::string& finish = "stop") {
    json choices = json::array();
    for (int i = 0; i < n; ++i) {
      choices.push_back({{"text", text}, {"finish_reason", finish}});
    }
    return json{{"choices", choices}};
  }

 private:
  static json echo_response(const json& body) {
    return completion("echo", body.value("n", 1));
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  Handler handler_;
  std::deque<std::pair<int, json>> scripted_;
  std::vector<std::string> bodies_;
  std::vector<std::string> auth_headers_;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_in_flight_{0};
  int hold_ms_ = 0;
};

/// Deterministic per-character scoring rule shared by the telescoping
/// tests: the logprob of the character at absolute offset i depends only
/// on (offset, character), so scores chain exactly across splits.
inline std::pair<int, json> scored_echo(const json& body) {
  const std::string text = body.at("prompt").get<std::string>();
  json token_logprobs = json::array();
  json text_offset = json::array();
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i == 0) {
      token_logprobs.push_back(nullptr);  // no-context first token
    } else {
      const double lp =
          -(0.01 * static_cast<double>(i) +
            0.1 * static_cast<double>((text[i] % 7 + 7) % 7) + 0.05);
      token_logprobs.push_back(lp);
    }
    text_offset.push_back(static_cast<int>(i));
  }
  json choice = {{"text", text},
                 {"finish_reason", "stop"},
                 {"logprobs",
                  {{"token_logprobs", token_logprobs},
                   {"text_offset", text_offset}}}};
  return {200, json{{"choices", json::array({choice})}}};
}

}  // namespace mock
