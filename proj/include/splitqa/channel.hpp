#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace splitqa {

// A request/response transport carrying one JSON object per message.
// Responses may arrive in any order; callers match them by their "id".
class Channel {
 public:
  virtual ~Channel() = default;

  virtual void send(const nlohmann::json& request) = 0;
  // Blocks for the next response. Throws TransportError when the peer is gone.
  virtual nlohmann::json receive() = 0;
  // Signals that no further requests follow.
  virtual void close_send() {}
};

// Answers each request synchronously with `handler`, in request order.
class LocalChannel final : public Channel {
 public:
  using Handler = std::function<nlohmann::json(const nlohmann::json&)>;
  explicit LocalChannel(Handler handler) : handler_(std::move(handler)) {}

  void send(const nlohmann::json& request) override;
  nlohmann::json receive() override;

 private:
  Handler handler_;
  std::deque<nlohmann::json> ready_;
};

// Newline-delimited JSON over the stdin/stdout of `/bin/sh -c command`.
class SubprocessChannel final : public Channel {
 public:
  explicit SubprocessChannel(const std::string& command);
  ~SubprocessChannel() override;
  SubprocessChannel(const SubprocessChannel&) = delete;
  SubprocessChannel& operator=(const SubprocessChannel&) = delete;

  void send(const nlohmann::json& request) override;
  nlohmann::json receive() override;
  void close_send() override;

 private:
  std::string command_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

// One HTTP POST per request against `base_url + path`, run on a small pool of
// worker threads so several requests can be outstanding.
class HttpChannel final : public Channel {
 public:
  HttpChannel(const std::string& base_url, std::string path, std::size_t workers = 4);
  ~HttpChannel() override;
  HttpChannel(const HttpChannel&) = delete;
  HttpChannel& operator=(const HttpChannel&) = delete;

  void send(const nlohmann::json& request) override;
  nlohmann::json receive() override;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct DispatchOutcome {
  bool transport_failed = false;
  std::string transport_error;
  std::size_t answered = 0;
};

// Sends every request, keeping at most `in_flight_limit` unanswered at any
// time, and hands each response to `on_response`. Each request must carry a
// unique string "id". On transport failure, dispatch stops and reports it;
// responses already delivered stay delivered.
DispatchOutcome dispatch_windowed(Channel& channel, const std::vector<nlohmann::json>& requests,
                                  std::size_t in_flight_limit,
                                  const std::function<void(const nlohmann::json&)>& on_response);

// Transport spec: "exec:<command>", "http://host:port", or a caller-known
// builtin name. Returns nullptr for builtins so callers can dispatch them.
std::unique_ptr<Channel> open_transport(const std::string& spec, const std::string& http_path,
                                        std::size_t in_flight_limit);

}  // namespace splitqa
