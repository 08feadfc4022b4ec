#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <thread>

#include <httplib.h>

#include "splitqa/channel.hpp"
#include "splitqa/error.hpp"

namespace splitqa {

using nlohmann::json;

struct HttpChannel::State {
  std::string base_url;
  std::string path;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<json> pending;
  // A response, or the error text of a transport failure.
  std::deque<std::pair<std::optional<json>, std::string>> done;
  bool stopping = false;
  std::vector<std::thread> workers;

  void work() {
    httplib::Client client(base_url);
    client.set_connection_timeout(5);
    client.set_read_timeout(120);
    for (;;) {
      json req;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return stopping || !pending.empty(); });
        if (stopping) return;
        req = std::move(pending.front());
        pending.pop_front();
      }
      std::pair<std::optional<json>, std::string> result;
      const std::string id = req.value("id", "");
      auto res = client.Post(path, req.dump(), "application/json");
      if (!res) {
        result.second = "POST " + base_url + path + " failed: " + httplib::to_string(res.error());
      } else {
        try {
          json body = json::parse(res->body);
          if (res->status != 200 && !body.contains("error"))
            body = {{"id", id}, {"error", "HTTP " + std::to_string(res->status)}};
          result.first = std::move(body);
        } catch (const json::parse_error&) {
          if (res->status == 200)
            result.second = "POST " + base_url + path + ": response is not JSON";
          else
            result.first = json{{"id", id}, {"error", "HTTP " + std::to_string(res->status)}};
        }
      }
      {
        std::lock_guard lock(mu);
        done.push_back(std::move(result));
      }
      cv.notify_all();
    }
  }
};

HttpChannel::HttpChannel(const std::string& base_url, std::string path, std::size_t workers)
    : state_(std::make_unique<State>()) {
  state_->base_url = base_url;
  while (!state_->base_url.empty() && state_->base_url.back() == '/') state_->base_url.pop_back();
  state_->path = std::move(path);
  if (workers == 0) workers = 1;
  for (std::size_t i = 0; i < workers; ++i)
    state_->workers.emplace_back([s = state_.get()] { s->work(); });
}

HttpChannel::~HttpChannel() {
  {
    std::lock_guard lock(state_->mu);
    state_->stopping = true;
  }
  state_->cv.notify_all();
  for (auto& t : state_->workers) t.join();
}

void HttpChannel::send(const json& request) {
  {
    std::lock_guard lock(state_->mu);
    state_->pending.push_back(request);
  }
  state_->cv.notify_all();
}

json HttpChannel::receive() {
  std::unique_lock lock(state_->mu);
  state_->cv.wait(lock, [&] { return !state_->done.empty(); });
  auto item = std::move(state_->done.front());
  state_->done.pop_front();
  if (!item.first) throw TransportError(item.second);
  return std::move(*item.first);
}

}  // namespace splitqa
