#include "splitqa/channel.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <mutex>
#include <thread>
#include <unordered_set>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "splitqa/error.hpp"

namespace splitqa {

using nlohmann::json;

void LocalChannel::send(const json& request) { ready_.push_back(handler_(request)); }

json LocalChannel::receive() {
  if (ready_.empty()) throw TransportError("local channel: receive with nothing outstanding");
  json out = std::move(ready_.front());
  ready_.pop_front();
  return out;
}

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

SubprocessChannel::SubprocessChannel(const std::string& command) : command_(command) {
  ignore_sigpipe();
  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw TransportError("pipe: " + std::string(strerror(errno)));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw TransportError("pipe: " + std::string(strerror(errno)));
  }
  const pid_t pid = fork();
  if (pid < 0) throw TransportError("fork: " + std::string(strerror(errno)));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

SubprocessChannel::~SubprocessChannel() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ <= 0) return;
  int status = 0;
  for (int i = 0; i < 200; ++i) {
    if (waitpid(pid_, &status, WNOHANG) != 0) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  kill(pid_, SIGKILL);
  waitpid(pid_, &status, 0);
}

void SubprocessChannel::send(const json& request) {
  if (to_child_ < 0) throw TransportError("subprocess '" + command_ + "': input already closed");
  const std::string line = request.dump() + "\n";
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = write(to_child_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("subprocess '" + command_ + "': write failed: " + strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

json SubprocessChannel::receive() {
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (line.empty()) continue;
      try {
        return json::parse(line);
      } catch (const json::parse_error& e) {
        throw TransportError("subprocess '" + command_ + "': malformed response: " + e.what());
      }
    }
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("subprocess '" + command_ + "': read failed: " + strerror(errno));
    }
    if (n == 0) throw TransportError("subprocess '" + command_ + "' closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void SubprocessChannel::close_send() {
  if (to_child_ >= 0) {
    close(to_child_);
    to_child_ = -1;
  }
}

DispatchOutcome dispatch_windowed(Channel& channel, const std::vector<json>& requests,
                                  std::size_t in_flight_limit,
                                  const std::function<void(const json&)>& on_response) {
  if (in_flight_limit == 0) throw Error("in-flight limit must be at least 1");
  DispatchOutcome outcome;
  std::unordered_set<std::string> outstanding;
  std::size_t next = 0;
  bool closed = false;
  try {
    for (;;) {
      while (next < requests.size() && outstanding.size() < in_flight_limit) {
        const json& req = requests[next++];
        channel.send(req);
        outstanding.insert(req.at("id").get<std::string>());
      }
      if (next == requests.size() && !closed) {
        channel.close_send();
        closed = true;
      }
      if (outstanding.empty()) break;
      const json resp = channel.receive();
      auto id = resp.find("id");
      if (id == resp.end() || !id->is_string()) throw TransportError("response without a string id");
      if (outstanding.erase(id->get<std::string>()) == 0)
        throw TransportError("response for unknown id '" + id->get<std::string>() + "'");
      on_response(resp);
      ++outcome.answered;
    }
  } catch (const TransportError& e) {
    outcome.transport_failed = true;
    outcome.transport_error = e.what();
  }
  return outcome;
}

std::unique_ptr<Channel> open_transport(const std::string& spec, const std::string& http_path,
                                        std::size_t in_flight_limit) {
  if (spec.rfind("builtin:", 0) == 0) return nullptr;
  if (spec.rfind("exec:", 0) == 0) return std::make_unique<SubprocessChannel>(spec.substr(5));
  if (spec.rfind("http://", 0) == 0)
    return std::make_unique<HttpChannel>(spec, http_path, in_flight_limit);
  throw Error("unknown transport '" + spec + "' (expected exec:<command>, http://host:port or builtin:<name>)");
}

}  // namespace splitqa
