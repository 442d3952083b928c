#include "lobforge/remote_agent.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <istream>
#include <ostream>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

namespace lobforge {

namespace {

std::string errno_text() { return std::strerror(errno); }

/// Buffered line reader/writer over a pair of descriptors.
class FdChannel : public LineChannel {
 public:
  FdChannel(int in_fd, int out_fd, bool owned) : in_(in_fd), out_(out_fd), owned_(owned) {}
  ~FdChannel() override { close_fds(); }

  void write_line(const std::string& line) override {
    std::string data = line;
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(out_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError("agent write failed: " + errno_text());
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (eof_) throw ProtocolError("agent closed the connection" + partial());
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw ProtocolError("agent timed out after " + std::to_string(timeout.count()) + " ms");
      pollfd p{in_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(left.count()));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError("agent poll failed: " + errno_text());
      }
      if (r == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(in_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw ProtocolError("agent read failed: " + errno_text());
      }
      if (n == 0) eof_ = true;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  void close_fds() {
    if (!owned_) return;
    if (in_ >= 0) ::close(in_);
    if (out_ >= 0 && out_ != in_) ::close(out_);
    in_ = out_ = -1;
  }
  void close_output() {
    if (owned_ && out_ >= 0 && out_ != in_) {
      ::close(out_);
      out_ = -1;
    }
  }

 private:
  std::string partial() const { return buffer_.empty() ? "" : " mid-line: '" + buffer_ + "'"; }

  int in_;
  int out_;
  bool owned_;
  bool eof_{false};
  std::string buffer_;
};

class ProcessChannel final : public FdChannel {
 public:
  ProcessChannel(int in_fd, int out_fd, pid_t pid) : FdChannel(in_fd, out_fd, true), pid_(pid) {}
  ~ProcessChannel() override {
    close_output();
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) {
        close_fds();
        return;
      }
      ::usleep(10000);
    }
    ::kill(pid_, SIGTERM);
    ::waitpid(pid_, nullptr, 0);
    close_fds();
  }

 private:
  pid_t pid_;
};

void ignore_sigpipe() {
  static const bool once = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

}  // namespace

std::unique_ptr<LineChannel> spawn_agent(const std::string& command) {
  ignore_sigpipe();
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0) throw RuntimeError("pipe failed: " + errno_text());
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw RuntimeError("pipe failed: " + errno_text());
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw RuntimeError("fork failed: " + errno_text());
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
  ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
  return std::make_unique<ProcessChannel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineChannel> connect_agent(const std::string& endpoint) {
  ignore_sigpipe();
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size())
    throw ValidationError("agent endpoint must be host:port, got '" + endpoint + "'");
  const std::string host = endpoint.substr(0, colon), port = endpoint.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0)
    throw RuntimeError("cannot resolve " + endpoint + ": " + ::gai_strerror(rc));
  int fd = -1;
  for (addrinfo* a = found; a; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw RuntimeError("cannot connect to agent at " + endpoint);
  return std::make_unique<FdChannel>(fd, fd, true);
}

std::unique_ptr<LineChannel> fd_channel(int in_fd, int out_fd) {
  return std::make_unique<FdChannel>(in_fd, out_fd, false);
}

nlohmann::json hello_message(std::size_t window_depth, const ScalerBounds& bounds) {
  return {{"type", "hello"}, {"version", kProtocolVersion}, {"T", window_depth}, {"bounds", to_json(bounds)}};
}

nlohmann::json next_message(const StateWindow& window, const ScalerBounds& bounds, Nanos ts) {
  return {{"type", "next"}, {"window", normalize_window(window, bounds)}, {"ts", ts}};
}

namespace {

nlohmann::json parse_line(const std::string& line, const char* what) {
  try {
    nlohmann::json j = nlohmann::json::parse(line);
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
      throw ProtocolError(std::string("malformed ") + what + " (no type): '" + line + "'");
    return j;
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError(std::string("malformed ") + what + " (not JSON): '" + line + "'");
  }
}

}  // namespace

AgentReply parse_action_reply(const std::string& line) {
  const nlohmann::json j = parse_line(line, "agent reply");
  const std::string type = j["type"];
  if (type == "error") throw ProtocolError("agent reported an error: " + j.value("msg", std::string("(no message)")));
  if (type != "action") throw ProtocolError("unexpected agent reply type '" + type + "': '" + line + "'");
  const auto vec = j.find("vector");
  if (vec == j.end() || !vec->is_array() || vec->size() != ActionVector::kSize)
    throw ProtocolError("agent reply needs a 7-element vector: '" + line + "'");
  AgentReply reply;
  for (std::size_t i = 0; i < ActionVector::kSize; ++i) {
    const auto& v = (*vec)[i];
    if (!v.is_number() || !std::isfinite(v.get<double>()))
      throw ProtocolError("agent reply vector has a non-finite entry: '" + line + "'");
    reply.vector[i] = v.get<double>();
  }
  const auto dt = j.find("dt_ns");
  if (dt == j.end() || !dt->is_number_integer() || dt->get<std::int64_t>() <= 0)
    throw ProtocolError("agent reply needs a positive integer dt_ns: '" + line + "'");
  reply.dt = dt->get<Nanos>();
  return reply;
}

void check_ack(const std::string& line, std::size_t window_depth, const ScalerBounds& bounds) {
  const nlohmann::json j = parse_line(line, "handshake reply");
  if (j["type"] == "error") throw ProtocolError("agent refused the handshake: " + j.value("msg", std::string("")));
  if (j["type"] != "ack") throw ProtocolError("expected ack, got: '" + line + "'");
  try {
    if (j.contains("T") && j["T"].get<std::size_t>() != window_depth)
      throw ProtocolError("agent acknowledged T=" + j["T"].dump() + ", expected " + std::to_string(window_depth));
    if (j.contains("bounds") && !(bounds_from_json(j["bounds"]) == bounds))
      throw ProtocolError("agent acknowledged different bounds: '" + line + "'");
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("malformed ack: '" + line + "'");
  } catch (const ValidationError&) {
    throw ProtocolError("malformed ack bounds: '" + line + "'");
  }
}

RemoteWorldAgent::RemoteWorldAgent(std::unique_ptr<LineChannel> channel, RemoteAgentConfig config)
    : channel_(std::move(channel)), config_(std::move(config)) {
  channel_->write_line(hello_message(config_.window_depth, config_.bounds).dump());
  check_ack(channel_->read_line(config_.timeout), config_.window_depth, config_.bounds);
}

RemoteWorldAgent::~RemoteWorldAgent() {
  try {
    channel_->write_line(R"({"type":"bye"})");
  } catch (const std::exception& e) {
    spdlog::debug("remote agent bye failed: {}", e.what());
  }
}

TimedAction RemoteWorldAgent::next(const MarketView& view, Rng& rng) {
  channel_->write_line(next_message(view.window, config_.bounds, view.now).dump());
  ++requests_;
  const AgentReply reply = parse_action_reply(channel_->read_line(config_.timeout));
  return {decode(reply.vector, config_.bounds, config_.queue_model, view.book, rng, &counters_), reply.dt};
}

namespace {

class IdleWorld final : public WorldAgent {
 public:
  TimedAction next(const MarketView&, Rng&) override { throw RuntimeError("step server has no world agent"); }
  std::string name() const override { return "step-server"; }
};

}  // namespace

StepServer::StepServer(SimConfig config, std::span<const FlowRecord> replay, const ExplicitModelParams& model)
    : config_(std::move(config)), replay_(replay), model_(model), idle_(std::make_unique<IdleWorld>()) {
  config_.window_depth = model_.window_depth;
  config_.validate();
}

nlohmann::json StepServer::state_message(const StepOutcome* outcome) const {
  nlohmann::json j{{"type", "state"},
                   {"window", normalize_window(kernel_->window(), model_.bounds)},
                   {"ts", kernel_->now()},
                   {"step", steps_}};
  const Book& book = kernel_->market().book();
  const auto mid = mid_price(book);
  j["mid"] = mid ? nlohmann::json(*mid) : nlohmann::json(nullptr);
  if (outcome) {
    j["applied"] = outcome->applied;
    j["status"] = to_string(outcome->status);
  }
  return j;
}

nlohmann::json StepServer::handle(const std::string& line, bool& done) {
  done = false;
  nlohmann::json req;
  try {
    req = parse_line(line, "request");
  } catch (const ProtocolError& e) {
    return {{"type", "error"}, {"msg", e.what()}};
  }
  const std::string type = req["type"];
  try {
    if (type == "hello") return hello_message(model_.window_depth, model_.bounds);
    if (type == "bye") {
      done = true;
      return {{"type", "bye"}, {"steps", steps_}};
    }
    if (type == "reset") {
      SimConfig c = config_;
      if (req.contains("seed")) c.seed = req["seed"].get<std::uint64_t>();
      kernel_ = std::make_unique<Kernel>(c, replay_, *idle_);
      kernel_->warm_up();
      steps_ = 0;
      return state_message(nullptr);
    }
    if (type == "step") {
      if (!kernel_) return {{"type", "error"}, {"msg", "step before reset"}};
      nlohmann::json as_reply = req;
      as_reply["type"] = "action";
      const AgentReply a = parse_action_reply(as_reply.dump());
      Rng rng = Rng(kernel_->config().seed).split(streams::kCodec).split(steps_);
      const Action action = decode(a.vector, model_.bounds, model_.queue_position[0], kernel_->market().book(), rng,
                                   &counters_);
      const StepOutcome outcome = kernel_->apply({action, a.dt}, EventSource::World);
      ++steps_;
      return state_message(&outcome);
    }
  } catch (const ProtocolError& e) {
    return {{"type", "error"}, {"msg", e.what()}};
  } catch (const nlohmann::json::exception& e) {
    return {{"type", "error"}, {"msg", std::string("bad ") + type + " request: " + e.what()}};
  }
  return {{"type", "error"}, {"msg", "unknown request type '" + type + "'"}};
}

std::size_t StepServer::serve(std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    bool done = false;
    const nlohmann::json reply = handle(line, done);
    out << reply.dump() << '\n' << std::flush;
    if (reply["type"] == "error") throw ProtocolError(reply["msg"].get<std::string>());
    if (done) break;
  }
  return steps_;
}

}  // namespace lobforge
