#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "lobforge/explicit_model.hpp"
#include "lobforge/sim_kernel.hpp"

namespace lobforge {

inline constexpr std::string_view kProtocolVersion = "v1";
inline constexpr std::chrono::milliseconds kDefaultAgentTimeout{10000};

/// Newline-delimited byte channel.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  /// Throws ProtocolError on timeout or end of stream.
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

/// Runs `command` with /bin/sh -c and talks over its standard streams.
std::unique_ptr<LineChannel> spawn_agent(const std::string& command);
/// "host:port".
std::unique_ptr<LineChannel> connect_agent(const std::string& endpoint);
/// Reads `in_fd`, writes `out_fd`; the descriptors stay owned by the caller.
std::unique_ptr<LineChannel> fd_channel(int in_fd, int out_fd);

nlohmann::json hello_message(std::size_t window_depth, const ScalerBounds& bounds);
nlohmann::json next_message(const StateWindow& window, const ScalerBounds& bounds, Nanos ts);

/// Parses one agent reply to a "next" request. Throws ProtocolError quoting
/// the line for malformed JSON, a wrong shape, non-finite values, a
/// non-positive dt or an error reply.
struct AgentReply {
  ActionVector vector;
  Nanos dt{0};
};
AgentReply parse_action_reply(const std::string& line);

/// Checks the handshake reply: {"type":"ack"} with optional T and bounds,
/// which must match when present.
void check_ack(const std::string& line, std::size_t window_depth, const ScalerBounds& bounds);

struct RemoteAgentConfig {
  ScalerBounds bounds;
  std::size_t window_depth{5};
  /// Queue-position law for decoded cancels.
  BetaBinomialParams queue_model{1.0, 1.0, BetaBinomialParams::Fit::Uniform};
  std::chrono::milliseconds timeout{kDefaultAgentTimeout};
};

/// World agent backed by an external process speaking the line protocol.
/// The handshake runs in the constructor; "bye" is sent on destruction.
class RemoteWorldAgent final : public WorldAgent {
 public:
  RemoteWorldAgent(std::unique_ptr<LineChannel> channel, RemoteAgentConfig config);
  ~RemoteWorldAgent() override;

  TimedAction next(const MarketView& view, Rng& rng) override;
  std::string name() const override { return "remote"; }

  std::size_t requests() const noexcept { return requests_; }
  const CodecCounters& counters() const noexcept { return counters_; }

 private:
  std::unique_ptr<LineChannel> channel_;
  RemoteAgentConfig config_;
  std::size_t requests_{0};
  CodecCounters counters_;
};

/// Lets an external trainer step the kernel: each request carries one
/// action vector, each reply the resulting normalized state window.
///
///   {"type":"hello"}                          -> {"type":"hello","version","T","bounds"}
///   {"type":"reset","seed":S}                 -> {"type":"state",...} after warm-up replay
///   {"type":"step","vector":[7],"dt_ns":n}    -> {"type":"state","applied","status",...}
///   {"type":"bye"}                            -> {"type":"bye"}
///
/// A malformed request gets {"type":"error","msg"} and ends the session with
/// a ProtocolError.
class StepServer {
 public:
  StepServer(SimConfig config, std::span<const FlowRecord> replay, const ExplicitModelParams& model);

  /// Serves until "bye" or end of input. Returns the number of steps served.
  std::size_t serve(std::istream& in, std::ostream& out);
  /// One request line to one reply; `done` is set after "bye".
  nlohmann::json handle(const std::string& line, bool& done);

 private:
  nlohmann::json state_message(const StepOutcome* outcome) const;

  SimConfig config_;
  std::span<const FlowRecord> replay_;
  const ExplicitModelParams& model_;
  std::unique_ptr<WorldAgent> idle_;
  std::unique_ptr<Kernel> kernel_;
  std::size_t steps_{0};
  CodecCounters counters_;
};

}  // namespace lobforge
