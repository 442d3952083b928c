#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lobforge/types.hpp"

namespace lobforge {

enum class MsgType : char { Add = 'A', Execute = 'E', Cancel = 'C', Replace = 'R', Market = 'M' };

/// One line of the canonical order-flow CSV:
/// ts_ns,msg,order_id,side,price_ticks,qty,ref_order_id,new_price_ticks,new_qty
///
/// Required fields per message:
///   A: order_id, side, price_ticks, qty
///   M: side, qty                      (order_id optional)
///   C: ref_order_id                   (side, price_ticks, qty describe the removed order)
///   R: order_id (new), ref_order_id, new_price_ticks, new_qty
///   E: ref_order_id (resting order), qty; order_id is the aggressor
struct FlowRecord {
  Nanos ts{0};
  MsgType msg{MsgType::Add};
  std::optional<OrderId> order_id;
  std::optional<Side> side;
  std::optional<Ticks> price;
  std::optional<Shares> qty;
  std::optional<OrderId> ref_order_id;
  std::optional<Ticks> new_price;
  std::optional<Shares> new_qty;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

inline constexpr std::string_view kFormatVersionLine = "#v1";
inline constexpr std::string_view kFlowHeader =
    "ts_ns,msg,order_id,side,price_ticks,qty,ref_order_id,new_price_ticks,new_qty";

/// Streaming reader. Validates the version line and header, field presence,
/// timestamp monotonicity and reference resolution. Records whose reference
/// id is not a live order are skipped and counted.
class FlowReader {
 public:
  explicit FlowReader(std::istream& in);

  /// Next valid record, or nullopt at end of input. Throws ValidationError
  /// (with the line number) on malformed input.
  std::optional<FlowRecord> next();

  std::size_t skipped_unresolved() const noexcept { return skipped_unresolved_; }
  std::size_t line_number() const noexcept { return line_; }

 private:
  bool track(const FlowRecord& r);

  std::istream& in_;
  std::size_t line_{0};
  Nanos last_ts_{0};
  std::size_t skipped_unresolved_{0};
  std::unordered_map<OrderId, Shares> live_;
};

struct FlowFile {
  std::vector<FlowRecord> records;
  std::size_t skipped_unresolved{0};
};

FlowFile read_flow(std::istream& in);
FlowFile read_flow(const std::filesystem::path& path);

std::string format_record(const FlowRecord& r);
/// Parses one data line (no validation of references). Throws ValidationError.
FlowRecord parse_record(std::string_view line, std::size_t line_number = 0);

void write_flow(std::ostream& out, std::span<const FlowRecord> records);
void write_flow(const std::filesystem::path& path, std::span<const FlowRecord> records);

}  // namespace lobforge
