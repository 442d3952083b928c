#include "lobforge/flow.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace lobforge {

namespace {

constexpr std::size_t kColumns = 9;

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ValidationError("flow line " + std::to_string(line) + ": " + what);
}

template <typename T>
std::optional<T> parse_int(std::string_view field, std::size_t line, std::string_view name) {
  if (field.empty()) return std::nullopt;
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    fail(line, "bad " + std::string(name) + " '" + std::string(field) + "'");
  return value;
}

template <typename T>
void append_field(std::string& out, const std::optional<T>& v) {
  out.push_back(',');
  if (v) out += std::to_string(*v);
}

}  // namespace

FlowRecord parse_record(std::string_view line, std::size_t line_number) {
  std::array<std::string_view, kColumns> fields;
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (count == kColumns) fail(line_number, "too many columns");
    fields[count++] = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (count != kColumns) fail(line_number, "expected 9 columns, got " + std::to_string(count));

  FlowRecord r;
  const auto ts = parse_int<Nanos>(fields[0], line_number, "ts_ns");
  if (!ts) fail(line_number, "missing ts_ns");
  r.ts = *ts;
  if (fields[1].size() != 1) fail(line_number, "bad msg '" + std::string(fields[1]) + "'");
  switch (fields[1][0]) {
    case 'A': r.msg = MsgType::Add; break;
    case 'E': r.msg = MsgType::Execute; break;
    case 'C': r.msg = MsgType::Cancel; break;
    case 'R': r.msg = MsgType::Replace; break;
    case 'M': r.msg = MsgType::Market; break;
    default: fail(line_number, "bad msg '" + std::string(fields[1]) + "'");
  }
  r.order_id = parse_int<OrderId>(fields[2], line_number, "order_id");
  if (!fields[3].empty()) {
    if (fields[3] == "B") r.side = Side::Bid;
    else if (fields[3] == "S") r.side = Side::Ask;
    else fail(line_number, "bad side '" + std::string(fields[3]) + "'");
  }
  r.price = parse_int<Ticks>(fields[4], line_number, "price_ticks");
  r.qty = parse_int<Shares>(fields[5], line_number, "qty");
  r.ref_order_id = parse_int<OrderId>(fields[6], line_number, "ref_order_id");
  r.new_price = parse_int<Ticks>(fields[7], line_number, "new_price_ticks");
  r.new_qty = parse_int<Shares>(fields[8], line_number, "new_qty");

  auto require = [&](bool ok, const char* what) {
    if (!ok) fail(line_number, std::string("msg ") + static_cast<char>(r.msg) + " requires " + what);
  };
  switch (r.msg) {
    case MsgType::Add:
      require(r.order_id && r.side && r.price && r.qty, "order_id, side, price_ticks, qty");
      require(*r.qty > 0 && *r.price > 0, "positive price_ticks and qty");
      break;
    case MsgType::Market:
      require(r.side && r.qty, "side, qty");
      require(*r.qty > 0, "positive qty");
      break;
    case MsgType::Cancel:
      require(r.ref_order_id.has_value(), "ref_order_id");
      break;
    case MsgType::Replace:
      require(r.order_id && r.ref_order_id && r.new_price && r.new_qty,
              "order_id, ref_order_id, new_price_ticks, new_qty");
      require(*r.new_qty > 0 && *r.new_price > 0, "positive new_price_ticks and new_qty");
      break;
    case MsgType::Execute:
      require(r.ref_order_id && r.qty, "ref_order_id, qty");
      require(*r.qty > 0, "positive qty");
      break;
  }
  return r;
}

std::string format_record(const FlowRecord& r) {
  std::string out = std::to_string(r.ts);
  out.push_back(',');
  out.push_back(static_cast<char>(r.msg));
  append_field(out, r.order_id);
  out.push_back(',');
  if (r.side) out.push_back(*r.side == Side::Bid ? 'B' : 'S');
  append_field(out, r.price);
  append_field(out, r.qty);
  append_field(out, r.ref_order_id);
  append_field(out, r.new_price);
  append_field(out, r.new_qty);
  return out;
}

FlowReader::FlowReader(std::istream& in) : in_(in) {
  std::string line;
  if (!std::getline(in_, line)) fail(1, "missing version line");
  ++line_;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kFormatVersionLine) fail(line_, "expected version line '#v1'");
  if (!std::getline(in_, line)) fail(2, "missing header");
  ++line_;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kFlowHeader) fail(line_, "bad header");
}

bool FlowReader::track(const FlowRecord& r) {
  switch (r.msg) {
    case MsgType::Add:
      if (live_.contains(*r.order_id)) fail(line_, "duplicate live order id " + std::to_string(*r.order_id));
      live_[*r.order_id] = *r.qty;
      return true;
    case MsgType::Market:
      return true;
    case MsgType::Cancel: {
      auto it = live_.find(*r.ref_order_id);
      if (it == live_.end()) return false;
      live_.erase(it);
      return true;
    }
    case MsgType::Replace: {
      auto it = live_.find(*r.ref_order_id);
      if (it == live_.end()) return false;
      live_.erase(it);
      if (live_.contains(*r.order_id)) fail(line_, "duplicate live order id " + std::to_string(*r.order_id));
      live_[*r.order_id] = *r.new_qty;
      return true;
    }
    case MsgType::Execute: {
      auto it = live_.find(*r.ref_order_id);
      if (it == live_.end()) return false;
      if ((it->second -= *r.qty) <= 0) live_.erase(it);
      if (r.order_id) {
        auto agg = live_.find(*r.order_id);
        if (agg != live_.end() && (agg->second -= *r.qty) <= 0) live_.erase(agg);
      }
      return true;
    }
  }
  return true;
}

std::optional<FlowRecord> FlowReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    FlowRecord r = parse_record(line, line_);
    if (r.ts < last_ts_) fail(line_, "timestamp regression");
    last_ts_ = r.ts;
    if (!track(r)) {
      ++skipped_unresolved_;
      continue;
    }
    return r;
  }
  return std::nullopt;
}

FlowFile read_flow(std::istream& in) {
  FlowReader reader(in);
  FlowFile file;
  while (auto r = reader.next()) file.records.push_back(*r);
  file.skipped_unresolved = reader.skipped_unresolved();
  return file;
}

FlowFile read_flow(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open flow file " + path.string());
  return read_flow(in);
}

void write_flow(std::ostream& out, std::span<const FlowRecord> records) {
  out << kFormatVersionLine << '\n' << kFlowHeader << '\n';
  for (const FlowRecord& r : records) out << format_record(r) << '\n';
}

void write_flow(const std::filesystem::path& path, std::span<const FlowRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write flow file " + path.string());
  write_flow(out, records);
  if (!out) throw RuntimeError("error writing flow file " + path.string());
}

}  // namespace lobforge
