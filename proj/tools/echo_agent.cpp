// Scripted world agent for protocol tests: acknowledges the handshake and
// answers every request with a one-lot add one tick behind the best quote,
// alternating sides.
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace {

double scaled(double x, const nlohmann::json& range) {
  const double lo = range.at(0).get<double>(), hi = range.at(1).get<double>();
  return 2.0 * (x - lo) / (hi - lo) - 1.0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scripted line-protocol world agent"};
  long long dt_ns = 100'000'000;
  long long garbage_after = -1;
  bool refuse = false, silent = false;
  app.add_option("--dt-ns", dt_ns, "Inter-arrival returned with every action")->capture_default_str();
  app.add_option("--garbage-after", garbage_after, "Reply with malformed JSON to request N (0-based)");
  app.add_flag("--refuse", refuse, "Answer requests with an error reply");
  app.add_flag("--silent", silent, "Never answer requests");
  CLI11_PARSE(app, argc, argv);

  std::string line;
  nlohmann::json bounds;
  long long served = 0;
  while (std::getline(std::cin, line)) {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      std::cout << nlohmann::json{{"type", "error"}, {"msg", "bad request"}}.dump() << std::endl;
      return 2;
    }
    const std::string type = msg.value("type", "");
    if (type == "hello") {
      bounds = msg.at("bounds");
      std::cout << nlohmann::json{{"type", "ack"}, {"T", msg.at("T")}, {"bounds", bounds}}.dump() << std::endl;
    } else if (type == "next") {
      if (silent) continue;
      if (refuse) {
        std::cout << nlohmann::json{{"type", "error"}, {"msg", "refused"}}.dump() << std::endl;
        continue;
      }
      if (served == garbage_after) {
        std::cout << "{\"type\":\"action\",\"vector\":[0.1, oops" << std::endl;
        ++served;
        continue;
      }
      const double side = served % 2 == 0 ? -1.0 : 1.0;
      const nlohmann::json vec = {scaled(1.0, bounds.at("depth")), -1.0, -1.0, scaled(1.0, bounds.at("qty_100x")),
                                  -1.0, 0.0, side};
      std::cout << nlohmann::json{{"type", "action"}, {"vector", vec}, {"dt_ns", dt_ns}}.dump() << std::endl;
      ++served;
    } else if (type == "bye") {
      return 0;
    }
  }
  return 0;
}
