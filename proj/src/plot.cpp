#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "lobforge/stats.hpp"

namespace lobforge {

namespace {

struct Series {
  std::string label;
  std::vector<double> y;
  const char* color;
};

constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

class Svg {
 public:
  Svg(std::string title, std::vector<double> x, double x0, double x1, double y0, double y1)
      : title_(std::move(title)), x_(std::move(x)), x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
    if (x1_ == x0_) x1_ = x0_ + 1;
    if (y1_ == y0_) {
      y0_ -= 0.5;
      y1_ += 0.5;
    }
  }

  double px(double x) const { return kLeft + (x - x0_) / (x1_ - x0_) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0_) / (y1_ - y0_) * (kHeight - kTop - kBottom); }

  void line(const Series& s) {
    body_ += "<polyline fill=\"none\" stroke=\"" + std::string(s.color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.y.size() && i < x_.size(); ++i) body_ += fmt(px(x_[i])) + "," + fmt(py(s.y[i])) + " ";
    body_ += "\"/>\n";
    legend_.push_back(s);
  }

  void bars(const std::vector<double>& left, const std::vector<double>& right, const std::vector<double>& h,
            const char* color) {
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double x = px(left[i]), w = std::max(0.5, px(right[i]) - x);
      const double top = py(h[i]), base = py(std::max(0.0, y0_));
      body_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(std::min(top, base)) + "\" width=\"" + fmt(w) +
               "\" height=\"" + fmt(std::abs(base - top)) + "\" fill=\"" + color + "\"/>\n";
    }
  }

  void save(const std::filesystem::path& path, const std::string& xlabel, const std::string& ylabel) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title_
        << "</text>\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
        << kHeight - kBottom << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double yv = y0_ + (y1_ - y0_) * i / 4.0, xv = x0_ + (x1_ - x0_) * i / 4.0;
      out << "<text x=\"" << kLeft - 5 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv)
          << "</text>\n"
          << "<text x=\"" << px(xv) << "\" y=\"" << kHeight - kBottom + 15 << "\" text-anchor=\"middle\">"
          << fmt(xv) << "</text>\n";
    }
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">" << xlabel
        << "</text>\n"
        << "<text x=\"15\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 15," << kHeight / 2
        << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n"
        << body_;
    for (std::size_t i = 0; i < legend_.size(); ++i)
      out << "<text x=\"" << kWidth - kRight - 5 << "\" y=\"" << kTop + 14 * i << "\" text-anchor=\"end\" fill=\""
          << legend_[i].color << "\">" << legend_[i].label << "</text>\n";
    out << "</svg>\n";
  }

 private:
  std::string title_;
  std::vector<double> x_;
  double x0_, x1_, y0_, y1_;
  std::string body_;
  std::vector<Series> legend_;
};

std::pair<double, double> y_range(const std::vector<Series>& series) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series)
    for (double v : s.y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (lo > hi) return {0, 1};
  return {lo, hi};
}

void profile_plot(const std::filesystem::path& path, const std::string& title, const std::string& ylabel,
                  const BucketProfile& p) {
  std::vector<double> x;
  Series mean{"mean", {}, "#1f77b4"}, p5{"p5", {}, "#aaaaaa"}, p95{"p95", {}, "#555555"};
  for (std::size_t i = 0; i < p.starts.size(); ++i) {
    x.push_back(static_cast<double>(p.starts[i]) / kNanosPerHour);
    mean.y.push_back(p.values[i].mean);
    p5.y.push_back(p.values[i].p5);
    p95.y.push_back(p.values[i].p95);
  }
  const std::vector<Series> all{p95, mean, p5};
  const auto [lo, hi] = y_range(all);
  Svg svg(title, x, x.empty() ? 0 : x.front(), x.empty() ? 1 : x.back(), std::min(0.0, lo), hi);
  for (const auto& s : all) svg.line(s);
  svg.save(path, "time (hours)", ylabel);
}

}  // namespace

void StatsReport::write_plots(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  if (!return_histogram.density.empty()) {
    std::vector<double> left(return_histogram.edges.begin(), return_histogram.edges.end() - 1);
    std::vector<double> right(return_histogram.edges.begin() + 1, return_histogram.edges.end());
    const double top = *std::max_element(return_histogram.density.begin(), return_histogram.density.end());
    Svg svg("Minutely log returns", {}, return_histogram.edges.front(), return_histogram.edges.back(), 0, top);
    svg.bars(left, right, return_histogram.density, "#1f77b4");
    svg.save(dir / "returns.svg", "log return", "density");
  }
  if (return_acf || squared_return_acf) {
    std::vector<Series> series;
    if (return_acf) series.push_back({"returns", *return_acf, "#1f77b4"});
    if (squared_return_acf) series.push_back({"squared returns", *squared_return_acf, "#d62728"});
    std::vector<double> lags;
    for (std::size_t k = 0; k < series.front().y.size(); ++k) lags.push_back(static_cast<double>(k));
    const auto [lo, hi] = y_range(series);
    Svg svg("Autocorrelation", lags, 0, lags.empty() ? 1 : lags.back(), std::min(lo, 0.0), std::max(hi, 1.0));
    for (const auto& s : series) svg.line(s);
    svg.save(dir / "acf.svg", "lag", "autocorrelation");
  }
  if (!first_fill.seconds.empty()) {
    const Histogram h = histogram(first_fill.seconds, 40);
    std::vector<double> left(h.edges.begin(), h.edges.end() - 1), right(h.edges.begin() + 1, h.edges.end());
    Svg svg("Time to first fill", {}, h.edges.front(), h.edges.back(), 0,
            *std::max_element(h.density.begin(), h.density.end()));
    svg.bars(left, right, h.density, "#2ca02c");
    svg.save(dir / "time_to_first_fill.svg", "seconds", "density");
  }
  if (!add_volume_per_minute.empty()) {
    std::vector<double> x;
    for (Nanos t : minute_starts) x.push_back(static_cast<double>(t) / kNanosPerHour);
    const std::vector<Series> s{{"volume", add_volume_per_minute, "#1f77b4"}};
    const auto [lo, hi] = y_range(s);
    Svg svg("Limit order volume per minute", x, x.front(), x.back(), std::min(0.0, lo), hi);
    svg.line(s.front());
    svg.save(dir / "add_volume.svg", "time (hours)", "shares");
  }
  for (Side side : {Side::Bid, Side::Ask}) {
    const auto& h = depth_histogram[static_cast<std::size_t>(side)];
    if (h.empty()) continue;
    std::vector<double> left, right, share;
    for (const auto& [d, p] : h) {
      left.push_back(static_cast<double>(d) - 0.4);
      right.push_back(static_cast<double>(d) + 0.4);
      share.push_back(p);
    }
    double top = 0;
    for (double p : share) top = std::max(top, p);
    const std::string name(to_string(side));
    Svg svg("Limit order depth (" + name + ")", {}, left.front(), right.back(), 0, top);
    svg.bars(left, right, share, "#9467bd");
    svg.save(dir / ("depth_" + name + ".svg"), "depth (ticks)", "share");
  }
  profile_plot(dir / "spread.svg", "Spread", "ticks", spread);
  profile_plot(dir / "l1_bid.svg", "Best bid volume", "shares", l1_bid);
  profile_plot(dir / "l1_ask.svg", "Best ask volume", "shares", l1_ask);
  {
    std::vector<double> left, right, share;
    for (std::size_t i = 0; i < 4; ++i) {
      left.push_back(i + 0.1);
      right.push_back(i + 0.9);
      share.push_back(type_proportions[i]);
    }
    Svg svg("Order types (LO, MO, CAN, REP)", {}, 0, 4, 0, 1);
    svg.bars(left, right, share, "#ff7f0e");
    svg.save(dir / "type_proportions.svg", "type", "proportion");
  }
}

}  // namespace lobforge
