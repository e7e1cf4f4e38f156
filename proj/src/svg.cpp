#include "bcnet/svg.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <stdexcept>

namespace bcnet::svg {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kLeft = 60;
constexpr int kRight = 20;
constexpr int kTop = 40;
constexpr int kBottom = 50;
constexpr std::array<const char*, 4> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string header(const std::string& title, const std::string& comment) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
       "\" height=\"" + std::to_string(kHeight) + "\" viewBox=\"0 0 " + std::to_string(kWidth) +
       " " + std::to_string(kHeight) + "\">\n";
  if (!comment.empty()) s += "<!-- " + escape(comment) + " -->\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + std::to_string(kWidth / 2) +
       "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
       escape(title) + "</text>\n";
  const int x0 = kLeft;
  const int y0 = kHeight - kBottom;
  s += "<line x1=\"" + std::to_string(x0) + "\" y1=\"" + std::to_string(y0) + "\" x2=\"" +
       std::to_string(kWidth - kRight) + "\" y2=\"" + std::to_string(y0) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + std::to_string(x0) + "\" y1=\"" + std::to_string(kTop) + "\" x2=\"" +
       std::to_string(x0) + "\" y2=\"" + std::to_string(y0) + "\" stroke=\"black\"/>\n";
  return s;
}

std::string label(double x, double y, const std::string& text, const char* anchor = "middle") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(text) + "</text>\n";
}

}  // namespace

std::string histogram(const std::vector<Series>& series, int bins, const std::string& title,
                      const std::string& x_label, const std::string& comment) {
  if (series.empty()) throw std::invalid_argument("histogram needs at least one series");
  if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const auto& s : series) {
    if (s.values.empty()) throw std::invalid_argument("series '" + s.label + "' is empty");
    const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());
    lo = first ? *mn : std::min(lo, *mn);
    hi = first ? *mx : std::max(hi, *mx);
    first = false;
  }
  if (hi <= lo) hi = lo + 1e-3;
  const double bin_width = (hi - lo) / bins;

  std::vector<std::vector<int>> counts(series.size(), std::vector<int>(static_cast<std::size_t>(bins), 0));
  int peak = 1;
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (double v : series[s].values) {
      const int b = std::min(bins - 1, static_cast<int>((v - lo) / bin_width));
      peak = std::max(peak, ++counts[s][static_cast<std::size_t>(b)]);
    }
  }

  std::string out = header(title, comment);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double slot = plot_w / bins;
  const double bar = slot / static_cast<double>(series.size());
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % kColors.size()];
    for (int b = 0; b < bins; ++b) {
      const double h = plot_h * counts[s][static_cast<std::size_t>(b)] / peak;
      out += "<rect x=\"" + num(kLeft + b * slot + s * bar) + "\" y=\"" +
             num(kTop + plot_h - h) + "\" width=\"" + num(bar) + "\" height=\"" + num(h) +
             "\" fill=\"" + color + "\" fill-opacity=\"0.8\"/>\n";
    }
    const double ly = kTop + 4 + 16.0 * static_cast<double>(s);
    out += "<rect class=\"legend\" x=\"" + num(kWidth - kRight - 150) + "\" y=\"" + num(ly) +
           "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
    out += label(kWidth - kRight - 132, ly + 10, series[s].label, "start");
  }
  for (int t = 0; t <= 4; ++t) {
    const double x = lo + (hi - lo) * t / 4.0;
    out += label(kLeft + plot_w * t / 4.0, kHeight - kBottom + 16, num(x));
  }
  out += label(kLeft - 8, kTop + 10, std::to_string(peak), "end");
  out += label(kWidth / 2.0, kHeight - 12, x_label);
  out += "</svg>\n";
  return out;
}

std::string width_ratio_bars(const std::vector<double>& ratios, const std::string& title,
                             const std::string& comment) {
  if (ratios.empty()) throw std::invalid_argument("width ratio plot needs at least one layer");
  std::string out = header(title, comment);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double slot = plot_w / static_cast<double>(ratios.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double r = std::clamp(ratios[i], 0.0, 1.0);
    const double h = plot_h * r;
    out += "<rect class=\"bar\" data-ratio=\"" + num(ratios[i]) + "\" x=\"" +
           num(kLeft + i * slot + slot * 0.1) + "\" y=\"" + num(kTop + plot_h - h) +
           "\" width=\"" + num(slot * 0.8) + "\" height=\"" + num(h) + "\" fill=\"" +
           kColors[0] + "\"/>\n";
    out += label(kLeft + (i + 0.5) * slot, kHeight - kBottom + 16, std::to_string(i + 1));
  }
  out += label(kLeft - 8, kTop + 4, "1.00", "end");
  out += label(kLeft - 8, kTop + plot_h, "0.00", "end");
  out += label(kWidth / 2.0, kHeight - 12, "layer");
  out += "</svg>\n";
  return out;
}

}  // namespace bcnet::svg
