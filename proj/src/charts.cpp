// Minimal SVG bar charts for the report outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <fmt/format.h>

#include "prepubdiff/analysis.hpp"

namespace prepubdiff::analysis {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 360;
constexpr int kLeft = 56;
constexpr int kRight = 56;
constexpr int kTop = 40;
constexpr int kBottom = 56;
constexpr int kPlotW = kWidth - kLeft - kRight;
constexpr int kPlotH = kHeight - kTop - kBottom;

std::string escape(std::string_view s) {
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

std::string open_svg(std::string_view title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
      kWidth, kHeight, kWidth / 2, escape(title));
}

std::string axis(double max_value, double min_value = 0.0) {
  std::string out = fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop,
                                kTop + kPlotH);
  const double span = max_value - min_value;
  for (int i = 0; i <= 4; ++i) {
    const double v = min_value + span * i / 4.0;
    const double y = kTop + kPlotH - kPlotH * i / 4.0;
    out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", kLeft - 4, y + 4,
                       static_cast<long long>(std::llround(v)));
    out += fmt::format("<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"#ddd\"/>\n", kLeft, y,
                       kLeft + kPlotW, y);
  }
  return out;
}

}  // namespace

std::string histogram_svg(const BinnedHistogram& h) {
  std::string svg = open_svg(fmt::format("{} / {} ({}), n = {}", to_string(h.metric), to_string(h.section),
                                         to_string(h.policy), h.total));
  std::uint64_t max_count = 1;
  for (const auto& b : h.bins) max_count = std::max(max_count, b.count);
  svg += axis(static_cast<double>(max_count));
  const double slot = static_cast<double>(kPlotW) / kBinCount;
  for (int k = 0; k < kBinCount; ++k) {
    const auto& b = h.bins[k];
    const double bar_h = kPlotH * static_cast<double>(b.count) / static_cast<double>(max_count);
    const double x = kLeft + slot * k + slot * 0.15;
    svg += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#4a7ab5\"/>\n", x,
                       kTop + kPlotH - bar_h, slot * 0.7, bar_h);
    // Proportion marker on a 0..1 right-hand scale.
    const double cx = kLeft + slot * (k + 0.5);
    const double cy = kTop + kPlotH - kPlotH * b.proportion;
    svg += fmt::format("<path d=\"M{0:.1f} {1:.1f} l5 5 l-5 5 l-5 -5 z\" fill=\"#c0392b\"/>\n", cx, cy - 5);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.1f}-{:.1f}</text>\n", cx,
                       kTop + kPlotH + 16, b.upper, b.lower);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"start\">1.0</text>\n", kLeft + kPlotW + 4, kTop + 4);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"start\">0.0</text>\n", kLeft + kPlotW + 4, kTop + kPlotH + 4);
  svg += "</svg>\n";
  return svg;
}

std::string delta_svg(const DeltaReport& report, Metric metric) {
  std::string svg = open_svg(fmt::format("count deltas: {}", to_string(metric)));
  std::int64_t extent = 1;
  for (const auto& c : report.cells)
    if (c.metric == metric) extent = std::max<std::int64_t>(extent, c.count_delta < 0 ? -c.count_delta : c.count_delta);
  svg += axis(static_cast<double>(extent), -static_cast<double>(extent));
  const double zero_y = kTop + kPlotH / 2.0;
  const double slot = static_cast<double>(kPlotW) / kBinCount;
  const char* colors[] = {"#4a7ab5", "#e39c37", "#5aa469"};
  for (const auto& c : report.cells) {
    if (c.metric != metric) continue;
    const auto s = static_cast<int>(c.section);
    const double w = slot * 0.8 / 3.0;
    const double x = kLeft + slot * (c.bin - 1) + slot * 0.1 + w * s;
    const double h = (kPlotH / 2.0) * static_cast<double>(c.count_delta) / static_cast<double>(extent);
    svg += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n", x,
                       h >= 0 ? zero_y - h : zero_y, w, std::abs(h), colors[s]);
  }
  for (int k = 1; k <= kBinCount; ++k)
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.1f}-{:.1f}</text>\n",
                       kLeft + slot * (k - 0.5), kTop + kPlotH + 16, bin_upper(k), bin_lower(k));
  for (Section s : kSections) {
    const int i = static_cast<int>(s);
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>"
                       "<text x=\"{}\" y=\"{}\">{}</text>\n",
                       kLeft + i * 90, kHeight - 20, colors[i], kLeft + i * 90 + 14, kHeight - 11, to_string(s));
  }
  svg += "</svg>\n";
  return svg;
}

std::string order_svg(const OrderHistogram& h) {
  std::string svg = open_svg(fmt::format("publication order (same day: {}, excluded: {})", h.same_day, h.excluded));
  std::uint64_t max_count = 1;
  for (std::size_t i = 0; i < h.labels.size(); ++i)
    max_count = std::max({max_count, h.preprint_first[i], h.publisher_first[i]});
  svg += axis(static_cast<double>(max_count));
  const double slot = static_cast<double>(kPlotW) / static_cast<double>(std::max<std::size_t>(1, h.labels.size()));
  for (std::size_t i = 0; i < h.labels.size(); ++i) {
    const double w = slot * 0.35;
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.15;
    const double a = kPlotH * static_cast<double>(h.preprint_first[i]) / static_cast<double>(max_count);
    const double b = kPlotH * static_cast<double>(h.publisher_first[i]) / static_cast<double>(max_count);
    svg += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#4a7ab5\"/>\n", x,
                       kTop + kPlotH - a, w, a);
    svg += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#e39c37\"/>\n", x + w,
                       kTop + kPlotH - b, w, b);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x + w, kTop + kPlotH + 16,
                       escape(h.labels[i]));
  }
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"#4a7ab5\"/>"
                     "<text x=\"{}\" y=\"{}\">pre-print first</text>\n",
                     kLeft, kHeight - 20, kLeft + 14, kHeight - 11);
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"#e39c37\"/>"
                     "<text x=\"{}\" y=\"{}\">publisher first</text>\n",
                     kLeft + 130, kHeight - 20, kLeft + 144, kHeight - 11);
  svg += "</svg>\n";
  return svg;
}

}  // namespace prepubdiff::analysis
