#include "sbpinn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sbpinn {

namespace {

constexpr double kW = 640, kH = 420, kL = 70, kR = 20, kT = 40, kB = 50;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace

std::string render_svg(const LineChart& chart) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto ty = [&](double y) { return chart.log_y ? std::log10(std::max(y, 1e-300)) : y; };
    for (const auto& s : chart.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (chart.log_y && s.y[i] <= 0.0)) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    auto px = [&](double x) { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); };
    auto py = [&](double y) { return kH - kB - (ty(y) - y0) / (y1 - y0) * (kH - kT - kB); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(chart.title) << "</text>\n";
    o << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR << "\" height=\""
      << kH - kT - kB << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0;
        const double yv = y0 + (y1 - y0) * k / 4.0;
        const double ypix = kH - kB - (kH - kT - kB) * k / 4.0;
        o << "<text x=\"" << px(xv) << "\" y=\"" << kH - kB + 16 << "\" text-anchor=\"middle\">"
          << num(xv) << "</text>\n";
        o << "<text x=\"" << kL - 6 << "\" y=\"" << ypix + 4 << "\" text-anchor=\"end\">"
          << (chart.log_y ? "1e" + num(yv) : num(yv)) << "</text>\n";
    }
    o << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">"
      << escape(chart.x_label) << "</text>\n";
    o << "<text transform=\"translate(16," << kH / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(chart.y_label) << "</text>\n";
    for (std::size_t k = 0; k < chart.series.size(); ++k) {
        const auto& s = chart.series[k];
        const char* color = kColors[k % std::size(kColors)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (chart.log_y && s.y[i] <= 0.0)) continue;
            o << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
        }
        o << "\"/>\n";
        if (!s.label.empty())
            o << "<text x=\"" << kW - kR - 8 << "\" y=\"" << kT + 16 + 14 * double(k)
              << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string render_heatmap_svg(const std::string& title, std::span<const double> x,
                               std::span<const double> t, std::span<const double> values) {
    if (values.size() != x.size() * t.size() || x.size() < 2 || t.size() < 2)
        throw std::invalid_argument("heatmap: value count does not match the grid");
    const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn_it, hi = *mx_it > *mn_it ? *mx_it : *mn_it + 1.0;
    const double cw = (kW - kL - kR) / double(t.size()), ch = (kH - kT - kB) / double(x.size());
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\" shape-rendering=\"crispEdges\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << " [" << num(lo) << ", " << num(hi) << "]</text>\n";
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double u = (values[i * t.size() + j] - lo) / (hi - lo);
            const int r = int(255 * std::clamp(1.5 * u, 0.0, 1.0));
            const int g = int(255 * std::clamp(1.5 * u - 0.5, 0.0, 1.0));
            const int b = int(255 * std::clamp(0.5 + 0.5 * (1.0 - 2.0 * u), 0.0, 1.0) * (1.0 - u));
            o << "<rect x=\"" << num(kL + cw * double(j)) << "\" y=\"" << num(kH - kB - ch * double(i + 1))
              << "\" width=\"" << num(cw + 0.5) << "\" height=\"" << num(ch + 0.5) << "\" fill=\"rgb(" << r
              << "," << g << "," << b << ")\"/>\n";
        }
    o << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">t ["
      << num(t.front()) << ", " << num(t.back()) << "]</text>\n";
    o << "<text transform=\"translate(16," << kH / 2 << ") rotate(-90)\" text-anchor=\"middle\">x ["
      << num(x.front()) << ", " << num(x.back()) << "]</text>\n";
    o << "</svg>\n";
    return o.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

CsvWriter::CsvWriter(const std::string& config_hash, unsigned long long seed,
                     std::vector<std::string> header)
    : columns_(header.size()) {
    out_ = "# config_hash=" + config_hash + ", seed=" + std::to_string(seed) + "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out_ += (i ? "," : "") + header[i];
    out_ += "\n";
}

void CsvWriter::row(std::span<const double> values) {
    if (values.size() != columns_) throw std::invalid_argument("csv: wrong column count");
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", values[i]);
        if (i) out_ += ',';
        out_ += buf;
    }
    out_ += '\n';
}

}  // namespace sbpinn
