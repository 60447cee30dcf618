#pragma once

// Static SVG charts and commented CSV tables for exported results.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sbpinn {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<Series> series;
};

std::string render_svg(const LineChart& chart);

/// Heatmap of values[ix * nt + it] over an nx-by-nt grid.
std::string render_heatmap_svg(const std::string& title, std::span<const double> x,
                               std::span<const double> t, std::span<const double> values);

void write_text(const std::filesystem::path& path, const std::string& text);

/// CSV with a leading `# config_hash=..., seed=...` comment and a header row.
class CsvWriter {
public:
    CsvWriter(const std::string& config_hash, unsigned long long seed, std::vector<std::string> header);
    void row(std::span<const double> values);
    std::string str() const { return out_; }
    void save(const std::filesystem::path& path) const { write_text(path, out_); }

private:
    std::size_t columns_;
    std::string out_;
};

}  // namespace sbpinn
