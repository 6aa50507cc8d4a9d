#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dreamcc {

struct SeriesPoint {
  double step = 0.0;
  double value = 0.0;
};

struct Series {
  std::string label;
  std::vector<SeriesPoint> points;
};

// metrics.jsonl: one flat JSON object per line; numeric fields only.
using MetricsRecord = std::map<std::string, double>;
std::vector<MetricsRecord> read_metrics_jsonl(const std::string& path);

std::vector<std::string> metrics_keys(const std::vector<MetricsRecord>& records);

// Pulls (step_key, key) pairs from records that contain both.
Series extract_series(const std::vector<MetricsRecord>& records, const std::string& key,
                      const std::string& step_key = "env_steps");

// Mean-aggregates points into fixed-width step buckets ([0,w), [w,2w), ...).
// Bucket step = mean of member steps. bin_width <= 0 returns the input.
Series bin_series(const Series& s, double bin_width);

// 8-bit RGB / grayscale PNG writers (zlib-compressed).
void write_png_rgb(const std::string& path, int64_t width, int64_t height,
                   const std::vector<uint8_t>& rgb);
void write_png_gray(const std::string& path, int64_t width, int64_t height,
                    const std::vector<uint8_t>& gray);

// Line plot of one or more series with axes, ticks, and a legend.
void render_line_plot(const std::string& path, const std::string& title,
                      const std::vector<Series>& series, int64_t width = 900,
                      int64_t height = 560);

// Long-format CSV: series,step,value.
void write_series_csv(const std::string& path, const std::vector<Series>& series);

}  // namespace dreamcc
