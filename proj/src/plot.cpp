#include "dreamcc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "dreamcc/errors.hpp"

namespace dreamcc {

std::vector<MetricsRecord> read_metrics_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open metrics file: " + path);
  std::vector<MetricsRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw ParseError(std::string("bad JSON line: ") + e.what(), lineno);
    }
    if (!j.is_object()) throw ParseError("expected a JSON object per line", lineno);
    MetricsRecord rec;
    for (const auto& [k, v] : j.items())
      if (v.is_number()) rec[k] = v.get<double>();
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<std::string> metrics_keys(const std::vector<MetricsRecord>& records) {
  std::vector<std::string> keys;
  for (const auto& rec : records)
    for (const auto& [k, _] : rec)
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

Series extract_series(const std::vector<MetricsRecord>& records, const std::string& key,
                      const std::string& step_key) {
  Series s;
  s.label = key;
  for (const auto& rec : records) {
    const auto kv = rec.find(key);
    const auto sv = rec.find(step_key);
    if (kv != rec.end() && sv != rec.end()) s.points.push_back({sv->second, kv->second});
  }
  if (s.points.empty()) {
    std::string available;
    for (const auto& k : metrics_keys(records)) available += (available.empty() ? "" : ", ") + k;
    throw UsageError("no data for key '" + key + "'; available: " + available);
  }
  return s;
}

Series bin_series(const Series& s, double bin_width) {
  if (bin_width <= 0.0) return s;
  std::map<int64_t, std::pair<SeriesPoint, int64_t>> buckets;  // index -> (sums, count)
  for (const auto& p : s.points) {
    const int64_t idx = static_cast<int64_t>(std::floor(p.step / bin_width));
    auto& [sum, count] = buckets[idx];
    sum.step += p.step;
    sum.value += p.value;
    ++count;
  }
  Series out;
  out.label = s.label;
  for (const auto& [idx, entry] : buckets) {
    const auto& [sum, count] = entry;
    out.points.push_back({sum.step / count, sum.value / count});
  }
  return out;
}

// ---- PNG ----

namespace {

void put_be32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

void write_chunk(std::ofstream& os, const char type[4], const std::string& data) {
  std::string out;
  put_be32(out, static_cast<uint32_t>(data.size()));
  out.append(type, 4);
  out += data;
  uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(out.data() + 4), out.size() - 4);
  put_be32(out, crc);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void write_png(const std::string& path, int64_t width, int64_t height,
               const std::vector<uint8_t>& pixels, int channels) {
  if (width <= 0 || height <= 0 ||
      static_cast<int64_t>(pixels.size()) != width * height * channels)
    throw DimensionError("png: pixel buffer does not match geometry");
  // filter byte 0 per row
  std::vector<uint8_t> raw((width * channels + 1) * height);
  for (int64_t y = 0; y < height; ++y) {
    raw[y * (width * channels + 1)] = 0;
    std::memcpy(&raw[y * (width * channels + 1) + 1], &pixels[y * width * channels],
                width * channels);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw NumericError("png: zlib compression failed");
  compressed.resize(bound);

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw UsageError("cannot open for writing: " + path);
  const uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  os.write(reinterpret_cast<const char*>(sig), 8);
  std::string ihdr;
  put_be32(ihdr, static_cast<uint32_t>(width));
  put_be32(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);                                 // bit depth
  ihdr.push_back(channels == 3 ? 2 : 0);             // color type
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  write_chunk(os, "IHDR", ihdr);
  write_chunk(os, "IDAT", std::string(compressed.begin(), compressed.end()));
  write_chunk(os, "IEND", "");
  if (!os) throw UsageError("write failed: " + path);
}

}  // namespace

void write_png_rgb(const std::string& path, int64_t width, int64_t height,
                   const std::vector<uint8_t>& rgb) {
  write_png(path, width, height, rgb, 3);
}

void write_png_gray(const std::string& path, int64_t width, int64_t height,
                    const std::vector<uint8_t>& gray) {
  write_png(path, width, height, gray, 1);
}

// ---- rasterizer ----

namespace {

struct Canvas {
  int64_t w, h;
  std::vector<uint8_t> px;  // rgb
  Canvas(int64_t w_, int64_t h_) : w(w_), h(h_), px(w_ * h_ * 3, 255) {}
  void set(int64_t x, int64_t y, uint8_t r, uint8_t g, uint8_t b) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    uint8_t* p = &px[(y * w + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
  void fill_rect(int64_t x0, int64_t y0, int64_t x1, int64_t y1, uint8_t r, uint8_t g,
                 uint8_t b) {
    for (int64_t y = y0; y <= y1; ++y)
      for (int64_t x = x0; x <= x1; ++x) set(x, y, r, g, b);
  }
  void line(double x0, double y0, double x1, double y1, uint8_t r, uint8_t g, uint8_t b) {
    const double dx = x1 - x0, dy = y1 - y0;
    const int64_t steps = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(
                                                   std::max(std::abs(dx), std::abs(dy)))));
    for (int64_t i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      set(std::llround(x0 + t * dx), std::llround(y0 + t * dy), r, g, b);
    }
  }
};

// 5x7 bitmap font: digits, lowercase letters, and the punctuation used in
// metric names and tick labels. Each glyph is 7 rows of 5 bits.
const std::map<char, std::array<uint8_t, 7>>& font() {
  static const std::map<char, std::array<uint8_t, 7>> f = {
      {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
      {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
      {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
      {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
      {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
      {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
      {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
      {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
      {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
      {'a', {0x00, 0x00, 0x0e, 0x01, 0x0f, 0x11, 0x0f}},
      {'b', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1e}},
      {'c', {0x00, 0x00, 0x0e, 0x10, 0x10, 0x11, 0x0e}},
      {'d', {0x01, 0x01, 0x0d, 0x13, 0x11, 0x11, 0x0f}},
      {'e', {0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e}},
      {'f', {0x06, 0x09, 0x08, 0x1c, 0x08, 0x08, 0x08}},
      {'g', {0x00, 0x0f, 0x11, 0x11, 0x0f, 0x01, 0x0e}},
      {'h', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11}},
      {'i', {0x04, 0x00, 0x0c, 0x04, 0x04, 0x04, 0x0e}},
      {'j', {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0c}},
      {'k', {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12}},
      {'l', {0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
      {'m', {0x00, 0x00, 0x1a, 0x15, 0x15, 0x15, 0x15}},
      {'n', {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11}},
      {'o', {0x00, 0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e}},
      {'p', {0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10}},
      {'q', {0x00, 0x00, 0x0d, 0x13, 0x0f, 0x01, 0x01}},
      {'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
      {'s', {0x00, 0x00, 0x0e, 0x10, 0x0e, 0x01, 0x1e}},
      {'t', {0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06}},
      {'u', {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0d}},
      {'v', {0x00, 0x00, 0x11, 0x11, 0x11, 0x0a, 0x04}},
      {'w', {0x00, 0x00, 0x11, 0x15, 0x15, 0x15, 0x0a}},
      {'x', {0x00, 0x00, 0x11, 0x0a, 0x04, 0x0a, 0x11}},
      {'y', {0x00, 0x00, 0x11, 0x11, 0x0f, 0x01, 0x0e}},
      {'z', {0x00, 0x00, 0x1f, 0x02, 0x04, 0x08, 0x1f}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
      {',', {0x00, 0x00, 0x00, 0x00, 0x0c, 0x04, 0x08}},
      {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
      {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f}},
      {'/', {0x01, 0x02, 0x02, 0x04, 0x08, 0x08, 0x10}},
      {':', {0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00}},
      {'=', {0x00, 0x00, 0x1f, 0x00, 0x1f, 0x00, 0x00}},
      {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
  };
  return f;
}

void draw_text(Canvas& c, int64_t x, int64_t y, const std::string& text, uint8_t r, uint8_t g,
               uint8_t b) {
  int64_t cx = x;
  for (char raw : text) {
    const char ch = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    const auto it = font().find(ch);
    if (it != font().end())
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
          if (it->second[row] & (1 << (4 - col))) c.set(cx + col, y + row, r, g, b);
    cx += 6;
  }
}

std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double nice_step(double range, int target_ticks) {
  if (range <= 0) return 1.0;
  const double rough = range / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(rough)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (rough <= m * mag) return m * mag;
  return 10.0 * mag;
}

const uint8_t kPalette[6][3] = {{31, 119, 180}, {214, 39, 40},  {44, 160, 44},
                                {255, 127, 14}, {148, 103, 189}, {23, 190, 207}};

}  // namespace

void render_line_plot(const std::string& path, const std::string& title,
                      const std::vector<Series>& series, int64_t width, int64_t height) {
  if (series.empty()) throw UsageError("plot: no series");
  for (const auto& s : series)
    if (s.points.empty()) throw UsageError("plot: series '" + s.label + "' is empty");

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      xmin = std::min(xmin, p.step);
      xmax = std::max(xmax, p.step);
      ymin = std::min(ymin, p.value);
      ymax = std::max(ymax, p.value);
    }
  if (xmax == xmin) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (ymax == ymin) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  Canvas c(width, height);
  const int64_t left = 80, right = width - 25, top = 30, bottom = height - 45;
  auto sx = [&](double v) { return left + (v - xmin) / (xmax - xmin) * (right - left); };
  auto sy = [&](double v) { return bottom - (v - ymin) / (ymax - ymin) * (bottom - top); };

  // grid + ticks
  const double xstep = nice_step(xmax - xmin, 5), ystep = nice_step(ymax - ymin, 5);
  for (double v = std::ceil(xmin / xstep) * xstep; v <= xmax + 1e-12 * xstep; v += xstep) {
    const int64_t x = std::llround(sx(v));
    for (int64_t y = top; y <= bottom; ++y) c.set(x, y, 225, 225, 225);
    const std::string label = format_tick(v);
    draw_text(c, x - 3 * static_cast<int64_t>(label.size()), bottom + 8, label, 60, 60, 60);
  }
  for (double v = std::ceil(ymin / ystep) * ystep; v <= ymax + 1e-12 * ystep; v += ystep) {
    const int64_t y = std::llround(sy(v));
    for (int64_t x = left; x <= right; ++x) c.set(x, y, 225, 225, 225);
    const std::string label = format_tick(v);
    draw_text(c, left - 8 - 6 * static_cast<int64_t>(label.size()), y - 3, label, 60, 60, 60);
  }
  // axes
  for (int64_t y = top; y <= bottom; ++y) c.set(left, y, 0, 0, 0);
  for (int64_t x = left; x <= right; ++x) c.set(x, bottom, 0, 0, 0);
  draw_text(c, left, 10, title, 0, 0, 0);

  for (size_t i = 0; i < series.size(); ++i) {
    const uint8_t* col = kPalette[i % 6];
    const auto& pts = series[i].points;
    for (size_t j = 1; j < pts.size(); ++j)
      c.line(sx(pts[j - 1].step), sy(pts[j - 1].value), sx(pts[j].step), sy(pts[j].value),
             col[0], col[1], col[2]);
    const bool markers = pts.size() <= 50;
    if (markers)
      for (const auto& p : pts)
        c.fill_rect(std::llround(sx(p.step)) - 2, std::llround(sy(p.value)) - 2,
                    std::llround(sx(p.step)) + 2, std::llround(sy(p.value)) + 2, col[0], col[1],
                    col[2]);
    // legend entry
    const int64_t ly = top + 6 + static_cast<int64_t>(i) * 12;
    c.fill_rect(right - 150, ly, right - 142, ly + 7, col[0], col[1], col[2]);
    draw_text(c, right - 136, ly, series[i].label, 0, 0, 0);
  }
  write_png_rgb(path, c.w, c.h, c.px);
}

void write_series_csv(const std::string& path, const std::vector<Series>& series) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw UsageError("cannot open for writing: " + path);
  os << "series,step,value\n";
  char buf[64];
  for (const auto& s : series)
    for (const auto& p : s.points) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", p.step, p.value);
      os << s.label << ',' << buf << '\n';
    }
}

}  // namespace dreamcc
