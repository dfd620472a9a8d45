/*
 * Copyright 2026 The mumis authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "mumis/plot.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mumis/util.hpp"

namespace mumis::plot {

namespace {

const Color kPalette[] = {
    {31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
    {148, 103, 189}, {140, 86, 75},  {227, 119, 194}, {127, 127, 127},
};

Color palette(std::size_t i) { return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))]; }

void put_u32_be(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

void png_chunk(std::ofstream& f, const char type[4], const std::vector<unsigned char>& data) {
  std::vector<unsigned char> head;
  put_u32_be(head, static_cast<std::uint32_t>(data.size()));
  f.write(reinterpret_cast<const char*>(head.data()), 4);
  f.write(type, 4);
  if (!data.empty()) f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
  std::vector<unsigned char> tail;
  put_u32_be(tail, static_cast<std::uint32_t>(crc));
  f.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace

void write_png(const std::string& path, const unsigned char* rgb, int width, int height) {
  // filter byte 0 per scanline
  std::vector<unsigned char> raw(static_cast<std::size_t>(height) * (1 + 3 * width));
  for (int y = 0; y < height; ++y) {
    unsigned char* row = raw.data() + static_cast<std::size_t>(y) * (1 + 3 * width);
    row[0] = 0;
    std::memcpy(row + 1, rgb + static_cast<std::size_t>(y) * 3 * width, 3 * static_cast<std::size_t>(width));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("png deflate failed");
  compressed.resize(bound);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  f.write(reinterpret_cast<const char*>(sig), 8);
  std::vector<unsigned char> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type RGB
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  png_chunk(f, "IHDR", ihdr);
  png_chunk(f, "IDAT", compressed);
  png_chunk(f, "IEND", {});
}

Canvas::Canvas(int width, int height, Color background) : w_(width), h_(height) {
  rgb_.resize(static_cast<std::size_t>(width) * height * 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) set_pixel(x, y, background);
}

void Canvas::set_pixel(int x, int y, Color c) {
  if (x < 0 || x >= w_ || y < 0 || y >= h_) return;
  const std::size_t i = (static_cast<std::size_t>(y) * w_ + x) * 3;
  rgb_[i] = c[0];
  rgb_[i + 1] = c[1];
  rgb_[i + 2] = c[2];
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Color c) {
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) set_pixel(x, y, c);
}

void Canvas::draw_line(int x0, int y0, int x1, int y1, Color c) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set_pixel(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Canvas::save_png(const std::string& path) const { write_png(path, rgb_.data(), w_, h_); }

void save_grayscale_png(const std::string& path, const std::vector<double>& values, int width,
                        int height, int upscale) {
  Canvas canvas(width * upscale, height * upscale);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double v = std::clamp(values[static_cast<std::size_t>(y) * width + x], 0.0, 1.0);
      const auto g = static_cast<unsigned char>(std::lround(v * 255.0));
      canvas.fill_rect(x * upscale, y * upscale, (x + 1) * upscale - 1, (y + 1) * upscale - 1,
                       {g, g, g});
    }
  }
  canvas.save_png(path);
}

void save_heatmap_png(const std::string& path, const std::vector<double>& values, int width,
                      int height, int upscale) {
  Canvas canvas(width * upscale, height * upscale);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double v = std::clamp(values[static_cast<std::size_t>(y) * width + x], 0.0, 1.0);
      // blue (cold) -> white -> red (hot)
      Color c;
      if (v < 0.5) {
        const double t = v * 2.0;
        c = {static_cast<unsigned char>(std::lround(40 + 215 * t)),
             static_cast<unsigned char>(std::lround(80 + 175 * t)),
             static_cast<unsigned char>(std::lround(200 + 55 * t))};
      } else {
        const double t = (v - 0.5) * 2.0;
        c = {255, static_cast<unsigned char>(std::lround(255 - 200 * t)),
             static_cast<unsigned char>(std::lround(255 - 215 * t))};
      }
      canvas.fill_rect(x * upscale, y * upscale, (x + 1) * upscale - 1, (y + 1) * upscale - 1, c);
    }
  }
  canvas.save_png(path);
}

// ---------------------------------------------------------------------------
// Charts (SVG with labels + raster twin)
// ---------------------------------------------------------------------------

namespace {

struct Extent {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();

  void expand(const std::vector<Series>& series) {
    for (const auto& s : series) {
      for (double v : s.x) {
        if (std::isfinite(v)) {
          xmin = std::min(xmin, v);
          xmax = std::max(xmax, v);
        }
      }
      for (double v : s.y) {
        if (std::isfinite(v)) {
          ymin = std::min(ymin, v);
          ymax = std::max(ymax, v);
        }
      }
    }
    if (!std::isfinite(xmin)) {
      xmin = 0;
      xmax = 1;
    }
    if (!std::isfinite(ymin)) {
      ymin = 0;
      ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
  }
};

std::string color_hex(Color c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

constexpr int kMarginL = 60, kMarginR = 16, kMarginT = 32, kMarginB = 46;

double map_x(double v, const Extent& e, const ChartOptions& o) {
  double lo = e.xmin, hi = e.xmax, x = v;
  if (o.log_x) {
    lo = std::log10(std::max(lo, 1e-300));
    hi = std::log10(std::max(hi, 1e-300));
    x = std::log10(std::max(v, 1e-300));
  }
  return kMarginL + (x - lo) / (hi - lo) * (o.width - kMarginL - kMarginR);
}

double map_y(double v, const Extent& e, const ChartOptions& o) {
  return o.height - kMarginB - (v - e.ymin) / (e.ymax - e.ymin) * (o.height - kMarginT - kMarginB);
}

void svg_header(std::ostringstream& svg, const ChartOptions& o) {
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << o.width << "' height='" << o.height
      << "' viewBox='0 0 " << o.width << ' ' << o.height << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << o.width / 2 << "' y='18' text-anchor='middle' font-size='14'>"
      << o.title << "</text>\n"
      << "<text x='" << o.width / 2 << "' y='" << o.height - 8
      << "' text-anchor='middle' font-size='12'>" << o.xlabel << "</text>\n"
      << "<text x='14' y='" << o.height / 2 << "' text-anchor='middle' font-size='12' "
      << "transform='rotate(-90 14 " << o.height / 2 << ")'>" << o.ylabel << "</text>\n";
}

void svg_axes(std::ostringstream& svg, const Extent& e, const ChartOptions& o) {
  svg << "<line x1='" << kMarginL << "' y1='" << (o.height - kMarginB) << "' x2='"
      << (o.width - kMarginR) << "' y2='" << (o.height - kMarginB)
      << "' stroke='black' stroke-width='1'/>\n"
      << "<line x1='" << kMarginL << "' y1='" << kMarginT << "' x2='" << kMarginL << "' y2='"
      << (o.height - kMarginB) << "' stroke='black' stroke-width='1'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fy = e.ymin + (e.ymax - e.ymin) * i / 4.0;
    const double py = map_y(fy, e, o);
    svg << "<text x='" << (kMarginL - 6) << "' y='" << py + 4
        << "' text-anchor='end' font-size='10'>" << format_double(fy, 4) << "</text>\n";
    const double fxv = e.xmin + (e.xmax - e.xmin) * i / 4.0;
    const double px = kMarginL + (o.width - kMarginL - kMarginR) * i / 4.0;
    double label = fxv;
    if (o.log_x) {
      const double llo = std::log10(std::max(e.xmin, 1e-300));
      const double lhi = std::log10(std::max(e.xmax, 1e-300));
      label = std::pow(10.0, llo + (lhi - llo) * i / 4.0);
    }
    svg << "<text x='" << px << "' y='" << (o.height - kMarginB + 16)
        << "' text-anchor='middle' font-size='10'>" << format_double(label, 4) << "</text>\n";
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

}  // namespace

void line_chart(const std::string& prefix, const std::vector<Series>& series,
                const ChartOptions& opts) {
  Extent e;
  e.expand(series);

  std::ostringstream svg;
  svg_header(svg, opts);
  svg_axes(svg, e, opts);
  Canvas canvas(opts.width, opts.height);
  canvas.draw_line(kMarginL, opts.height - kMarginB, opts.width - kMarginR,
                   opts.height - kMarginB, {0, 0, 0});
  canvas.draw_line(kMarginL, kMarginT, kMarginL, opts.height - kMarginB, {0, 0, 0});

  for (std::size_t s = 0; s < series.size(); ++s) {
    const Color c = palette(s);
    svg << "<polyline fill='none' stroke='" << color_hex(c) << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      svg << map_x(series[s].x[i], e, opts) << ',' << map_y(series[s].y[i], e, opts) << ' ';
    }
    svg << "'/>\n";
    svg << "<text x='" << (opts.width - kMarginR - 4) << "' y='"
        << (kMarginT + 14 * (static_cast<int>(s) + 1)) << "' text-anchor='end' font-size='11' fill='"
        << color_hex(c) << "'>" << series[s].label << "</text>\n";
    for (std::size_t i = 1; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].y[i - 1]) || !std::isfinite(series[s].y[i])) continue;
      canvas.draw_line(static_cast<int>(map_x(series[s].x[i - 1], e, opts)),
                       static_cast<int>(map_y(series[s].y[i - 1], e, opts)),
                       static_cast<int>(map_x(series[s].x[i], e, opts)),
                       static_cast<int>(map_y(series[s].y[i], e, opts)), c);
    }
  }
  svg << "</svg>\n";
  write_file(prefix + ".svg", svg.str());
  canvas.save_png(prefix + ".png");
}

void bar_chart(const std::string& prefix, const std::vector<std::string>& categories,
               const std::vector<Series>& series, const ChartOptions& opts) {
  Extent e;
  e.xmin = 0;
  e.xmax = static_cast<double>(categories.size());
  e.ymin = 0;
  e.ymax = 1e-12;
  for (const auto& s : series)
    for (double v : s.y)
      if (std::isfinite(v)) e.ymax = std::max(e.ymax, v);
  e.ymax *= 1.1;

  std::ostringstream svg;
  svg_header(svg, opts);
  svg_axes(svg, e, opts);
  Canvas canvas(opts.width, opts.height);
  canvas.draw_line(kMarginL, opts.height - kMarginB, opts.width - kMarginR,
                   opts.height - kMarginB, {0, 0, 0});
  canvas.draw_line(kMarginL, kMarginT, kMarginL, opts.height - kMarginB, {0, 0, 0});

  const double slot = (opts.width - kMarginL - kMarginR) / std::max<std::size_t>(1, categories.size());
  const double bar = slot / (static_cast<double>(series.size()) + 1.0);
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Color c = palette(s);
    for (std::size_t i = 0; i < series[s].y.size() && i < categories.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      const double x0 = kMarginL + slot * static_cast<double>(i) + bar * (static_cast<double>(s) + 0.5);
      const double y0 = map_y(series[s].y[i], e, opts);
      const double y1 = opts.height - kMarginB;
      svg << "<rect x='" << x0 << "' y='" << y0 << "' width='" << bar << "' height='"
          << (y1 - y0) << "' fill='" << color_hex(c) << "'/>\n";
      canvas.fill_rect(static_cast<int>(x0), static_cast<int>(y0),
                       static_cast<int>(x0 + bar), static_cast<int>(y1), c);
    }
    svg << "<text x='" << (opts.width - kMarginR - 4) << "' y='"
        << (kMarginT + 14 * (static_cast<int>(s) + 1)) << "' text-anchor='end' font-size='11' fill='"
        << color_hex(c) << "'>" << series[s].label << "</text>\n";
  }
  for (std::size_t i = 0; i < categories.size(); ++i) {
    svg << "<text x='" << (kMarginL + slot * (static_cast<double>(i) + 0.5)) << "' y='"
        << (opts.height - kMarginB + 16) << "' text-anchor='middle' font-size='10'>"
        << categories[i] << "</text>\n";
  }
  svg << "</svg>\n";
  write_file(prefix + ".svg", svg.str());
  canvas.save_png(prefix + ".png");
}

void histogram_panels(const std::string& prefix, const std::vector<double>& left,
                      const std::vector<double>& right, const std::string& left_label,
                      const std::string& right_label, int bins, const ChartOptions& opts) {
  auto histogram = [&](const std::vector<double>& values) {
    std::vector<double> xs(static_cast<std::size_t>(bins)), ys(static_cast<std::size_t>(bins), 0.0);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
      double t = opts.log_x ? std::log10(std::max(v, 1e-300)) : v;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    if (!std::isfinite(lo)) {
      lo = 0;
      hi = 1;
    }
    if (hi == lo) hi = lo + 1;
    for (double v : values) {
      double t = opts.log_x ? std::log10(std::max(v, 1e-300)) : v;
      int b = static_cast<int>((t - lo) / (hi - lo) * bins);
      b = std::clamp(b, 0, bins - 1);
      ys[static_cast<std::size_t>(b)] += 1.0;
    }
    for (int b = 0; b < bins; ++b)
      xs[static_cast<std::size_t>(b)] = lo + (hi - lo) * (b + 0.5) / bins;
    return std::make_pair(xs, ys);
  };

  auto [lx, ly] = histogram(left);
  auto [rx, ry] = histogram(right);
  Series sl{left_label, lx, ly};
  Series sr{right_label, rx, ry};
  ChartOptions o = opts;
  o.log_x = false;  // values already transformed above
  o.xlabel = opts.log_x ? opts.xlabel + " (log10)" : opts.xlabel;
  line_chart(prefix, {sl, sr}, o);
}

}  // namespace mumis::plot
