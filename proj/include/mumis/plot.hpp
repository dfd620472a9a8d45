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
#pragma once

#include <array>
#include <string>
#include <vector>

namespace mumis::plot {

using Color = std::array<unsigned char, 3>;

/// Minimal RGB raster for PNG output (charts carry no text in the raster
/// variant; the SVG twin has labels).
class Canvas {
 public:
  Canvas(int width, int height, Color background = {255, 255, 255});
  int width() const { return w_; }
  int height() const { return h_; }
  void set_pixel(int x, int y, Color c);
  void fill_rect(int x0, int y0, int x1, int y1, Color c);
  void draw_line(int x0, int y0, int x1, int y1, Color c);
  void save_png(const std::string& path) const;

 private:
  int w_, h_;
  std::vector<unsigned char> rgb_;
};

/// Write an 8-bit RGB PNG (zlib-compressed).
void write_png(const std::string& path, const unsigned char* rgb, int width, int height);

/// Grayscale image in [0,1] saved as PNG, nearest-neighbor upscaled.
void save_grayscale_png(const std::string& path, const std::vector<double>& values, int width,
                        int height, int upscale = 8);

/// Heatmap in [0,1] with a blue-to-red map, nearest-neighbor upscaled.
void save_heatmap_png(const std::string& path, const std::vector<double>& values, int width,
                      int height, int upscale = 8);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_x = false;
  int width = 640;
  int height = 420;
};

/// Writes <prefix>.svg and <prefix>.png.
void line_chart(const std::string& prefix, const std::vector<Series>& series,
                const ChartOptions& opts);

/// Bar chart over categories; one group of bars per series.
void bar_chart(const std::string& prefix, const std::vector<std::string>& categories,
               const std::vector<Series>& series, const ChartOptions& opts);

/// Two-panel histogram (shared bin count per panel, log-ready values must be
/// pre-transformed by the caller via opts.log_x).
void histogram_panels(const std::string& prefix, const std::vector<double>& left,
                      const std::vector<double>& right, const std::string& left_label,
                      const std::string& right_label, int bins, const ChartOptions& opts);

}  // namespace mumis::plot
