#pragma once

#include <string>
#include <utility>
#include <vector>

namespace riseflock::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

/// Minimal self-contained line-chart emitter. No external rendering
/// dependencies; output is plain SVG text.
class LinePlot {
 public:
  LinePlot(std::string title, std::string xlabel, std::string ylabel);

  void add(Series series);
  void add_hline(double y, std::string label);
  void set_log_y(bool log) { log_y_ = log; }

  std::string render(int width = 860, int height = 520) const;
  void write(const std::string& path, int width = 860, int height = 520) const;

 private:
  std::string title_, xlabel_, ylabel_;
  std::vector<Series> series_;
  std::vector<std::pair<double, std::string>> hlines_;
  bool log_y_ = false;
};

/// Palette used for per-agent curves.
const std::string& palette(std::size_t index);

}  // namespace riseflock::svg
