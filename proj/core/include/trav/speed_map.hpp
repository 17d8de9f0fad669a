#pragma once

#include <optional>
#include <vector>

#include "trav/speed_pmf.hpp"

namespace trav {

// Shared grid geometry. Row h grows +y, column w grows +x; the origin is
// the (x, y) corner of cell (0, 0).
struct GridGeometry {
  int rows = 0;
  int cols = 0;
  double resolution = 0.4;  // m / cell
  double origin_x = 0.0;
  double origin_y = 0.0;

  bool contains(double x, double y) const {
    const double lx = x - origin_x;
    const double ly = y - origin_y;
    return lx >= 0.0 && ly >= 0.0 && lx < cols * resolution &&
           ly < rows * resolution;
  }
  int col_of(double x) const {
    return static_cast<int>((x - origin_x) / resolution);
  }
  int row_of(double y) const {
    return static_cast<int>((y - origin_y) / resolution);
  }
  double cell_center_x(int w) const { return origin_x + (w + 0.5) * resolution; }
  double cell_center_y(int h) const { return origin_y + (h + 0.5) * resolution; }
};

// K-layer grid of risk-adjusted speeds. Layer k serves commanded speeds in
// [k*s_max/K, (k+1)*s_max/K). Unknown cells carry a negative sentinel.
struct RiskSpeedMap {
  static constexpr double kUnknown = -1.0;

  GridGeometry geom;
  int layers = 1;
  double s_max = 5.0;
  std::vector<double> values;  // layer-major, then row-major

  RiskSpeedMap() = default;
  RiskSpeedMap(GridGeometry g, int k, double smax)
      : geom(g), layers(k), s_max(smax),
        values(static_cast<size_t>(k) * g.rows * g.cols, kUnknown) {}

  double& at(int k, int h, int w) {
    return values[(static_cast<size_t>(k) * geom.rows + h) * geom.cols + w];
  }
  double at(int k, int h, int w) const {
    return values[(static_cast<size_t>(k) * geom.rows + h) * geom.cols + w];
  }

  int layer_of(double speed) const {
    if (speed < 0.0) speed = 0.0;
    int k = static_cast<int>(speed * layers / s_max);
    return k >= layers ? layers - 1 : k;
  }
};

// Total lookup: 0 m/s outside the map or on unknown cells.
double lookup(const RiskSpeedMap& map, double x, double y, double speed);

// K-layer grid of full speed distributions; unknown cells hold nullopt.
struct SpeedDistributionMap {
  GridGeometry geom;
  int layers = 1;
  double s_max = 5.0;
  std::vector<std::optional<SpeedPmf>> cells;  // layer-major, then row-major

  SpeedDistributionMap() = default;
  SpeedDistributionMap(GridGeometry g, int k, double smax)
      : geom(g), layers(k), s_max(smax),
        cells(static_cast<size_t>(k) * g.rows * g.cols) {}

  std::optional<SpeedPmf>& at(int k, int h, int w) {
    return cells[(static_cast<size_t>(k) * geom.rows + h) * geom.cols + w];
  }
  const std::optional<SpeedPmf>& at(int k, int h, int w) const {
    return cells[(static_cast<size_t>(k) * geom.rows + h) * geom.cols + w];
  }
};

// Reduce every known cell to its risk-adjusted speed; unknown cells keep
// the sentinel.
RiskSpeedMap build_risk_map(const SpeedDistributionMap& sdm,
                            const RiskParams& params);

}  // namespace trav
