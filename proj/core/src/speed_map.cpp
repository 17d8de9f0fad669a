#include "trav/speed_map.hpp"

namespace trav {

double lookup(const RiskSpeedMap& map, double x, double y, double speed) {
  if (!map.geom.contains(x, y)) return 0.0;
  const int h = map.geom.row_of(y);
  const int w = map.geom.col_of(x);
  const double v = map.at(map.layer_of(speed), h, w);
  return v < 0.0 ? 0.0 : v;
}

RiskSpeedMap build_risk_map(const SpeedDistributionMap& sdm,
                            const RiskParams& params) {
  params.validate();
  RiskSpeedMap map(sdm.geom, sdm.layers, sdm.s_max);
  for (size_t i = 0; i < sdm.cells.size(); ++i) {
    if (sdm.cells[i])
      map.values[i] = risk_adjusted_speed(*sdm.cells[i], params);
  }
  return map;
}

}  // namespace trav
