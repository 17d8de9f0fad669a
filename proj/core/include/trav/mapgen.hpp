#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trav/model.hpp"
#include "trav/speed_map.hpp"

namespace trav {

// Grid of terrain class ids; -1 marks unknown cells.
struct SemanticGrid {
  GridGeometry geom;
  int n_classes = 0;
  std::vector<int16_t> cells;  // row-major, rows x cols

  SemanticGrid() = default;
  SemanticGrid(GridGeometry g, int classes)
      : geom(g), n_classes(classes),
        cells(static_cast<size_t>(g.rows) * g.cols, -1) {}

  int16_t& at(int h, int w) { return cells[static_cast<size_t>(h) * geom.cols + w]; }
  int16_t at(int h, int w) const { return cells[static_cast<size_t>(h) * geom.cols + w]; }

  void validate() const;
};

// Build the K-layer distribution map. Layer k queries the model at the
// commanded-speed bin center (k + 0.5) * s_max / K. Only n_classes * K
// forward passes are evaluated; cells sharing a class share the result.
SpeedDistributionMap generate_sdm(const SemanticGrid& grid,
                                  const MlpModel& model, int layers);

RiskSpeedMap generate_risk_map(const SemanticGrid& grid, const MlpModel& model,
                               int layers, const RiskParams& params);

// Semantic grid file: JSON header {C, H, W, resolution, origin} with cells
// either inline ("cells": [...]) or in an adjacent flat binary file of
// little-endian int16 ("cells_file": name, relative to the JSON).
SemanticGrid load_semantic_grid(const std::string& path);
void save_semantic_grid(const SemanticGrid& grid, const std::string& path,
                        bool binary_cells = false);

// Risk map export: JSON header plus adjacent layer-major float32 LE binary.
void save_risk_map(const RiskSpeedMap& map, const std::string& path);
RiskSpeedMap load_risk_map(const std::string& path);

// Distribution map export: JSON header plus adjacent float32 LE binary of
// bin masses, layer-major then row-major then bin index; unknown cells are
// all -1.
void save_sdm(const SpeedDistributionMap& sdm, const std::string& path);
SpeedDistributionMap load_sdm(const std::string& path);

// Single layer as CSV (rows of comma-separated values) for plotting.
void export_layer_csv(const RiskSpeedMap& map, int layer,
                      const std::string& path);

}  // namespace trav
