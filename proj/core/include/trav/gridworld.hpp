#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trav/speed_pmf.hpp"

namespace trav {

// Discrete navigation world: 1 m x 1 m cells, each with a terrain class,
// and a ground-truth speed PMF per class at the fixed commanded speed.
struct GridWorld {
  int rows = 0;
  int cols = 0;
  std::vector<int> cells;  // row-major class ids
  std::map<int, SpeedPmf> class_pmfs;
  int start_row = 0, start_col = 0;
  int goal_row = 0, goal_col = 0;

  int at(int h, int w) const { return cells[static_cast<size_t>(h) * cols + w]; }
  void validate() const;

  // The two-terrain world shipped as the default benchmark: a vegetation
  // wall with a single thin crossing and a dirt passage along the bottom.
  static GridWorld default_world();
};

struct GridPlan {
  std::vector<std::pair<int, int>> path;  // (row, col) incl. start and goal
  double cost = 0.0;                      // planned traversal time, s
};

// Uniform-cost best-first search over 4-connected moves; the cost of
// entering a cell is 1 / max(risk_adjusted_speed, s_floor). FIFO
// tie-breaking on equal cost.
GridPlan plan_grid(const GridWorld& world, const RiskParams& params,
                   double s_floor = 0.05);

// Realized traversal time: per entered cell, draw a speed from the cell's
// ground-truth PMF (uniform within the drawn bin), clamped to >= s_min.
double simulate_traversal(const GridWorld& world,
                          const std::vector<std::pair<int, int>>& path,
                          uint64_t seed, double s_min = 0.05);

struct BetaStats {
  double beta = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  int n = 0;
};

std::vector<BetaStats> monte_carlo_eval(const GridWorld& world,
                                        const std::vector<double>& betas,
                                        double alpha, int n_trials,
                                        uint64_t seed);

GridWorld load_grid_world(const std::string& path);
void save_grid_world(const GridWorld& world, const std::string& path);
void save_beta_stats_csv(const std::vector<BetaStats>& stats,
                         const std::string& path);

}  // namespace trav
