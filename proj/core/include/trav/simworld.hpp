#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "trav/mapgen.hpp"
#include "trav/model.hpp"
#include "trav/mppi.hpp"

namespace trav {

// Continuous 2D world: dirt base, a vegetation band with dirt corridors,
// and bushes scattered on the vegetation. Roughly q_solid of the bushes are
// non-traversable, but the semantics only say "vegetation" for all of them.
// Vegetation tracks the command slightly better than dirt when it does not
// wedge: tall grass is smooth going until a hidden solid bush stops the
// robot, which is what makes it a high-speed, high-risk terrain.
struct TerrainResponse {
  double dirt_gain = 0.97;
  double dirt_sigma = 0.10;
  double veg_gain = 1.0;
  double veg_sigma = 0.15;
};

struct Bush {
  double x = 0.0, y = 0.0;
  double radius = 0.8;
  bool solid = false;
};

struct WorldSpec {
  uint64_t seed = 1;
  double extent = 60.0;          // m, square world
  double resolution = 0.4;       // m / cell for the semantic grid
  double band_lo = 20.0;         // vegetation band y-range
  double band_hi = 40.0;
  double corridor_width = 3.0;   // dirt corridors through the band
  double corridor_spacing = 12.0;
  double bush_density = 0.14;    // bushes per m^2 of vegetation
  double q_solid = 0.25;
  double bush_radius_min = 0.6;
  double bush_radius_max = 1.0;
  double s_max = 5.0;
  TerrainResponse response;
};

inline constexpr int kDirt = 0;
inline constexpr int kVegetation = 1;

class SimWorld {
 public:
  static SimWorld generate(const WorldSpec& spec);

  const WorldSpec& spec() const { return spec_; }
  const SemanticGrid& semantics() const { return semantics_; }
  const std::vector<Bush>& bushes() const { return bushes_; }

  // -1 outside the extent.
  int class_at(double x, double y) const;
  bool in_solid_bush(double x, double y) const;

  // Realized speed for a commanded speed at a position. Inside a solid
  // bush the robot is stuck and the result is 0.
  double ground_truth_speed(double x, double y, double commanded,
                            std::mt19937_64& rng) const;

  // Semantic window of rows x cols cells centered on (cx, cy), aligned to
  // the world grid; cells outside the extent are unknown.
  SemanticGrid window(double cx, double cy, int rows, int cols) const;

 private:
  WorldSpec spec_;
  SemanticGrid semantics_;
  std::vector<Bush> bushes_;
  // coarse bucket index over bushes for point queries
  int bucket_cols_ = 0;
  double bucket_size_ = 4.0;
  std::vector<std::vector<int>> buckets_;

  void build_bush_index();
};

struct CollectConfig {
  double duration = 180.0;  // s
  double rate = 50.0;       // Hz logging
  double cmd_min = 0.1;     // m/s, lower bound of the commanded-speed walk
  uint64_t seed = 0;
};

struct CollectResult {
  std::vector<Sample> samples;
  std::vector<uint8_t> stuck;  // 1 where the step was blocked by a solid bush
  double stuck_fraction(int terrain_class, double cmd_lo, double cmd_hi) const;
};

// Random-walk teleop stand-in: piecewise-constant commanded speed and
// heading targets, logging (terrain class, commanded, realized) at `rate`.
CollectResult collect_dataset(const SimWorld& world, const CollectConfig& config);

struct TrialResult {
  bool success = false;
  double time_to_goal = 0.0;  // s (to goal on success, elapsed on timeout)
  double mean_speed = 0.0;    // m/s, start-to-end displacement / elapsed time
  double distance = 0.0;      // m, path length travelled
  std::vector<std::pair<double, double>> path;
  std::string failure_mode = "none";  // "timeout" when unsuccessful
};

struct TrialConfig {
  int map_rows = 100, map_cols = 100;
  int map_layers = 10;
  double map_period = 0.5;  // s, 2 Hz republish
  double max_time = 40.0;
  bool stuck_heading_noise = false;  // disorientation while wedged
  double stuck_heading_sigma = 0.3;  // rad per blocked step
};

TrialResult run_trial(const SimWorld& world, double start_x, double start_y,
                      double goal_x, double goal_y, const MlpModel& model,
                      const RiskParams& risk, const MppiConfig& mppi,
                      const TrialConfig& trial, uint64_t seed);

struct StartGoal {
  double sx, sy, gx, gy;
};

struct BenchmarkRow {
  double beta = 0.0;
  int n_trials = 0;
  int n_success = 0;
  double success_rate = 0.0;
  double mean_speed_success = 0.0;
  double mean_time_success = 0.0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  // per (beta index, trial index) results for path-level analysis
  std::vector<std::vector<TrialResult>> trials;
};

BenchmarkResult benchmark(const SimWorld& world,
                          const std::vector<StartGoal>& pairs,
                          const std::vector<double>& betas, double alpha,
                          int reps_per_pair, const MlpModel& model,
                          const MppiConfig& mppi, const TrialConfig& trial,
                          uint64_t seed, int jobs = 1);

// Distance travelled over vegetation cells along a logged path.
double vegetation_distance(const SimWorld& world,
                           const std::vector<std::pair<double, double>>& path);

WorldSpec load_world_spec(const std::string& path);
void save_world_spec(const WorldSpec& spec, const std::string& path);
void save_benchmark_csv(const std::vector<BenchmarkRow>& rows,
                        const std::string& path);
void save_samples_csv(const std::vector<Sample>& samples,
                      const std::string& path);
std::vector<Sample> load_samples_csv(const std::string& path);

}  // namespace trav
