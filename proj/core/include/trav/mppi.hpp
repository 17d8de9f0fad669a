#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trav/speed_map.hpp"

namespace trav {

struct RobotState {
  double x = 0.0;        // m
  double y = 0.0;        // m
  double heading = 0.0;  // rad, wrapped to (-pi, pi]
  double speed = 0.0;    // m/s, linear speed from the last applied control
};

// Differential-drive wheel command.
struct Control {
  double omega_left = 0.0;   // rad/s
  double omega_right = 0.0;  // rad/s
};

using ControlSequence = std::vector<Control>;

struct MppiConfig {
  int n_rollouts = 500;
  int horizon_steps = 100;
  double dt = 0.05;            // s, 5 s horizon at 20 Hz
  double noise_std = 5.0;      // rad/s per wheel
  double lambda = 1.0;         // temperature
  double s_default = 0.5;      // m/s, terminal time-to-go speed
  double goal_tolerance = 3.0; // m
  double wheel_radius = 0.3;   // m
  double track_width = 1.2;    // m
  double s_floor = 0.05;       // m/s, stage-cost denominator floor
  double omega_max = 16.7;     // rad/s
  // Include the lambda * u' Sigma^-1 eps importance-correction term in
  // rollout costs. Off by default: with second-scale travel-time costs and
  // the default lambda/noise the term dominates the weights and stalls
  // convergence; enable to study the coupled objective.
  bool control_cost = false;
  int burn_in = 0;             // extra optimization iterations at t = 0
  int iters_per_step = 1;      // optimization iterations per control period
  uint64_t seed = 0;

  void validate() const;
};

double wrap_angle(double a);

// Forward-Euler differential-drive kinematics.
RobotState dynamics_step(const RobotState& state, const Control& control,
                         double dt, const MppiConfig& config);

// Min-time rollout objective: terminal time-to-go plus per-step traversal
// time scaled by the map speed; every state after the first one inside the
// goal tolerance contributes nothing.
double rollout_cost(std::span<const RobotState> states, const RiskSpeedMap& map,
                    double goal_x, double goal_y, const MppiConfig& config);

struct MppiDiagnostics {
  double min_cost = 0.0;
  double mean_cost = 0.0;
};

// One importance-weighted update of the nominal sequence. Rollout i at
// iteration `iteration` draws from an RNG stream derived from
// (config.seed, iteration, i), so results are independent of evaluation
// order.
ControlSequence mppi_step(const ControlSequence& nominal,
                          const RobotState& state, const RiskSpeedMap& map,
                          double goal_x, double goal_y,
                          const MppiConfig& config, uint64_t iteration,
                          MppiDiagnostics* diag = nullptr);

struct TrajectoryPoint {
  double t = 0.0;
  RobotState state;
  Control control;
  double stage_cost = 0.0;
};

struct PlanResult {
  bool success = false;
  double time = 0.0;  // s until goal or cutoff
  std::vector<TrajectoryPoint> trajectory;
};

using MapProvider = std::function<const RiskSpeedMap&(const RobotState&)>;
// Applies one control to the plant for dt and returns the next state.
using PlantStep = std::function<RobotState(const RobotState&, const Control&)>;

// Receding-horizon loop: optimize, apply the first control, shift the
// nominal sequence (tail padded with its last entry). When `plant` is
// empty the kinematic model is used.
PlanResult receding_horizon_control(const RobotState& initial,
                                    const MapProvider& map_provider,
                                    double goal_x, double goal_y,
                                    const MppiConfig& config, double max_time,
                                    const PlantStep& plant = nullptr);

// CSV log: t,x,y,heading,speed,omega_l,omega_r,stage_cost
void save_trajectory_csv(const std::vector<TrajectoryPoint>& traj,
                         const std::string& path);

}  // namespace trav
