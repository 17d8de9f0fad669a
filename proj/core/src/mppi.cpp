#include "trav/mppi.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace trav {

void MppiConfig::validate() const {
  if (n_rollouts < 1) throw std::invalid_argument("n_rollouts must be >= 1");
  if (horizon_steps < 1) throw std::invalid_argument("horizon_steps must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(s_default > 0.0)) throw std::invalid_argument("s_default must be > 0");
  if (!(goal_tolerance > 0.0)) throw std::invalid_argument("goal_tolerance must be > 0");
  if (!(wheel_radius > 0.0) || !(track_width > 0.0))
    throw std::invalid_argument("wheel geometry must be positive");
  if (!(s_floor > 0.0)) throw std::invalid_argument("s_floor must be > 0");
  if (!(omega_max > 0.0)) throw std::invalid_argument("omega_max must be > 0");
  if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
  if (iters_per_step < 1)
    throw std::invalid_argument("iters_per_step must be >= 1");
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

RobotState dynamics_step(const RobotState& state, const Control& control,
                         double dt, const MppiConfig& config) {
  const double v = config.wheel_radius *
                   (control.omega_left + control.omega_right) * 0.5;
  const double omega = config.wheel_radius *
                       (control.omega_right - control.omega_left) /
                       config.track_width;
  RobotState next;
  next.x = state.x + v * std::cos(state.heading) * dt;
  next.y = state.y + v * std::sin(state.heading) * dt;
  next.heading = wrap_angle(state.heading + omega * dt);
  next.speed = std::abs(v);
  return next;
}

namespace {

inline bool at_goal(const RobotState& s, double gx, double gy, double tol) {
  const double dx = s.x - gx, dy = s.y - gy;
  return dx * dx + dy * dy <= tol * tol;
}

inline double clamp_omega(double w, double wmax) {
  return w > wmax ? wmax : (w < -wmax ? -wmax : w);
}

}  // namespace

double rollout_cost(std::span<const RobotState> states, const RiskSpeedMap& map,
                    double goal_x, double goal_y, const MppiConfig& config) {
  const size_t n = states.size();
  double cost = 0.0;
  bool done = false;
  for (size_t t = 0; t + 1 < n; ++t) {
    done = done || at_goal(states[t], goal_x, goal_y, config.goal_tolerance);
    if (done) break;
    const double s = states[t].speed;
    const double m = std::max(lookup(map, states[t].x, states[t].y, s),
                              config.s_floor);
    cost += s * config.dt / m;
  }
  done = done || at_goal(states[n - 1], goal_x, goal_y, config.goal_tolerance);
  if (!done) {
    const double dx = goal_x - states[n - 1].x;
    const double dy = goal_y - states[n - 1].y;
    cost += std::sqrt(dx * dx + dy * dy) / config.s_default;
  }
  return cost;
}

ControlSequence mppi_step(const ControlSequence& nominal,
                          const RobotState& state, const RiskSpeedMap& map,
                          double goal_x, double goal_y,
                          const MppiConfig& config, uint64_t iteration,
                          MppiDiagnostics* diag) {
  config.validate();
  if (nominal.empty()) throw std::invalid_argument("mppi_step: empty nominal");
  const size_t T = nominal.size();
  const int N = config.n_rollouts;
  const double var = config.noise_std * config.noise_std;

  std::vector<double> costs(N);
  std::vector<Control> noise(static_cast<size_t>(N) * T);
  std::vector<RobotState> states(T + 1);

  for (int i = 0; i < N; ++i) {
    std::seed_seq seq{static_cast<uint64_t>(config.seed), iteration,
                      static_cast<uint64_t>(i)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Control* eps = &noise[static_cast<size_t>(i) * T];

    states[0] = state;
    double control_penalty = 0.0;
    for (size_t t = 0; t < T; ++t) {
      if (config.noise_std > 0.0) {
        eps[t].omega_left = gauss(rng) * config.noise_std;
        eps[t].omega_right = gauss(rng) * config.noise_std;
      }
      Control v{clamp_omega(nominal[t].omega_left + eps[t].omega_left,
                            config.omega_max),
                clamp_omega(nominal[t].omega_right + eps[t].omega_right,
                            config.omega_max)};
      states[t + 1] = dynamics_step(states[t], v, config.dt, config);
      if (config.control_cost && var > 0.0) {
        control_penalty += (nominal[t].omega_left * eps[t].omega_left +
                            nominal[t].omega_right * eps[t].omega_right) / var;
      }
    }
    costs[i] = rollout_cost(states, map, goal_x, goal_y, config) +
               config.lambda * control_penalty;
  }

  double min_cost = costs[0];
  for (double c : costs)
    if (c < min_cost) min_cost = c;
  if (!std::isfinite(min_cost))
    throw std::runtime_error("mppi_step: no finite rollout cost");

  double wsum = 0.0;
  std::vector<double> weights(N);
  for (int i = 0; i < N; ++i) {
    weights[i] = std::exp(-(costs[i] - min_cost) / config.lambda);
    wsum += weights[i];
  }

  ControlSequence updated = nominal;
  for (size_t t = 0; t < T; ++t) {
    double dl = 0.0, dr = 0.0;
    for (int i = 0; i < N; ++i) {
      const Control& e = noise[static_cast<size_t>(i) * T + t];
      dl += weights[i] * e.omega_left;
      dr += weights[i] * e.omega_right;
    }
    updated[t].omega_left =
        clamp_omega(updated[t].omega_left + dl / wsum, config.omega_max);
    updated[t].omega_right =
        clamp_omega(updated[t].omega_right + dr / wsum, config.omega_max);
  }

  if (diag) {
    diag->min_cost = min_cost;
    double mean = 0.0;
    for (double c : costs) mean += c;
    diag->mean_cost = mean / N;
  }
  return updated;
}

PlanResult receding_horizon_control(const RobotState& initial,
                                    const MapProvider& map_provider,
                                    double goal_x, double goal_y,
                                    const MppiConfig& config, double max_time,
                                    const PlantStep& plant) {
  config.validate();
  PlanResult result;
  RobotState state = initial;
  state.heading = wrap_angle(state.heading);

  if (at_goal(state, goal_x, goal_y, config.goal_tolerance)) {
    result.success = true;
    return result;
  }

  ControlSequence nominal(config.horizon_steps);
  uint64_t iteration = 0;
  double t = 0.0;
  while (t < max_time) {
    const RiskSpeedMap& map = map_provider(state);
    const int iters = (iteration == 0) ? config.iters_per_step + config.burn_in
                                       : config.iters_per_step;
    for (int i = 0; i < iters; ++i)
      nominal = mppi_step(nominal, state, map, goal_x, goal_y, config,
                          iteration++);

    const Control u = nominal[0];
    const double m = std::max(lookup(map, state.x, state.y, state.speed),
                              config.s_floor);
    result.trajectory.push_back(
        {t, state, u, state.speed * config.dt / m});

    state = plant ? plant(state, u) : dynamics_step(state, u, config.dt, config);
    t += config.dt;

    nominal.erase(nominal.begin());
    nominal.push_back(nominal.back());

    if (at_goal(state, goal_x, goal_y, config.goal_tolerance)) {
      result.success = true;
      break;
    }
  }
  result.time = t;
  result.trajectory.push_back({t, state, Control{}, 0.0});
  return result;
}

void save_trajectory_csv(const std::vector<TrajectoryPoint>& traj,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,x,y,heading,speed,omega_l,omega_r,stage_cost\n";
  for (const auto& p : traj) {
    out << p.t << ',' << p.state.x << ',' << p.state.y << ','
        << p.state.heading << ',' << p.state.speed << ','
        << p.control.omega_left << ',' << p.control.omega_right << ','
        << p.stage_cost << '\n';
  }
}

}  // namespace trav
