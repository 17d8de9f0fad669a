#include "trav/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

namespace trav {

SimWorld SimWorld::generate(const WorldSpec& spec) {
  SimWorld world;
  world.spec_ = spec;
  std::mt19937_64 rng(spec.seed);

  const int cells = static_cast<int>(std::lround(spec.extent / spec.resolution));
  GridGeometry geom;
  geom.rows = cells;
  geom.cols = cells;
  geom.resolution = spec.resolution;
  world.semantics_ = SemanticGrid(geom, 2);

  // Wavy band edges so the vegetation boundary is not a straight line.
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  const double p1 = phase(rng), p2 = phase(rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double corridor_offset = unif(rng) * spec.corridor_spacing;

  auto in_corridor = [&](double x) {
    const double rel = std::fmod(x - corridor_offset + 10.0 * spec.corridor_spacing,
                                 spec.corridor_spacing);
    return rel < spec.corridor_width;
  };

  for (int h = 0; h < cells; ++h) {
    for (int w = 0; w < cells; ++w) {
      const double x = geom.cell_center_x(w);
      const double y = geom.cell_center_y(h);
      const double lo = spec.band_lo + 1.5 * std::sin(x * 0.23 + p1);
      const double hi = spec.band_hi + 1.5 * std::sin(x * 0.17 + p2);
      const bool veg = y >= lo && y <= hi && !in_corridor(x);
      world.semantics_.at(h, w) = veg ? kVegetation : kDirt;
    }
  }

  // Bushes on vegetation cells only.
  long veg_cells = 0;
  for (int16_t c : world.semantics_.cells)
    if (c == kVegetation) ++veg_cells;
  const double veg_area = veg_cells * spec.resolution * spec.resolution;
  const long n_bushes = std::lround(spec.bush_density * veg_area);
  std::uniform_real_distribution<double> pos(0.0, spec.extent);
  std::uniform_real_distribution<double> rad(spec.bush_radius_min,
                                             spec.bush_radius_max);
  long placed = 0, attempts = 0;
  while (placed < n_bushes && attempts < n_bushes * 200) {
    ++attempts;
    const double x = pos(rng), y = pos(rng);
    const double r = rad(rng);
    const bool solid = unif(rng) < spec.q_solid;
    if (world.class_at(x, y) != kVegetation) continue;
    world.bushes_.push_back({x, y, r, solid});
    ++placed;
  }
  world.build_bush_index();
  return world;
}

void SimWorld::build_bush_index() {
  bucket_cols_ = static_cast<int>(std::ceil(spec_.extent / bucket_size_)) + 1;
  buckets_.assign(static_cast<size_t>(bucket_cols_) * bucket_cols_, {});
  for (size_t i = 0; i < bushes_.size(); ++i) {
    const int bx = static_cast<int>(bushes_[i].x / bucket_size_);
    const int by = static_cast<int>(bushes_[i].y / bucket_size_);
    buckets_[static_cast<size_t>(by) * bucket_cols_ + bx].push_back(
        static_cast<int>(i));
  }
}

int SimWorld::class_at(double x, double y) const {
  if (!semantics_.geom.contains(x, y)) return -1;
  return semantics_.at(semantics_.geom.row_of(y), semantics_.geom.col_of(x));
}

bool SimWorld::in_solid_bush(double x, double y) const {
  const int bx = static_cast<int>(x / bucket_size_);
  const int by = static_cast<int>(y / bucket_size_);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int cx = bx + dx, cy = by + dy;
      if (cx < 0 || cx >= bucket_cols_ || cy < 0 || cy >= bucket_cols_) continue;
      for (int i : buckets_[static_cast<size_t>(cy) * bucket_cols_ + cx]) {
        const Bush& b = bushes_[i];
        if (!b.solid) continue;
        const double ddx = x - b.x, ddy = y - b.y;
        if (ddx * ddx + ddy * ddy < b.radius * b.radius) return true;
      }
    }
  }
  return false;
}

double SimWorld::ground_truth_speed(double x, double y, double commanded,
                                    std::mt19937_64& rng) const {
  const int cls = class_at(x, y);
  if (cls < 0) return 0.0;
  if (in_solid_bush(x, y)) return 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  double v;
  if (cls == kDirt)
    v = commanded * spec_.response.dirt_gain + gauss(rng) * spec_.response.dirt_sigma;
  else
    v = commanded * spec_.response.veg_gain + gauss(rng) * spec_.response.veg_sigma;
  return std::clamp(v, 0.0, spec_.s_max);
}

SemanticGrid SimWorld::window(double cx, double cy, int rows, int cols) const {
  GridGeometry geom;
  geom.rows = rows;
  geom.cols = cols;
  geom.resolution = spec_.resolution;
  // snap to the world grid so cells line up
  geom.origin_x = std::floor((cx - cols * 0.5 * geom.resolution) / geom.resolution) *
                  geom.resolution;
  geom.origin_y = std::floor((cy - rows * 0.5 * geom.resolution) / geom.resolution) *
                  geom.resolution;
  SemanticGrid grid(geom, 2);
  for (int h = 0; h < rows; ++h)
    for (int w = 0; w < cols; ++w)
      grid.at(h, w) = static_cast<int16_t>(
          class_at(geom.cell_center_x(w), geom.cell_center_y(h)));
  return grid;
}

CollectResult collect_dataset(const SimWorld& world,
                              const CollectConfig& config) {
  if (!(config.duration > 0.0))
    throw std::invalid_argument("collect_dataset: duration must be > 0");
  if (!(config.cmd_min >= 0.0) || !(config.cmd_min < world.spec().s_max))
    throw std::invalid_argument("collect_dataset: cmd_min out of range");
  const WorldSpec& spec = world.spec();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const double dt = 1.0 / config.rate;
  double x = spec.extent * 0.5, y = spec.band_lo * 0.5;  // dirt region
  double heading = 0.0;
  double cmd = 2.0, heading_target = 0.0;
  double cmd_timer = 0.0, heading_timer = 0.0, blocked_time = 0.0;

  CollectResult result;
  const long steps = std::lround(config.duration * config.rate);
  result.samples.reserve(steps);
  result.stuck.reserve(steps);

  for (long i = 0; i < steps; ++i) {
    cmd_timer -= dt;
    heading_timer -= dt;
    if (cmd_timer <= 0.0) {
      cmd = config.cmd_min + unif(rng) * (spec.s_max - config.cmd_min);
      cmd_timer = 1.0;
    }
    if (heading_timer <= 0.0) {
      heading_target = unif(rng) * 2.0 * M_PI - M_PI;
      heading_timer = 3.0;
    }
    const double diff = wrap_angle(heading_target - heading);
    // body turn rate; a differential drive can spin well above this, and a
    // quick turn keeps the drive from dwelling wedged against one bush
    heading = wrap_angle(heading + std::clamp(diff, -4.0 * dt, 4.0 * dt));

    const int cls = world.class_at(x, y);
    double realized = world.ground_truth_speed(x, y, cmd, rng);
    const double nx = x + realized * std::cos(heading) * dt;
    const double ny = y + realized * std::sin(heading) * dt;
    bool stuck = false;
    if (world.in_solid_bush(nx, ny)) {
      realized = 0.0;
      stuck = true;
      blocked_time += dt;
    } else if (world.class_at(nx, ny) < 0) {
      realized = 0.0;  // world edge, turn back toward the center
      heading_target = std::atan2(spec.extent * 0.5 - y, spec.extent * 0.5 - x);
      heading_timer = 1.0;
    } else {
      x = nx;
      y = ny;
      blocked_time = 0.0;
    }
    if (blocked_time > 0.3) {
      heading_target = unif(rng) * 2.0 * M_PI - M_PI;
      heading_timer = 2.0;
      blocked_time = 0.0;
    }
    if (cls >= 0) {
      result.samples.push_back({cls, cmd, realized});
      result.stuck.push_back(stuck ? 1 : 0);
    }
  }
  return result;
}

double CollectResult::stuck_fraction(int terrain_class, double cmd_lo,
                                     double cmd_hi) const {
  long n = 0, s = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].terrain_class != terrain_class) continue;
    if (samples[i].commanded_speed < cmd_lo || samples[i].commanded_speed >= cmd_hi)
      continue;
    ++n;
    s += stuck[i];
  }
  return n ? static_cast<double>(s) / n : 0.0;
}

TrialResult run_trial(const SimWorld& world, double start_x, double start_y,
                      double goal_x, double goal_y, const MlpModel& model,
                      const RiskParams& risk, const MppiConfig& mppi_config,
                      const TrialConfig& trial, uint64_t seed) {
  MppiConfig cfg = mppi_config;
  cfg.seed = seed;
  auto rng = std::make_shared<std::mt19937_64>(seed ^ 0xc2b2ae3d27d4eb4full);

  RobotState initial;
  initial.x = start_x;
  initial.y = start_y;
  initial.heading = std::atan2(goal_y - start_y, goal_x - start_x);

  // 2 Hz map republish: regenerate the robot-centered map every
  // map_period / dt control steps.
  auto map = std::make_shared<RiskSpeedMap>();
  auto steps_since_map = std::make_shared<long>(-1);
  const long steps_per_map =
      std::max<long>(1, std::lround(trial.map_period / cfg.dt));
  MapProvider provider = [&, map, steps_since_map](const RobotState& s)
      -> const RiskSpeedMap& {
    if (*steps_since_map < 0 || *steps_since_map >= steps_per_map) {
      *map = generate_risk_map(world.window(s.x, s.y, trial.map_rows, trial.map_cols),
                               model, trial.map_layers, risk);
      *steps_since_map = 0;
    }
    ++*steps_since_map;
    return *map;
  };

  PlantStep plant = [&, rng](const RobotState& s, const Control& u) {
    const double v_cmd = cfg.wheel_radius * (u.omega_left + u.omega_right) * 0.5;
    const double omega = cfg.wheel_radius * (u.omega_right - u.omega_left) /
                         cfg.track_width;
    const double cmd_mag = std::clamp(std::abs(v_cmd), 0.0, world.spec().s_max);
    double realized = world.ground_truth_speed(s.x, s.y, cmd_mag, *rng);
    const double dir = v_cmd < 0.0 ? -1.0 : 1.0;
    RobotState next = s;
    next.heading = wrap_angle(s.heading + omega * cfg.dt);
    const double nx = s.x + dir * realized * std::cos(s.heading) * cfg.dt;
    const double ny = s.y + dir * realized * std::sin(s.heading) * cfg.dt;
    if (world.in_solid_bush(nx, ny)) {
      realized = 0.0;  // wedged against the bush; rotation still possible
      if (trial.stuck_heading_noise) {
        std::normal_distribution<double> g(0.0, trial.stuck_heading_sigma);
        next.heading = wrap_angle(next.heading + g(*rng));
      }
    } else {
      next.x = nx;
      next.y = ny;
    }
    next.speed = realized;
    return next;
  };

  const PlanResult plan = receding_horizon_control(
      initial, provider, goal_x, goal_y, cfg, trial.max_time, plant);

  TrialResult result;
  result.success = plan.success;
  result.time_to_goal = plan.time;
  result.failure_mode = plan.success ? "none" : "timeout";
  double dist = 0.0;
  for (const auto& p : plan.trajectory) {
    if (!result.path.empty()) {
      const double dx = p.state.x - result.path.back().first;
      const double dy = p.state.y - result.path.back().second;
      dist += std::sqrt(dx * dx + dy * dy);
    }
    result.path.emplace_back(p.state.x, p.state.y);
  }
  // progress speed ("speed made good"): start-to-end displacement over
  // elapsed time, so detours and wedged dwell time both register as slower
  const double disp = std::hypot(result.path.back().first - start_x,
                                 result.path.back().second - start_y);
  result.mean_speed = plan.time > 0.0 ? disp / plan.time : 0.0;
  result.distance = dist;
  return result;
}

BenchmarkResult benchmark(const SimWorld& world,
                          const std::vector<StartGoal>& pairs,
                          const std::vector<double>& betas, double alpha,
                          int reps_per_pair, const MlpModel& model,
                          const MppiConfig& mppi_config,
                          const TrialConfig& trial, uint64_t seed, int jobs) {
  if (pairs.empty() || betas.empty() || reps_per_pair < 1)
    throw std::invalid_argument("benchmark: empty inputs");
  const int per_beta = static_cast<int>(pairs.size()) * reps_per_pair;

  struct Job {
    size_t beta_idx;
    int trial_idx;
  };
  std::vector<Job> all;
  for (size_t bi = 0; bi < betas.size(); ++bi)
    for (int ti = 0; ti < per_beta; ++ti) all.push_back({bi, ti});

  BenchmarkResult result;
  result.trials.assign(betas.size(), std::vector<TrialResult>(per_beta));

  auto run_one = [&](const Job& job) {
    const StartGoal& sg = pairs[job.trial_idx / reps_per_pair];
    const RiskParams rp{alpha, betas[job.beta_idx]};
    const uint64_t trial_seed =
        seed + 0x9e3779b97f4a7c15ull *
                   (job.beta_idx * static_cast<uint64_t>(per_beta) +
                    job.trial_idx + 1);
    result.trials[job.beta_idx][job.trial_idx] =
        run_trial(world, sg.sx, sg.sy, sg.gx, sg.gy, model, rp, mppi_config,
                  trial, trial_seed);
  };

  if (jobs <= 1) {
    for (const auto& job : all) run_one(job);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::future<void>> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (size_t i = next.fetch_add(1); i < all.size();
             i = next.fetch_add(1))
          run_one(all[i]);
      }));
    }
    for (auto& f : workers) f.get();
  }

  for (size_t bi = 0; bi < betas.size(); ++bi) {
    BenchmarkRow row;
    row.beta = betas[bi];
    row.n_trials = per_beta;
    double speed_sum = 0.0, time_sum = 0.0;
    for (const auto& tr : result.trials[bi]) {
      if (tr.success) {
        ++row.n_success;
        speed_sum += tr.mean_speed;
        time_sum += tr.time_to_goal;
      }
    }
    row.success_rate = static_cast<double>(row.n_success) / per_beta;
    if (row.n_success) {
      row.mean_speed_success = speed_sum / row.n_success;
      row.mean_time_success = time_sum / row.n_success;
    }
    result.rows.push_back(row);
  }
  return result;
}

double vegetation_distance(const SimWorld& world,
                           const std::vector<std::pair<double, double>>& path) {
  double dist = 0.0;
  for (size_t i = 1; i < path.size(); ++i) {
    const double dx = path[i].first - path[i - 1].first;
    const double dy = path[i].second - path[i - 1].second;
    const double len = std::sqrt(dx * dx + dy * dy);
    if (len <= 0.0) continue;
    const int subdiv = std::max(1, static_cast<int>(len / 0.2));
    for (int s = 0; s < subdiv; ++s) {
      const double f = (s + 0.5) / subdiv;
      if (world.class_at(path[i - 1].first + f * dx,
                         path[i - 1].second + f * dy) == kVegetation)
        dist += len / subdiv;
    }
  }
  return dist;
}

WorldSpec load_world_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
  WorldSpec s;
  s.seed = j.value("seed", s.seed);
  s.extent = j.value("extent", s.extent);
  s.resolution = j.value("resolution", s.resolution);
  s.band_lo = j.value("band_lo", s.band_lo);
  s.band_hi = j.value("band_hi", s.band_hi);
  s.corridor_width = j.value("corridor_width", s.corridor_width);
  s.corridor_spacing = j.value("corridor_spacing", s.corridor_spacing);
  s.bush_density = j.value("bush_density", s.bush_density);
  s.q_solid = j.value("q_solid", s.q_solid);
  s.bush_radius_min = j.value("bush_radius_min", s.bush_radius_min);
  s.bush_radius_max = j.value("bush_radius_max", s.bush_radius_max);
  s.s_max = j.value("s_max", s.s_max);
  s.response.dirt_gain = j.value("dirt_gain", s.response.dirt_gain);
  s.response.dirt_sigma = j.value("dirt_sigma", s.response.dirt_sigma);
  s.response.veg_gain = j.value("veg_gain", s.response.veg_gain);
  s.response.veg_sigma = j.value("veg_sigma", s.response.veg_sigma);
  return s;
}

void save_world_spec(const WorldSpec& s, const std::string& path) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["extent"] = s.extent;
  j["resolution"] = s.resolution;
  j["band_lo"] = s.band_lo;
  j["band_hi"] = s.band_hi;
  j["corridor_width"] = s.corridor_width;
  j["corridor_spacing"] = s.corridor_spacing;
  j["bush_density"] = s.bush_density;
  j["q_solid"] = s.q_solid;
  j["bush_radius_min"] = s.bush_radius_min;
  j["bush_radius_max"] = s.bush_radius_max;
  j["s_max"] = s.s_max;
  j["dirt_gain"] = s.response.dirt_gain;
  j["dirt_sigma"] = s.response.dirt_sigma;
  j["veg_gain"] = s.response.veg_gain;
  j["veg_sigma"] = s.response.veg_sigma;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << "\n";
}

void save_benchmark_csv(const std::vector<BenchmarkRow>& rows,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "beta,n_trials,n_success,success_rate,mean_speed_success,mean_time_success\n";
  for (const auto& r : rows)
    out << r.beta << ',' << r.n_trials << ',' << r.n_success << ','
        << r.success_rate << ',' << r.mean_speed_success << ','
        << r.mean_time_success << '\n';
}

void save_samples_csv(const std::vector<Sample>& samples,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "terrain_class,commanded_speed,realized_speed\n";
  for (const auto& s : samples)
    out << s.terrain_class << ',' << s.commanded_speed << ','
        << s.realized_speed << '\n';
}

std::vector<Sample> load_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "terrain_class,commanded_speed,realized_speed")
    throw std::runtime_error(path + ": bad or missing CSV header");
  std::vector<Sample> samples;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Sample s;
    char c1, c2;
    std::istringstream ss(line);
    if (!(ss >> s.terrain_class >> c1 >> s.commanded_speed >> c2 >>
          s.realized_speed) ||
        c1 != ',' || c2 != ',')
      throw std::runtime_error(path + ": parse error at line " +
                               std::to_string(lineno));
    samples.push_back(s);
  }
  return samples;
}

}  // namespace trav
