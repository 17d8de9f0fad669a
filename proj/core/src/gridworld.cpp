#include "trav/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>

#include <json.hpp>

namespace trav {

void GridWorld::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("GridWorld: empty grid");
  if (cells.size() != static_cast<size_t>(rows) * cols)
    throw std::invalid_argument("GridWorld: cell count mismatch");
  auto in_bounds = [&](int h, int w) {
    return h >= 0 && h < rows && w >= 0 && w < cols;
  };
  if (!in_bounds(start_row, start_col) || !in_bounds(goal_row, goal_col))
    throw std::invalid_argument("GridWorld: start/goal out of bounds");
  if (start_row == goal_row && start_col == goal_col)
    throw std::invalid_argument("GridWorld: start equals goal");
  for (int c : cells)
    if (!class_pmfs.count(c))
      throw std::invalid_argument("GridWorld: class " + std::to_string(c) +
                                  " has no ground-truth PMF");
}

GridWorld GridWorld::default_world() {
  GridWorld world;
  world.rows = 9;
  world.cols = 13;
  world.cells.assign(static_cast<size_t>(world.rows) * world.cols, 0);
  // Vegetation wall across columns 4..8, rows 0..7, thinned to a single
  // cell at row 2 (the risky shortcut); row 8 stays clear dirt.
  for (int h = 0; h < 8; ++h)
    for (int w = 4; w <= 8; ++w)
      if (h != 2 || w == 6) world.cells[static_cast<size_t>(h) * 13 + w] = 1;
  world.start_row = 4;
  world.start_col = 0;
  world.goal_row = 4;
  world.goal_col = 12;
  // Fixed commanded speed of 1 m/s; dirt is fast and tight, vegetation is
  // bimodal (slow outcomes from dense patches).
  std::vector<double> dirt(10, 0.0), veg(10, 0.0);
  dirt[8] = 0.2;
  dirt[9] = 0.8;
  veg[1] = 0.3;
  veg[9] = 0.7;
  world.class_pmfs.emplace(0, SpeedPmf(dirt, 1.0));
  world.class_pmfs.emplace(1, SpeedPmf(veg, 1.0));
  world.validate();
  return world;
}

GridPlan plan_grid(const GridWorld& world, const RiskParams& params,
                   double s_floor) {
  world.validate();
  params.validate();

  std::map<int, double> class_cost;
  for (const auto& [cls, pmf] : world.class_pmfs)
    class_cost[cls] = 1.0 / std::max(risk_adjusted_speed(pmf, params), s_floor);

  const int n = world.rows * world.cols;
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);

  struct Node {
    double cost;
    uint64_t order;  // FIFO tie-break
    int cell;
    bool operator>(const Node& o) const {
      return cost != o.cost ? cost > o.cost : order > o.order;
    }
  };
  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;

  const int start = world.start_row * world.cols + world.start_col;
  const int goal = world.goal_row * world.cols + world.goal_col;
  uint64_t order = 0;
  dist[start] = 0.0;
  open.push({0.0, order++, start});

  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  while (!open.empty()) {
    const Node node = open.top();
    open.pop();
    if (node.cost > dist[node.cell]) continue;
    if (node.cell == goal) break;
    const int h = node.cell / world.cols;
    const int w = node.cell % world.cols;
    for (int d = 0; d < 4; ++d) {
      const int nh = h + dr[d], nw = w + dc[d];
      if (nh < 0 || nh >= world.rows || nw < 0 || nw >= world.cols) continue;
      const int nc = nh * world.cols + nw;
      const double c = node.cost + class_cost.at(world.at(nh, nw));
      if (c < dist[nc]) {
        dist[nc] = c;
        parent[nc] = node.cell;
        open.push({c, order++, nc});
      }
    }
  }

  if (!std::isfinite(dist[goal]))
    throw std::runtime_error("plan_grid: goal unreachable");

  GridPlan plan;
  plan.cost = dist[goal];
  for (int c = goal; c != -1; c = parent[c])
    plan.path.emplace_back(c / world.cols, c % world.cols);
  std::reverse(plan.path.begin(), plan.path.end());
  return plan;
}

double simulate_traversal(const GridWorld& world,
                          const std::vector<std::pair<int, int>>& path,
                          uint64_t seed, double s_min) {
  if (path.empty()) throw std::invalid_argument("simulate_traversal: empty path");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double time = 0.0;
  for (size_t i = 1; i < path.size(); ++i) {
    const auto& pmf = world.class_pmfs.at(world.at(path[i].first, path[i].second));
    const double u = 1.0 - unif(rng);  // (0, 1]
    const double speed = std::max(value_at_risk(pmf, u), s_min);
    time += 1.0 / speed;
  }
  return time;
}

std::vector<BetaStats> monte_carlo_eval(const GridWorld& world,
                                        const std::vector<double>& betas,
                                        double alpha, int n_trials,
                                        uint64_t seed) {
  if (n_trials < 1) throw std::invalid_argument("monte_carlo_eval: n_trials < 1");
  std::vector<BetaStats> out;
  for (size_t bi = 0; bi < betas.size(); ++bi) {
    const GridPlan plan = plan_grid(world, {alpha, betas[bi]});
    BetaStats st;
    st.beta = betas[bi];
    st.n = n_trials;
    st.min = std::numeric_limits<double>::infinity();
    st.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n_trials; ++i) {
      const uint64_t trial_seed =
          seed + 0x9e3779b97f4a7c15ull * (bi * static_cast<uint64_t>(n_trials) + i + 1);
      const double t = simulate_traversal(world, plan.path, trial_seed);
      sum += t;
      sum2 += t * t;
      st.min = std::min(st.min, t);
      st.max = std::max(st.max, t);
    }
    st.mean = sum / n_trials;
    st.stddev = n_trials > 1
                    ? std::sqrt(std::max(0.0, (sum2 - sum * sum / n_trials) /
                                                  (n_trials - 1)))
                    : 0.0;
    out.push_back(st);
  }
  return out;
}

GridWorld load_grid_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
  GridWorld world;
  world.rows = j.at("H").get<int>();
  world.cols = j.at("W").get<int>();
  world.cells = j.at("cells").get<std::vector<int>>();
  world.start_row = j.at("start")[0].get<int>();
  world.start_col = j.at("start")[1].get<int>();
  world.goal_row = j.at("goal")[0].get<int>();
  world.goal_col = j.at("goal")[1].get<int>();
  for (const auto& [key, val] : j.at("class_pmfs").items()) {
    world.class_pmfs.emplace(
        std::stoi(key), SpeedPmf(val.at("probs").get<std::vector<double>>(),
                                 val.at("s_max").get<double>()));
  }
  world.validate();
  return world;
}

void save_grid_world(const GridWorld& world, const std::string& path) {
  world.validate();
  nlohmann::json j;
  j["H"] = world.rows;
  j["W"] = world.cols;
  j["cells"] = world.cells;
  j["start"] = {world.start_row, world.start_col};
  j["goal"] = {world.goal_row, world.goal_col};
  nlohmann::json pmfs = nlohmann::json::object();
  for (const auto& [cls, pmf] : world.class_pmfs)
    pmfs[std::to_string(cls)] = {{"probs", pmf.probs()}, {"s_max", pmf.s_max()}};
  j["class_pmfs"] = std::move(pmfs);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << "\n";
}

void save_beta_stats_csv(const std::vector<BetaStats>& stats,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "beta,mean_time,std_time,min,max,n\n";
  for (const auto& s : stats)
    out << s.beta << ',' << s.mean << ',' << s.stddev << ',' << s.min << ','
        << s.max << ',' << s.n << '\n';
}

}  // namespace trav
