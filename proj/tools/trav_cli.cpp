#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "trav/gridworld.hpp"
#include "trav/mapgen.hpp"
#include "trav/model.hpp"
#include "trav/simworld.hpp"

namespace fs = std::filesystem;
using namespace trav;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

// Flat JSON config files: {"flag": value, "subcommand": {"flag": value}}.
class ConfigJSON : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool,
                        std::string) const override {
    nlohmann::json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames()[0];
      if (opt->get_type_size() != 0) {
        if (opt->count() == 1)
          j[name] = opt->results().at(0);
        else if (opt->count() > 1)
          j[name] = opt->results();
        else if (default_also)
          j[name] = opt->get_default_str();
      } else if (opt->count()) {
        j[name] = true;
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    input >> j;
    return decode(j, {});
  }

 private:
  static std::vector<CLI::ConfigItem> decode(const nlohmann::json& j,
                                             std::vector<std::string> prefix) {
    std::vector<CLI::ConfigItem> results;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        auto sub = prefix;
        sub.push_back(it.key());
        auto nested = decode(*it, sub);
        results.insert(results.end(), nested.begin(), nested.end());
        continue;
      }
      CLI::ConfigItem item;
      item.name = it.key();
      item.parents = prefix;
      if (it->is_string())
        item.inputs = {it->get<std::string>()};
      else if (it->is_array())
        for (const auto& v : *it) item.inputs.push_back(v.dump());
      else
        item.inputs = {it->dump()};
      results.push_back(std::move(item));
    }
    return results;
  }
};

std::vector<double> parse_betas(const std::string& s) {
  std::vector<double> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw CLI::ValidationError("--betas", "empty beta list");
  return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

int cmd_collect(const std::string& world_file, double duration, double rate,
                uint64_t seed, const std::string& out_dir) {
  WorldSpec spec;
  if (!world_file.empty()) {
    try {
      spec = load_world_spec(world_file);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  const SimWorld world = SimWorld::generate(spec);
  CollectConfig cc;
  cc.duration = duration;
  cc.rate = rate;
  cc.seed = seed;
  const CollectResult result = collect_dataset(world, cc);

  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / "dataset.csv").string();
  save_samples_csv(result.samples, path);

  std::map<int, long> counts;
  for (const auto& s : result.samples) ++counts[s.terrain_class];
  std::cout << "wrote " << result.samples.size() << " samples to " << path << "\n";
  for (const auto& [cls, n] : counts)
    std::cout << "  class " << cls << (cls == kDirt ? " (dirt)" : " (vegetation)")
              << ": " << n << " samples\n";
  return 0;
}

int cmd_train(const std::string& dataset_file, TrainConfig tc, int classes,
              int bins, double s_max, const std::string& out_dir) {
  std::vector<Sample> dataset;
  try {
    dataset = load_samples_csv(dataset_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<double> losses;
  const MlpModel model = train(dataset, classes, bins, s_max, tc, &losses);

  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / "model.json").string();
  save_model(model, path);

  std::cout << "trained on " << dataset.size() << " samples\n";
  for (size_t e = 0; e < losses.size(); ++e)
    std::cout << "  epoch " << e << " loss " << losses[e] << "\n";

  // TV distance against the histogram oracle per populated (class, bin) cell.
  for (int c = 0; c < classes; ++c) {
    for (int k = 0; k < bins; ++k) {
      long n = 0;
      for (const auto& s : dataset)
        if (s.terrain_class == c &&
            static_cast<int>(s.commanded_speed / s_max * bins) ==
                std::min(k, bins - 1))
          ++n;
      if (n < 50) continue;
      const SpeedPmf hist = histogram_estimate(dataset, c, k, bins, bins, s_max);
      const SpeedPmf pred = model.predict_pmf(c, (k + 0.5) * s_max / bins);
      double tv = 0.0;
      for (int b = 0; b < bins; ++b)
        tv += std::abs(hist.prob(b) - pred.prob(b));
      std::cout << "  class " << c << " cmd_bin " << k << " n " << n
                << " tv " << tv * 0.5 << "\n";
    }
  }
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_genmap(const std::string& grid_file, const std::string& model_file,
               double alpha, double beta, int layers,
               const std::string& out_dir) {
  SemanticGrid grid;
  MlpModel model;
  try {
    grid = load_semantic_grid(grid_file);
    model = load_model(model_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  fs::create_directories(out_dir);

  auto t0 = std::chrono::steady_clock::now();
  const SpeedDistributionMap sdm = generate_sdm(grid, model, layers);
  const double sdm_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  const RiskSpeedMap mean_map = build_risk_map(sdm, {1.0, 0.0});
  const double mean_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  const RiskSpeedMap cvar_map = build_risk_map(sdm, {alpha, 1.0});
  const double cvar_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  const RiskSpeedMap risk_map = build_risk_map(sdm, {alpha, beta});
  const double risk_ms = elapsed_ms(t0);

  save_sdm(sdm, (fs::path(out_dir) / "sdm.json").string());
  save_risk_map(risk_map, (fs::path(out_dir) / "risk_map.json").string());
  export_layer_csv(risk_map, 0, (fs::path(out_dir) / "risk_map_layer0.csv").string());
  (void)mean_map;
  (void)cvar_map;

  std::cout << "distribution map: " << sdm_ms << " ms\n"
            << "mean reduction:   " << mean_ms << " ms\n"
            << "cvar reduction:   " << cvar_ms << " ms\n"
            << "risk map (alpha=" << alpha << ", beta=" << beta
            << "): " << risk_ms << " ms\n";
  return 0;
}

int cmd_gridworld(const std::string& world_file, const std::string& betas_str,
                  double alpha, int n, uint64_t seed,
                  const std::string& out_dir) {
  GridWorld world;
  try {
    world = world_file.empty() ? GridWorld::default_world()
                               : load_grid_world(world_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  const auto betas = parse_betas(betas_str);
  const auto stats = monte_carlo_eval(world, betas, alpha, n, seed);
  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / "gridworld.csv").string();
  save_beta_stats_csv(stats, path);
  for (const auto& s : stats)
    std::cout << "beta " << s.beta << ": mean " << s.mean << " s, std "
              << s.stddev << " s over " << s.n << " trials\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_benchmark(const std::string& world_file, const std::string& betas_str,
                  double alpha, int reps, bool control_cost, uint64_t seed,
                  int jobs, const std::string& out_dir) {
  WorldSpec spec;
  spec.seed = 42;  // test world, disjoint from the default training seed
  if (!world_file.empty()) {
    try {
      spec = load_world_spec(world_file);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  const SimWorld world = SimWorld::generate(spec);

  const double mid = spec.extent * 0.5;
  const std::vector<StartGoal> pairs = {
      {mid - 12.0, 12.0, mid - 12.0, spec.extent - 12.0},
      {mid - 4.0, 12.0, mid + 4.0, spec.extent - 12.0},
      {mid + 4.0, 12.0, mid - 4.0, spec.extent - 12.0},
      {mid + 12.0, 12.0, mid + 12.0, spec.extent - 12.0},
  };

  const MlpModel model = [&] {
    // train on a world with a different seed ("unseen test environment")
    WorldSpec train_spec = spec;
    train_spec.seed = spec.seed + 1000;
    const SimWorld train_world = SimWorld::generate(train_spec);
    CollectConfig cc;
    cc.seed = seed;
    const CollectResult data = collect_dataset(train_world, cc);
    TrainConfig tc;
    tc.seed = seed;
    return train(data.samples, 2, 10, spec.s_max, tc);
  }();

  MppiConfig mppi;
  mppi.control_cost = control_cost;
  TrialConfig trial;
  const auto betas = parse_betas(betas_str);
  const BenchmarkResult result = benchmark(world, pairs, betas, alpha, reps,
                                           model, mppi, trial, seed, jobs);
  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / "benchmark.csv").string();
  save_benchmark_csv(result.rows, path);
  for (const auto& r : result.rows)
    std::cout << "beta " << r.beta << ": success " << r.n_success << "/"
              << r.n_trials << ", mean speed " << r.mean_speed_success
              << " m/s\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speed-distribution traversability maps and risk-aware min-time planning"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON config file");
  app.config_formatter(std::make_shared<ConfigJSON>());

  uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = "out";
  app.add_option("--seed", seed, "Master seed")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads for independent trials")
      ->capture_default_str();
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();

  // collect
  auto* collect = app.add_subcommand("collect", "Generate a training dataset by driving the simulated world");
  std::string collect_world;
  double duration = 180.0, rate = 50.0;
  collect->add_option("--world", collect_world, "World spec JSON (default: built-in training world)");
  collect->add_option("--duration", duration, "Drive time in seconds")
      ->capture_default_str()->check(CLI::PositiveNumber);
  collect->add_option("--rate", rate, "Sample logging rate in Hz")
      ->capture_default_str()->check(CLI::PositiveNumber);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the speed-distribution network on a dataset CSV");
  std::string dataset_file;
  TrainConfig tc;
  int classes = 2, bins = 10;
  double s_max = 5.0;
  train_cmd->add_option("--dataset", dataset_file, "Dataset CSV")->required();
  train_cmd->add_option("--epochs", tc.epochs)->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate)->capture_default_str();
  train_cmd->add_option("--batch", tc.batch_size)->capture_default_str();
  train_cmd->add_option("--hidden", tc.hidden)->capture_default_str();
  train_cmd->add_option("--classes", classes)->capture_default_str();
  train_cmd->add_option("--bins", bins)->capture_default_str();
  train_cmd->add_option("--smax", s_max)->capture_default_str();

  // genmap
  auto* genmap = app.add_subcommand("genmap", "Build distribution and risk maps from a semantic grid");
  std::string grid_file, model_file;
  double alpha = 0.1, beta = 0.5;
  int layers = 10;
  genmap->add_option("--grid", grid_file, "Semantic grid JSON")->required();
  genmap->add_option("--model", model_file, "Model JSON")->required();
  genmap->add_option("--alpha", alpha)->capture_default_str();
  genmap->add_option("--beta", beta)->capture_default_str();
  genmap->add_option("--layers", layers)->capture_default_str();

  // gridworld
  auto* gw = app.add_subcommand("gridworld", "Monte Carlo evaluation of the discrete grid world");
  std::string gw_world, gw_betas = "0,0.5,1";
  double gw_alpha = 0.1;
  int gw_n = 1000;
  gw->add_option("--world", gw_world, "Grid world JSON (default: built-in world)");
  gw->add_option("--betas", gw_betas, "Comma-separated risk weights")->capture_default_str();
  gw->add_option("--alpha", gw_alpha)->capture_default_str();
  gw->add_option("--n", gw_n, "Trials per beta")->capture_default_str()
      ->check(CLI::PositiveNumber);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Closed-loop navigation benchmark over a beta sweep");
  std::string bench_world, bench_betas = "0,0.15,0.3,0.45,0.6";
  double bench_alpha = 0.1;
  int reps = 5;
  bench->add_option("--world", bench_world, "World spec JSON (default: built-in test world)");
  bench->add_option("--betas", bench_betas)->capture_default_str();
  bench->add_option("--alpha", bench_alpha)->capture_default_str();
  bench->add_option("--reps", reps, "Repetitions per start/goal pair")
      ->capture_default_str()->check(CLI::PositiveNumber);
  bool control_cost = false;
  bench->add_flag("--control-cost,!--no-control-cost", control_cost,
                  "Add the importance-correction control penalty to rollout costs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*collect) return cmd_collect(collect_world, duration, rate, seed, out_dir);
    if (*train_cmd) {
      tc.seed = seed;
      return cmd_train(dataset_file, tc, classes, bins, s_max, out_dir);
    }
    if (*genmap) return cmd_genmap(grid_file, model_file, alpha, beta, layers, out_dir);
    if (*gw) return cmd_gridworld(gw_world, gw_betas, gw_alpha, gw_n, seed, out_dir);
    if (*bench) return cmd_benchmark(bench_world, bench_betas, bench_alpha,
                                     reps, control_cost, seed, jobs, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
