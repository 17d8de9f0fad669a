#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "trav/simworld.hpp"

using namespace trav;

namespace {

MlpModel quick_model(const WorldSpec& spec, uint64_t seed) {
  // Train on synthetic samples drawn straight from the terrain response.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Sample> data;
  for (int i = 0; i < 4000; ++i) {
    const int cls = i % 2;
    const double cmd = unif(rng) * spec.s_max;
    const double gain = cls == kDirt ? spec.response.dirt_gain
                                     : spec.response.veg_gain;
    const double sigma = cls == kDirt ? spec.response.dirt_sigma
                                      : spec.response.veg_sigma;
    const double v = std::clamp(cmd * gain + gauss(rng) * sigma, 0.0, spec.s_max);
    data.push_back({cls, cmd, v});
  }
  TrainConfig tc;
  tc.epochs = 20;
  tc.seed = seed;
  return train(data, 2, 10, spec.s_max, tc);
}

}  // namespace

TEST_CASE("world generation is deterministic and matches the spec layout") {
  WorldSpec spec;
  const SimWorld a = SimWorld::generate(spec);
  const SimWorld b = SimWorld::generate(spec);
  CHECK(a.semantics().cells == b.semantics().cells);
  REQUIRE(a.bushes().size() == b.bushes().size());
  for (size_t i = 0; i < a.bushes().size(); ++i) {
    CHECK(a.bushes()[i].x == b.bushes()[i].x);
    CHECK(a.bushes()[i].solid == b.bushes()[i].solid);
  }

  // below and above the band (clear of the wavy margin) is dirt
  for (double x = 2.0; x < spec.extent; x += 7.0) {
    CHECK(a.class_at(x, 5.0) == kDirt);
    CHECK(a.class_at(x, spec.extent - 5.0) == kDirt);
  }
  // the band interior holds both vegetation and corridor dirt
  long veg = 0, dirt = 0;
  for (double x = 0.5; x < spec.extent; x += 0.5) {
    const int c = a.class_at(x, 30.0);
    veg += c == kVegetation;
    dirt += c == kDirt;
  }
  CHECK(veg > 0);
  CHECK(dirt > 0);
  // out of bounds is unknown
  CHECK(a.class_at(-1.0, 5.0) == -1);
  CHECK(a.class_at(5.0, spec.extent + 1.0) == -1);

  // bushes sit on vegetation and roughly q_solid of them are solid
  long solid = 0;
  for (const auto& bush : a.bushes()) {
    CHECK(a.class_at(bush.x, bush.y) == kVegetation);
    solid += bush.solid;
  }
  REQUIRE(a.bushes().size() > 100);
  const double frac = double(solid) / a.bushes().size();
  CHECK(frac > 0.15);
  CHECK(frac < 0.35);
}

TEST_CASE("solid bush queries") {
  WorldSpec spec;
  const SimWorld world = SimWorld::generate(spec);
  const Bush* solid = nullptr;
  const Bush* soft = nullptr;
  for (const auto& b : world.bushes()) {
    if (b.solid && !solid) solid = &b;
    if (!b.solid && !soft) soft = &b;
  }
  REQUIRE(solid);
  REQUIRE(soft);
  CHECK(world.in_solid_bush(solid->x, solid->y));
  CHECK(!world.in_solid_bush(5.0, 5.0));  // open dirt, far from the band

  std::mt19937_64 rng(1);
  CHECK(world.ground_truth_speed(solid->x, solid->y, 3.0, rng) == 0.0);
  CHECK(world.ground_truth_speed(-5.0, 5.0, 3.0, rng) == 0.0);  // outside
}

TEST_CASE("ground-truth speed statistics follow the terrain response") {
  WorldSpec spec;
  spec.bush_density = 0.0;  // keep vegetation clear for clean statistics
  const SimWorld world = SimWorld::generate(spec);

  std::mt19937_64 rng(5);
  auto mean_speed = [&](double x, double y, double cmd, int n) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      sum += world.ground_truth_speed(x, y, cmd, rng);
    return sum / n;
  };

  // find a vegetation point on the band midline
  double veg_x = -1.0;
  for (double x = 0.5; x < spec.extent; x += 0.5)
    if (world.class_at(x, 30.0) == kVegetation) {
      veg_x = x;
      break;
    }
  REQUIRE(veg_x > 0.0);

  CHECK(mean_speed(5.0, 5.0, 3.0, 20000) ==
        doctest::Approx(3.0 * spec.response.dirt_gain).epsilon(0.01));
  CHECK(mean_speed(veg_x, 30.0, 3.0, 20000) ==
        doctest::Approx(3.0 * spec.response.veg_gain).epsilon(0.01));
  // clamped to [0, s_max]
  for (int i = 0; i < 1000; ++i) {
    const double v = world.ground_truth_speed(5.0, 5.0, 5.0, rng);
    CHECK(v >= 0.0);
    CHECK(v <= spec.s_max);
  }
}

TEST_CASE("window aligns with the world grid") {
  WorldSpec spec;
  const SimWorld world = SimWorld::generate(spec);
  const SemanticGrid win = world.window(30.0, 30.0, 50, 50);
  CHECK(win.geom.rows == 50);
  for (int h = 0; h < 50; ++h)
    for (int w = 0; w < 50; ++w)
      CHECK(win.at(h, w) ==
            world.class_at(win.geom.cell_center_x(w), win.geom.cell_center_y(h)));

  // a window hanging off the world edge marks outside cells unknown
  const SemanticGrid edge = world.window(0.0, 0.0, 20, 20);
  bool any_unknown = false, any_known = false;
  for (int16_t c : edge.cells) {
    any_unknown = any_unknown || c == -1;
    any_known = any_known || c >= 0;
  }
  CHECK(any_unknown);
  CHECK(any_known);
}

TEST_CASE("data collection is deterministic and well-formed") {
  WorldSpec spec;
  const SimWorld world = SimWorld::generate(spec);
  CollectConfig cc;
  cc.duration = 20.0;
  cc.seed = 9;
  const CollectResult a = collect_dataset(world, cc);
  const CollectResult b = collect_dataset(world, cc);
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(a.samples.size() == a.stuck.size());
  CHECK(a.samples.size() <= 20 * 50);
  CHECK(a.samples.size() > 900);
  for (size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].terrain_class == b.samples[i].terrain_class);
    CHECK(a.samples[i].realized_speed == b.samples[i].realized_speed);
    CHECK(a.samples[i].terrain_class >= 0);
    CHECK(a.samples[i].terrain_class <= 1);
    CHECK(a.samples[i].commanded_speed >= 0.0);
    CHECK(a.samples[i].realized_speed >= 0.0);
    CHECK(a.samples[i].realized_speed <= spec.s_max);
  }
  CollectConfig bad = cc;
  bad.duration = 0.0;
  CHECK_THROWS(collect_dataset(world, bad));
}

TEST_CASE("stuck fraction is zero without solid bushes") {
  WorldSpec spec;
  spec.q_solid = 0.0;
  const SimWorld world = SimWorld::generate(spec);
  CollectConfig cc;
  cc.duration = 30.0;
  const CollectResult r = collect_dataset(world, cc);
  CHECK(r.stuck_fraction(kVegetation, 0.0, 5.0) == 0.0);
  CHECK(r.stuck_fraction(kDirt, 0.0, 5.0) == 0.0);
  // no matching samples: defined as 0
  CHECK(r.stuck_fraction(7, 0.0, 5.0) == 0.0);
}

TEST_CASE("samples CSV round trip and rejection") {
  std::vector<Sample> samples{{0, 1.5, 1.4}, {1, 4.0, 0.1}, {1, 2.25, 2.0}};
  const std::string path = "test_samples.csv";
  save_samples_csv(samples, path);
  const std::vector<Sample> loaded = load_samples_csv(path);
  REQUIRE(loaded.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(loaded[i].terrain_class == samples[i].terrain_class);
    CHECK(loaded[i].commanded_speed == doctest::Approx(samples[i].commanded_speed));
    CHECK(loaded[i].realized_speed == doctest::Approx(samples[i].realized_speed));
  }
  std::ofstream out(path);
  out << "wrong,header,line\n0,1,1\n";
  out.close();
  CHECK_THROWS(load_samples_csv(path));
  std::remove(path.c_str());
  CHECK_THROWS(load_samples_csv("no_such_samples.csv"));
}

TEST_CASE("world spec JSON round trip") {
  WorldSpec spec;
  spec.seed = 77;
  spec.bush_density = 0.2;
  spec.response.veg_gain = 0.88;
  const std::string path = "test_world_spec.json";
  save_world_spec(spec, path);
  const WorldSpec loaded = load_world_spec(path);
  CHECK(loaded.seed == spec.seed);
  CHECK(loaded.bush_density == doctest::Approx(spec.bush_density));
  CHECK(loaded.response.veg_gain == doctest::Approx(spec.response.veg_gain));
  CHECK(loaded.extent == doctest::Approx(spec.extent));
  std::remove(path.c_str());
}

TEST_CASE("vegetation distance along a band crossing") {
  WorldSpec spec;
  spec.corridor_width = 0.0;  // no corridors: the crossing is all vegetation
  spec.bush_density = 0.0;
  const SimWorld world = SimWorld::generate(spec);
  // straight line from below to above the band
  std::vector<std::pair<double, double>> path;
  for (double y = 10.0; y <= 50.0; y += 0.5) path.emplace_back(30.0, y);
  const double veg = vegetation_distance(world, path);
  // band is ~20 m thick with +-1.5 m wavy edges
  CHECK(veg > 16.0);
  CHECK(veg < 24.0);

  // path in open dirt never touches vegetation
  std::vector<std::pair<double, double>> dirt_path{{2.0, 2.0}, {50.0, 2.0}};
  CHECK(vegetation_distance(world, dirt_path) == 0.0);
}

TEST_CASE("closed-loop trial reaches a dirt goal and benchmark is reproducible") {
  WorldSpec spec;
  spec.bush_density = 0.0;
  const SimWorld world = SimWorld::generate(spec);
  const MlpModel model = quick_model(spec, 3);

  MppiConfig mppi;
  mppi.n_rollouts = 120;
  mppi.horizon_steps = 40;
  mppi.burn_in = 4;
  TrialConfig trial;
  trial.map_rows = 60;
  trial.map_cols = 60;
  trial.map_layers = 5;
  trial.max_time = 20.0;

  const TrialResult r = run_trial(world, 10.0, 10.0, 25.0, 10.0, model,
                                  {0.1, 0.5}, mppi, trial, 5);
  CHECK(r.success);
  CHECK(r.time_to_goal < 20.0);
  CHECK(r.mean_speed > 0.5);
  CHECK(r.failure_mode == "none");
  REQUIRE(r.path.size() > 2);

  // same seed, same result; different seed may differ
  const TrialResult r2 = run_trial(world, 10.0, 10.0, 25.0, 10.0, model,
                                   {0.1, 0.5}, mppi, trial, 5);
  CHECK(r.time_to_goal == r2.time_to_goal);
  REQUIRE(r.path.size() == r2.path.size());
  CHECK(r.path.back() == r2.path.back());

  // benchmark: serial and 2-thread runs agree trial-for-trial
  const std::vector<StartGoal> pairs{{10.0, 10.0, 25.0, 10.0}};
  const std::vector<double> betas{0.0, 0.5};
  const BenchmarkResult s1 =
      benchmark(world, pairs, betas, 0.1, 2, model, mppi, trial, 11, 1);
  const BenchmarkResult s2 =
      benchmark(world, pairs, betas, 0.1, 2, model, mppi, trial, 11, 2);
  REQUIRE(s1.rows.size() == 2);
  for (size_t bi = 0; bi < 2; ++bi) {
    CHECK(s1.rows[bi].n_trials == 2);
    CHECK(s1.rows[bi].n_success == s2.rows[bi].n_success);
    CHECK(s1.rows[bi].mean_speed_success == s2.rows[bi].mean_speed_success);
    for (size_t ti = 0; ti < s1.trials[bi].size(); ++ti)
      CHECK(s1.trials[bi][ti].time_to_goal == s2.trials[bi][ti].time_to_goal);
  }
  CHECK_THROWS(benchmark(world, {}, betas, 0.1, 2, model, mppi, trial, 11, 1));
}
