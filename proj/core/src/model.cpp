#include "trav/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

namespace trav {
namespace {

int speed_bin(double speed, int n_bins, double s_max) {
  int b = static_cast<int>(speed / s_max * n_bins);
  if (b < 0) b = 0;
  if (b >= n_bins) b = n_bins - 1;
  return b;
}

void softmax_inplace(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

struct Gradients {
  std::vector<MlpModel::Layer> layers;

  explicit Gradients(const MlpModel& m) {
    for (const auto& l : m.layers()) {
      MlpModel::Layer g;
      g.in = l.in;
      g.out = l.out;
      g.weights.assign(l.weights.size(), 0.0);
      g.bias.assign(l.bias.size(), 0.0);
      layers.push_back(std::move(g));
    }
  }
};

void input_features(const MlpModel& m, int terrain_class, double cmd,
                    std::vector<double>& x) {
  if (terrain_class < 0 || terrain_class >= m.n_classes())
    throw std::invalid_argument("terrain class out of range");
  x.assign(m.n_classes() + 1, 0.0);
  x[terrain_class] = 1.0;
  x[m.n_classes()] = cmd / m.s_max();
}

// Forward pass keeping post-activation values per layer; returns softmax
// probabilities in acts.back().
void forward(const MlpModel& m, const std::vector<double>& x,
             std::vector<std::vector<double>>& acts) {
  const auto& layers = m.layers();
  acts.resize(layers.size() + 1);
  acts[0] = x;
  for (size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    auto& out = acts[li + 1];
    out.assign(l.out, 0.0);
    for (int i = 0; i < l.out; ++i) {
      double z = l.bias[i];
      const double* wrow = &l.weights[static_cast<size_t>(i) * l.in];
      for (int j = 0; j < l.in; ++j) z += wrow[j] * acts[li][j];
      out[i] = z;
    }
    if (li + 1 < layers.size()) {
      for (double& v : out) v = std::max(v, 0.0);
    } else {
      softmax_inplace(out);
    }
  }
}

// Accumulate gradients of NLL(target) into g; returns the sample's NLL.
double backward(const MlpModel& m, const std::vector<double>& x, int target,
                Gradients& g, std::vector<std::vector<double>>& acts,
                std::vector<double>& delta, std::vector<double>& delta_prev) {
  forward(m, x, acts);
  const auto& layers = m.layers();
  const auto& probs = acts.back();
  const double loss = -std::log(std::max(probs[target], 1e-300));

  // softmax + NLL: dL/dz = p - onehot
  delta = probs;
  delta[target] -= 1.0;

  for (int li = static_cast<int>(layers.size()) - 1; li >= 0; --li) {
    const auto& l = layers[li];
    auto& gl = g.layers[li];
    const auto& in_act = acts[li];
    for (int i = 0; i < l.out; ++i) {
      const double d = delta[i];
      gl.bias[i] += d;
      double* gw = &gl.weights[static_cast<size_t>(i) * l.in];
      for (int j = 0; j < l.in; ++j) gw[j] += d * in_act[j];
    }
    if (li > 0) {
      delta_prev.assign(l.in, 0.0);
      for (int i = 0; i < l.out; ++i) {
        const double d = delta[i];
        const double* wrow = &l.weights[static_cast<size_t>(i) * l.in];
        for (int j = 0; j < l.in; ++j) delta_prev[j] += d * wrow[j];
      }
      // ReLU mask from the stored post-activation values
      for (int j = 0; j < l.in; ++j)
        if (acts[li][j] <= 0.0) delta_prev[j] = 0.0;
      delta.swap(delta_prev);
    }
  }
  return loss;
}

// Mean NLL and gradient over a batch.
double batch_gradient(const MlpModel& m, const std::vector<Sample>& batch,
                      Gradients& g) {
  std::vector<std::vector<double>> acts;
  std::vector<double> x, delta, delta_prev;
  double loss = 0.0;
  for (const auto& s : batch) {
    input_features(m, s.terrain_class, s.commanded_speed, x);
    const int target = speed_bin(s.realized_speed, m.k_out(), m.s_max());
    loss += backward(m, x, target, g, acts, delta, delta_prev);
  }
  const double inv = 1.0 / batch.size();
  for (auto& gl : g.layers) {
    for (double& v : gl.weights) v *= inv;
    for (double& v : gl.bias) v *= inv;
  }
  return loss * inv;
}

}  // namespace

MlpModel::MlpModel(int n_classes, int k_out, double s_max, int hidden,
                   uint64_t seed)
    : n_classes_(n_classes), k_out_(k_out), hidden_(hidden), s_max_(s_max) {
  if (n_classes < 1 || k_out < 1 || hidden < 1 || !(s_max > 0.0))
    throw std::invalid_argument("MlpModel: bad dimensions");
  const int dims[4] = {n_classes + 1, hidden, hidden, k_out};
  std::mt19937_64 rng(seed);
  for (int li = 0; li < 3; ++li) {
    Layer l;
    l.in = dims[li];
    l.out = dims[li + 1];
    const double bound = std::sqrt(6.0 / (l.in + l.out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    l.weights.resize(static_cast<size_t>(l.out) * l.in);
    for (double& w : l.weights) w = dist(rng);
    l.bias.assign(l.out, 0.0);
    layers_.push_back(std::move(l));
  }
}

void MlpModel::predict_probs(int terrain_class, double commanded_speed,
                             std::vector<double>& out) const {
  std::vector<double> x;
  input_features(*this, terrain_class, commanded_speed, x);
  std::vector<std::vector<double>> acts;
  forward(*this, x, acts);
  out = acts.back();
}

SpeedPmf MlpModel::predict_pmf(int terrain_class, double commanded_speed) const {
  std::vector<double> probs;
  predict_probs(terrain_class, commanded_speed, probs);
  return SpeedPmf(std::move(probs), s_max_);
}

double dataset_loss(const MlpModel& model, const std::vector<Sample>& dataset) {
  std::vector<double> probs;
  double loss = 0.0;
  for (const auto& s : dataset) {
    model.predict_probs(s.terrain_class, s.commanded_speed, probs);
    const int t = speed_bin(s.realized_speed, model.k_out(), model.s_max());
    loss += -std::log(std::max(probs[t], 1e-300));
  }
  return loss / dataset.size();
}

MlpModel train(const std::vector<Sample>& dataset, int n_classes, int k_out,
               double s_max, const TrainConfig& config,
               std::vector<double>* epoch_losses) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& s : dataset) {
    if (s.terrain_class < 0 || s.terrain_class >= n_classes ||
        s.commanded_speed < 0.0 || s.commanded_speed > s_max ||
        s.realized_speed < 0.0 || s.realized_speed > s_max)
      throw std::invalid_argument("train: invalid sample");
  }

  MlpModel model(n_classes, k_out, s_max, config.hidden, config.seed);

  // Adam state, one slot per parameter, in layer order (weights then bias).
  Gradients m1(model), m2(model);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    size_t n_batches = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(),
                                  start + static_cast<size_t>(config.batch_size));
      std::vector<Sample> batch;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i) batch.push_back(dataset[order[i]]);

      Gradients grad(model);
      const double loss = batch_gradient(model, batch, grad);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch));
      epoch_loss += loss;
      ++n_batches;
      ++step;

      const double bc1 = 1.0 - std::pow(config.adam_beta1, step);
      const double bc2 = 1.0 - std::pow(config.adam_beta2, step);
      for (size_t li = 0; li < grad.layers.size(); ++li) {
        auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                          std::vector<double>& m, std::vector<double>& v) {
          for (size_t i = 0; i < p.size(); ++i) {
            m[i] = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * g[i];
            v[i] = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * g[i] * g[i];
            p[i] -= config.learning_rate * (m[i] / bc1) /
                    (std::sqrt(v[i] / bc2) + config.adam_epsilon);
          }
        };
        update(model.layers()[li].weights, grad.layers[li].weights,
               m1.layers[li].weights, m2.layers[li].weights);
        update(model.layers()[li].bias, grad.layers[li].bias,
               m1.layers[li].bias, m2.layers[li].bias);
      }
    }
    if (epoch_losses) epoch_losses->push_back(epoch_loss / n_batches);
  }
  return model;
}

SpeedPmf histogram_estimate(const std::vector<Sample>& dataset,
                            int terrain_class, int cmd_bin, int cmd_bins,
                            int k_out, double s_max) {
  std::vector<double> counts(k_out, 0.0);
  long n = 0;
  for (const auto& s : dataset) {
    if (s.terrain_class != terrain_class) continue;
    if (speed_bin(s.commanded_speed, cmd_bins, s_max) != cmd_bin) continue;
    counts[speed_bin(s.realized_speed, k_out, s_max)] += 1.0;
    ++n;
  }
  if (n == 0)
    throw std::runtime_error("histogram_estimate: no samples for class " +
                             std::to_string(terrain_class) + ", cmd bin " +
                             std::to_string(cmd_bin));
  for (double& c : counts) c /= n;
  return SpeedPmf(std::move(counts), s_max);
}

double gradient_check(const MlpModel& model, const std::vector<Sample>& batch,
                      int n_params, uint64_t seed) {
  if (batch.empty()) throw std::invalid_argument("gradient_check: empty batch");
  MlpModel m = model;
  Gradients grad(m);
  batch_gradient(m, batch, grad);

  // Collect (layer, weights?, index) addresses of every parameter.
  struct Slot { size_t layer; bool weight; size_t idx; };
  std::vector<Slot> slots;
  for (size_t li = 0; li < m.layers().size(); ++li) {
    for (size_t i = 0; i < m.layers()[li].weights.size(); ++i)
      slots.push_back({li, true, i});
    for (size_t i = 0; i < m.layers()[li].bias.size(); ++i)
      slots.push_back({li, false, i});
  }
  std::mt19937_64 rng(seed);
  std::shuffle(slots.begin(), slots.end(), rng);
  if (static_cast<size_t>(n_params) < slots.size()) slots.resize(n_params);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (const auto& s : slots) {
    auto& p = s.weight ? m.layers()[s.layer].weights[s.idx]
                       : m.layers()[s.layer].bias[s.idx];
    const double analytic = s.weight ? grad.layers[s.layer].weights[s.idx]
                                     : grad.layers[s.layer].bias[s.idx];
    const double orig = p;
    p = orig + h;
    Gradients dummy_p(m);
    const double lp = batch_gradient(m, batch, dummy_p);
    p = orig - h;
    Gradients dummy_m(m);
    const double lm = batch_gradient(m, batch, dummy_m);
    p = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
  }
  return max_rel;
}

void save_model(const MlpModel& model, const std::string& path) {
  nlohmann::json j;
  j["n_classes"] = model.n_classes();
  j["k_out"] = model.k_out();
  j["hidden"] = model.hidden();
  j["s_max"] = model.s_max();
  nlohmann::json jl = nlohmann::json::array();
  for (const auto& l : model.layers()) {
    jl.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights},
                  {"bias", l.bias}});
  }
  j["layers"] = std::move(jl);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << j.dump() << "\n";
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_model: parse error in " + path + ": " +
                             e.what());
  }
  MlpModel m;
  m.n_classes_ = j.at("n_classes").get<int>();
  m.k_out_ = j.at("k_out").get<int>();
  m.hidden_ = j.at("hidden").get<int>();
  m.s_max_ = j.at("s_max").get<double>();
  if (m.n_classes_ < 1 || m.k_out_ < 1 || m.hidden_ < 1 || !(m.s_max_ > 0.0))
    throw std::runtime_error("load_model: bad dimensions in " + path);
  const int dims[4] = {m.n_classes_ + 1, m.hidden_, m.hidden_, m.k_out_};
  const auto& jl = j.at("layers");
  if (jl.size() != 3)
    throw std::runtime_error("load_model: expected 3 layers in " + path);
  for (int li = 0; li < 3; ++li) {
    MlpModel::Layer l;
    l.in = jl[li].at("in").get<int>();
    l.out = jl[li].at("out").get<int>();
    if (l.in != dims[li] || l.out != dims[li + 1])
      throw std::runtime_error("load_model: layer " + std::to_string(li) +
                               " dimension mismatch in " + path);
    l.weights = jl[li].at("weights").get<std::vector<double>>();
    l.bias = jl[li].at("bias").get<std::vector<double>>();
    if (l.weights.size() != static_cast<size_t>(l.in) * l.out ||
        l.bias.size() != static_cast<size_t>(l.out))
      throw std::runtime_error("load_model: layer " + std::to_string(li) +
                               " size mismatch in " + path);
    for (double w : l.weights)
      if (!std::isfinite(w))
        throw std::runtime_error("load_model: non-finite weight in " + path);
    for (double b : l.bias)
      if (!std::isfinite(b))
        throw std::runtime_error("load_model: non-finite bias in " + path);
    m.layers_.push_back(std::move(l));
  }
  return m;
}

}  // namespace trav
