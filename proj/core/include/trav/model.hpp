#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trav/speed_pmf.hpp"

namespace trav {

// One experience tuple from driving: what was commanded, on which terrain,
// and what speed was actually achieved.
struct Sample {
  int terrain_class = 0;
  double commanded_speed = 0.0;  // m/s
  double realized_speed = 0.0;   // m/s
};

// Feedforward network realizing p(s | s_cmd, terrain). Input is the one-hot
// terrain encoding concatenated with the commanded speed normalized by s_max;
// output is a softmax PMF over k_out realized-speed bins.
class MlpModel {
 public:
  MlpModel() = default;
  // Xavier-uniform init, seeded.
  MlpModel(int n_classes, int k_out, double s_max, int hidden, uint64_t seed);

  int n_classes() const { return n_classes_; }
  int k_out() const { return k_out_; }
  double s_max() const { return s_max_; }
  int hidden() const { return hidden_; }

  SpeedPmf predict_pmf(int terrain_class, double commanded_speed) const;

  // Raw probabilities without SpeedPmf validation overhead (hot path).
  void predict_probs(int terrain_class, double commanded_speed,
                     std::vector<double>& out) const;

  struct Layer {
    int in = 0, out = 0;
    std::vector<double> weights;  // row-major, out x in
    std::vector<double> bias;
  };
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  int n_classes_ = 0;
  int k_out_ = 0;
  int hidden_ = 64;
  double s_max_ = 5.0;
  std::vector<Layer> layers_;

  friend MlpModel load_model(const std::string& path);
};

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.005;
  int batch_size = 64;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int hidden = 64;
  uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  }
};

// Minimize mean NLL of the realized-speed bin with Adam. Deterministic for a
// fixed seed. Throws on empty dataset or non-finite loss.
MlpModel train(const std::vector<Sample>& dataset, int n_classes, int k_out,
               double s_max, const TrainConfig& config,
               std::vector<double>* epoch_losses = nullptr);

// Mean NLL of the dataset under the model.
double dataset_loss(const MlpModel& model, const std::vector<Sample>& dataset);

// Empirical PMF of realized-speed bins among samples matching
// (terrain_class, commanded-speed layer cmd_bin of cmd_bins layers).
// Throws if no sample matches.
SpeedPmf histogram_estimate(const std::vector<Sample>& dataset,
                            int terrain_class, int cmd_bin, int cmd_bins,
                            int k_out, double s_max);

// Max relative error between analytic gradients and central finite
// differences over n_params randomly chosen parameters.
double gradient_check(const MlpModel& model, const std::vector<Sample>& batch,
                      int n_params = 100, uint64_t seed = 0);

void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace trav
