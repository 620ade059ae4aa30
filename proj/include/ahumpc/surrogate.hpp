#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ahumpc/dataset.hpp"
#include "ahumpc/fos.hpp"
#include "ahumpc/trace.hpp"

namespace ahumpc::surrogate {

struct Hyperparams {
  std::vector<int> hidden = {64, 64, 32, 32, 16};  // five hidden layers
  double learning_rate = 1e-3;
  int batch_size = 64;
  int max_epochs = 40;
  int patience = 10;  // early stopping on the monitored loss
  std::uint64_t seed = 1;
};

// Fully-connected tanh network, 8 inputs -> 1 output, with the per-feature
// normalization statistics baked in. Immutable once trained.
struct MlpModel {
  std::vector<int> widths;  // {8, hidden..., 1}
  std::vector<std::vector<double>> weights;  // [layer], row-major out x in
  std::vector<std::vector<double>> biases;   // [layer]
  std::string activation = "tanh";
  std::array<double, 8> input_mean{};
  std::array<double, 8> input_std{};
  Direction direction = Direction::Increasing;
  std::uint64_t seed = 0;
  std::string window_start;
  std::string window_end;
};

MlpModel init_model(const Hyperparams& hp, Direction direction);

double predict(const MlpModel& model, std::span<const double> features);
double predict(const MlpModel& model, const dataset::TrainingSample& sample);
std::vector<double> predict_batch(const MlpModel& model,
                                  const dataset::Dataset& samples);

// Mean-squared-error loss over a batch and its analytic parameter gradients;
// the gradients are checked against central finite differences in the tests.
double mse_loss(const MlpModel& model, const dataset::Dataset& batch);

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};
Gradients backprop(const MlpModel& model, const dataset::Dataset& batch);

struct MetricsReport {
  double mse = 0.0;
  double scaled_mae = 0.0;  // MAE / target range
  double explained_variance = 0.0;
  double r_squared = 0.0;
  std::size_t train_size = 0, val_size = 0, test_size = 0;
  Direction direction = Direction::Increasing;
};

// Throws std::invalid_argument on length mismatch, fewer than 2 points or
// zero target variance.
MetricsReport metrics(std::span<const double> predictions,
                      std::span<const double> targets);

// k-fold training: the train split is divided into k folds, one candidate is
// trained per fold (early-stopped on its held-out fold), the candidate with
// the best validation-split loss wins, and the report is computed on the
// untouched test split. Deterministic for a fixed seed.
std::pair<MlpModel, MetricsReport> train(const dataset::DatasetSplits& splits,
                                         int k_folds, const Hyperparams& hp);

struct EdfCurve {
  TemperatureTrace trace;  // relative minutes starting at 0
  Direction direction = Direction::Increasing;
  double t_init = 0.0;
  double max_gain = 1.0;
};

// Sequential day-ahead prediction: each step feeds the previous predicted AIT
// back as t_init, with the AHU input at max_gain (increasing model) or 0
// (decreasing model) and disturbances read at each step's absolute time.
EdfCurve generate_edf(const MlpModel& model, double t_init, double max_gain,
                      const dataset::DisturbanceFn& disturbances,
                      Minute start_abs, int horizon_min, int step_min);

fos::FosParams edf_to_fos(const EdfCurve& curve, double delay_min,
                          double noise_tol = 0.05);

// Versioned JSON checkpoint with weights, normalization and training window.
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace ahumpc::surrogate
