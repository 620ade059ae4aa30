#include "ahumpc/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "ahumpc/rng.hpp"

namespace ahumpc::surrogate {

namespace {

constexpr int kInputs = 8;

void check_model(const MlpModel& m) {
  if (m.widths.size() < 2 || m.widths.front() != kInputs || m.widths.back() != 1) {
    throw std::invalid_argument("surrogate: malformed layer widths");
  }
  if (m.weights.size() != m.widths.size() - 1 ||
      m.biases.size() != m.widths.size() - 1) {
    throw std::invalid_argument("surrogate: layer count mismatch");
  }
  for (std::size_t l = 0; l + 1 < m.widths.size(); ++l) {
    const auto rows = static_cast<std::size_t>(m.widths[l + 1]);
    const auto cols = static_cast<std::size_t>(m.widths[l]);
    if (m.weights[l].size() != rows * cols || m.biases[l].size() != rows) {
      throw std::invalid_argument("surrogate: weight shape mismatch");
    }
  }
}

// Activations for every layer, reused across samples.
struct Workspace {
  std::vector<std::vector<double>> act;    // act[0] = normalized input
  std::vector<std::vector<double>> delta;  // backprop errors per layer

  void resize(const std::vector<int>& widths) {
    act.resize(widths.size());
    delta.resize(widths.size());
    for (std::size_t i = 0; i < widths.size(); ++i) {
      act[i].resize(widths[i]);
      delta[i].resize(widths[i]);
    }
  }
};

void normalize_into(const MlpModel& m, std::span<const double> features,
                    std::vector<double>& out) {
  for (int i = 0; i < kInputs; ++i) {
    const double sd = m.input_std[i] > 1e-12 ? m.input_std[i] : 1.0;
    out[i] = (features[i] - m.input_mean[i]) / sd;
  }
}

double forward(const MlpModel& m, std::span<const double> features,
               Workspace& ws) {
  normalize_into(m, features, ws.act[0]);
  const std::size_t layers = m.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const int rows = m.widths[l + 1];
    const int cols = m.widths[l];
    const double* w = m.weights[l].data();
    const std::vector<double>& in = ws.act[l];
    std::vector<double>& out = ws.act[l + 1];
    for (int r = 0; r < rows; ++r) {
      double z = m.biases[l][r];
      const double* wr = w + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) z += wr[c] * in[c];
      out[r] = (l + 1 < layers) ? std::tanh(z) : z;
    }
  }
  return ws.act.back()[0];
}

// Accumulates d(loss)/d(params) for one sample given dL/dy, after a forward
// pass filled the workspace.
void backward(const MlpModel& m, Workspace& ws, double dloss_dy,
              Gradients& grads) {
  const std::size_t layers = m.weights.size();
  ws.delta.back()[0] = dloss_dy;
  for (std::size_t l = layers; l-- > 0;) {
    const int rows = m.widths[l + 1];
    const int cols = m.widths[l];
    const double* w = m.weights[l].data();
    auto& delta_out = ws.delta[l + 1];
    auto& delta_in = ws.delta[l];
    for (int r = 0; r < rows; ++r) {
      const double d = delta_out[r];
      grads.biases[l][r] += d;
      double* gw = grads.weights[l].data() + static_cast<std::size_t>(r) * cols;
      const double* a = ws.act[l].data();
      for (int c = 0; c < cols; ++c) gw[c] += d * a[c];
    }
    if (l == 0) break;
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int r = 0; r < rows; ++r) {
        acc += w[static_cast<std::size_t>(r) * cols + c] * delta_out[r];
      }
      const double a = ws.act[l][c];  // tanh'(z) = 1 - tanh(z)^2
      delta_in[c] = acc * (1.0 - a * a);
    }
  }
}

Gradients zero_gradients(const MlpModel& m) {
  Gradients g;
  g.weights.resize(m.weights.size());
  g.biases.resize(m.biases.size());
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    g.weights[l].assign(m.weights[l].size(), 0.0);
    g.biases[l].assign(m.biases[l].size(), 0.0);
  }
  return g;
}

struct AdamState {
  std::vector<std::vector<double>> mw, vw, mb, vb;
  long step = 0;

  explicit AdamState(const MlpModel& m) {
    mw.resize(m.weights.size());
    vw.resize(m.weights.size());
    mb.resize(m.biases.size());
    vb.resize(m.biases.size());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      mw[l].assign(m.weights[l].size(), 0.0);
      vw[l].assign(m.weights[l].size(), 0.0);
      mb[l].assign(m.biases[l].size(), 0.0);
      vb[l].assign(m.biases[l].size(), 0.0);
    }
  }

  void apply(MlpModel& m, const Gradients& g, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++step;
    const double c1 = 1.0 - std::pow(b1, step);
    const double c2 = 1.0 - std::pow(b2, step);
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      for (std::size_t i = 0; i < m.weights[l].size(); ++i) {
        double& mm = mw[l][i];
        double& vv = vw[l][i];
        mm = b1 * mm + (1.0 - b1) * g.weights[l][i];
        vv = b2 * vv + (1.0 - b2) * g.weights[l][i] * g.weights[l][i];
        m.weights[l][i] -= lr * (mm / c1) / (std::sqrt(vv / c2) + eps);
      }
      for (std::size_t i = 0; i < m.biases[l].size(); ++i) {
        double& mm = mb[l][i];
        double& vv = vb[l][i];
        mm = b1 * mm + (1.0 - b1) * g.biases[l][i];
        vv = b2 * vv + (1.0 - b2) * g.biases[l][i] * g.biases[l][i];
        m.biases[l][i] -= lr * (mm / c1) / (std::sqrt(vv / c2) + eps);
      }
    }
  }
};

double eval_mse(const MlpModel& m, const dataset::Dataset& data, Workspace& ws) {
  if (data.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : data) {
    const auto f = dataset::to_features(s);
    const double e = forward(m, f, ws) - s.target;
    acc += e * e;
  }
  return acc / static_cast<double>(data.size());
}

}  // namespace

MlpModel init_model(const Hyperparams& hp, Direction direction) {
  MlpModel m;
  m.widths.push_back(kInputs);
  for (int w : hp.hidden) {
    if (w < 1) throw std::invalid_argument("surrogate: hidden width must be >= 1");
    m.widths.push_back(w);
  }
  m.widths.push_back(1);
  m.direction = direction;
  m.seed = hp.seed;
  m.input_mean.fill(0.0);
  m.input_std.fill(1.0);

  Rng rng(mix_seed(hp.seed, direction == Direction::Increasing ? 0x11 : 0x22));
  for (std::size_t l = 0; l + 1 < m.widths.size(); ++l) {
    const int rows = m.widths[l + 1];
    const int cols = m.widths[l];
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    std::vector<double> w(static_cast<std::size_t>(rows) * cols);
    for (auto& v : w) v = rng.uniform(-scale, scale);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(rows, 0.0);
  }
  return m;
}

double predict(const MlpModel& model, std::span<const double> features) {
  check_model(model);
  if (features.size() != kInputs) {
    throw std::invalid_argument("surrogate: expected 8 input features");
  }
  for (double f : features) {
    if (!std::isfinite(f)) throw std::invalid_argument("surrogate: non-finite feature");
  }
  Workspace ws;
  ws.resize(model.widths);
  return forward(model, features, ws);
}

double predict(const MlpModel& model, const dataset::TrainingSample& sample) {
  const auto f = dataset::to_features(sample);
  return predict(model, std::span<const double>(f));
}

std::vector<double> predict_batch(const MlpModel& model,
                                  const dataset::Dataset& samples) {
  check_model(model);
  Workspace ws;
  ws.resize(model.widths);
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const auto f = dataset::to_features(s);
    out.push_back(forward(model, f, ws));
  }
  return out;
}

double mse_loss(const MlpModel& model, const dataset::Dataset& batch) {
  check_model(model);
  if (batch.empty()) throw std::invalid_argument("surrogate: empty batch");
  Workspace ws;
  ws.resize(model.widths);
  return eval_mse(model, batch, ws);
}

Gradients backprop(const MlpModel& model, const dataset::Dataset& batch) {
  check_model(model);
  if (batch.empty()) throw std::invalid_argument("surrogate: empty batch");
  Workspace ws;
  ws.resize(model.widths);
  Gradients grads = zero_gradients(model);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    const auto f = dataset::to_features(s);
    const double y = forward(model, f, ws);
    backward(model, ws, 2.0 * (y - s.target) * inv_n, grads);
  }
  return grads;
}

MetricsReport metrics(std::span<const double> predictions,
                      std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("surrogate: prediction/target length mismatch");
  }
  const std::size_t n = targets.size();
  if (n < 2) throw std::invalid_argument("surrogate: need at least 2 points");

  double t_mean = 0.0;
  double t_min = targets[0], t_max = targets[0];
  for (double t : targets) {
    t_mean += t;
    t_min = std::min(t_min, t);
    t_max = std::max(t_max, t);
  }
  t_mean /= static_cast<double>(n);
  if (t_max - t_min < 1e-12) {
    throw std::invalid_argument("surrogate: zero target variance");
  }

  double sse = 0.0, sst = 0.0, abs_err = 0.0, err_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = predictions[i] - targets[i];
    sse += e * e;
    abs_err += std::abs(e);
    err_mean += e;
    sst += (targets[i] - t_mean) * (targets[i] - t_mean);
  }
  err_mean /= static_cast<double>(n);
  double err_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = predictions[i] - targets[i] - err_mean;
    err_var += e * e;
  }

  MetricsReport r;
  r.mse = sse / static_cast<double>(n);
  r.scaled_mae = (abs_err / static_cast<double>(n)) / (t_max - t_min);
  r.explained_variance = 1.0 - err_var / sst;
  r.r_squared = 1.0 - sse / sst;
  return r;
}

std::pair<MlpModel, MetricsReport> train(const dataset::DatasetSplits& splits,
                                         int k_folds, const Hyperparams& hp) {
  if (k_folds < 2) throw std::invalid_argument("surrogate: k must be >= 2");
  if (splits.train.size() < static_cast<std::size_t>(2 * k_folds)) {
    throw std::invalid_argument("surrogate: training split too small");
  }
  if (hp.batch_size < 1 || hp.max_epochs < 1 || !(hp.learning_rate > 0.0)) {
    throw std::invalid_argument("surrogate: bad hyperparameters");
  }
  {
    double lo = splits.train.front().target, hi = lo;
    for (const auto& s : splits.train) {
      lo = std::min(lo, s.target);
      hi = std::max(hi, s.target);
    }
    if (hi - lo < 1e-12) {
      throw std::invalid_argument("surrogate: degenerate dataset (constant target)");
    }
  }

  // Normalization statistics from the training split only.
  std::array<double, 8> mean{}, stdev{};
  for (const auto& s : splits.train) {
    const auto f = dataset::to_features(s);
    for (int i = 0; i < kInputs; ++i) mean[i] += f[i];
  }
  for (int i = 0; i < kInputs; ++i) mean[i] /= static_cast<double>(splits.train.size());
  for (const auto& s : splits.train) {
    const auto f = dataset::to_features(s);
    for (int i = 0; i < kInputs; ++i) {
      stdev[i] += (f[i] - mean[i]) * (f[i] - mean[i]);
    }
  }
  for (int i = 0; i < kInputs; ++i) {
    stdev[i] = std::sqrt(stdev[i] / static_cast<double>(splits.train.size()));
  }

  const std::size_t n = splits.train.size();
  const std::size_t fold_size = n / static_cast<std::size_t>(k_folds);

  MlpModel best_model;
  double best_val = std::numeric_limits<double>::infinity();

  Workspace ws;
  for (int fold = 0; fold < k_folds; ++fold) {
    const std::size_t lo = fold_size * static_cast<std::size_t>(fold);
    const std::size_t hi = (fold + 1 == k_folds) ? n : lo + fold_size;

    dataset::Dataset fit, monitor;
    fit.reserve(n - (hi - lo));
    monitor.reserve(hi - lo);
    for (std::size_t i = 0; i < n; ++i) {
      (i >= lo && i < hi ? monitor : fit).push_back(splits.train[i]);
    }

    Hyperparams fold_hp = hp;
    fold_hp.seed = mix_seed(hp.seed, static_cast<std::uint64_t>(fold) + 101);
    MlpModel model = init_model(fold_hp, splits.direction);
    model.input_mean = mean;
    model.input_std = stdev;
    ws.resize(model.widths);

    AdamState adam(model);
    Gradients grads = zero_gradients(model);

    MlpModel fold_best = model;
    double fold_best_loss = eval_mse(model, monitor, ws);
    int since_improvement = 0;

    std::vector<std::size_t> order(fit.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(fold_hp.seed, 0xABCD));

    dataset::Dataset batch;
    batch.reserve(hp.batch_size);
    for (int epoch = 0; epoch < hp.max_epochs; ++epoch) {
      shuffle_rng.shuffle(order);
      for (std::size_t b = 0; b < order.size(); b += hp.batch_size) {
        batch.clear();
        const std::size_t b_end = std::min(order.size(), b + hp.batch_size);
        for (std::size_t i = b; i < b_end; ++i) batch.push_back(fit[order[i]]);

        grads = zero_gradients(model);
        const double inv_n = 1.0 / static_cast<double>(batch.size());
        for (const auto& s : batch) {
          const auto f = dataset::to_features(s);
          const double y = forward(model, f, ws);
          backward(model, ws, 2.0 * (y - s.target) * inv_n, grads);
        }
        adam.apply(model, grads, hp.learning_rate);
      }
      const double monitored = eval_mse(model, monitor, ws);
      if (monitored < fold_best_loss - 1e-9) {
        fold_best_loss = monitored;
        fold_best = model;
        since_improvement = 0;
      } else if (++since_improvement >= hp.patience) {
        break;
      }
    }

    // Candidate selection on the validation split (falls back to the fold
    // loss when the validation split is empty).
    ws.resize(fold_best.widths);
    const double val_loss =
        splits.val.empty() ? fold_best_loss : eval_mse(fold_best, splits.val, ws);
    if (val_loss < best_val) {
      best_val = val_loss;
      best_model = fold_best;
    }
  }

  auto preds = predict_batch(best_model, splits.test);
  std::vector<double> targets;
  targets.reserve(splits.test.size());
  for (const auto& s : splits.test) targets.push_back(s.target);
  MetricsReport report = metrics(preds, targets);
  report.train_size = splits.train.size();
  report.val_size = splits.val.size();
  report.test_size = splits.test.size();
  report.direction = splits.direction;
  return {std::move(best_model), report};
}

EdfCurve generate_edf(const MlpModel& model, double t_init, double max_gain,
                      const dataset::DisturbanceFn& disturbances,
                      Minute start_abs, int horizon_min, int step_min) {
  check_model(model);
  if (step_min < 5) throw std::invalid_argument("surrogate: EDF step must be >= 5 min");
  if (horizon_min <= 0 || horizon_min > kMinutesPerDay) {
    throw std::invalid_argument("surrogate: EDF horizon must be within 24 h");
  }
  if (horizon_min % step_min != 0) {
    throw std::invalid_argument("surrogate: step must divide the horizon");
  }
  if (model.direction == Direction::Increasing && !(max_gain > 0.0)) {
    throw std::invalid_argument("surrogate: increasing EDF needs a positive gain");
  }
  const double gain = model.direction == Direction::Increasing ? max_gain : 0.0;

  Workspace ws;
  ws.resize(model.widths);
  EdfCurve curve;
  curve.direction = model.direction;
  curve.t_init = t_init;
  curve.max_gain = gain;
  curve.trace.resolution_min = step_min;
  curve.trace.samples.push_back({0.0, t_init});

  double temp = t_init;
  for (int t = 0; t < horizon_min; t += step_min) {
    const plant::Disturbances d = disturbances(start_abs + t);
    const std::array<double, 8> f{temp,    static_cast<double>(step_min),
                                  gain,    d.t_out,
                                  d.h_out, d.w_speed,
                                  d.s_rad, d.s_energy};
    temp += forward(model, f, ws);
    curve.trace.samples.push_back({static_cast<double>(t + step_min), temp});
  }
  return curve;
}

fos::FosParams edf_to_fos(const EdfCurve& curve, double delay_min,
                          double noise_tol) {
  return fos::extract_params(curve.trace, curve.direction, delay_min, noise_tol);
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  check_model(model);
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["direction"] = to_string(model.direction);
  j["widths"] = model.widths;
  j["activation"] = model.activation;
  j["input_mean"] = model.input_mean;
  j["input_std"] = model.input_std;
  j["seed"] = model.seed;
  j["window_start"] = model.window_start;
  j["window_end"] = model.window_end;
  j["weights"] = model.weights;
  j["biases"] = model.biases;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("surrogate: cannot open " + path.string());
  out << j.dump();
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("surrogate: cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw std::runtime_error("surrogate: corrupt model file " + path.string());
  }
  if (j.value("format_version", 0) != 1) {
    throw std::runtime_error("surrogate: unsupported model format in " + path.string());
  }
  MlpModel m;
  m.widths = j.at("widths").get<std::vector<int>>();
  m.activation = j.at("activation").get<std::string>();
  m.direction = direction_from_string(j.at("direction").get<std::string>());
  auto mean = j.at("input_mean").get<std::vector<double>>();
  auto stdev = j.at("input_std").get<std::vector<double>>();
  if (mean.size() != kInputs || stdev.size() != kInputs) {
    throw std::runtime_error("surrogate: bad normalization block");
  }
  std::copy(mean.begin(), mean.end(), m.input_mean.begin());
  std::copy(stdev.begin(), stdev.end(), m.input_std.begin());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.window_start = j.value("window_start", "");
  m.window_end = j.value("window_end", "");
  m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  check_model(m);
  return m;
}

}  // namespace ahumpc::surrogate
