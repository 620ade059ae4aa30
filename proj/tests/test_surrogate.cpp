#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ahumpc/rng.hpp"
#include "ahumpc/surrogate.hpp"

using namespace ahumpc;
using namespace ahumpc::surrogate;

namespace {

dataset::Dataset random_samples(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  dataset::Dataset data(n);
  for (auto& s : data) {
    s.t_init = rng.uniform(14.0, 26.0);
    s.delta_t = 5.0 * static_cast<double>(1 + rng.below(60));
    s.i_ahu = rng.uniform(0.0, 1.0);
    s.t_out = rng.uniform(-5.0, 12.0);
    s.h_out = rng.uniform(20.0, 95.0);
    s.w_speed = rng.uniform(0.0, 8.0);
    s.s_rad = rng.uniform(0.0, 500.0);
    s.s_energy = rng.uniform(0.0, 2500.0);
    s.target = rng.uniform(-2.0, 2.0);
  }
  return data;
}

// target = 0.01 * delta_t * i_ahu, a smooth exactly-representable surface.
dataset::Dataset linear_samples(std::size_t n, std::uint64_t seed) {
  auto data = random_samples(n, seed);
  for (auto& s : data) s.target = 0.01 * s.delta_t * s.i_ahu;
  return data;
}

MlpModel constant_predictor(double value) {
  MlpModel m;
  m.widths = {8, 1, 1};
  m.weights = {std::vector<double>(8, 0.0), {0.0}};
  m.biases = {{0.0}, {value}};
  m.input_mean.fill(0.0);
  m.input_std.fill(1.0);
  return m;
}

}  // namespace

TEST_SUITE("surrogate") {

TEST_CASE("the default architecture has five hidden layers") {
  Hyperparams hp;
  auto m = init_model(hp, Direction::Increasing);
  CHECK(m.widths.size() == 7);  // 8, five hidden, 1
  CHECK(m.widths.front() == 8);
  CHECK(m.widths.back() == 1);
}

TEST_CASE("zero-weight model outputs its bias") {
  auto m = constant_predictor(0.0);
  dataset::TrainingSample s;
  s.t_init = 20.0;
  s.delta_t = 30.0;
  CHECK(predict(m, s) == doctest::Approx(0.0));
  auto m2 = constant_predictor(0.37);
  CHECK(predict(m2, s) == doctest::Approx(0.37));
}

TEST_CASE("backprop matches central finite differences within 1e-4") {
  Hyperparams hp;
  hp.seed = 17;
  auto model = init_model(hp, Direction::Increasing);
  auto batch = random_samples(10, 5);
  // Realistic normalization keeps tanh out of saturation, as after training.
  for (int f = 0; f < 8; ++f) {
    double mean = 0.0, var = 0.0;
    for (const auto& s : batch) mean += dataset::to_features(s)[f];
    mean /= batch.size();
    for (const auto& s : batch) {
      const double d = dataset::to_features(s)[f] - mean;
      var += d * d;
    }
    model.input_mean[f] = mean;
    model.input_std[f] = std::sqrt(var / batch.size());
  }

  auto grads = backprop(model, batch);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    for (std::size_t i = 0; i < model.weights[l].size(); ++i) {
      const double keep = model.weights[l][i];
      model.weights[l][i] = keep + h;
      const double up = mse_loss(model, batch);
      model.weights[l][i] = keep - h;
      const double down = mse_loss(model, batch);
      model.weights[l][i] = keep;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(grads.weights[l][i]), 1e-4});
      worst = std::max(worst, std::abs(fd - grads.weights[l][i]) / denom);
    }
    for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
      const double keep = model.biases[l][i];
      model.biases[l][i] = keep + h;
      const double up = mse_loss(model, batch);
      model.biases[l][i] = keep - h;
      const double down = mse_loss(model, batch);
      model.biases[l][i] = keep;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(grads.biases[l][i]), 1e-4});
      worst = std::max(worst, std::abs(fd - grads.biases[l][i]) / denom);
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("overfitting ten points drives predictions to their targets") {
  Hyperparams hp;
  hp.hidden = {32, 16};
  hp.learning_rate = 3e-3;
  hp.max_epochs = 600;
  hp.patience = 600;
  hp.batch_size = 10;
  hp.seed = 3;
  auto batch = random_samples(10, 11);

  dataset::DatasetSplits splits;
  // Duplicate the batch so every point lands in each fold's fit set.
  splits.train = batch;
  splits.train.insert(splits.train.end(), batch.begin(), batch.end());
  splits.val = batch;
  splits.test = batch;
  splits.direction = Direction::Increasing;
  auto [model, report] = train(splits, 2, hp);
  for (const auto& s : batch) {
    CHECK(std::abs(predict(model, s) - s.target) < 0.25);
  }
  CHECK(report.mse < 0.05);
}

TEST_CASE("batch prediction equals per-sample prediction") {
  Hyperparams hp;
  auto model = init_model(hp, Direction::Decreasing);
  auto data = random_samples(20, 23);
  auto batch = predict_batch(model, data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(batch[i] == doctest::Approx(predict(model, data[i])).epsilon(1e-15));
  }
}

TEST_CASE("metric definitions behave as specified") {
  std::vector<double> targets{1.0, 2.0, 3.0, 4.0, 5.0};
  auto same = metrics(targets, targets);
  CHECK(same.mse == doctest::Approx(0.0));
  CHECK(same.scaled_mae == doctest::Approx(0.0));
  CHECK(same.explained_variance == doctest::Approx(1.0));
  CHECK(same.r_squared == doctest::Approx(1.0));

  std::vector<double> biased;
  for (double t : targets) biased.push_back(t + 0.1);
  auto bias = metrics(biased, targets);
  CHECK(bias.explained_variance == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bias.r_squared < 1.0);

  // Hand-computed 5-point case: predictions {1.5, 2, 2.5, 4.5, 4},
  // targets {1..5}: errors {0.5, 0, -0.5, 0.5, -1}.
  std::vector<double> preds{1.5, 2.0, 2.5, 4.5, 4.0};
  auto r = metrics(preds, targets);
  CHECK(r.mse == doctest::Approx((0.25 + 0.0 + 0.25 + 0.25 + 1.0) / 5.0));
  CHECK(r.scaled_mae == doctest::Approx((0.5 + 0.0 + 0.5 + 0.5 + 1.0) / 5.0 / 4.0));
  // err mean = -0.1; var(err) = mean of squared centered =
  // ((0.6)^2+(0.1)^2+(-0.4)^2+(0.6)^2+(-0.9)^2)/5 = (0.36+0.01+0.16+0.36+0.81)/5
  CHECK(r.explained_variance == doctest::Approx(1.0 - (1.7 / 5.0) / 2.0));
  CHECK(r.r_squared == doctest::Approx(1.0 - (1.75 / 5.0) / 2.0));

  std::vector<double> flat{2.0, 2.0, 2.0};
  CHECK_THROWS_AS(metrics(flat, flat), std::invalid_argument);
  std::vector<double> shorter{1.0};
  CHECK_THROWS_AS(metrics(shorter, targets), std::invalid_argument);
}

TEST_CASE("training fits the linear synthetic surface") {
  Hyperparams hp;
  hp.max_epochs = 50;
  hp.patience = 10;
  hp.seed = 21;
  dataset::SplitConfig cfg;
  cfg.seed = 9;
  auto splits = dataset::split_dataset(linear_samples(3000, 77),
                                       Direction::Increasing, cfg);
  auto [model, report] = train(splits, 3, hp);
  CHECK(report.scaled_mae < 0.02);
  CHECK(report.explained_variance > 0.95);
}

TEST_CASE("training is deterministic under a fixed seed") {
  Hyperparams hp;
  hp.hidden = {16, 16};
  hp.max_epochs = 10;
  hp.seed = 5;
  dataset::SplitConfig cfg;
  auto splits = dataset::split_dataset(linear_samples(600, 13),
                                       Direction::Increasing, cfg);
  auto [m1, r1] = train(splits, 2, hp);
  auto [m2, r2] = train(splits, 2, hp);
  CHECK(r1.mse == r2.mse);
  CHECK(r1.scaled_mae == r2.scaled_mae);
  CHECK(m1.weights == m2.weights);
}

TEST_CASE("degenerate datasets are rejected") {
  Hyperparams hp;
  auto data = random_samples(50, 1);
  for (auto& s : data) s.target = 1.0;
  dataset::DatasetSplits splits;
  splits.train = data;
  splits.val = data;
  splits.test = data;
  CHECK_THROWS_AS(train(splits, 2, hp), std::invalid_argument);
  CHECK_THROWS_AS(train(dataset::DatasetSplits{}, 2, hp), std::invalid_argument);
}

TEST_CASE("constant-increment model rolls out a straight line") {
  auto m = constant_predictor(0.1);
  auto curve = generate_edf(m, 18.0, 1.0, [](Minute) { return plant::Disturbances{}; },
                            0, 240, 5);
  REQUIRE(curve.trace.size() == 240 / 5 + 1);
  CHECK(curve.trace.samples.front().temp_c == doctest::Approx(18.0));
  for (std::size_t i = 0; i < curve.trace.size(); ++i) {
    CHECK(curve.trace.samples[i].temp_c == doctest::Approx(18.0 + 0.1 * i).epsilon(1e-12));
  }
}

TEST_CASE("EDF direction and argument validation") {
  auto m = constant_predictor(0.1);
  m.direction = Direction::Increasing;
  auto fn = [](Minute) { return plant::Disturbances{}; };
  CHECK_THROWS_AS(generate_edf(m, 18.0, 0.0, fn, 0, 240, 5), std::invalid_argument);
  CHECK_THROWS_AS(generate_edf(m, 18.0, 1.0, fn, 0, 240, 3), std::invalid_argument);
  CHECK_THROWS_AS(generate_edf(m, 18.0, 1.0, fn, 0, 25 * 60, 5), std::invalid_argument);

  // A short horizon cannot settle a tau=240 response.
  fos::FosParams slow{5.0, 240.0, 13.0, 18.0};
  EdfCurve curve;
  curve.direction = Direction::Increasing;
  curve.t_init = 18.0;
  curve.trace.resolution_min = 5.0;
  for (int t = 0; t <= 60; t += 5) {
    curve.trace.samples.push_back(
        {double(t), fos::step_response(slow, 1.0, double(t))});
  }
  CHECK_THROWS_AS(edf_to_fos(curve, 13.0), fos::UnsettledCurveError);
}

TEST_CASE("model checkpoints round-trip through disk") {
  Hyperparams hp;
  hp.hidden = {12, 8};
  hp.seed = 77;
  auto model = init_model(hp, Direction::Decreasing);
  model.window_start = "2024-11-11";
  model.window_end = "2024-12-11";
  const auto path = std::filesystem::temp_directory_path() / "ahumpc_model_test.json";
  save_model(model, path);
  auto back = load_model(path);
  CHECK(back.widths == model.widths);
  CHECK(back.weights == model.weights);
  CHECK(back.direction == Direction::Decreasing);
  CHECK(back.window_end == "2024-12-11");
  auto data = random_samples(5, 2);
  for (const auto& s : data) {
    CHECK(predict(back, s) == doctest::Approx(predict(model, s)).epsilon(1e-15));
  }
  std::filesystem::remove(path);
}

}  // TEST_SUITE
