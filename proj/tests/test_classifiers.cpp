#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "psodr/classifiers.hpp"
#include "psodr/rng.hpp"

namespace psodr {
namespace {

struct Dataset {
  Matrix x;
  std::vector<int> y;
};

Dataset blobs(std::size_t per_class, double separation, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d{Matrix(static_cast<Eigen::Index>(2 * per_class), 2), {}};
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int label = static_cast<int>(i % 2);
    const double centre = label == 1 ? separation : -separation;
    d.x(static_cast<Eigen::Index>(i), 0) = centre + rng.normal();
    d.x(static_cast<Eigen::Index>(i), 1) = centre + rng.normal();
    d.y.push_back(label);
  }
  return d;
}

/// Linearly separable with margin: label = [x0 + x1 > 0], |x0 + x1| >= 0.5.
Dataset separable(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d{Matrix(static_cast<Eigen::Index>(count), 2), {}};
  for (std::size_t i = 0; i < count;) {
    const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
    if (std::abs(a + b) < 0.5) continue;
    d.x(static_cast<Eigen::Index>(i), 0) = a;
    d.x(static_cast<Eigen::Index>(i), 1) = b;
    d.y.push_back(a + b > 0 ? 1 : 0);
    ++i;
  }
  return d;
}

double accuracy_of(const std::vector<int>& truth, const std::vector<int>& pred) {
  return accuracy(ContingencyTable::from_predictions(truth, pred));
}

TEST(Elm, SeparatesGaussianBlobs) {
  const auto d = blobs(100, 2.5, 1);
  const auto model = elm_train(d.x, d.y, 80, 7);
  EXPECT_GE(accuracy_of(d.y, elm_predict(model, d.x)), 0.95);
  EXPECT_FALSE(model.degenerate);
}

TEST(Elm, SingleSamplePredictsItsClass) {
  Matrix x(1, 3);
  x << 0.3, -1.0, 2.0;
  for (int label : {0, 1}) {
    const std::vector<int> y{label};
    const auto model = elm_train(x, y, 10, 1);
    EXPECT_EQ(elm_predict(model, x), y);
  }
}

TEST(Elm, DeterministicInSeed) {
  const auto d = blobs(30, 1.0, 2);
  const auto a = elm_train(d.x, d.y, 20, 5), b = elm_train(d.x, d.y, 20, 5), c = elm_train(d.x, d.y, 20, 6);
  EXPECT_EQ(a.output_weights, b.output_weights);
  EXPECT_NE(a.output_weights, c.output_weights);
}

TEST(Elm, ZeroOutputWeightsPredictClassOne) {
  const auto d = blobs(10, 1.0, 3);
  auto model = elm_train(d.x, d.y, 8, 1);
  model.output_weights.setZero();
  for (int p : elm_predict(model, d.x)) EXPECT_EQ(p, 1);
}

TEST(Elm, WrongWidthRejected) {
  const auto d = blobs(10, 1.0, 4);
  const auto model = elm_train(d.x, d.y, 8, 1);
  EXPECT_THROW(elm_predict(model, Matrix::Zero(2, 3)), std::invalid_argument);
  EXPECT_THROW(elm_train(Matrix(0, 2), {}, 8, 1), std::invalid_argument);
}

TEST(Elm, SingleClassIsFlaggedConstant) {
  const auto d = blobs(10, 1.0, 5);
  const std::vector<int> zeros(d.y.size(), 0);
  const auto model = elm_train(d.x, zeros, 8, 1);
  EXPECT_TRUE(model.degenerate);
  for (int p : elm_predict(model, d.x)) EXPECT_EQ(p, 0);
}

TEST(Elm, OutputWeightsSolveNormalEquationsAgainstOracle) {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = static_cast<Eigen::Index>(20 + rng.index(31));
    const auto hidden = static_cast<std::size_t>(4 + rng.index(17));
    Matrix x(m, 3);
    std::vector<int> y;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = rng.normal();
      y.push_back(i % 2 == 0 ? 1 : static_cast<int>(rng.index(2)));
    }
    const auto model = elm_train(x, y, hidden, static_cast<std::uint64_t>(trial));
    const Matrix H = elm_hidden(model, x);
    const Vector t = signed_targets(y);
    const double rel = (H.transpose() * (H * model.output_weights - t)).norm() / (H.transpose() * t).norm();
    EXPECT_LE(rel, 1e-6);

    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m), std::vector<double>(hidden));
    for (Eigen::Index i = 0; i < m; ++i)
      for (std::size_t j = 0; j < hidden; ++j) rows[static_cast<std::size_t>(i)][j] = H(i, static_cast<Eigen::Index>(j));
    const auto beta = testing::normal_equations_solve(rows, std::vector<double>(t.data(), t.data() + t.size()));
    // Both solutions must produce the same fitted values.
    for (Eigen::Index i = 0; i < m; ++i) {
      double fit = 0.0;
      for (std::size_t j = 0; j < hidden; ++j) fit += rows[static_cast<std::size_t>(i)][j] * beta[j];
      EXPECT_NEAR((H * model.output_weights)(i), fit, 1e-5);
    }
  }
}

TEST(Perceptron, ReachesPerfectAccuracyOnSeparableData) {
  const auto d = separable(200, 1);
  TrainConfig cfg;
  cfg.max_epochs = 500;
  cfg.patience = 500;
  cfg.seed = 3;
  const auto model = perceptron_train(d.x, d.y, d.x, d.y, cfg);
  EXPECT_DOUBLE_EQ(accuracy_of(d.y, perceptron_predict(model, d.x)), 1.0);
}

TEST(Perceptron, RandomValidationLabelsStopEarly) {
  const auto d = separable(200, 2);
  Rng rng(5);
  std::vector<int> noise(d.y.size());
  for (int& v : noise) v = static_cast<int>(rng.index(2));
  TrainConfig cfg;
  cfg.patience = 1;
  cfg.max_epochs = 200;
  const auto model = perceptron_train(d.x, d.y, d.x, noise, cfg);
  EXPECT_TRUE(model.stopped_early);
  EXPECT_LT(model.epochs_run, 20u);
}

TEST(Perceptron, ZeroEpochsGivesZeroModel) {
  const auto d = separable(20, 3);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  const auto model = perceptron_train(d.x, d.y, d.x, d.y, cfg);
  EXPECT_EQ(model.epochs_run, 0u);
  EXPECT_TRUE(model.weights.isZero());
  EXPECT_EQ(model.bias, 0.0);
}

TEST(Perceptron, EmptySetsRejected) {
  const auto d = separable(20, 4);
  EXPECT_THROW(perceptron_train(Matrix(0, 2), {}, d.x, d.y, {}), std::invalid_argument);
  EXPECT_THROW(perceptron_train(d.x, d.y, Matrix(0, 2), {}, {}), std::invalid_argument);
}

TEST(Perceptron, DeterministicAndEarlyStopBounded) {
  const auto d = blobs(60, 0.6, 6);
  const auto v = blobs(30, 0.6, 7);
  TrainConfig cfg;
  cfg.seed = 11;
  cfg.patience = 4;
  const auto a = perceptron_train(d.x, d.y, v.x, v.y, cfg);
  const auto b = perceptron_train(d.x, d.y, v.x, v.y, cfg);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
  EXPECT_EQ(a.epochs_run, b.epochs_run);
  EXPECT_LE(a.epochs_run, a.best_epoch + cfg.patience);
}

TEST(PerceptronRetrain, EmptyRetrainSetReturnsModelUnchanged) {
  const auto d = blobs(40, 1.5, 8);
  const auto model = perceptron_train(d.x, d.y, d.x, d.y, {});
  const auto same = perceptron_retrain(model, Matrix(0, 2), {}, d.x, d.y, {});
  EXPECT_EQ(same.weights, model.weights);
  EXPECT_EQ(same.bias, model.bias);
  EXPECT_EQ(perceptron_predict(same, d.x), perceptron_predict(model, d.x));
}

TEST(PerceptronRetrain, SameDistributionDoesNotLoseValidationInformedness) {
  int not_worse = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto pre = blobs(50, 0.8, 100 + seed);
    const auto more = blobs(50, 0.8, 200 + seed);
    const auto val = blobs(50, 0.8, 300 + seed);
    TrainConfig cfg;
    cfg.seed = seed;
    const auto base = perceptron_train(pre.x, pre.y, val.x, val.y, cfg);
    const auto re = perceptron_retrain(base, more.x, more.y, val.x, val.y, cfg);
    const auto before = informedness(ContingencyTable::from_predictions(val.y, perceptron_predict(base, val.x)));
    const auto after = informedness(ContingencyTable::from_predictions(val.y, perceptron_predict(re, val.x)));
    not_worse += *after >= *before;
  }
  // Best-epoch restore starts from the pretrained weights, so validation never gets worse.
  EXPECT_EQ(not_worse, 10);
}

TEST(PerceptronRetrain, FlippedLabelsFlipTheDecision) {
  const auto d = separable(200, 9);
  TrainConfig cfg;
  cfg.max_epochs = 300;
  cfg.patience = 300;
  const auto base = perceptron_train(d.x, d.y, d.x, d.y, cfg);
  Matrix probe(1, 2);
  probe << 2.0, 2.0;
  ASSERT_EQ(perceptron_predict(base, probe)[0], 1);
  std::vector<int> flipped(d.y.size());
  for (std::size_t i = 0; i < d.y.size(); ++i) flipped[i] = 1 - d.y[i];
  const auto re = perceptron_retrain(base, d.x, flipped, d.x, flipped, cfg);
  EXPECT_EQ(perceptron_predict(re, probe)[0], 0);
}

TEST(PerceptronRetrain, WidthMismatchRejected) {
  const auto d = blobs(10, 1.0, 10);
  const auto base = perceptron_train(d.x, d.y, d.x, d.y, {});
  EXPECT_THROW(perceptron_retrain(base, Matrix::Zero(3, 5), std::vector<int>{0, 1, 0}, d.x, d.y, {}), std::invalid_argument);
}

}  // namespace
}  // namespace psodr
