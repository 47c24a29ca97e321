#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "psodr/core_data.hpp"
#include "psodr/evaluation.hpp"
#include "psodr/rng.hpp"

namespace psodr {

/// Sample-per-row design matrix.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Column-wise z-scoring fitted on training data. Constant columns keep scale 1.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer identity(Eigen::Index d) { return {Vector::Zero(d), Vector::Ones(d)}; }

  static Standardizer fit(const Matrix& x) {
    Standardizer s = identity(x.cols());
    if (x.rows() == 0) return s;
    s.mean = x.colwise().mean().transpose();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - s.mean(j)).square().mean();
      const double sd = std::sqrt(var);
      s.scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  Matrix apply(const Matrix& x) const {
    return ((x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
  }
};

/// +1 for class 1, -1 otherwise.
inline Vector signed_targets(std::span<const int> y) {
  Vector t(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) t(static_cast<Eigen::Index>(i)) = y[i] == 1 ? 1.0 : -1.0;
  return t;
}

// ---------------------------------------------------------------------------
// Extreme learning machine

inline constexpr std::size_t kDefaultElmHidden = 80;

struct ElmModel {
  Matrix input_weights;  // [hidden x d]
  Vector input_biases;   // [hidden]
  Vector output_weights; // [hidden]
  Standardizer standardizer;
  std::size_t hidden = 0;
  std::uint64_t seed = 0;
  bool degenerate = false;  // trained on a single class; predicts that class everywhere

  Eigen::Index input_dim() const { return input_weights.cols(); }
};

/// Sigmoid hidden-layer activations H = sigmoid(W x + b) for each row of x.
inline Matrix elm_hidden(const ElmModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim())
    throw std::invalid_argument("elm: expected " + std::to_string(model.input_dim()) + " columns, got " +
                                std::to_string(x.cols()));
  Matrix pre = model.standardizer.apply(x) * model.input_weights.transpose();
  pre.rowwise() += model.input_biases.transpose();
  return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
}

/// Trains a sigmoid ELM: random input layer in [-1, 1], output layer by
/// minimum-norm least squares against +/-1 targets.
inline ElmModel elm_train(const Matrix& x, std::span<const int> y, std::size_t hidden, std::uint64_t seed) {
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("elm: empty training input");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("elm: label count mismatch");
  if (hidden == 0) throw std::invalid_argument("elm: hidden must be positive");

  ElmModel model;
  model.hidden = hidden;
  model.seed = seed;
  model.standardizer = Standardizer::fit(x);
  const auto h = static_cast<Eigen::Index>(hidden);
  model.input_weights.resize(h, x.cols());
  model.input_biases.resize(h);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) model.input_weights(i, j) = rng.uniform(-1.0, 1.0);
  for (Eigen::Index i = 0; i < h; ++i) model.input_biases(i) = rng.uniform(-1.0, 1.0);

  const Vector t = signed_targets(y);
  if ((t.array() == t(0)).all()) {
    // Sigmoid activations are positive, so a constant-sign output layer yields a constant class.
    model.degenerate = true;
    model.output_weights = Vector::Constant(h, t(0));
    return model;
  }
  const Matrix H = elm_hidden(model, x);
  model.output_weights = Eigen::CompleteOrthogonalDecomposition<Matrix>(H).solve(t);
  return model;
}

inline Vector elm_scores(const ElmModel& model, const Matrix& x) { return elm_hidden(model, x) * model.output_weights; }

/// Class 1 iff the output score is >= 0.
inline std::vector<int> elm_predict(const ElmModel& model, const Matrix& x) {
  const Vector s = elm_scores(model, x);
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s(i) >= 0.0 ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Perceptron with early stopping

struct TrainConfig {
  std::size_t max_epochs = 200;
  double learning_rate = 0.01;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
};

struct PerceptronModel {
  Vector weights;
  double bias = 0.0;
  Standardizer standardizer;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  static PerceptronModel zeros(Eigen::Index d) {
    return {Vector::Zero(d), 0.0, Standardizer::identity(d), 0, 0, false};
  }

  Eigen::Index input_dim() const { return weights.size(); }
};

inline Vector perceptron_scores(const PerceptronModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim())
    throw std::invalid_argument("perceptron: expected " + std::to_string(model.input_dim()) + " columns, got " +
                                std::to_string(x.cols()));
  return (model.standardizer.apply(x) * model.weights).array() + model.bias;
}

inline std::vector<int> perceptron_predict(const PerceptronModel& model, const Matrix& x) {
  const Vector s = perceptron_scores(model, x);
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s(i) >= 0.0 ? 1 : 0;
  return out;
}

namespace detail {

/// Informedness when both classes are present, otherwise the accuracy mapped onto [-1, 1].
inline double validation_score(std::span<const int> truth, std::span<const int> predicted) {
  const auto table = ContingencyTable::from_predictions(truth, predicted);
  if (auto inf = informedness(table)) return *inf;
  return 2.0 * accuracy(table) - 1.0;
}

inline PerceptronModel perceptron_fit(PerceptronModel model, const Matrix& x_train, std::span<const int> y_train,
                                      const Matrix& x_val, std::span<const int> y_val, const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("perceptron: learning_rate must be positive");
  if (cfg.patience == 0) throw std::invalid_argument("perceptron: patience must be at least 1");
  const Matrix xs = model.standardizer.apply(x_train);
  const Matrix vs = model.standardizer.apply(x_val);
  const Vector t = signed_targets(y_train);

  auto val_score = [&](const Vector& w, double b) {
    const Vector s = (vs * w).array() + b;
    std::vector<int> pred(static_cast<std::size_t>(s.size()));
    for (Eigen::Index i = 0; i < s.size(); ++i) pred[static_cast<std::size_t>(i)] = s(i) >= 0.0 ? 1 : 0;
    return validation_score(y_val, pred);
  };

  Vector w = model.weights;
  double b = model.bias;
  Vector best_w = w;
  double best_b = b;
  double best_score = val_score(w, b);
  std::size_t best_epoch = 0;
  std::size_t epochs = 0;
  bool stopped = false;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(xs.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(cfg.seed);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(std::span<Eigen::Index>(order));
    for (Eigen::Index i : order) {
      const double margin = t(i) * (xs.row(i).dot(w) + b);
      if (margin <= 0.0) {
        w.noalias() += (cfg.learning_rate * t(i)) * xs.row(i).transpose();
        b += cfg.learning_rate * t(i);
      }
    }
    epochs = epoch;
    const double score = val_score(w, b);
    if (score > best_score) {
      best_score = score;
      best_w = w;
      best_b = b;
      best_epoch = epoch;
    } else if (epoch - best_epoch >= cfg.patience) {
      stopped = epoch < cfg.max_epochs;
      break;
    }
  }
  model.weights = std::move(best_w);
  model.bias = best_b;
  model.epochs_run = epochs;
  model.best_epoch = best_epoch;
  model.stopped_early = stopped;
  return model;
}

}  // namespace detail

/// Online perceptron from zero weights. After every epoch the validation
/// informedness is checked; training stops once it has not improved for
/// `patience` epochs and the best-validation weights are returned.
inline PerceptronModel perceptron_train(const Matrix& x_train, std::span<const int> y_train, const Matrix& x_val,
                                        std::span<const int> y_val, const TrainConfig& cfg) {
  if (x_train.rows() == 0 || x_val.rows() == 0) throw std::invalid_argument("perceptron: empty training or validation set");
  if (static_cast<std::size_t>(x_train.rows()) != y_train.size() ||
      static_cast<std::size_t>(x_val.rows()) != y_val.size())
    throw std::invalid_argument("perceptron: label count mismatch");
  if (x_train.cols() != x_val.cols()) throw std::invalid_argument("perceptron: train/validation width mismatch");
  PerceptronModel model = PerceptronModel::zeros(x_train.cols());
  model.standardizer = Standardizer::fit(x_train);
  return detail::perceptron_fit(std::move(model), x_train, y_train, x_val, y_val, cfg);
}

/// Same procedure as perceptron_train, warm-started from `model` (weights and
/// feature scaling are kept). An empty retraining set returns `model` as is.
inline PerceptronModel perceptron_retrain(const PerceptronModel& model, const Matrix& x_train,
                                          std::span<const int> y_train, const Matrix& x_val,
                                          std::span<const int> y_val, const TrainConfig& cfg) {
  if ((x_train.rows() > 0 && x_train.cols() != model.input_dim()) ||
      (x_val.rows() > 0 && x_val.cols() != model.input_dim()))
    throw std::invalid_argument("perceptron: retrain data width differs from model");
  if (x_train.rows() == 0) return model;
  if (x_val.rows() == 0) throw std::invalid_argument("perceptron: empty validation set");
  if (static_cast<std::size_t>(x_train.rows()) != y_train.size() ||
      static_cast<std::size_t>(x_val.rows()) != y_val.size())
    throw std::invalid_argument("perceptron: label count mismatch");
  PerceptronModel start = model;
  start.epochs_run = 0;
  start.best_epoch = 0;
  start.stopped_early = false;
  return detail::perceptron_fit(std::move(start), x_train, y_train, x_val, y_val, cfg);
}

}  // namespace psodr
