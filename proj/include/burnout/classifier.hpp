#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "burnout/errors.hpp"

namespace burnout::classifier {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Numerically stable log(1 + exp(x)).
template <typename Scalar>
Scalar softplus(Scalar x) {
  using std::exp;
  using std::log1p;
  return x > Scalar(0) ? x + log1p(exp(-x)) : log1p(exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

/// Mean cross-entropy plus (lambda / 2n) ||w||^2 over standardized inputs;
/// the bias is not penalized.
template <typename Scalar>
class LogisticLoss {
 public:
  LogisticLoss(const Matrix<Scalar>& x, const Vector<Scalar>& y, Scalar lambda)
      : x_(x), y_(y), lambda_(lambda) {}

  Scalar value(const Vector<Scalar>& w, Scalar b) const {
    const Vector<Scalar> margin = (x_ * w).array() + b;
    Scalar sum(0);
    for (Eigen::Index i = 0; i < margin.size(); ++i) {
      // -[y log p + (1-y) log(1-p)] = softplus(m) - y m
      sum += softplus(margin(i)) - y_(i) * margin(i);
    }
    const Scalar n = static_cast<Scalar>(x_.rows());
    return sum / n + lambda_ / (Scalar(2) * n) * w.squaredNorm();
  }

  /// Gradient with respect to (w, b).
  void gradient(const Vector<Scalar>& w, Scalar b, Vector<Scalar>& grad_w, Scalar& grad_b) const {
    const Vector<Scalar> margin = (x_ * w).array() + b;
    Vector<Scalar> residual(margin.size());
    for (Eigen::Index i = 0; i < margin.size(); ++i) residual(i) = sigmoid(margin(i)) - y_(i);
    const Scalar n = static_cast<Scalar>(x_.rows());
    grad_w = x_.transpose() * residual / n + lambda_ / n * w;
    grad_b = residual.sum() / n;
  }

 private:
  const Matrix<Scalar>& x_;
  const Vector<Scalar>& y_;
  Scalar lambda_;
};

struct TrainOptions {
  double lambda = 1.0;
  int max_epochs = 1000;
  double tol = 1e-6;
  double armijo_c = 1e-4;
};

template <typename Scalar>
struct TrainedClassifier {
  std::vector<std::string> feature_names;
  Vector<Scalar> weights;
  Scalar bias = 0;
  Vector<Scalar> feature_means;
  Vector<Scalar> feature_stds;
  std::vector<bool> active;  // false for constant training columns
  double lambda = 1.0;
  int epochs_run = 0;
  Scalar final_loss = 0;
  std::vector<Scalar> loss_history;  // loss before the first and after every epoch

  Matrix<Scalar> standardize(const Matrix<Scalar>& x) const {
    if (x.cols() != feature_means.size()) {
      throw DataError("feature count " + std::to_string(x.cols()) + " does not match model (" +
                      std::to_string(feature_means.size()) + ")");
    }
    Matrix<Scalar> z = x.rowwise() - feature_means.transpose();
    return z.array().rowwise() / feature_stds.transpose().array();
  }

  /// P(label = 1) per row.
  Vector<Scalar> predict_proba(const Matrix<Scalar>& x) const {
    const Vector<Scalar> margin = (standardize(x) * weights).array() + bias;
    return margin.unaryExpr([](Scalar m) { return sigmoid(m); });
  }

  std::vector<bool> predict(const Matrix<Scalar>& x, Scalar threshold = Scalar(0.5)) const {
    const Vector<Scalar> p = predict_proba(x);
    std::vector<bool> out(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) >= threshold;
    return out;
  }
};

/// Z-scores the training matrix, then runs full-batch gradient descent with
/// Armijo backtracking (step starts at 1 each epoch and halves). Stops when
/// the gradient max-norm drops below tol or after max_epochs.
template <typename Scalar>
TrainedClassifier<Scalar> train(const Matrix<Scalar>& features, const std::vector<bool>& labels,
                                const TrainOptions& options,
                                std::vector<std::string> feature_names = {}) {
  using std::isfinite;
  using std::sqrt;
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (static_cast<std::size_t>(n) != labels.size()) throw DataError("feature/label row mismatch");
  std::size_t positives = 0;
  for (bool l : labels) positives += l ? 1 : 0;
  if (positives == 0 || positives == labels.size()) {
    throw DataError("training needs at least one example of each class");
  }
  if (!(options.lambda >= 0.0)) throw ConfigError("classifier.lambda must be non-negative");
  if (!features.allFinite()) throw DataError("training features contain non-finite values");

  TrainedClassifier<Scalar> model;
  model.feature_names = std::move(feature_names);
  model.lambda = options.lambda;
  model.feature_means = features.colwise().mean().transpose();
  model.feature_stds.resize(p);
  model.active.assign(static_cast<std::size_t>(p), true);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Scalar var = (features.col(j).array() - model.feature_means(j)).square().mean();
    const Scalar sd = sqrt(var);
    if (sd > Scalar(0) && isfinite(sd)) {
      model.feature_stds(j) = sd;
    } else {
      model.feature_stds(j) = Scalar(1);
      model.active[static_cast<std::size_t>(j)] = false;
    }
  }

  const Matrix<Scalar> x = model.standardize(features);
  Vector<Scalar> y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)] ? Scalar(1) : Scalar(0);
  Vector<Scalar> mask(p);
  for (Eigen::Index j = 0; j < p; ++j) mask(j) = model.active[static_cast<std::size_t>(j)] ? Scalar(1) : Scalar(0);

  const LogisticLoss<Scalar> loss(x, y, static_cast<Scalar>(options.lambda));
  Vector<Scalar> w = Vector<Scalar>::Zero(p);
  Scalar b(0);
  Scalar f = loss.value(w, b);
  model.loss_history.push_back(f);
  Vector<Scalar> gw(p);
  Scalar gb(0);

  int epoch = 0;
  for (; epoch < options.max_epochs; ++epoch) {
    loss.gradient(w, b, gw, gb);
    gw = gw.cwiseProduct(mask);
    const Scalar gmax = std::max(gw.cwiseAbs().maxCoeff(), std::abs(gb));
    if (gmax < static_cast<Scalar>(options.tol)) break;
    const Scalar gnorm2 = gw.squaredNorm() + gb * gb;

    Scalar step(1);
    Vector<Scalar> w_next;
    Scalar b_next(0);
    Scalar f_next(0);
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      w_next = w - step * gw;
      b_next = b - step * gb;
      f_next = loss.value(w_next, b_next);
      if (!isfinite(f_next)) {
        throw DataError("non-finite loss during training; check feature scaling");
      }
      if (f_next <= f - static_cast<Scalar>(options.armijo_c) * step * gnorm2) {
        accepted = true;
        break;
      }
      step /= Scalar(2);
    }
    if (!accepted) break;  // no representable descent step left
    w = w_next;
    b = b_next;
    f = f_next;
    model.loss_history.push_back(f);
  }

  model.weights = w;
  model.bias = b;
  model.epochs_run = epoch;
  model.final_loss = f;
  return model;
}

struct SplitPlan {
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::vector<std::string> train_ids;  // sorted
  std::vector<std::string> test_ids;   // sorted
};

/// Per-class seeded shuffle; round(fraction * class size) of each class goes
/// to test, adjusted by one where needed to hit round(fraction * N) overall.
/// A class with two or more members always contributes to both sides.
SplitPlan stratified_split(const std::map<std::string, bool>& labels, double test_fraction,
                           std::uint64_t seed, Warnings* warnings = nullptr);

struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.5;
};

/// Confusion matrix and the derived metrics (0 on empty denominators).
EvalReport evaluate(const std::vector<bool>& truth, const std::vector<bool>& predicted,
                    double threshold = 0.5);

/// model.csv: feature,mean,std,weight rows then a bias row.
std::string model_csv(const TrainedClassifier<double>& model);
TrainedClassifier<double> parse_model_csv(std::string_view text);

}  // namespace burnout::classifier
