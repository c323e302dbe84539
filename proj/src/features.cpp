#include "ordinal/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

namespace ordinal {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

double activate(Activation a, double v) {
  return a == Activation::tanh ? std::tanh(v) : std::max(0.0, v);
}

double activate_derivative(Activation a, double pre, double post) {
  if (a == Activation::tanh) return 1.0 - post * post;
  return pre > 0.0 ? 1.0 : 0.0;
}

Matrix to_matrix(const std::vector<Vector>& rows, std::size_t width) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) throw Error("mlp: row width does not match the network input");
    for (std::size_t j = 0; j < width; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

struct Forward {
  Matrix pre;   // n x H
  Matrix post;  // n x H
  Eigen::VectorXd out;
};

Forward forward_batch(const MLPRegressor& model, const Matrix& x) {
  const auto h = static_cast<Eigen::Index>(model.hidden);
  const auto in = static_cast<Eigen::Index>(model.inputs);
  ConstMatrixMap w1(model.hidden_weights.data(), h, in);
  ConstVectorMap b1(model.hidden_bias.data(), h);
  ConstVectorMap w2(model.output_weights.data(), h);
  Forward f;
  f.pre = x * w1.transpose();
  f.pre.rowwise() += b1.transpose();
  f.post = f.pre.unaryExpr([a = model.activation](double v) { return activate(a, v); });
  f.out = f.post * w2;
  f.out.array() += model.output_bias;
  return f;
}

LossGradient loss_gradient_batch(const MLPRegressor& model, const Matrix& x,
                                 const Eigen::VectorXd& t) {
  const auto n = static_cast<double>(x.rows());
  const Forward f = forward_batch(model, x);
  const Eigen::VectorXd err = f.out - t;
  LossGradient lg;
  lg.loss = 0.5 * err.squaredNorm() / n;
  const Eigen::VectorXd g_out = err / n;

  const auto h = static_cast<Eigen::Index>(model.hidden);
  const auto in = static_cast<Eigen::Index>(model.inputs);
  ConstVectorMap w2(model.output_weights.data(), h);

  lg.gradient.assign(model.parameter_count(), 0.0);
  double* g = lg.gradient.data();
  Matrix d_hidden = g_out * w2.transpose();  // n x H
  for (Eigen::Index i = 0; i < d_hidden.rows(); ++i)
    for (Eigen::Index k = 0; k < h; ++k)
      d_hidden(i, k) *= activate_derivative(model.activation, f.pre(i, k), f.post(i, k));

  MatrixMap(g, h, in) = d_hidden.transpose() * x;
  Eigen::Map<Eigen::VectorXd>(g + h * in, h) = d_hidden.colwise().sum().transpose();
  Eigen::Map<Eigen::VectorXd>(g + h * in + h, h) = f.post.transpose() * g_out;
  g[h * in + 2 * h] = g_out.sum();
  return lg;
}

double validation_mae(const MLPRegressor& model, const Matrix& x, const Eigen::VectorXd& raw) {
  const Forward f = forward_batch(model, x);
  const Eigen::VectorXd pred = f.out.array() * model.target_scale + model.target_mean;
  return (pred - raw).cwiseAbs().mean();
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw Error("unknown activation '" + name + "'");
}

MLPRegressor::MLPRegressor(std::size_t inputs_, std::size_t hidden_, Activation activation_)
    : inputs(inputs_),
      hidden(hidden_),
      activation(activation_),
      hidden_weights(hidden_ * inputs_, 0.0),
      hidden_bias(hidden_, 0.0),
      output_weights(hidden_, 0.0) {
  if (inputs_ == 0 || hidden_ == 0) throw Error("mlp: input and hidden widths must be positive");
}

void mlp_initialize(MLPRegressor& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(model.inputs));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(model.hidden));
  std::uniform_real_distribution<double> u1(-a1, a1), u2(-a2, a2);
  for (auto& v : model.hidden_weights) v = u1(rng);
  for (auto& v : model.hidden_bias) v = u1(rng);
  for (auto& v : model.output_weights) v = u2(rng);
  model.output_bias = u2(rng);
}

Vector mlp_embed(const MLPRegressor& model, std::span<const double> x) {
  if (x.size() != model.inputs)
    throw Error("mlp: input has " + std::to_string(x.size()) + " features, network expects " +
                std::to_string(model.inputs));
  Vector h(model.hidden);
  for (std::size_t k = 0; k < model.hidden; ++k) {
    const double pre =
        model.hidden_bias[k] + dot(std::span<const double>(model.hidden_weights).subspan(k * model.inputs, model.inputs), x);
    h[k] = activate(model.activation, pre);
  }
  return h;
}

double mlp_forward(const MLPRegressor& model, std::span<const double> x) {
  return model.output_bias + dot(model.output_weights, mlp_embed(model, x));
}

double mlp_predict(const MLPRegressor& model, std::span<const double> x) {
  return mlp_forward(model, x) * model.target_scale + model.target_mean;
}

Vector mlp_parameters(const MLPRegressor& model) {
  Vector p;
  p.reserve(model.parameter_count());
  p.insert(p.end(), model.hidden_weights.begin(), model.hidden_weights.end());
  p.insert(p.end(), model.hidden_bias.begin(), model.hidden_bias.end());
  p.insert(p.end(), model.output_weights.begin(), model.output_weights.end());
  p.push_back(model.output_bias);
  return p;
}

void mlp_set_parameters(MLPRegressor& model, std::span<const double> params) {
  if (params.size() != model.parameter_count()) throw Error("mlp: parameter count mismatch");
  auto it = params.begin();
  const auto take = [&it](Vector& dst) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
    it += static_cast<std::ptrdiff_t>(dst.size());
  };
  take(model.hidden_weights);
  take(model.hidden_bias);
  take(model.output_weights);
  model.output_bias = *it;
}

LossGradient mlp_loss_gradient(const MLPRegressor& model, const std::vector<Vector>& rows,
                               std::span<const double> standardized_targets) {
  if (rows.size() != standardized_targets.size() || rows.empty())
    throw Error("mlp: rows and targets must be nonempty and of equal length");
  const Matrix x = to_matrix(rows, model.inputs);
  const Eigen::VectorXd t = ConstVectorMap(standardized_targets.data(),
                                           static_cast<Eigen::Index>(standardized_targets.size()));
  return loss_gradient_batch(model, x, t);
}

MLPTrainResult mlp_train(const std::vector<Vector>& train_rows, std::span<const double> train_targets,
                         const std::vector<Vector>& validation_rows,
                         std::span<const double> validation_targets, const MLPOptions& options) {
  if (train_rows.empty() || validation_rows.empty()) throw Error("mlp: empty split");
  if (train_rows.size() != train_targets.size() ||
      validation_rows.size() != validation_targets.size())
    throw Error("mlp: rows and targets differ in length");
  if (options.hidden == 0) throw Error("mlp: hidden width must be at least 1");
  if (!(options.learning_rate > 0.0)) throw Error("mlp: learning rate must be positive");

  const std::size_t inputs = train_rows.front().size();
  MLPRegressor model(inputs, options.hidden, options.activation);
  mlp_initialize(model, options.seed);

  const auto n = static_cast<double>(train_targets.size());
  const double mean = std::accumulate(train_targets.begin(), train_targets.end(), 0.0) / n;
  double var = 0.0;
  for (double t : train_targets) var += (t - mean) * (t - mean);
  var /= n;
  model.target_mean = mean;
  model.target_scale = var > 0.0 ? std::sqrt(var) : 1.0;

  const Matrix x = to_matrix(train_rows, inputs);
  Eigen::VectorXd t(static_cast<Eigen::Index>(train_targets.size()));
  for (Eigen::Index i = 0; i < t.size(); ++i)
    t(i) = (train_targets[static_cast<std::size_t>(i)] - model.target_mean) / model.target_scale;
  const Matrix xv = to_matrix(validation_rows, inputs);
  const Eigen::VectorXd yv = ConstVectorMap(validation_targets.data(),
                                            static_cast<Eigen::Index>(validation_targets.size()));

  MLPTrainResult result;
  result.best_validation_mae = validation_mae(model, xv, yv);
  result.validation_mae.push_back(result.best_validation_mae);
  result.model = model;

  const std::size_t rows = train_rows.size();
  const std::size_t batch = options.batch_size == 0 ? rows : std::min(options.batch_size, rows);
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(options.seed ^ 0x5bd1e995ULL);
  const std::size_t readout_offset = model.hidden * model.inputs + model.hidden;

  std::size_t since_best = 0;
  Vector params = mlp_parameters(model);
  for (std::size_t epoch = 1; epoch <= options.max_epochs && since_best < options.patience; ++epoch) {
    if (batch < rows) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < rows; start += batch) {
      const std::size_t stop = std::min(rows, start + batch);
      LossGradient lg;
      if (batch == rows) {
        lg = loss_gradient_batch(model, x, t);
      } else {
        Matrix xb(static_cast<Eigen::Index>(stop - start), x.cols());
        Eigen::VectorXd tb(static_cast<Eigen::Index>(stop - start));
        for (std::size_t i = start; i < stop; ++i) {
          xb.row(static_cast<Eigen::Index>(i - start)) = x.row(static_cast<Eigen::Index>(order[i]));
          tb(static_cast<Eigen::Index>(i - start)) = t(static_cast<Eigen::Index>(order[i]));
        }
        lg = loss_gradient_batch(model, xb, tb);
      }
      if (!std::isfinite(lg.loss))
        throw Error("mlp: training diverged at epoch " + std::to_string(epoch));
      epoch_loss += lg.loss * static_cast<double>(stop - start);
      const std::size_t first = options.readout_only ? readout_offset : 0;
      for (std::size_t p = first; p < params.size(); ++p)
        params[p] -= options.learning_rate * lg.gradient[p];
      mlp_set_parameters(model, params);
    }
    result.train_loss.push_back(epoch_loss / n);
    for (double v : params)
      if (!std::isfinite(v)) throw Error("mlp: training diverged at epoch " + std::to_string(epoch));

    const double mae = validation_mae(model, xv, yv);
    result.validation_mae.push_back(mae);
    result.epochs_run = epoch;
    if (mae < result.best_validation_mae) {
      result.best_validation_mae = mae;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else {
      ++since_best;
    }
  }
  return result;
}

}  // namespace ordinal
