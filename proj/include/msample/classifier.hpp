#ifndef MSAMPLE_CLASSIFIER_HPP
#define MSAMPLE_CLASSIFIER_HPP

// Binary success classifier: a small MLP trained online with ADAM.
//
//   x (d) -> dense(h1) -> batchnorm -> ELU -> dense(h2) -> ELU -> dense(1) -> sigmoid
//
// Samples are columns of a d x B matrix. The loss is binary cross entropy,
// evaluated through the logit for numerical stability; it is the same
// function as -[y log p + (1 - y) log(1 - p)].

#include <msample/memory.hpp>
#include <msample/rng.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace msample {

enum class Mode { train, infer };

struct ClassifierOptions {
  int hidden1 = 256;
  int hidden2 = 128;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double bn_eps = 1e-5;
  double bn_momentum = 0.9;  // running <- momentum * running + (1 - momentum) * batch
  int batch_size = 32;
};

template <class Scalar>
struct ClassifierParams {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Mat w1;
  Vec b1;
  Vec gamma;
  Vec beta;
  Mat w2;
  Vec b2;
  Mat w3;
  Vec b3;

  static constexpr int kTensors = 8;

  /// Visits every trainable tensor as a flat (name, data, size) triple.
  template <class F>
  void for_each(F&& f) {
    f("w1", w1.data(), w1.size());
    f("b1", b1.data(), b1.size());
    f("bn_gamma", gamma.data(), gamma.size());
    f("bn_beta", beta.data(), beta.size());
    f("w2", w2.data(), w2.size());
    f("b2", b2.data(), b2.size());
    f("w3", w3.data(), w3.size());
    f("b3", b3.data(), b3.size());
  }

  ClassifierParams zeros_like() const {
    ClassifierParams z;
    z.w1 = Mat::Zero(w1.rows(), w1.cols());
    z.b1 = Vec::Zero(b1.size());
    z.gamma = Vec::Zero(gamma.size());
    z.beta = Vec::Zero(beta.size());
    z.w2 = Mat::Zero(w2.rows(), w2.cols());
    z.b2 = Vec::Zero(b2.size());
    z.w3 = Mat::Zero(w3.rows(), w3.cols());
    z.b3 = Vec::Zero(b3.size());
    return z;
  }

  Eigen::Index count() const {
    return w1.size() + b1.size() + gamma.size() + beta.size() + w2.size() + b2.size() +
           w3.size() + b3.size();
  }
};

template <class Scalar>
class SuccessClassifier {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  using Params = ClassifierParams<Scalar>;

  SuccessClassifier(Eigen::Index input_dim, Rng& rng, ClassifierOptions options = {})
      : input_dim_(input_dim), options_(options) {
    require(input_dim >= 1, "classifier input dimension must be >= 1");
    require(options.hidden1 >= 1 && options.hidden2 >= 1, "hidden sizes must be >= 1");
    require(options.batch_size >= 1, "batch size must be >= 1");
    reinitialize(rng);
  }

  Eigen::Index input_dim() const { return input_dim_; }
  const ClassifierOptions& options() const { return options_; }
  const Params& params() const { return params_; }
  Params& mutable_params() { return params_; }
  const Vec& running_mean() const { return running_mean_; }
  const Vec& running_var() const { return running_var_; }
  long adam_step() const { return adam_t_; }

  /// Fresh He-style uniform weights (bound sqrt(6 / fan_in)), zero biases,
  /// unit batchnorm scale; clears ADAM moments and running statistics.
  void reinitialize(Rng& rng) {
    const auto h1 = options_.hidden1, h2 = options_.hidden2;
    params_.w1 = he_uniform(h1, input_dim_, rng);
    params_.b1 = Vec::Zero(h1);
    params_.gamma = Vec::Ones(h1);
    params_.beta = Vec::Zero(h1);
    params_.w2 = he_uniform(h2, h1, rng);
    params_.b2 = Vec::Zero(h2);
    params_.w3 = he_uniform(1, h2, rng);
    params_.b3 = Vec::Zero(1);
    running_mean_ = Vec::Zero(h1);
    running_var_ = Vec::Ones(h1);
    adam_m_ = params_.zeros_like();
    adam_v_ = params_.zeros_like();
    adam_t_ = 0;
  }

  /// Success probabilities, one per column of `x`. Train mode normalizes with
  /// the batch statistics and leaves the running statistics untouched.
  RowVec forward(const Mat& x, Mode mode) const {
    require(x.rows() == input_dim_, "classifier input has " + std::to_string(x.rows()) +
                                        " rows, expected " + std::to_string(input_dim_));
    Cache c;
    run_forward(x, mode, c);
    return c.a3.unaryExpr([](Scalar a) { return sigmoid(a); });
  }

  Scalar predict(const Eigen::VectorXd& z) const {
    Mat x = z.cast<Scalar>();
    return forward(x, Mode::infer)(0);
  }

  /// Mean BCE over the batch and its gradient with respect to every
  /// parameter (train-mode batchnorm).
  Scalar loss_and_gradient(const Mat& x, const RowVec& y, Params& grad) const {
    Cache c;
    return loss_and_gradient(x, y, grad, c);
  }

  /// One ADAM step on a minibatch; also folds the batch statistics into the
  /// running statistics. Returns the batch loss.
  Scalar train_batch(const Mat& x, const RowVec& y) {
    Params grad = params_.zeros_like();
    Cache c;
    const Scalar loss = loss_and_gradient(x, y, grad, c);
    update_running_stats(c, x.cols());
    adam_update(grad);
    return loss;
  }

  /// One shuffled pass over the labeled memory in minibatches (the last may be
  /// short). Returns the sample-weighted mean loss of the epoch.
  double train_epoch(const CandidateMemory& mem, std::span<const std::uint8_t> labels, Rng& rng) {
    require(!mem.empty(), "cannot train on an empty memory");
    require(labels.size() == mem.size(), "labels do not match memory size");
    std::vector<std::size_t> order(mem.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto bs = static_cast<std::size_t>(options_.batch_size);
    double total = 0.0;
    Mat x(input_dim_, static_cast<Eigen::Index>(bs));
    RowVec y(static_cast<Eigen::Index>(bs));
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t count = std::min(bs, order.size() - start);
      x.resize(input_dim_, static_cast<Eigen::Index>(count));
      y.resize(static_cast<Eigen::Index>(count));
      for (std::size_t k = 0; k < count; ++k) {
        const auto& e = mem.entries()[order[start + k]];
        require(e.latent.size() == input_dim_, "memory latent has the wrong dimension");
        x.col(static_cast<Eigen::Index>(k)) = e.latent.cast<Scalar>();
        y(static_cast<Eigen::Index>(k)) = static_cast<Scalar>(labels[order[start + k]]);
      }
      total += static_cast<double>(train_batch(x, y)) * static_cast<double>(count);
    }
    return total / static_cast<double>(order.size());
  }

 private:
  struct Cache {
    Mat a1, xhat, bn, h1, a2, h2;
    Vec mean, var, inv_std;
    RowVec a3;
  };

  Scalar loss_and_gradient(const Mat& x, const RowVec& y, Params& grad, Cache& c) const {
    require(x.rows() == input_dim_, "classifier input dimension mismatch");
    require(x.cols() == y.size() && x.cols() >= 1, "batch and label sizes differ");
    run_forward(x, Mode::train, c);
    const Scalar batch = static_cast<Scalar>(x.cols());
    const Eigen::Index B = x.cols();

    Scalar loss = 0;
    RowVec d_a3(B);
    for (Eigen::Index i = 0; i < B; ++i) {
      const Scalar a = c.a3(i);
      loss += softplus(a) - y(i) * a;
      d_a3(i) = (sigmoid(a) - y(i)) / batch;
    }
    loss /= batch;

    grad.w3.noalias() = d_a3 * c.h2.transpose();
    grad.b3 = Vec::Constant(1, d_a3.sum());
    Mat d_a2 = params_.w3.transpose() * d_a3;
    d_a2.array() *= c.a2.unaryExpr([](Scalar a) { return elu_grad(a); }).array();
    grad.w2.noalias() = d_a2 * c.h1.transpose();
    grad.b2 = d_a2.rowwise().sum();
    Mat d_bn = params_.w2.transpose() * d_a2;
    d_bn.array() *= c.bn.unaryExpr([](Scalar a) { return elu_grad(a); }).array();
    grad.gamma = (d_bn.array() * c.xhat.array()).rowwise().sum().matrix();
    grad.beta = d_bn.rowwise().sum();

    // Batchnorm backward:
    // d_a1 = inv_std / B * (B * d_xhat - sum(d_xhat) - xhat * sum(d_xhat * xhat))
    Mat d_xhat = d_bn.array().colwise() * params_.gamma.array();
    const Vec sum_d = d_xhat.rowwise().sum();
    const Vec sum_dx = (d_xhat.array() * c.xhat.array()).rowwise().sum().matrix();
    Mat d_a1 = (batch * d_xhat.array()).colwise() - sum_d.array();
    d_a1.array() -= c.xhat.array().colwise() * sum_dx.array();
    d_a1.array().colwise() *= c.inv_std.array() / batch;

    grad.w1.noalias() = d_a1 * x.transpose();
    grad.b1 = d_a1.rowwise().sum();
    return loss;
  }

  static Scalar sigmoid(Scalar a) {
    if (a >= 0) return Scalar(1) / (Scalar(1) + std::exp(-a));
    const Scalar e = std::exp(a);
    return e / (Scalar(1) + e);
  }
  static Scalar softplus(Scalar a) {
    return a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
  }
  static Scalar elu(Scalar a) { return a > 0 ? a : std::expm1(a); }
  static Scalar elu_grad(Scalar a) { return a > 0 ? Scalar(1) : std::exp(a); }

  Mat he_uniform(Eigen::Index rows, Eigen::Index fan_in, Rng& rng) const {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Mat w(rows, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<Scalar>(u(rng));
    return w;
  }

  void run_forward(const Mat& x, Mode mode, Cache& c) const {
    c.a1.noalias() = params_.w1 * x;
    c.a1.colwise() += params_.b1;
    const Scalar eps = static_cast<Scalar>(options_.bn_eps);
    if (mode == Mode::train) {
      c.mean = c.a1.rowwise().mean();
      c.var = (c.a1.colwise() - c.mean).array().square().rowwise().mean().matrix();
    } else {
      c.mean = running_mean_;
      c.var = running_var_;
    }
    c.inv_std = (c.var.array() + eps).rsqrt().matrix();
    c.xhat = ((c.a1.colwise() - c.mean).array().colwise() * c.inv_std.array()).matrix();
    c.bn = (c.xhat.array().colwise() * params_.gamma.array()).matrix();
    c.bn.colwise() += params_.beta;
    c.h1 = c.bn.unaryExpr([](Scalar a) { return elu(a); });
    c.a2.noalias() = params_.w2 * c.h1;
    c.a2.colwise() += params_.b2;
    c.h2 = c.a2.unaryExpr([](Scalar a) { return elu(a); });
    c.a3.noalias() = params_.w3 * c.h2;
    c.a3.array() += params_.b3(0);
  }

  // Uses the pre-update batch statistics of a train-mode forward pass.
  void update_running_stats(const Cache& c, Eigen::Index batch) {
    if (batch < 2) return;
    const Scalar unbias = static_cast<Scalar>(batch) / static_cast<Scalar>(batch - 1);
    const Scalar m = static_cast<Scalar>(options_.bn_momentum);
    running_mean_ = m * running_mean_ + (Scalar(1) - m) * c.mean;
    running_var_ = m * running_var_ + (Scalar(1) - m) * (unbias * c.var);
  }

  void adam_update(Params& grad) {
    ++adam_t_;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double step = options_.learning_rate * std::sqrt(1.0 - std::pow(b2, adam_t_)) /
                        (1.0 - std::pow(b1, adam_t_));
    const Scalar sb1 = static_cast<Scalar>(b1), sb2 = static_cast<Scalar>(b2);
    const Scalar sstep = static_cast<Scalar>(step);
    // eps is applied to the bias-corrected second moment, as in the reference
    // ADAM formulation: theta -= lr * mhat / (sqrt(vhat) + eps).
    const Scalar eps_hat = static_cast<Scalar>(options_.adam_eps * std::sqrt(1.0 - std::pow(b2, adam_t_)));

    std::vector<Scalar*> g_ptr, m_ptr, v_ptr;
    std::vector<Eigen::Index> sizes;
    grad.for_each([&](const char*, Scalar* p, Eigen::Index n) { g_ptr.push_back(p); sizes.push_back(n); });
    adam_m_.for_each([&](const char*, Scalar* p, Eigen::Index) { m_ptr.push_back(p); });
    adam_v_.for_each([&](const char*, Scalar* p, Eigen::Index) { v_ptr.push_back(p); });
    std::size_t t = 0;
    params_.for_each([&](const char*, Scalar* p, Eigen::Index n) {
      Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>> w(p, n), g(g_ptr[t], n), m(m_ptr[t], n),
          v(v_ptr[t], n);
      m = sb1 * m + (Scalar(1) - sb1) * g;
      v = sb2 * v + (Scalar(1) - sb2) * g.square();
      w -= sstep * m / (v.sqrt() + eps_hat);
      ++t;
    });
  }

  Eigen::Index input_dim_;
  ClassifierOptions options_;
  Params params_;
  Vec running_mean_;
  Vec running_var_;
  Params adam_m_;
  Params adam_v_;
  long adam_t_ = 0;
};

}  // namespace msample

#endif  // MSAMPLE_CLASSIFIER_HPP
