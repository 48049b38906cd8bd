#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "glove/core.hpp"

namespace glove::nn {

// Named dense parameter with a same-shape gradient accumulator. Biases are
// stored as n x 1.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, Index rows, Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  Index size() const { return value.size(); }
};

using Rng = std::mt19937_64;

// Uniform init in +-1/sqrt(fan_in).
void init_fan_in(Param& p, Index fan_in, Rng& rng);

// ---------------------------------------------------------------------------
// Activations; sequences and batches live in columns (feature x batch).

inline Matrix sigmoid(const Matrix& x) {
  return ((x.array() * 0.5).tanh() * 0.5 + 0.5).matrix();  // stable for large |x|
}

Matrix relu(const Matrix& x);
Matrix softmax_columns(const Matrix& logits);

// ---------------------------------------------------------------------------
// Fully connected layer y = W x + b on column batches.

class FcLayer {
 public:
  FcLayer() = default;
  FcLayer(const std::string& name, Index in, Index out);

  Matrix forward(const Matrix& x);
  // dy -> dx; accumulates into W.grad / b.grad.
  Matrix backward(const Matrix& dy);

  void init(Rng& rng);
  std::vector<Param*> params();

  Param W, b;

 private:
  Matrix x_cache_;
};

// ---------------------------------------------------------------------------
// LSTM over a batched sequence. Gate rows are packed [input; forget; cell;
// output], each `hidden` rows. Weights follow the usual cell equations with
// sigmoid gates and tanh candidate/output.
struct LstmCellParams {
  Param Wx;  // 4H x input
  Param Wh;  // 4H x H
  Param b;   // 4H x 1

  LstmCellParams() = default;
  LstmCellParams(const std::string& name, Index input, Index hidden);
  Index hidden() const { return Wh.value.cols(); }
  Index input() const { return Wx.value.cols(); }
  // Biases zero except forget gate +1.
  void init(Rng& rng);
  std::vector<Param*> params();
};

// Single step (batch columns). Caches nothing; used by tests and the
// streaming path via LstmSequence.
void lstm_step(const LstmCellParams& p, const Matrix& x_t, const Matrix& h_prev,
               const Matrix& c_prev, Matrix& h_t, Matrix& c_t);

// One direction over a full sequence, keeping per-step caches for backward.
class LstmSequence {
 public:
  LstmSequence() = default;
  LstmSequence(const std::string& name, Index input, Index hidden)
      : p(name, input, hidden) {}

  // xs: T matrices (input x B); returns T matrices (H x B). reversed = true
  // walks the sequence right-to-left (output stays aligned with xs).
  std::vector<Matrix> forward(const std::vector<Matrix>& xs, bool reversed);
  // dhs aligned with xs; returns dxs; accumulates parameter grads.
  std::vector<Matrix> backward(const std::vector<Matrix>& dhs);

  LstmCellParams p;

 private:
  struct StepCache {
    Matrix x, h_prev, c_prev, gates;  // gates post-activation, 4H x B
    Matrix c, tanh_c;
  };
  std::vector<StepCache> cache_;
  std::vector<int> order_;  // processing order over t
};

// Bidirectional layer: forward and reverse direction outputs concatenated per
// step into 2H x B.
class BiLstmLayer {
 public:
  BiLstmLayer() = default;
  BiLstmLayer(const std::string& name, Index input, Index hidden);

  std::vector<Matrix> forward(const std::vector<Matrix>& xs);
  std::vector<Matrix> backward(const std::vector<Matrix>& dhs);

  void init(Rng& rng);
  std::vector<Param*> params();
  Index hidden() const { return fwd.p.hidden(); }

  LstmSequence fwd, bwd;
};

// Convenience single-sequence API: seq is T x C (row per step), output T x 2H.
Matrix bilstm_forward(BiLstmLayer& layer, const Matrix& seq);

// ---------------------------------------------------------------------------
// Losses. Each returns the scalar loss and writes d(loss)/d(pred) into grad
// (mean over elements / batch).

Scalar smooth_l1(const Matrix& pred, const Matrix& target, Scalar beta = 0.5);
Scalar smooth_l1_grad(const Matrix& pred, const Matrix& target, Matrix& grad, Scalar beta = 0.5);

Scalar bce_with_logits(const Matrix& logits, const Matrix& targets);
Scalar bce_with_logits_grad(const Matrix& logits, const Matrix& targets, Matrix& grad);

// logits K x B, labels in [0, K).
Scalar softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels);
Scalar softmax_cross_entropy_grad(const Matrix& logits, const std::vector<int>& labels,
                                  Matrix& grad);

// ---------------------------------------------------------------------------
// Adam with bias correction; gradients are zeroed after a successful step.

struct AdamConfig {
  Scalar lr = 1e-4;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar eps = 1e-8;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<Param*> params, AdamConfig cfg = {});

  // Throws ErrorCategory::numeric on non-finite gradients; parameters are
  // left untouched in that case.
  void step();
  long steps_taken() const { return t_; }

 private:
  std::vector<Param*> params_;
  std::vector<Matrix> m_, v_;
  AdamConfig cfg_;
  long t_ = 0;
};

// ---------------------------------------------------------------------------
// Central finite-difference check of reverse-mode gradients.
//
// compute_grads() must populate every param's grad for the current values;
// loss() re-evaluates the objective. Checks all coordinates, or a random
// subsample of max_coords when the total exceeds it.

struct GradCheckResult {
  double max_rel_error = 0;
  long coords_checked = 0;
};

GradCheckResult grad_check(const std::vector<Param*>& params,
                           const std::function<Scalar()>& loss,
                           const std::function<void()>& compute_grads, double h = 1e-5,
                           long max_coords = 200, unsigned seed = 0);

}  // namespace glove::nn
