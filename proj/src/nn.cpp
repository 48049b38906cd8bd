#include "glove/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace glove::nn {

void init_fan_in(Param& p, Index fan_in, Rng& rng) {
  const Scalar bound = Scalar(1) / std::sqrt(Scalar(fan_in));
  std::uniform_real_distribution<Scalar> dist(-bound, bound);
  for (Index j = 0; j < p.value.cols(); ++j)
    for (Index i = 0; i < p.value.rows(); ++i) p.value(i, j) = dist(rng);
  p.grad.setZero();
}

Matrix relu(const Matrix& x) { return x.cwiseMax(Scalar(0)); }

Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index j = 0; j < logits.cols(); ++j) {
    ArrayX col = logits.col(j).array();
    col -= col.maxCoeff();
    col = col.exp();
    out.col(j) = (col / col.sum()).matrix();
  }
  return out;
}

// ---------------------------------------------------------------------------

FcLayer::FcLayer(const std::string& name, Index in, Index out)
    : W(name + ".W", out, in), b(name + ".b", out, 1) {}

Matrix FcLayer::forward(const Matrix& x) {
  x_cache_ = x;
  return (W.value * x).colwise() + b.value.col(0);
}

Matrix FcLayer::backward(const Matrix& dy) {
  W.grad.noalias() += dy * x_cache_.transpose();
  b.grad.col(0) += dy.rowwise().sum();
  return W.value.transpose() * dy;
}

void FcLayer::init(Rng& rng) {
  init_fan_in(W, W.value.cols(), rng);
  b.value.setZero();
  b.grad.setZero();
}

std::vector<Param*> FcLayer::params() { return {&W, &b}; }

// ---------------------------------------------------------------------------

LstmCellParams::LstmCellParams(const std::string& name, Index input, Index hidden)
    : Wx(name + ".Wx", 4 * hidden, input),
      Wh(name + ".Wh", 4 * hidden, hidden),
      b(name + ".b", 4 * hidden, 1) {}

void LstmCellParams::init(Rng& rng) {
  init_fan_in(Wx, Wx.value.cols(), rng);
  init_fan_in(Wh, Wh.value.cols(), rng);
  b.value.setZero();
  const Index h = hidden();
  b.value.block(h, 0, h, 1).setConstant(Scalar(1));  // open forget gates
  b.grad.setZero();
}

std::vector<Param*> LstmCellParams::params() { return {&Wx, &Wh, &b}; }

namespace {

// Computes activated gates (4H x B) and the new cell/hidden state.
void cell_forward(const LstmCellParams& p, const Matrix& x_t, const Matrix& h_prev,
                  const Matrix& c_prev, Matrix& gates, Matrix& c_t, Matrix& tanh_c,
                  Matrix& h_t) {
  const Index H = p.hidden();
  gates.noalias() = p.Wx.value * x_t;
  gates.noalias() += p.Wh.value * h_prev;
  gates.colwise() += p.b.value.col(0);
  gates.topRows(2 * H) = sigmoid(gates.topRows(2 * H));
  gates.middleRows(2 * H, H) = gates.middleRows(2 * H, H).array().tanh().matrix();
  gates.bottomRows(H) = sigmoid(gates.bottomRows(H));
  c_t = gates.middleRows(H, H).cwiseProduct(c_prev) +
        gates.topRows(H).cwiseProduct(gates.middleRows(2 * H, H));
  tanh_c = c_t.array().tanh().matrix();
  h_t = gates.bottomRows(H).cwiseProduct(tanh_c);
}

}  // namespace

void lstm_step(const LstmCellParams& p, const Matrix& x_t, const Matrix& h_prev,
               const Matrix& c_prev, Matrix& h_t, Matrix& c_t) {
  Matrix gates, tanh_c;
  cell_forward(p, x_t, h_prev, c_prev, gates, c_t, tanh_c, h_t);
}

std::vector<Matrix> LstmSequence::forward(const std::vector<Matrix>& xs, bool reversed) {
  const int T = static_cast<int>(xs.size());
  const Index H = p.hidden();
  const Index B = T > 0 ? xs[0].cols() : 0;

  order_.resize(T);
  std::iota(order_.begin(), order_.end(), 0);
  if (reversed) std::reverse(order_.begin(), order_.end());

  cache_.assign(T, {});
  std::vector<Matrix> hs(T);
  Matrix h = Matrix::Zero(H, B);
  Matrix c = Matrix::Zero(H, B);
  for (int k = 0; k < T; ++k) {
    const int t = order_[k];
    StepCache& sc = cache_[k];
    sc.x = xs[t];
    sc.h_prev = h;
    sc.c_prev = c;
    cell_forward(p, sc.x, sc.h_prev, sc.c_prev, sc.gates, sc.c, sc.tanh_c, h);
    c = sc.c;
    hs[t] = h;
  }
  return hs;
}

std::vector<Matrix> LstmSequence::backward(const std::vector<Matrix>& dhs) {
  const int T = static_cast<int>(cache_.size());
  if (static_cast<int>(dhs.size()) != T)
    throw GloveError(ErrorCategory::shape_mismatch, "lstm backward: dhs length mismatch");
  const Index H = p.hidden();

  std::vector<Matrix> dxs(T);
  Matrix dh_carry, dc_carry;
  Matrix dpre(4 * H, T > 0 ? dhs[order_[0]].cols() : 0);
  for (int k = T - 1; k >= 0; --k) {
    const int t = order_[k];
    const StepCache& sc = cache_[k];
    const auto i = sc.gates.topRows(H).array();
    const auto f = sc.gates.middleRows(H, H).array();
    const auto g = sc.gates.middleRows(2 * H, H).array();
    const auto o = sc.gates.bottomRows(H).array();
    const auto tc = sc.tanh_c.array();

    ArrayXX dh = dhs[t].array();
    if (dh_carry.size() > 0) dh += dh_carry.array();
    ArrayXX dc = dh * o * (Scalar(1) - tc * tc);
    if (dc_carry.size() > 0) dc += dc_carry.array();

    dpre.topRows(H) = (dc * g * i * (Scalar(1) - i)).matrix();
    dpre.middleRows(H, H) = (dc * sc.c_prev.array() * f * (Scalar(1) - f)).matrix();
    dpre.middleRows(2 * H, H) = (dc * i * (Scalar(1) - g * g)).matrix();
    dpre.bottomRows(H) = (dh * tc * o * (Scalar(1) - o)).matrix();

    p.Wx.grad.noalias() += dpre * sc.x.transpose();
    p.Wh.grad.noalias() += dpre * sc.h_prev.transpose();
    p.b.grad.col(0) += dpre.rowwise().sum();

    dxs[t] = p.Wx.value.transpose() * dpre;
    dh_carry = p.Wh.value.transpose() * dpre;
    dc_carry = (dc * f).matrix();
  }
  return dxs;
}

// ---------------------------------------------------------------------------

BiLstmLayer::BiLstmLayer(const std::string& name, Index input, Index hidden)
    : fwd(name + ".fwd", input, hidden), bwd(name + ".bwd", input, hidden) {}

std::vector<Matrix> BiLstmLayer::forward(const std::vector<Matrix>& xs) {
  std::vector<Matrix> hf = fwd.forward(xs, false);
  std::vector<Matrix> hb = bwd.forward(xs, true);
  const Index H = hidden();
  std::vector<Matrix> out(xs.size());
  for (size_t t = 0; t < xs.size(); ++t) {
    out[t].resize(2 * H, xs[t].cols());
    out[t].topRows(H) = hf[t];
    out[t].bottomRows(H) = hb[t];
  }
  return out;
}

std::vector<Matrix> BiLstmLayer::backward(const std::vector<Matrix>& dhs) {
  const Index H = hidden();
  std::vector<Matrix> df(dhs.size()), db(dhs.size());
  for (size_t t = 0; t < dhs.size(); ++t) {
    df[t] = dhs[t].topRows(H);
    db[t] = dhs[t].bottomRows(H);
  }
  std::vector<Matrix> dxf = fwd.backward(df);
  std::vector<Matrix> dxb = bwd.backward(db);
  for (size_t t = 0; t < dxf.size(); ++t) dxf[t] += dxb[t];
  return dxf;
}

void BiLstmLayer::init(Rng& rng) {
  fwd.p.init(rng);
  bwd.p.init(rng);
}

std::vector<Param*> BiLstmLayer::params() {
  std::vector<Param*> out = fwd.p.params();
  for (Param* q : bwd.p.params()) out.push_back(q);
  return out;
}

Matrix bilstm_forward(BiLstmLayer& layer, const Matrix& seq) {
  std::vector<Matrix> xs(seq.rows());
  for (Index t = 0; t < seq.rows(); ++t) xs[t] = seq.row(t).transpose();
  std::vector<Matrix> hs = layer.forward(xs);
  Matrix out(seq.rows(), 2 * layer.hidden());
  for (Index t = 0; t < seq.rows(); ++t) out.row(t) = hs[t].transpose();
  return out;
}

// ---------------------------------------------------------------------------

Scalar smooth_l1(const Matrix& pred, const Matrix& target, Scalar beta) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw GloveError(ErrorCategory::shape_mismatch, "smooth_l1: pred/target shape mismatch");
  ArrayXX d = (pred - target).array().abs();
  ArrayXX loss = (d < beta).select(Scalar(0.5) * d * d / beta, d - Scalar(0.5) * beta);
  return loss.sum() / Scalar(pred.size());
}

Scalar smooth_l1_grad(const Matrix& pred, const Matrix& target, Matrix& grad, Scalar beta) {
  Scalar loss = smooth_l1(pred, target, beta);
  ArrayXX d = (pred - target).array();
  grad = ((d / beta).min(Scalar(1)).max(Scalar(-1)) / Scalar(pred.size())).matrix();
  return loss;
}

Scalar bce_with_logits(const Matrix& logits, const Matrix& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw GloveError(ErrorCategory::shape_mismatch, "bce: logits/targets shape mismatch");
  ArrayXX z = logits.array();
  ArrayXX y = targets.array();
  ArrayXX loss = z.max(Scalar(0)) - z * y + (-z.abs()).exp().log1p();
  return loss.sum() / Scalar(logits.size());
}

Scalar bce_with_logits_grad(const Matrix& logits, const Matrix& targets, Matrix& grad) {
  Scalar loss = bce_with_logits(logits, targets);
  grad = ((sigmoid(logits).array() - targets.array()) / Scalar(logits.size())).matrix();
  return loss;
}

Scalar softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != logits.cols())
    throw GloveError(ErrorCategory::shape_mismatch, "xent: label count != batch");
  Scalar total = 0;
  for (Index j = 0; j < logits.cols(); ++j) {
    ArrayX col = logits.col(j).array();
    Scalar m = col.maxCoeff();
    Scalar lse = m + std::log((col - m).exp().sum());
    total += lse - logits(labels[j], j);
  }
  return total / Scalar(logits.cols());
}

Scalar softmax_cross_entropy_grad(const Matrix& logits, const std::vector<int>& labels,
                                  Matrix& grad) {
  Scalar loss = softmax_cross_entropy(logits, labels);
  grad = softmax_columns(logits);
  for (Index j = 0; j < logits.cols(); ++j) grad(labels[j], j) -= Scalar(1);
  grad /= Scalar(logits.cols());
  return loss;
}

// ---------------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(std::vector<Param*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Param* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamOptimizer::step() {
  for (const Param* p : params_) {
    if (!p->grad.allFinite())
      throw GloveError(ErrorCategory::numeric,
                       "non-finite gradient in parameter '" + p->name + "' at step " +
                           std::to_string(t_ + 1));
  }
  ++t_;
  const Scalar bc1 = Scalar(1) - std::pow(cfg_.beta1, Scalar(t_));
  const Scalar bc2 = Scalar(1) - std::pow(cfg_.beta2, Scalar(t_));
  for (size_t k = 0; k < params_.size(); ++k) {
    Param& p = *params_[k];
    m_[k] = cfg_.beta1 * m_[k] + (1 - cfg_.beta1) * p.grad;
    v_[k] = (cfg_.beta2 * v_[k].array() + (1 - cfg_.beta2) * p.grad.array().square()).matrix();
    ArrayXX mhat = m_[k].array() / bc1;
    ArrayXX vhat = v_[k].array() / bc2;
    p.value.array() -= cfg_.lr * mhat / (vhat.sqrt() + cfg_.eps);
    p.grad.setZero();
  }
}

// ---------------------------------------------------------------------------

GradCheckResult grad_check(const std::vector<Param*>& params,
                           const std::function<Scalar()>& loss,
                           const std::function<void()>& compute_grads, double h,
                           long max_coords, unsigned seed) {
  for (Param* p : params) p->zero_grad();
  compute_grads();
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const Param* p : params) analytic.push_back(p->grad);

  std::vector<std::pair<size_t, Index>> coords;
  for (size_t k = 0; k < params.size(); ++k)
    for (Index i = 0; i < params[k]->size(); ++i) coords.emplace_back(k, i);
  if (static_cast<long>(coords.size()) > max_coords) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coords);
  }

  GradCheckResult res;
  for (auto [k, i] : coords) {
    Scalar* v = params[k]->value.data() + i;
    const Scalar saved = *v;
    *v = saved + h;
    const Scalar lp = loss();
    *v = saved - h;
    const Scalar lm = loss();
    *v = saved;
    const double numeric = (lp - lm) / (2 * h);
    const double a = analytic[k](i);
    const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    res.max_rel_error = std::max(res.max_rel_error, rel);
    ++res.coords_checked;
  }
  return res;
}

}  // namespace glove::nn
