#include "glove/augment.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace glove::augment {

namespace {

std::vector<Index> pick_channels(Index n_channels, int k, nn::Rng& rng) {
  if (k < 1 || k > n_channels)
    throw GloveError(ErrorCategory::config, "channel count k out of range");
  std::vector<Index> all(n_channels);
  std::iota(all.begin(), all.end(), 0);
  std::vector<Index> chosen;
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), k, rng);
  return chosen;
}

}  // namespace

Matrix mask_channels(const Matrix& window, int k, nn::Rng& rng) {
  Matrix out = window;
  for (Index c : pick_channels(window.cols(), k, rng)) out.col(c).setZero();
  return out;
}

Matrix add_noise(const Matrix& window, Scalar sigma, int k, nn::Rng& rng) {
  if (sigma < 0) throw GloveError(ErrorCategory::config, "noise sigma must be >= 0");
  Matrix out = window;
  std::normal_distribution<Scalar> gauss(0.0, 1.0);
  for (Index c : pick_channels(window.cols(), k, rng))
    for (Index t = 0; t < out.rows(); ++t) out(t, c) += sigma * gauss(rng);
  return out;
}

Matrix scale_channels(const Matrix& window, Scalar lo, Scalar hi, int k, nn::Rng& rng) {
  if (lo > hi) throw GloveError(ErrorCategory::config, "scale range inverted");
  Matrix out = window;
  std::uniform_real_distribution<Scalar> range(lo, hi);
  for (Index c : pick_channels(window.cols(), k, rng)) out.col(c) *= range(rng);
  return out;
}

model::WindowSet build_augmented_dataset(const model::WindowSet& d, std::uint64_t seed,
                                         Scalar sigma, Scalar scale_lo, Scalar scale_hi) {
  if (d.size() == 0) throw GloveError(ErrorCategory::config, "augment: empty dataset");
  const Index n = d.size();
  model::WindowSet out;
  out.X.reserve(4 * n);
  out.Y.resize(4 * n, d.Y.cols());
  out.F = Matrix::Zero(4 * n, 3);

  for (Index i = 0; i < n; ++i) {
    nn::Rng rng(seed ^ (0x9e3779b97f4a7c15ull * (std::uint64_t(i) + 1)));
    auto k_draw = [&] { return 1 + static_cast<int>(rng() % 3); };

    const Index base = 4 * i;
    out.X.push_back(d.X[i]);
    out.X.push_back(mask_channels(d.X[i], k_draw(), rng));
    out.X.push_back(add_noise(d.X[i], sigma, k_draw(), rng));
    out.X.push_back(scale_channels(d.X[i], scale_lo, scale_hi, k_draw(), rng));
    for (int c = 0; c < 4; ++c) out.Y.row(base + c) = d.Y.row(i);
    out.F(base + 1, 0) = 1;
    out.F(base + 2, 1) = 1;
    out.F(base + 3, 2) = 1;
  }
  return out;
}

model::ModelBundle multitask_train(const model::WindowSet& d_aug, model::ModelConfig cfg,
                                   const signal::ChannelStats& stats, model::TrainOptions opt) {
  cfg.multitask_flags_dim = 3;
  opt.multitask = true;
  return model::train(d_aug, cfg, stats, opt);
}

}  // namespace glove::augment
