#pragma once

#include <cstdint>

#include "glove/core.hpp"
#include "glove/model.hpp"
#include "glove/nn.hpp"

namespace glove::augment {

// Channel-level window transformations (applied post-normalization, so sigma
// and scale live in normalized units). Each picks k distinct channels.
Matrix mask_channels(const Matrix& window, int k, nn::Rng& rng);
Matrix add_noise(const Matrix& window, Scalar sigma, int k, nn::Rng& rng);
Matrix scale_channels(const Matrix& window, Scalar lo, Scalar hi, int k, nn::Rng& rng);

// 4|D| dataset: every row verbatim with flags (0,0,0), plus one masked copy
// (1,0,0), one noisy copy (0,1,0), one scaled copy (0,0,1), each transform
// touching 1–3 channels. Per-row RNG streams keep the result reproducible and
// order-independent.
model::WindowSet build_augmented_dataset(const model::WindowSet& d, std::uint64_t seed,
                                         Scalar sigma = 0.06, Scalar scale_lo = 0.5,
                                         Scalar scale_hi = 1.5);

// Joint objective: smooth-L1 on angles + BCE on the transformation flags,
// unit weights.
model::ModelBundle multitask_train(const model::WindowSet& d_aug, model::ModelConfig cfg,
                                   const signal::ChannelStats& stats, model::TrainOptions opt);

}  // namespace glove::augment
