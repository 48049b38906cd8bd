#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glove/core.hpp"
#include "glove/nn.hpp"
#include "glove/signal.hpp"

namespace glove::model {

// Architecture only; training hyperparameters live in TrainOptions.
struct ModelConfig {
  int input_channels = kInputChannels;
  int window_length = kWindowLength;
  int hidden_size = 64;
  int num_stacked_layers = 2;
  int fc1_width = 128;
  int output_dim = kJointCount;
  int multitask_flags_dim = 0;  // 3 when augmentation pretraining is on
  bool mean_pool = false;       // default: final-step hidden state feeds the FC stack

  void validate() const;
  std::string to_json() const;  // canonical (sorted keys); hashed for checkpoints
  static ModelConfig from_json(const std::string& text);
  std::uint64_t hash() const;
};

// Windowed training set. X: N windows of window_length x input_channels
// (normalized); Y: N x 22 angle labels in degrees; F: N x 3 transformation
// flags, empty unless augmented.
struct WindowSet {
  std::vector<Matrix> X;
  Matrix Y;
  Matrix F;

  Index size() const { return static_cast<Index>(X.size()); }
};

// Normalization -> stacked Bi-LSTM -> FC -> ReLU -> FC (angles; optional
// transformation-flag logits off the shared hidden layer).
class PoseModel {
 public:
  explicit PoseModel(const ModelConfig& cfg);

  void init(std::uint64_t seed);

  // xs: window_length matrices of input_channels x B. Returns output_dim x B;
  // fills flag logits (flags_dim x B) when requested and enabled.
  Matrix forward_batch(const std::vector<Matrix>& xs, Matrix* flag_logits = nullptr);
  // Gradients w.r.t. the two outputs; accumulates into parameter grads.
  void backward_batch(const Matrix& d_angles, const Matrix* d_flags = nullptr);

  // Single window (window_length x input_channels) -> 22 angles. Pure.
  Vector forward_window(const Matrix& window);

  std::vector<nn::Param*> params();
  const ModelConfig& config() const { return cfg_; }
  nn::FcLayer& output_layer() { return fc2_; }

  // FNV over every parameter's bytes, order-stable. Freeze checks.
  std::uint64_t param_hash() const;

 private:
  ModelConfig cfg_;
  std::vector<nn::BiLstmLayer> lstm_;
  nn::FcLayer fc1_, fc2_, flags_;
  Matrix pre1_;  // FC1 pre-activation cache for the ReLU mask
  int last_T_ = 0;
  Index last_B_ = 0;
};

struct TrainOptions {
  int epochs = 100;
  int batch_size = 64;
  nn::AdamConfig adam;  // lr defaults to 1e-4
  Scalar smooth_l1_beta = 0.5;
  std::uint64_t seed = 1;
  bool multitask = false;  // add bce(flag logits, F) with unit weight
  int log_every_epochs = 0;
};

struct TrainReport {
  std::vector<Scalar> epoch_loss;       // total
  std::vector<Scalar> epoch_reg_loss;   // smooth-L1 term
  std::vector<Scalar> epoch_flag_loss;  // bce term (zeros when single-task)
  std::uint64_t seed = 0;
  int epochs = 0;
  int aborted_epoch = -1;  // >= 0 when a non-finite loss rolled back to last good epoch
};

struct ModelBundle {
  ModelConfig config;
  signal::ChannelStats stats;  // input normalization (input_channels entries)
  std::shared_ptr<PoseModel> net;
  TrainReport report;
};

// Deterministic per-epoch visit order: permutation of [0, n).
std::vector<int> epoch_order(Index n, int epoch, std::uint64_t seed);

// Trains on already-normalized windows; stats are embedded in the bundle for
// inference-time normalization. The output layer's bias starts at the label
// column means so the optimizer spends its steps on structure, not DC offset.
ModelBundle train(const WindowSet& data, const ModelConfig& cfg,
                  const signal::ChannelStats& stats, const TrainOptions& opt);

// Forward a set of raw (unnormalized) or normalized windows in batches.
Matrix predict_windows(const ModelBundle& bundle, const std::vector<Matrix>& windows,
                       bool already_normalized, int batch_size = 256);

// Sliding-window stride-1 inference with per-push latency accounting.
class StreamPredictor {
 public:
  explicit StreamPredictor(const ModelBundle& bundle);

  // channels: raw input_channels row (strain + wrist). Returns angles once
  // window_length frames have arrived, then every frame.
  std::optional<Vector> push(const Vector& channels);
  void reset();

  Index frames_seen() const { return frames_; }
  const std::vector<double>& latencies_us() const { return lat_us_; }

 private:
  const ModelBundle& b_;
  Matrix buf_;  // window_length x input_channels, raw rows; normalized at forward time
  Index frames_ = 0;
  std::vector<double> lat_us_;
};

// Convenience batch form of the stream path (one output per complete window).
std::vector<Vector> predict_stream(const ModelBundle& bundle, const Matrix& channel_rows,
                                   std::vector<double>* latencies_us = nullptr);

// ---------------------------------------------------------------------------
// Checkpoint container: magic "GPML", version, length-prefixed canonical
// config JSON + its FNV hash, named parameter blobs, metadata JSON.

inline constexpr std::uint32_t kBundleVersion = 1;

void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

}  // namespace glove::model
