#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glove/core.hpp"
#include "glove/model.hpp"
#include "glove/signal.hpp"

namespace glove::heads {

struct HeadConfig {
  int num_classes = 0;      // 50 dynamic / 48 static / 34 objects / 10 keys
  int hidden = 64;
  bool both_hands = false;  // concat left+right core outputs (44) vs one hand (22)
  std::uint64_t seed = 1;

  void validate() const;
};

struct ClassPrediction {
  int cls = -1;
  Vector probs;
  std::int64_t t_ms = 0;
};

// Two FC layers + softmax over one or two frozen cores' 22-dim outputs.
class Classifier {
 public:
  Classifier(std::shared_ptr<const model::ModelBundle> left,
             std::shared_ptr<const model::ModelBundle> right, HeadConfig cfg);

  // Windows are raw (unnormalized); right required iff both_hands.
  ClassPrediction classify(const Matrix& window_left, const Matrix* window_right = nullptr,
                           std::int64_t t_ms = 0) const;
  // Head forward on precomputed core features (input_dim x 1 or x B columns).
  Matrix head_probs(const Matrix& features) const;

  int input_dim() const { return cfg_.both_hands ? 2 * kJointCount : kJointCount; }
  const HeadConfig& config() const { return cfg_; }
  std::vector<nn::Param*> head_params();
  std::uint64_t core_hash() const;

  std::shared_ptr<const model::ModelBundle> core_left, core_right;
  nn::FcLayer h1, h2;

 private:
  HeadConfig cfg_;
};

Classifier attach_head(std::shared_ptr<const model::ModelBundle> core, HeadConfig cfg);
Classifier attach_head2(std::shared_ptr<const model::ModelBundle> left,
                        std::shared_ptr<const model::ModelBundle> right, HeadConfig cfg);

// Labeled head-training samples: raw windows per hand (right empty unless
// both_hands) and integer class labels.
struct HeadSamples {
  std::vector<Matrix> left, right;
  std::vector<int> labels;
};

struct HeadTrainOptions {
  int epochs = 200;
  int batch_size = 64;
  nn::AdamConfig adam{.lr = 1e-3};  // heads are small; pose-core lr would crawl
  std::uint64_t seed = 1;
};

struct HeadTrainReport {
  std::vector<Scalar> epoch_loss;
  bool degenerate_labels = false;  // fewer than two classes present
  std::uint64_t core_hash_before = 0, core_hash_after = 0;
};

// Core stays frozen: features are computed once through the frozen bundles,
// only h1/h2 receive Adam updates; the core parameter hash is checked.
HeadTrainReport train_head(Classifier& clf, const HeadSamples& data, const HeadTrainOptions& opt);

// ---------------------------------------------------------------------------
// Tap-gated key emission: a key fires only on a tap event, carrying the
// classifier's argmax at the tap timestamp.

struct KeyEvent {
  std::int64_t t_ms = 0;
  int key_class = -1;
  int finger_index = 0;  // 1..10, left pinky → right pinky
};

struct EmitStats {
  int emitted = 0;
  int dropped_warmup = 0;  // taps before the first prediction
};

std::vector<KeyEvent> keyboard_emit(const std::vector<signal::TapEvent>& taps,
                                    const std::vector<ClassPrediction>& predictions,
                                    EmitStats* stats = nullptr);

// Head-only checkpoint ("GPHD"): config JSON + h1/h2 blobs. Cores are loaded
// separately and re-attached.
void save_head(const Classifier& clf, const std::string& path);
Classifier load_head(const std::string& path, std::shared_ptr<const model::ModelBundle> left,
                     std::shared_ptr<const model::ModelBundle> right = nullptr);

}  // namespace glove::heads
