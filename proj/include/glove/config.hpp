#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glove/core.hpp"
#include "glove/eval.hpp"
#include "glove/model.hpp"

namespace glove::config {

// One JSON file drives every subcommand. Sections a command doesn't use are
// ignored by it but still validated; unknown keys anywhere are an error, so a
// typo can't silently fall back to a default. Flags override fields, and the
// resolved result is written next to the run's outputs.

struct TrainSection {
  int epochs = 30;
  int batch_size = 64;
  Scalar lr = 1e-4;
  Scalar beta = 0.5;
  std::uint64_t seed = 1;
};

struct HeadSection {
  int num_classes = 10;
  int hidden = 64;
  bool both_hands = false;
  int epochs = 60;
  int batch_size = 32;
  Scalar lr = 1e-3;
  std::uint64_t seed = 1;
};

struct WindowSection {
  int stride = 1;
  bool baseline = true;
  int baseline_window = 400;
};

struct EvalSection {
  std::string scheme = "kfold";  // kfold | loso | loseo
  int folds = 10;
  std::uint64_t seed = 1;
};

struct SynthSection {
  Scalar duration_s = 60.0;
  std::uint64_t seed = 7;
  Scalar smoothness = 1.0;
  Scalar noise_std = 0.003;   // gauge response noise
  Scalar drift_per_s = 0.0;
  Scalar imu_noise_deg = 0.5;
  std::string subject = "synth01";
  std::string session = "s01";
};

struct AugmentSection {
  Scalar sigma = 0.06;
  Scalar scale_lo = 0.5;
  Scalar scale_hi = 1.5;
  std::uint64_t seed = 1;
};

struct StreamSection {
  bool taps = false;
  Scalar tap_threshold = 0.04;
  int rest_samples = 200;
  bool right_hand = true;
  int queue_capacity = 256;
  std::string drop_policy = "drop_oldest";  // drop_oldest | block
  Scalar rate_multiplier = 1.0;
  int port = 7070;
};

struct RunConfig {
  model::ModelConfig model;
  TrainSection train;
  HeadSection head;
  WindowSection windows;
  EvalSection eval;
  SynthSection synth;
  AugmentSection augment;
  StreamSection stream;

  void validate() const;
  eval::Scheme scheme() const;  // parses eval.scheme

  std::string to_json_text() const;  // every field, resolved
  static RunConfig from_json_text(const std::string& text);
};

RunConfig load_run_config(const std::string& path);
// Writes <dir>/config.resolved.json (creates dir if needed).
void write_resolved(const RunConfig& cfg, const std::string& dir);

}  // namespace glove::config
