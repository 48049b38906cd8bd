#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "glove/core.hpp"
#include "glove/dataset.hpp"
#include "glove/model.hpp"

namespace glove::eval {

enum class Scheme { kfold, leave_one_subject_out, leave_one_session_out };

struct FoldPlan {
  Scheme scheme = Scheme::kfold;
  int n_folds = 0;
  std::vector<int> fold_of;            // window index -> fold id
  std::vector<std::string> fold_tag;   // subject/session name per fold (group schemes)

  std::vector<int> test_indices(int fold) const;
  std::vector<int> train_indices(int fold) const;
};

// Balanced k folds (sizes differ by at most one), shuffled by seed.
FoldPlan split_kfold(Index n, int k, std::uint64_t seed);
// One fold per distinct group id (subject or session), in sorted order.
FoldPlan split_by_group(const std::vector<std::string>& group_of, Scheme scheme);

Scalar rmse(const Vector& pred, const Vector& truth);
// 100·(1 − SSE/SST); zero-variance truth has no R².
std::optional<Scalar> r2_percent(const Vector& pred, const Vector& truth);

struct JointMetrics {
  Vector rmse_deg;                           // per joint
  std::vector<std::optional<Scalar>> r2_pct; // per joint
  Scalar avg_rmse = 0;                       // unweighted mean over the 22 joints
  std::optional<Scalar> avg_r2;              // mean over joints with defined R²
};
JointMetrics joint_metrics(const Matrix& pred, const Matrix& truth);  // both N x 22

struct Confusion {
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;  // true x predicted
  std::vector<std::optional<Scalar>> sensitivity_pct;          // missing when class unseen
  Scalar accuracy_pct = 0;
  long total = 0;
};
Confusion sensitivity_and_confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                                    int n_classes);

// ---------------------------------------------------------------------------
// Perturbation sweep over both bundles on identical perturbed copies of the
// test windows: noise σ ∈ {0,.02,…,.12} on all channels, masked-channel count
// ∈ {0..3}, per-channel scale from [1−w, 1+w] for w ∈ {0,.1,…,.5}.

struct SweepCell {
  std::string kind;  // "noise" | "mask" | "scale"
  Scalar param = 0;
  Scalar rmse_plain = 0, rmse_aug = 0;
  std::optional<Scalar> r2_plain, r2_aug;
};

struct SweepReport {
  std::vector<SweepCell> cells;
  Scalar perturbed_avg_plain = 0;  // mean RMSE over the non-identity cells
  Scalar perturbed_avg_aug = 0;
};

SweepReport robustness_sweep(const model::ModelBundle& plain, const model::ModelBundle& aug,
                             const model::WindowSet& test, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Dataset-file → windowed-set assembly shared by training, eval, and the CLI.

struct WindowingOptions {
  int length = kWindowLength;
  int stride = 1;
  bool baseline = true;
  int baseline_window = 400;
  bool normalize = true;  // false: raw windows (a saved bundle applies its own stats)
};

struct PreparedData {
  model::WindowSet set;               // windows (normalized per options), final-frame labels
  signal::ChannelStats stats;
  std::vector<int> class_of;          // final-frame class label per window (-1 if none)
  std::vector<std::string> subject_of, session_of;
};

PreparedData prepare_windows(const std::vector<dataset::DatasetFile>& files,
                             const WindowingOptions& opt);

// ---------------------------------------------------------------------------
// Report writers.

struct FoldMetrics {
  std::string fold_label;
  JointMetrics metrics;
};

// Per-joint table: one RMSE row and one R² row per fold plus a mean pair;
// columns are the 22 joints and the Average.
void write_joint_metrics_csv(std::ostream& os, const std::vector<FoldMetrics>& folds);
void write_confusion_csv(std::ostream& os, const Confusion& c);
void write_sweep_csv(std::ostream& os, const SweepReport& r);
std::string report_json(const std::vector<FoldMetrics>& folds, std::uint64_t seed,
                        const std::string& scheme_name);

}  // namespace glove::eval
