#include "glove/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "glove/augment.hpp"
#include "glove/signal.hpp"

namespace glove::eval {

std::vector<int> FoldPlan::test_indices(int fold) const {
  std::vector<int> out;
  for (size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> FoldPlan::train_indices(int fold) const {
  std::vector<int> out;
  for (size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(static_cast<int>(i));
  return out;
}

FoldPlan split_kfold(Index n, int k, std::uint64_t seed) {
  if (k < 2) throw GloveError(ErrorCategory::config, "kfold needs k >= 2");
  if (static_cast<Index>(k) > n)
    throw GloveError(ErrorCategory::config, "kfold: k exceeds dataset size");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  FoldPlan plan;
  plan.scheme = Scheme::kfold;
  plan.n_folds = k;
  plan.fold_of.resize(n);
  for (Index i = 0; i < n; ++i) plan.fold_of[order[i]] = static_cast<int>(i % k);
  return plan;
}

FoldPlan split_by_group(const std::vector<std::string>& group_of, Scheme scheme) {
  if (group_of.empty()) throw GloveError(ErrorCategory::config, "group split: empty dataset");
  std::set<std::string> groups(group_of.begin(), group_of.end());
  if (groups.count(""))
    throw GloveError(ErrorCategory::config, "group split: windows with missing group id");
  if (groups.size() < 2)
    throw GloveError(ErrorCategory::config, "group split needs at least two groups");

  FoldPlan plan;
  plan.scheme = scheme;
  plan.n_folds = static_cast<int>(groups.size());
  plan.fold_tag.assign(groups.begin(), groups.end());
  std::map<std::string, int> fold_id;
  for (int f = 0; f < plan.n_folds; ++f) fold_id[plan.fold_tag[f]] = f;
  plan.fold_of.reserve(group_of.size());
  for (const auto& g : group_of) plan.fold_of.push_back(fold_id[g]);
  return plan;
}

// ---------------------------------------------------------------------------

Scalar rmse(const Vector& pred, const Vector& truth) {
  if (pred.size() != truth.size() || pred.size() == 0)
    throw GloveError(ErrorCategory::shape_mismatch, "rmse: length mismatch or empty");
  return std::sqrt((pred - truth).squaredNorm() / Scalar(pred.size()));
}

std::optional<Scalar> r2_percent(const Vector& pred, const Vector& truth) {
  if (pred.size() != truth.size() || pred.size() < 2)
    throw GloveError(ErrorCategory::shape_mismatch, "r2: need >= 2 paired samples");
  const Scalar mean = truth.mean();
  const Scalar sst = (truth.array() - mean).square().sum();
  if (sst == 0) return std::nullopt;
  const Scalar sse = (pred - truth).squaredNorm();
  return 100.0 * (1.0 - sse / sst);
}

JointMetrics joint_metrics(const Matrix& pred, const Matrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw GloveError(ErrorCategory::shape_mismatch, "joint_metrics: shape mismatch");
  JointMetrics m;
  m.rmse_deg.resize(pred.cols());
  m.r2_pct.resize(pred.cols());
  Scalar r2_sum = 0;
  int r2_n = 0;
  for (Index j = 0; j < pred.cols(); ++j) {
    m.rmse_deg(j) = rmse(pred.col(j), truth.col(j));
    m.r2_pct[j] = r2_percent(pred.col(j), truth.col(j));
    if (m.r2_pct[j]) {
      r2_sum += *m.r2_pct[j];
      ++r2_n;
    }
  }
  m.avg_rmse = m.rmse_deg.mean();
  if (r2_n > 0) m.avg_r2 = r2_sum / r2_n;
  return m;
}

Confusion sensitivity_and_confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                                    int n_classes) {
  if (pred.size() != truth.size())
    throw GloveError(ErrorCategory::shape_mismatch, "confusion: length mismatch");
  Confusion c;
  c.counts.setZero(n_classes, n_classes);
  for (size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= n_classes || pred[i] < 0 || pred[i] >= n_classes)
      throw GloveError(ErrorCategory::config, "confusion: label outside [0, n_classes)");
    ++c.counts(truth[i], pred[i]);
  }
  c.total = static_cast<long>(pred.size());
  long correct = 0;
  c.sensitivity_pct.resize(n_classes);
  for (int t = 0; t < n_classes; ++t) {
    const long row_total = c.counts.row(t).sum();
    correct += c.counts(t, t);
    if (row_total > 0)
      c.sensitivity_pct[t] = 100.0 * Scalar(c.counts(t, t)) / Scalar(row_total);
  }
  c.accuracy_pct = c.total ? 100.0 * Scalar(correct) / Scalar(c.total) : 0.0;
  return c;
}

// ---------------------------------------------------------------------------

namespace {

Matrix labels_for(const model::WindowSet& s) { return s.Y; }

SweepCell eval_cell(const std::string& kind, Scalar param, const model::ModelBundle& plain,
                    const model::ModelBundle& aug, const std::vector<Matrix>& windows,
                    const Matrix& truth) {
  SweepCell cell;
  cell.kind = kind;
  cell.param = param;
  Matrix pred_plain = model::predict_windows(plain, windows, /*already_normalized=*/true);
  Matrix pred_aug = model::predict_windows(aug, windows, /*already_normalized=*/true);
  JointMetrics mp = joint_metrics(pred_plain, truth);
  JointMetrics ma = joint_metrics(pred_aug, truth);
  cell.rmse_plain = mp.avg_rmse;
  cell.rmse_aug = ma.avg_rmse;
  cell.r2_plain = mp.avg_r2;
  cell.r2_aug = ma.avg_r2;
  return cell;
}

}  // namespace

SweepReport robustness_sweep(const model::ModelBundle& plain, const model::ModelBundle& aug,
                             const model::WindowSet& test, std::uint64_t seed) {
  if (test.size() == 0) throw GloveError(ErrorCategory::config, "sweep: empty test set");
  SweepReport report;
  const Matrix truth = labels_for(test);
  std::uint64_t cell_id = 0;

  auto perturbed = [&](auto&& transform) {
    std::vector<Matrix> out;
    out.reserve(test.X.size());
    for (Index i = 0; i < test.size(); ++i) {
      nn::Rng rng(seed ^ (0x9e3779b97f4a7c15ull * (cell_id * 1000003ull + i + 1)));
      out.push_back(transform(test.X[i], rng));
    }
    return out;
  };

  for (Scalar sigma : {0.0, 0.02, 0.04, 0.06, 0.08, 0.10, 0.12}) {
    ++cell_id;
    auto windows = perturbed([&](const Matrix& w, nn::Rng& rng) {
      if (sigma == 0) return w;
      return augment::add_noise(w, sigma, static_cast<int>(w.cols()), rng);
    });
    report.cells.push_back(eval_cell("noise", sigma, plain, aug, windows, truth));
  }
  for (int m : {0, 1, 2, 3}) {
    ++cell_id;
    auto windows = perturbed([&](const Matrix& w, nn::Rng& rng) {
      if (m == 0) return w;
      return augment::mask_channels(w, m, rng);
    });
    report.cells.push_back(eval_cell("mask", Scalar(m), plain, aug, windows, truth));
  }
  for (Scalar w : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    ++cell_id;
    auto windows = perturbed([&](const Matrix& win, nn::Rng& rng) {
      if (w == 0) return win;
      return augment::scale_channels(win, 1.0 - w, 1.0 + w, static_cast<int>(win.cols()), rng);
    });
    report.cells.push_back(eval_cell("scale", w, plain, aug, windows, truth));
  }

  Scalar sp = 0, sa = 0;
  int n = 0;
  for (const auto& c : report.cells) {
    if (c.param == 0) continue;
    sp += c.rmse_plain;
    sa += c.rmse_aug;
    ++n;
  }
  report.perturbed_avg_plain = sp / n;
  report.perturbed_avg_aug = sa / n;
  return report;
}

// ---------------------------------------------------------------------------

PreparedData prepare_windows(const std::vector<dataset::DatasetFile>& files,
                             const WindowingOptions& opt) {
  if (files.empty()) throw GloveError(ErrorCategory::config, "prepare_windows: no input files");

  // Stats pool every frame of every file (input-only statistics, one
  // normalization per corpus as in per-recording z-scoring).
  std::vector<Matrix> all_channels;
  Index total_rows = 0;
  for (const auto& f : files) {
    all_channels.push_back(
        dataset::frames_to_channel_rows(f.frames, opt.baseline, opt.baseline_window));
    total_rows += all_channels.back().rows();
  }
  Matrix pooled(total_rows, kInputChannels);
  Index at = 0;
  for (const auto& c : all_channels) {
    pooled.middleRows(at, c.rows()) = c;
    at += c.rows();
  }

  PreparedData out;
  out.stats = signal::compute_channel_stats(pooled);

  std::vector<Vector> label_rows;
  for (size_t fi = 0; fi < files.size(); ++fi) {
    const auto& f = files[fi];
    const Matrix norm =
        opt.normalize ? signal::normalize(all_channels[fi], out.stats) : all_channels[fi];
    for (Index start : signal::window_starts(norm.rows(), opt.length, opt.stride)) {
      out.set.X.push_back(norm.middleRows(start, opt.length));
      const Index last = start + opt.length - 1;
      label_rows.push_back(f.angles.row(last).transpose());
      out.class_of.push_back(f.header.has_label ? f.labels[last] : -1);
      out.subject_of.push_back(f.header.subject);
      out.session_of.push_back(f.header.session);
    }
  }
  out.set.Y.resize(static_cast<Index>(label_rows.size()), kJointCount);
  for (Index i = 0; i < out.set.Y.rows(); ++i) out.set.Y.row(i) = label_rows[i].transpose();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void append_num(std::ostream& os, Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  os << buf;
}

}  // namespace

void write_joint_metrics_csv(std::ostream& os, const std::vector<FoldMetrics>& folds) {
  os << "fold,metric";
  for (const auto& name : joint_names()) os << ',' << name;
  os << ",Average\n";

  auto emit = [&](const std::string& label, const JointMetrics& m) {
    os << label << ",RMSE_deg";
    for (Index j = 0; j < m.rmse_deg.size(); ++j) {
      os << ',';
      append_num(os, m.rmse_deg(j));
    }
    os << ',';
    append_num(os, m.avg_rmse);
    os << '\n';
    os << label << ",R2_pct";
    for (const auto& r2 : m.r2_pct) {
      os << ',';
      if (r2) append_num(os, *r2);
    }
    os << ',';
    if (m.avg_r2) append_num(os, *m.avg_r2);
    os << '\n';
  };

  for (const auto& f : folds) emit(f.fold_label, f.metrics);

  if (folds.size() > 1) {
    JointMetrics mean;
    mean.rmse_deg = Vector::Zero(folds[0].metrics.rmse_deg.size());
    std::vector<Scalar> r2_sum(folds[0].metrics.r2_pct.size(), 0);
    std::vector<int> r2_n(folds[0].metrics.r2_pct.size(), 0);
    for (const auto& f : folds) {
      mean.rmse_deg += f.metrics.rmse_deg;
      for (size_t j = 0; j < f.metrics.r2_pct.size(); ++j)
        if (f.metrics.r2_pct[j]) {
          r2_sum[j] += *f.metrics.r2_pct[j];
          ++r2_n[j];
        }
    }
    mean.rmse_deg /= Scalar(folds.size());
    mean.r2_pct.resize(r2_sum.size());
    Scalar all_r2 = 0;
    int all_n = 0;
    for (size_t j = 0; j < r2_sum.size(); ++j)
      if (r2_n[j]) {
        mean.r2_pct[j] = r2_sum[j] / r2_n[j];
        all_r2 += *mean.r2_pct[j];
        ++all_n;
      }
    mean.avg_rmse = mean.rmse_deg.mean();
    if (all_n) mean.avg_r2 = all_r2 / all_n;
    emit("mean", mean);
  }
}

void write_confusion_csv(std::ostream& os, const Confusion& c) {
  const int n = static_cast<int>(c.counts.rows());
  os << "true\\pred";
  for (int j = 0; j < n; ++j) os << ",c" << j;
  os << ",total,sensitivity_pct\n";
  for (int t = 0; t < n; ++t) {
    os << 'c' << t;
    for (int j = 0; j < n; ++j) os << ',' << c.counts(t, j);
    os << ',' << c.counts.row(t).sum() << ',';
    if (c.sensitivity_pct[t]) append_num(os, *c.sensitivity_pct[t]);
    os << '\n';
  }
  os << "accuracy_pct,";
  append_num(os, c.accuracy_pct);
  os << '\n';
}

void write_sweep_csv(std::ostream& os, const SweepReport& r) {
  os << "kind,param,rmse_plain,rmse_aug,r2_plain,r2_aug\n";
  for (const auto& c : r.cells) {
    os << c.kind << ',';
    append_num(os, c.param);
    os << ',';
    append_num(os, c.rmse_plain);
    os << ',';
    append_num(os, c.rmse_aug);
    os << ',';
    if (c.r2_plain) append_num(os, *c.r2_plain);
    os << ',';
    if (c.r2_aug) append_num(os, *c.r2_aug);
    os << '\n';
  }
  os << "perturbed_average,,";
  append_num(os, r.perturbed_avg_plain);
  os << ',';
  append_num(os, r.perturbed_avg_aug);
  os << ",,\n";
}

std::string report_json(const std::vector<FoldMetrics>& folds, std::uint64_t seed,
                        const std::string& scheme_name) {
  nlohmann::json j;
  j["scheme"] = scheme_name;
  j["seed"] = seed;
  j["joints"] = joint_names();
  auto& arr = j["folds"] = nlohmann::json::array();
  for (const auto& f : folds) {
    nlohmann::json jf;
    jf["fold"] = f.fold_label;
    jf["rmse_deg"] = std::vector<Scalar>(f.metrics.rmse_deg.data(),
                                         f.metrics.rmse_deg.data() + f.metrics.rmse_deg.size());
    auto& r2 = jf["r2_pct"] = nlohmann::json::array();
    for (const auto& v : f.metrics.r2_pct) {
      if (v)
        r2.push_back(*v);
      else
        r2.push_back(nullptr);
    }
    jf["avg_rmse_deg"] = f.metrics.avg_rmse;
    if (f.metrics.avg_r2) jf["avg_r2_pct"] = *f.metrics.avg_r2;
    arr.push_back(jf);
  }
  return j.dump(2);
}

}  // namespace glove::eval
