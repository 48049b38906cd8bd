// End-to-end acceptance checks. Each numbered criterion prints exactly one
// line — PASS/FAIL plus the measured numbers, or SKIP with the reason — and
// the process exits nonzero if anything failed. Heavier fixtures (the
// 72k-frame synthetic corpus) are built once and shared.
//
// Run it directly or through ctest; `--only 3,4` restricts to a subset while
// debugging.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "glove/augment.hpp"
#include "glove/config.hpp"
#include "glove/dataset.hpp"
#include "glove/eval.hpp"
#include "glove/heads.hpp"
#include "glove/model.hpp"
#include "glove/signal.hpp"
#include "glove/stream.hpp"
#include "glove/synth.hpp"
#include "support/oracles.hpp"

using namespace glove;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

bool g_any_fail = false;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) g_any_fail = true;
}

void report_skip(int id, const std::string& detail) {
  std::printf("SKIP criterion %d: %s\n", id, detail.c_str());
  std::fflush(stdout);
}

double secs(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

fs::path scratch_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "glove_acceptance";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

// ---------------------------------------------------------------------------
// Shared fixture: one synthetic subject, 60 one-minute sessions (72000 frames
// total), the same world the synth-gen CLI produces for seed 7. Sessions are
// independent trajectory draws, so holding out the last 12 gives genuinely
// unseen motion rather than later samples of a memorized curve.

constexpr std::uint64_t kWorldSeed = 7;
constexpr int kTrainSessions = 48;
constexpr int kTestSessions = 12;
constexpr Scalar kSessionSeconds = 60.0;

struct Corpus {
  std::vector<dataset::DatasetFile> train, test;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus out;
    synth::GaugeModel gauge;
    gauge.noise_std = 0.003;
    const Matrix coupling = synth::standard_coupling();
    for (int e = 0; e < kTrainSessions + kTestSessions; ++e) {
      const std::uint64_t seed = kWorldSeed ^ (0x9e3779b97f4a7c15ull * std::uint64_t(e + 1));
      Matrix traj = synth::generate_trajectory(seed, kSessionSeconds, 1.0);
      synth::SimResult sim =
          synth::simulate_sensors(traj, gauge, coupling, seed ^ 0x5bf0a8b1ull, 0.5);
      dataset::DatasetFile df;
      df.header.subject = "synth01";
      df.header.session = fmt("s%02d", e + 1);
      df.frames = std::move(sim.frames);
      df.angles = std::move(sim.angles);
      (e < kTrainSessions ? out.train : out.test).push_back(std::move(df));
    }
    return out;
  }();
  return c;
}

model::ModelConfig canonical_config() {
  model::ModelConfig cfg;  // 28 channels, window 40, H 64, 2 layers, fc 128
  return cfg;
}

// Normalize raw prepared windows with another corpus' statistics.
std::vector<Matrix> normalize_all(const std::vector<Matrix>& raw,
                                  const signal::ChannelStats& stats) {
  std::vector<Matrix> out;
  out.reserve(raw.size());
  for (const auto& w : raw) out.push_back(signal::normalize(w, stats));
  return out;
}

// ---------------------------------------------------------------------------
// 1. Gradient fidelity on the full model.

void criterion_1() {
  const auto t0 = Clock::now();
  model::ModelConfig cfg = canonical_config();
  cfg.hidden_size = 8;
  cfg.multitask_flags_dim = 3;
  model::PoseModel net(cfg);
  net.init(1);

  nn::Rng rng(2);
  std::normal_distribution<Scalar> g(0.0, 1.0);
  const Index B = 2;
  std::vector<Matrix> xs(cfg.window_length);
  for (auto& x : xs) {
    x.resize(cfg.input_channels, B);
    for (Index i = 0; i < x.size(); ++i) x(i) = g(rng);
  }
  Matrix targets(cfg.output_dim, B), ftargets(cfg.multitask_flags_dim, B);
  for (Index i = 0; i < targets.size(); ++i) targets(i) = g(rng);
  for (Index i = 0; i < ftargets.size(); ++i) ftargets(i) = (g(rng) > 0) ? 1.0 : 0.0;

  auto loss = [&] {
    Matrix flags;
    Matrix pred = net.forward_batch(xs, &flags);
    return nn::smooth_l1(pred, targets, 0.5) + nn::bce_with_logits(flags, ftargets);
  };
  auto compute = [&] {
    Matrix flags;
    Matrix pred = net.forward_batch(xs, &flags);
    Matrix d_angles, d_flags;
    nn::smooth_l1_grad(pred, targets, d_angles, 0.5);
    nn::bce_with_logits_grad(flags, ftargets, d_flags);
    net.backward_batch(d_angles, &d_flags);
  };
  auto res = nn::grad_check(net.params(), loss, compute, 1e-5, 250, 3);
  const double dt = secs(t0);
  const bool ok = res.coords_checked >= 200 && res.max_rel_error < 1e-4 && dt < 60.0;
  report(1, ok,
         fmt("analytic vs central-difference gradients: max rel err %.3g over %d coords "
             "(tol 1e-4) in %.1f s",
             res.max_rel_error, int(res.coords_checked), dt));
}

// ---------------------------------------------------------------------------
// 2. Smooth-L1 closed form, beta = 0.5.

void criterion_2() {
  const Scalar beta = 0.5;
  auto at = [&](Scalar d) {
    Matrix pred(1, 1), truth(1, 1);
    pred(0, 0) = d;
    truth(0, 0) = 0.0;
    return nn::smooth_l1(pred, truth, beta);
  };
  const bool values_ok =
      at(0.0) == 0.0 && at(0.25) == 0.0625 && at(0.5) == 0.25 && at(1.0) == 0.75;
  // Knee continuity: the quadratic and linear closed forms agree at |d| = beta.
  const Scalar quad = 0.5 * beta * beta / beta;
  const Scalar lin = beta - 0.5 * beta;
  const bool knee_ok = std::abs(quad - lin) <= 1e-12 && std::abs(at(beta) - quad) <= 1e-12;
  report(2, values_ok && knee_ok,
         fmt("values at d in {0, 0.25, 0.5, 1.0} = {%g, %g, %g, %g} (exact), knee gap %.2g",
             at(0.0), at(0.25), at(0.5), at(1.0), std::abs(quad - lin)));
}

// ---------------------------------------------------------------------------
// 3. Synthetic end-to-end: trained model vs ridge on flattened windows.

struct PreparedSplit {
  eval::PreparedData train;       // normalized windows + pooled stats
  eval::PreparedData test_raw;    // raw windows (normalized per consumer)
};

const PreparedSplit& split_for(int stride) {
  static std::map<int, PreparedSplit> cache;
  auto it = cache.find(stride);
  if (it == cache.end()) {
    eval::WindowingOptions w;
    w.stride = stride;
    PreparedSplit s;
    s.train = eval::prepare_windows(corpus().train, w);
    w.normalize = false;
    s.test_raw = eval::prepare_windows(corpus().test, w);
    it = cache.emplace(stride, std::move(s)).first;
  }
  return it->second;
}

// Training protocol pinned for the acceptance run.
constexpr int kC3Stride = 5;
constexpr int kC3Epochs = 30;
constexpr Scalar kC3Lr = 1e-3;

model::TrainOptions c3_options(std::uint64_t seed) {
  model::TrainOptions opt;
  opt.epochs = kC3Epochs;
  opt.batch_size = 64;
  opt.adam.lr = kC3Lr;
  opt.seed = seed;
  return opt;
}

void criterion_3() {
  const auto t0 = Clock::now();
  const auto& s = split_for(kC3Stride);

  auto bundle = model::train(s.train.set, canonical_config(), s.train.stats, c3_options(1));
  const double train_s = secs(t0);

  Matrix pred = model::predict_windows(bundle, s.test_raw.set.X, /*already_normalized=*/false);
  const auto net_m = eval::joint_metrics(pred, s.test_raw.set.Y);

  // Ridge baseline on the same flattened, normalized windows; take the best
  // lambda on the grid so the comparison is against a tuned baseline.
  Matrix Xtr = oracle::flatten_windows(s.train.set.X);
  Matrix Xte = oracle::flatten_windows(normalize_all(s.test_raw.set.X, s.train.stats));
  Scalar ridge_best = std::numeric_limits<Scalar>::max();
  for (Scalar lambda : {0.1, 1.0, 10.0, 100.0}) {
    auto r = oracle::fit_ridge(Xtr, s.train.set.Y, lambda);
    ridge_best = std::min(ridge_best,
                          eval::joint_metrics(r.predict(Xte), s.test_raw.set.Y).avg_rmse);
  }

  model::save_bundle(bundle, (scratch_dir() / "c3_model.gpml").string());
  const double dt = secs(t0);
  const bool ok = net_m.avg_rmse < ridge_best && net_m.avg_rmse <= 5.0 && dt < 30 * 60.0;
  report(3, ok,
         fmt("held-out avg RMSE %.2f deg (<= 5 required) vs tuned ridge %.2f deg; "
             "%lld train windows, %d epochs in %.0f s (train %.0f s)",
             net_m.avg_rmse, ridge_best, static_cast<long long>(s.train.set.size()),
             kC3Epochs, dt, train_s));
}

// ---------------------------------------------------------------------------
// 4. Augmentation benefit under the perturbation sweep, 3 seeds.

void criterion_4() {
  const auto t0 = Clock::now();
  const int stride = 20;
  const auto& s = split_for(stride);
  auto test_norm = s.test_raw.set;
  test_norm.X = normalize_all(s.test_raw.set.X, s.train.stats);

  model::TrainOptions opt = c3_options(1);
  opt.epochs = 10;

  Scalar sum_plain = 0, sum_aug = 0;
  std::vector<Scalar> ratios;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    opt.seed = seed;
    auto plain = model::train(s.train.set, canonical_config(), s.train.stats, opt);

    auto aug_set = augment::build_augmented_dataset(s.train.set, seed);
    auto aug = augment::multitask_train(aug_set, canonical_config(), s.train.stats, opt);

    auto rep = eval::robustness_sweep(plain, aug, test_norm, seed);
    sum_plain += rep.perturbed_avg_plain;
    sum_aug += rep.perturbed_avg_aug;
    ratios.push_back(rep.perturbed_avg_aug / rep.perturbed_avg_plain);
  }
  const Scalar ratio = sum_aug / sum_plain;
  report(4, ratio <= 0.85,
         fmt("perturbed-average RMSE, multitask/plain = %.3f over 3 seeds "
             "(per-seed %.3f/%.3f/%.3f; <= 0.85 required) in %.0f s",
             ratio, ratios[0], ratios[1], ratios[2], secs(t0)));
}

// ---------------------------------------------------------------------------
// 5. Augmented dataset bookkeeping.

void criterion_5() {
  bool ok = true;
  std::string sizes;
  for (Index n : {Index(1), Index(10), Index(1000)}) {
    model::WindowSet d;
    nn::Rng rng(n);
    std::normal_distribution<Scalar> g(0.0, 1.0);
    d.Y.resize(n, kJointCount);
    for (Index i = 0; i < n; ++i) {
      Matrix w(6, 4);
      for (Index k = 0; k < w.size(); ++k) w(k) = g(rng);
      d.X.push_back(w);
      for (Index j = 0; j < kJointCount; ++j) d.Y(i, j) = g(rng);
    }
    auto a = augment::build_augmented_dataset(d, 9);
    long counts[4] = {0, 0, 0, 0};
    const Vector patterns[4] = {Vector::Zero(3), Vector::Unit(3, 0), Vector::Unit(3, 1),
                                Vector::Unit(3, 2)};
    for (Index i = 0; i < a.size(); ++i)
      for (int p = 0; p < 4; ++p)
        if ((a.F.row(i).transpose() - patterns[p]).cwiseAbs().maxCoeff() == 0.0) ++counts[p];
    ok = ok && a.size() == 4 * n && counts[0] == n && counts[1] == n && counts[2] == n &&
         counts[3] == n;
    sizes += fmt("%s|D|=%lld->4|D|=%lld", sizes.empty() ? "" : ", ",
                 static_cast<long long>(n), static_cast<long long>(a.size()));
  }
  report(5, ok, sizes + "; per-flag-pattern counts exactly |D| each");
}

// ---------------------------------------------------------------------------
// 6. Tap detection vs the brute-force rising-edge oracle.

void criterion_6() {
  std::mt19937_64 rng(60);
  std::uniform_real_distribution<Scalar> rest_d(0.5, 2.0);
  std::uniform_int_distribution<int> len_d(60, 200);
  const Scalar thr = signal::kDefaultTapThreshold;

  long trains = 0, taps = 0, mismatches = 0;
  for (int t = 0; t < 10000; ++t) {
    const Scalar rest = rest_d(rng);
    Vector v = oracle::random_pulse_train(rng, rest, thr, len_d(rng));
    auto got = signal::detect_tap_indices(v, rest, thr);
    auto want = oracle::brute_force_tap_indices(v, rest, thr);
    if (got.size() != want.size() || !std::equal(got.begin(), got.end(), want.begin()))
      ++mismatches;
    taps += static_cast<long>(want.size());
    ++trains;
  }

  // Isolated one-sample blips (never two consecutive above-threshold samples)
  // must never fire, however large the excursion.
  long blip_taps = 0;
  for (int t = 0; t < 2000; ++t) {
    const Scalar rest = rest_d(rng);
    Vector v = Vector::Constant(len_d(rng), rest);
    for (Index i = 4; i + 4 < v.size(); i += 3 + static_cast<Index>(rng() % 5))
      v(i) = rest * (2.0 + Scalar(rng() % 100));
    blip_taps += static_cast<long>(signal::detect_tap_indices(v, rest, thr).size());
  }

  report(6, mismatches == 0 && blip_taps == 0,
         fmt("%ld pulse trains, %ld oracle taps, %ld index mismatches; "
             "%ld taps on single-sample blips (0 required)",
             trains, taps, mismatches, blip_taps));
}

// ---------------------------------------------------------------------------
// 7. Baseline correction closed forms.

void criterion_7() {
  const int n = 400;
  signal::BaselineCorrector bc(n);
  Scalar worst_const = 0;
  for (int i = 0; i < 600; ++i) {
    signal::SensorFrame f;
    f.hsy.setConstant(5.3);
    worst_const = std::max(worst_const, std::abs(bc.push(f).hsy(0)));
  }

  signal::BaselineCorrector bc2(n);
  const Scalar a = 0.01;
  Scalar worst_ramp = 0;
  for (int i = 0; i < 600; ++i) {
    signal::SensorFrame f;
    f.hsy.setConstant(a * i);
    const Scalar corrected = bc2.push(f).hsy(0);
    if (i >= n - 1) worst_ramp = std::max(worst_ramp, std::abs(corrected - a * (n - 1) / 2));
  }
  report(7, worst_const == 0.0 && worst_ramp <= 1e-9,
         fmt("constant input residual %g (exact 0 required); ramp deviation from a(n-1)/2 "
             "= %.2g (tol 1e-9, n=400)",
             worst_const, worst_ramp));
}

// ---------------------------------------------------------------------------
// 8. Frozen-core head transfer on 34 synthetic grasp clusters.

void criterion_8() {
  const auto t0 = Clock::now();

  // A small trained pose core; heads only ever see its frozen 22-dim output.
  model::ModelConfig core_cfg = canonical_config();
  core_cfg.hidden_size = 16;
  core_cfg.fc1_width = 64;
  eval::WindowingOptions w;
  w.stride = 40;
  w.baseline = false;  // static grasp windows carry their information in DC levels
  auto prep = eval::prepare_windows(corpus().train, w);
  model::TrainOptions copt;
  copt.epochs = 5;
  copt.batch_size = 64;
  copt.adam.lr = 1e-3;
  auto core = std::make_shared<model::ModelBundle>(
      model::train(prep.set, core_cfg, prep.stats, copt));
  const std::uint64_t hash_before = core->net->param_hash();

  // 34 grasp centers in angle space, pairwise separation at least 3x the
  // intra-class spread (sigma = 2 deg/joint -> 3*sigma*sqrt(22) Euclidean).
  const int classes = 34, per_train = 30, per_test = 10;
  const Scalar sigma = 2.0;
  const Scalar min_sep = 3.0 * sigma * std::sqrt(Scalar(kJointCount));
  std::mt19937_64 rng(80);
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  const auto& limits = synth::joint_limits();
  std::vector<Vector> centers;
  Scalar measured_sep = std::numeric_limits<Scalar>::max();
  while (static_cast<int>(centers.size()) < classes) {
    Vector c(kJointCount);
    for (int j = 0; j < kJointCount; ++j) {
      const auto [lo, hi] = limits[j];
      c(j) = lo + 10.0 + (hi - lo - 20.0) * unit(rng);
    }
    bool far_enough = true;
    for (const auto& other : centers) far_enough = far_enough && (c - other).norm() >= min_sep;
    if (far_enough) centers.push_back(c);
  }
  for (size_t a = 0; a < centers.size(); ++a)
    for (size_t b = a + 1; b < centers.size(); ++b)
      measured_sep = std::min(measured_sep, (centers[a] - centers[b]).norm());

  synth::GaugeModel gauge;
  gauge.noise_std = 0.003;
  const Matrix coupling = synth::standard_coupling();
  std::normal_distribution<Scalar> jitter(0.0, sigma);
  heads::HeadSamples train_s, test_s;
  std::vector<Matrix> test_windows;
  std::vector<int> test_labels;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_train + per_test; ++i) {
      Vector pose = centers[c];
      for (int j = 0; j < kJointCount; ++j) {
        const auto [lo, hi] = limits[j];
        pose(j) = std::clamp(pose(j) + jitter(rng), lo, hi);
      }
      Matrix traj = pose.transpose().replicate(core_cfg.window_length, 1);
      auto sim = synth::simulate_sensors(traj, gauge, coupling, rng(), 0.5);
      Matrix window = signal::frames_to_channels(sim.frames);
      if (i < per_train) {
        train_s.left.push_back(window);
        train_s.labels.push_back(c);
      } else {
        test_windows.push_back(window);
        test_labels.push_back(c);
      }
    }
  }

  heads::HeadConfig hcfg;
  hcfg.num_classes = classes;
  hcfg.hidden = 64;
  hcfg.seed = 81;
  auto clf = heads::attach_head(core, hcfg);
  heads::HeadTrainOptions hopt;
  hopt.epochs = 300;
  hopt.batch_size = 64;
  hopt.adam.lr = 1e-2;
  hopt.seed = 82;
  auto rep = heads::train_head(clf, train_s, hopt);

  int correct = 0;
  for (size_t i = 0; i < test_windows.size(); ++i)
    if (clf.classify(test_windows[i]).cls == test_labels[i]) ++correct;
  const Scalar acc = 100.0 * correct / test_windows.size();
  const bool frozen = rep.core_hash_before == rep.core_hash_after &&
                      core->net->param_hash() == hash_before;
  report(8, acc >= 95.0 && frozen && measured_sep >= min_sep,
         fmt("34-class test accuracy %.2f%% (%d/%zu, >= 95%% required), min center "
             "separation %.1f deg (>= %.1f), core hash %s in %.0f s",
             acc, correct, test_windows.size(), measured_sep, min_sep,
             frozen ? "unchanged" : "CHANGED", secs(t0)));
}

// ---------------------------------------------------------------------------
// 9. Cross-validation partitions and metric identities.

void criterion_9() {
  std::mt19937_64 rng(90);
  long bad = 0;

  for (int trial = 0; trial < 500; ++trial) {
    const Index n = 10 + static_cast<Index>(rng() % 391);
    auto plan = eval::split_kfold(n, 10, rng());
    std::vector<int> seen(n, 0);
    const Index small = n / 10, large = small + (n % 10 ? 1 : 0);
    for (int f = 0; f < plan.n_folds; ++f) {
      auto test = plan.test_indices(f);
      auto train = plan.train_indices(f);
      if (Index(test.size() + train.size()) != n) ++bad;
      if (Index(test.size()) != small && Index(test.size()) != large) ++bad;
      for (int i : test) ++seen[i];
    }
    for (int c : seen)
      if (c != 1) ++bad;
  }

  for (int trial = 0; trial < 500; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 7);
    const Index n = m + static_cast<Index>(rng() % 200);
    std::vector<std::string> tag(n);
    for (Index i = 0; i < n; ++i)
      tag[i] = "subj" + std::to_string(i < m ? i : Index(rng() % m));
    auto plan = eval::split_by_group(tag, eval::Scheme::leave_one_subject_out);
    if (plan.n_folds != m) ++bad;
    std::vector<int> seen(n, 0);
    for (int f = 0; f < plan.n_folds; ++f)
      for (int i : plan.test_indices(f)) {
        ++seen[i];
        if (tag[i] != plan.fold_tag[f]) ++bad;
      }
    for (int c : seen)
      if (c != 1) ++bad;
  }

  // Metric identities on a dyadic fixture: entries are k/4 over 128 rows, so
  // every sum, mean, and squared deviation is exact in double and the
  // identities hold bit-for-bit, not merely to rounding.
  nn::Rng mrng(91);
  Matrix truth(128, kJointCount);
  for (Index i = 0; i < truth.size(); ++i)
    truth(i) = Scalar(static_cast<int>(mrng() % 65) - 32) / 4.0;
  auto perfect = eval::joint_metrics(truth, truth);
  bool metrics_ok = perfect.avg_rmse == 0.0;
  for (Index j = 0; j < kJointCount; ++j)
    metrics_ok = metrics_ok && perfect.rmse_deg(j) == 0.0 && perfect.r2_pct[j] &&
                 *perfect.r2_pct[j] == 100.0;

  Matrix mean_pred(truth.rows(), truth.cols());
  for (Index j = 0; j < truth.cols(); ++j) mean_pred.col(j).setConstant(truth.col(j).mean());
  auto constant = eval::joint_metrics(mean_pred, truth);
  for (Index j = 0; j < kJointCount; ++j)
    metrics_ok = metrics_ok && constant.r2_pct[j] && *constant.r2_pct[j] == 0.0;

  std::vector<int> pred(1000), lab(1000);
  for (auto& p : pred) p = static_cast<int>(mrng() % 7);
  for (auto& l : lab) l = static_cast<int>(mrng() % 7);
  auto conf = eval::sensitivity_and_confusion(pred, lab, 7);
  long trace = 0;
  for (int c = 0; c < 7; ++c) trace += conf.counts(c, c);
  metrics_ok = metrics_ok && conf.total == 1000 &&
               conf.accuracy_pct == 100.0 * Scalar(trace) / Scalar(conf.total);

  report(9, bad == 0 && metrics_ok,
         fmt("1000 partition trials (10-fold + leave-one-subject-out), %ld violations; "
             "perfect/constant/confusion metric identities %s",
             bad, metrics_ok ? "exact" : "BROKEN"));
}

// ---------------------------------------------------------------------------
// 10. Online/offline equivalence through replay -> serve.

void criterion_10() {
  const auto t0 = Clock::now();
  const Index frames_n = 10000;

  synth::GaugeModel gauge;
  gauge.noise_std = 0.003;
  Matrix traj = synth::generate_trajectory(1001, frames_n / kSampleRateHz, 1.0);
  auto sim = synth::simulate_sensors(traj, gauge, synth::standard_coupling(), 1002, 0.5);
  dataset::DatasetFile df;
  df.header.subject = "synth01";
  df.header.session = "s99";
  df.frames = std::move(sim.frames);
  df.angles = std::move(sim.angles);
  const std::string path = (scratch_dir() / "c10_stream.glove").string();
  dataset::write_dataset(df, path);
  // The CSV rounds to %.9g, so both paths must start from the re-read file,
  // not the in-memory frames.
  const dataset::DatasetFile reread = dataset::read_dataset(path);

  // Any well-formed bundle works here; equivalence is about the two transport
  // paths, not model quality.
  eval::WindowingOptions w;
  w.stride = 100;
  auto prep = eval::prepare_windows({reread}, w);
  model::TrainOptions opt;
  opt.epochs = 0;
  auto bundle = model::train(prep.set, canonical_config(), prep.stats, opt);

  std::ostringstream wire;
  auto rstats = stream::replay(path, wire, 0.0);

  std::istringstream in(wire.str());
  std::ostringstream out;
  stream::ServeOptions sopt;
  auto sstats = stream::serve_stream(in, out, bundle, sopt);

  Matrix chan = signal::frames_to_channels(signal::baseline_correct(reread.frames, 400));
  std::vector<Vector> offline = model::predict_stream(bundle, chan);

  std::istringstream events(out.str());
  std::string line;
  std::size_t idx = 0;
  Scalar worst = 0;
  bool counts_ok = rstats.frames == frames_n && sstats.frames_in == frames_n &&
                   sstats.malformed == 0;
  while (std::getline(events, line)) {
    if (line.empty()) continue;
    auto ev = stream::parse_event_line(line);
    if (ev.kind != stream::EventRecord::Kind::angles || idx >= offline.size()) {
      counts_ok = false;
      break;
    }
    worst = std::max(worst, (ev.angles - offline[idx]).cwiseAbs().maxCoeff());
    ++idx;
  }
  counts_ok = counts_ok && idx == offline.size() &&
              Index(offline.size()) == frames_n - canonical_config().window_length + 1;

  const double p50_ms = sstats.latency.p50_us / 1000.0;
  report(10, counts_ok && worst == 0.0 && p50_ms < 50.0,
         fmt("%zu angle events, serve(replay(D)) vs predict_stream max |diff| = %g "
             "(bit-identical required); median latency %.2f ms (< 50 ms) in %.0f s",
             idx, worst, p50_ms, secs(t0)));
}

// ---------------------------------------------------------------------------
// 11. Checkpoint round trip and corruption rejection.

ErrorCategory load_category(const std::string& path) {
  try {
    model::load_bundle(path);
  } catch (const GloveError& e) {
    return e.category();
  }
  return ErrorCategory::usage;  // "loaded fine" — caller treats as wrong
}

void criterion_11() {
  model::ModelConfig cfg;
  cfg.input_channels = 5;
  cfg.window_length = 6;
  cfg.hidden_size = 4;
  cfg.num_stacked_layers = 1;
  cfg.fc1_width = 8;

  model::WindowSet d;
  nn::Rng rng(110);
  std::normal_distribution<Scalar> g(0.0, 1.0);
  d.Y.resize(4, cfg.output_dim);
  for (Index i = 0; i < 4; ++i) {
    Matrix w(cfg.window_length, cfg.input_channels);
    for (Index k = 0; k < w.size(); ++k) w(k) = g(rng);
    d.X.push_back(w);
    for (Index j = 0; j < cfg.output_dim; ++j) d.Y(i, j) = g(rng);
  }
  signal::ChannelStats stats;
  stats.mean = Vector::Zero(cfg.input_channels);
  stats.std = Vector::Ones(cfg.input_channels);
  model::TrainOptions opt;
  opt.epochs = 0;
  auto bundle = model::train(d, cfg, stats, opt);

  const std::string path = (scratch_dir() / "c11_model.gpml").string();
  model::save_bundle(bundle, path);
  auto loaded = model::load_bundle(path);

  Scalar worst = 0;
  for (const auto& win : d.X)
    worst = std::max(worst, (bundle.net->forward_window(win) - loaded.net->forward_window(win))
                                .cwiseAbs()
                                .maxCoeff());

  std::ifstream is(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  is.close();
  auto corrupted = [&](auto mutate) {
    std::string copy = bytes;
    mutate(copy);
    const std::string cpath = (scratch_dir() / "c11_bad.gpml").string();
    std::ofstream os(cpath, std::ios::binary | std::ios::trunc);
    os.write(copy.data(), static_cast<std::streamsize>(copy.size()));
    os.close();
    return load_category(cpath);
  };

  const bool reject_ok =
      corrupted([](std::string& b) { b[0] = 'X'; }) == ErrorCategory::checkpoint_corrupt &&
      corrupted([](std::string& b) { b[4] = 99; }) == ErrorCategory::checkpoint_version &&
      corrupted([](std::string& b) { b[8] ^= 0x5a; }) == ErrorCategory::checkpoint_hash &&
      corrupted([](std::string& b) { b.resize(b.size() / 2); }) ==
          ErrorCategory::checkpoint_corrupt &&
      load_category((scratch_dir() / "c11_missing.gpml").string()) == ErrorCategory::io;

  report(11, worst == 0.0 && reject_ok,
         fmt("save->load->forward max |diff| = %g (bit-identical required); corrupt magic/"
             "version/hash/truncation/missing all rejected with the right category: %s",
             worst, reject_ok ? "yes" : "NO"));
}

// ---------------------------------------------------------------------------
// 12. Optional real-data track behind the dataset adapter.

void criterion_12() {
  const char* env = std::getenv("GLOVE_REAL_DATA");
  if (env == nullptr || !fs::is_directory(env)) {
    report_skip(12,
                "real dataset not present; point GLOVE_REAL_DATA at a directory of adapted "
                ".glove recordings to enable this track");
    return;
  }

  const auto t0 = Clock::now();
  std::vector<dataset::DatasetFile> files;
  for (const auto& entry : fs::directory_iterator(env))
    if (entry.path().extension() == ".glove")
      files.push_back(dataset::read_dataset(entry.path().string()));
  if (files.empty()) {
    report_skip(12, fmt("no .glove files under %s", env));
    return;
  }

  eval::WindowingOptions w;
  w.stride = 10;
  auto prep = eval::prepare_windows(files, w);

  // 10% subsample, then an intra-subject 10-fold run.
  model::WindowSet sub;
  for (Index i = 0; i < prep.set.size(); i += 10) sub.X.push_back(prep.set.X[i]);
  sub.Y.resize(sub.size(), kJointCount);
  for (Index i = 0, r = 0; i < prep.set.size(); i += 10, ++r) sub.Y.row(r) = prep.set.Y.row(i);

  auto plan = eval::split_kfold(sub.size(), 10, 12);
  std::vector<eval::FoldMetrics> folds;
  model::TrainOptions opt = c3_options(12);
  opt.epochs = 5;
  for (int f = 0; f < plan.n_folds; ++f) {
    model::WindowSet tr, te;
    for (int i : plan.train_indices(f)) tr.X.push_back(sub.X[i]);
    for (int i : plan.test_indices(f)) te.X.push_back(sub.X[i]);
    tr.Y.resize(tr.size(), kJointCount);
    te.Y.resize(te.size(), kJointCount);
    Index r = 0;
    for (int i : plan.train_indices(f)) tr.Y.row(r++) = sub.Y.row(i);
    r = 0;
    for (int i : plan.test_indices(f)) te.Y.row(r++) = sub.Y.row(i);
    auto bundle = model::train(tr, canonical_config(), prep.stats, opt);
    eval::FoldMetrics fm;
    fm.fold_label = "fold" + std::to_string(f);
    fm.metrics = eval::joint_metrics(
        model::predict_windows(bundle, te.X, /*already_normalized=*/true), te.Y);
    folds.push_back(std::move(fm));
  }
  const std::string csv = (scratch_dir() / "real_per_joint.csv").string();
  std::ofstream os(csv);
  eval::write_joint_metrics_csv(os, folds);
  report(12, true,
         fmt("10%% subsample, %lld windows, 10-fold run complete; per-joint RMSE/R2 -> %s "
             "(no numeric threshold) in %.0f s",
             static_cast<long long>(sub.size()), csv.c_str(), secs(t0)));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    }
  }

  struct Entry {
    int id;
    void (*fn)();
  };
  const Entry entries[] = {{1, criterion_1},  {2, criterion_2},  {3, criterion_3},
                           {4, criterion_4},  {5, criterion_5},  {6, criterion_6},
                           {7, criterion_7},  {8, criterion_8},  {9, criterion_9},
                           {10, criterion_10}, {11, criterion_11}, {12, criterion_12}};
  for (const auto& e : entries) {
    if (!only.empty() && !only.count(e.id)) continue;
    try {
      e.fn();
    } catch (const std::exception& ex) {
      report(e.id, false, fmt("unexpected exception: %s", ex.what()));
    }
  }
  return g_any_fail ? 1 : 0;
}
