// glove: one entry point for the whole pipeline — synthetic data, training,
// augmentation pretraining, classification heads, evaluation, robustness
// sweeps, offline inference, and the streaming server.
//
// Exit codes: 0 success, 1 runtime failure (one "error: <category>: ..." line
// on stderr), 2 usage.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "glove/augment.hpp"
#include "glove/config.hpp"
#include "glove/core.hpp"
#include "glove/dataset.hpp"
#include "glove/eval.hpp"
#include "glove/heads.hpp"
#include "glove/model.hpp"
#include "glove/stream.hpp"
#include "glove/synth.hpp"

namespace fs = std::filesystem;
using namespace glove;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop.store(true); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw GloveError(ErrorCategory::io, "cannot create directory " + dir);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw GloveError(ErrorCategory::io, "cannot write " + path);
  os << text;
}

std::vector<dataset::DatasetFile> read_files(const std::vector<std::string>& paths) {
  std::vector<dataset::DatasetFile> files;
  files.reserve(paths.size());
  for (const auto& p : paths) files.push_back(dataset::read_dataset(p));
  return files;
}

eval::WindowingOptions window_options(const config::RunConfig& cfg, bool normalize) {
  eval::WindowingOptions w;
  w.length = cfg.model.window_length;
  w.stride = cfg.windows.stride;
  w.baseline = cfg.windows.baseline;
  w.baseline_window = cfg.windows.baseline_window;
  w.normalize = normalize;
  return w;
}

model::TrainOptions train_options(const config::RunConfig& cfg) {
  model::TrainOptions opt;
  opt.epochs = cfg.train.epochs;
  opt.batch_size = cfg.train.batch_size;
  opt.adam.lr = cfg.train.lr;
  opt.smooth_l1_beta = cfg.train.beta;
  opt.seed = cfg.train.seed;
  opt.log_every_epochs = 5;
  return opt;
}

json train_report_json(const model::TrainReport& r, Index n_windows) {
  json j;
  j["epoch_loss"] = r.epoch_loss;
  j["epoch_reg_loss"] = r.epoch_reg_loss;
  j["epoch_flag_loss"] = r.epoch_flag_loss;
  j["seed"] = r.seed;
  j["epochs"] = r.epochs;
  j["aborted_epoch"] = r.aborted_epoch;
  j["windows"] = n_windows;
  return j;
}

std::string two_digits(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

// ---------------------------------------------------------------------------

void run_synth_gen(const config::RunConfig& cfg, const std::string& out, int subjects,
                   int sessions) {
  if (subjects < 1 || sessions < 1)
    throw GloveError(ErrorCategory::usage, "--subjects and --sessions must be >= 1");
  ensure_dir(out);
  config::write_resolved(cfg, out);

  synth::GaugeModel gauge;
  gauge.noise_std = cfg.synth.noise_std;
  gauge.drift_per_s = cfg.synth.drift_per_s;
  const Matrix coupling = synth::standard_coupling();

  for (int s = 0; s < subjects; ++s) {
    for (int e = 0; e < sessions; ++e) {
      const std::string subject = subjects == 1 ? cfg.synth.subject : "synth" + two_digits(s + 1);
      const std::string session = sessions == 1 ? cfg.synth.session : "s" + two_digits(e + 1);
      const std::uint64_t seed =
          cfg.synth.seed ^ (0x9e3779b97f4a7c15ull * (std::uint64_t(s) * 97 + e + 1));

      Matrix traj = synth::generate_trajectory(seed, cfg.synth.duration_s, cfg.synth.smoothness);
      synth::SimResult sim =
          synth::simulate_sensors(traj, gauge, coupling, seed ^ 0x5bf0a8b1ull,
                                  cfg.synth.imu_noise_deg);

      dataset::DatasetFile df;
      df.header.subject = subject;
      df.header.session = session;
      df.frames = std::move(sim.frames);
      df.angles = std::move(sim.angles);
      const std::string path = (fs::path(out) / (subject + "_" + session + ".glove")).string();
      dataset::write_dataset(df, path);
      std::printf("wrote %s: %lld frames, %ld clipped strain samples\n", path.c_str(),
                  static_cast<long long>(df.size()), sim.clipped);
    }
  }
}

void run_train(const config::RunConfig& cfg, const std::vector<std::string>& data,
               const std::string& out, bool multitask) {
  auto files = read_files(data);
  auto prep = eval::prepare_windows(files, window_options(cfg, /*normalize=*/true));
  std::printf("%lld windows from %zu file(s)\n", static_cast<long long>(prep.set.size()),
              files.size());

  model::ModelConfig mc = cfg.model;
  model::TrainOptions opt = train_options(cfg);
  ensure_dir(out);
  config::write_resolved(cfg, out);

  model::ModelBundle bundle;
  std::string name;
  if (multitask) {
    mc.multitask_flags_dim = 3;
    auto aug = augment::build_augmented_dataset(prep.set, cfg.augment.seed, cfg.augment.sigma,
                                                cfg.augment.scale_lo, cfg.augment.scale_hi);
    std::printf("augmented set: %lld windows\n", static_cast<long long>(aug.size()));
    bundle = augment::multitask_train(aug, mc, prep.stats, opt);
    name = "model_aug.gpml";
  } else {
    mc.multitask_flags_dim = 0;
    bundle = model::train(prep.set, mc, prep.stats, opt);
    name = "model.gpml";
  }

  const std::string ckpt = (fs::path(out) / name).string();
  model::save_bundle(bundle, ckpt);
  write_text((fs::path(out) / "train_report.json").string(),
             train_report_json(bundle.report, prep.set.size()).dump(2) + "\n");
  if (bundle.report.aborted_epoch >= 0)
    std::fprintf(stderr, "warning: training rolled back at epoch %d (non-finite loss)\n",
                 bundle.report.aborted_epoch);
  std::printf("saved %s (final loss %.6g)\n", ckpt.c_str(),
              bundle.report.epoch_loss.empty() ? 0.0 : bundle.report.epoch_loss.back());
}

void run_train_head(const config::RunConfig& cfg, const std::vector<std::string>& data,
                    const std::string& core_path, const std::string& out) {
  auto files = read_files(data);
  auto prep = eval::prepare_windows(files, window_options(cfg, /*normalize=*/false));

  heads::HeadSamples samples;
  for (Index i = 0; i < prep.set.size(); ++i) {
    if (prep.class_of[i] < 0) continue;
    samples.left.push_back(prep.set.X[i]);
    samples.labels.push_back(prep.class_of[i]);
  }
  if (samples.labels.empty())
    throw GloveError(ErrorCategory::config, "train-head: no labeled windows in the input");
  std::printf("%zu labeled windows\n", samples.labels.size());

  auto core = std::make_shared<model::ModelBundle>(model::load_bundle(core_path));
  heads::HeadConfig hc;
  hc.num_classes = cfg.head.num_classes;
  hc.hidden = cfg.head.hidden;
  hc.seed = cfg.head.seed;
  heads::Classifier clf = heads::attach_head(core, hc);

  heads::HeadTrainOptions hopt;
  hopt.epochs = cfg.head.epochs;
  hopt.batch_size = cfg.head.batch_size;
  hopt.adam.lr = cfg.head.lr;
  hopt.seed = cfg.head.seed;
  heads::HeadTrainReport report = heads::train_head(clf, samples, hopt);

  std::vector<int> pred;
  pred.reserve(samples.labels.size());
  for (const auto& w : samples.left) pred.push_back(clf.classify(w, nullptr, 0).cls);
  eval::Confusion c = eval::sensitivity_and_confusion(pred, samples.labels, hc.num_classes);

  ensure_dir(out);
  config::write_resolved(cfg, out);
  heads::save_head(clf, (fs::path(out) / "head.gphd").string());
  {
    std::ofstream os((fs::path(out) / "confusion.csv").string(), std::ios::trunc);
    eval::write_confusion_csv(os, c);
  }
  json j;
  j["epoch_loss"] = report.epoch_loss;
  j["degenerate_labels"] = report.degenerate_labels;
  j["core_hash_before"] = report.core_hash_before;
  j["core_hash_after"] = report.core_hash_after;
  j["train_accuracy_pct"] = c.accuracy_pct;
  write_text((fs::path(out) / "head_report.json").string(), j.dump(2) + "\n");
  std::printf("saved head.gphd (train accuracy %.2f%%, core hash stable)\n", c.accuracy_pct);
}

eval::FoldPlan make_plan(const config::RunConfig& cfg, const eval::PreparedData& prep) {
  switch (cfg.scheme()) {
    case eval::Scheme::kfold:
      return eval::split_kfold(prep.set.size(), cfg.eval.folds, cfg.eval.seed);
    case eval::Scheme::leave_one_subject_out:
      return eval::split_by_group(prep.subject_of, eval::Scheme::leave_one_subject_out);
    case eval::Scheme::leave_one_session_out: {
      std::vector<std::string> tag(prep.session_of.size());
      for (size_t i = 0; i < tag.size(); ++i)
        tag[i] = prep.subject_of[i] + "/" + prep.session_of[i];
      return eval::split_by_group(tag, eval::Scheme::leave_one_session_out);
    }
  }
  throw GloveError(ErrorCategory::config, "unreachable scheme");
}

void run_eval(const config::RunConfig& cfg, const std::vector<std::string>& data,
              const std::string& bundle_path, const std::string& out, bool retrain) {
  auto files = read_files(data);
  // Retrained folds consume corpus-normalized windows; a fixed bundle applies
  // its own embedded stats to raw ones.
  auto prep = eval::prepare_windows(files, window_options(cfg, /*normalize=*/retrain));
  if (!retrain && bundle_path.empty())
    throw GloveError(ErrorCategory::usage, "eval needs --bundle (or --retrain)");

  model::ModelBundle fixed;
  if (!bundle_path.empty()) fixed = model::load_bundle(bundle_path);

  eval::FoldPlan plan = make_plan(cfg, prep);
  std::vector<eval::FoldMetrics> folds;
  for (int f = 0; f < plan.n_folds; ++f) {
    const std::vector<int> test = plan.test_indices(f);
    if (test.empty()) continue;
    std::vector<Matrix> xs;
    Matrix truth(static_cast<Index>(test.size()), kJointCount);
    for (size_t i = 0; i < test.size(); ++i) {
      xs.push_back(prep.set.X[test[i]]);
      truth.row(static_cast<Index>(i)) = prep.set.Y.row(test[i]);
    }

    Matrix predicted;
    if (retrain) {
      model::WindowSet tr;
      for (int i : plan.train_indices(f)) {
        tr.X.push_back(prep.set.X[i]);
      }
      const auto train_idx = plan.train_indices(f);
      tr.Y.resize(static_cast<Index>(train_idx.size()), kJointCount);
      for (size_t i = 0; i < train_idx.size(); ++i)
        tr.Y.row(static_cast<Index>(i)) = prep.set.Y.row(train_idx[i]);
      model::ModelConfig mc = cfg.model;
      mc.multitask_flags_dim = 0;
      model::ModelBundle bf = model::train(tr, mc, prep.stats, train_options(cfg));
      predicted = model::predict_windows(bf, xs, /*already_normalized=*/true);
    } else {
      predicted = model::predict_windows(fixed, xs, /*already_normalized=*/false);
    }

    eval::FoldMetrics fm;
    fm.fold_label = plan.fold_tag.empty() ? "fold" + std::to_string(f) : plan.fold_tag[f];
    fm.metrics = eval::joint_metrics(predicted, truth);
    std::printf("%s: avg RMSE %.4f deg\n", fm.fold_label.c_str(), fm.metrics.avg_rmse);
    folds.push_back(std::move(fm));
  }

  ensure_dir(out);
  config::write_resolved(cfg, out);
  {
    std::ofstream os((fs::path(out) / "metrics.csv").string(), std::ios::trunc);
    eval::write_joint_metrics_csv(os, folds);
  }
  write_text((fs::path(out) / "report.json").string(),
             eval::report_json(folds, cfg.eval.seed, cfg.eval.scheme));
  Scalar avg = 0;
  for (const auto& fm : folds) avg += fm.metrics.avg_rmse;
  std::printf("overall avg RMSE %.4f deg over %zu folds\n", avg / folds.size(), folds.size());
}

void run_sweep(const config::RunConfig& cfg, const std::vector<std::string>& data,
               const std::string& plain_path, const std::string& aug_path,
               const std::string& out) {
  auto files = read_files(data);
  auto prep = eval::prepare_windows(files, window_options(cfg, /*normalize=*/true));
  model::ModelBundle plain = model::load_bundle(plain_path);
  model::ModelBundle aug = model::load_bundle(aug_path);
  if ((plain.stats.mean - prep.stats.mean).cwiseAbs().maxCoeff() > 1e-9 ||
      (aug.stats.mean - prep.stats.mean).cwiseAbs().maxCoeff() > 1e-9)
    std::fprintf(stderr,
                 "warning: bundle normalization differs from this corpus; sweep assumes the "
                 "bundles were trained on the same recordings\n");

  eval::SweepReport report = eval::robustness_sweep(plain, aug, prep.set, cfg.eval.seed);
  ensure_dir(out);
  config::write_resolved(cfg, out);
  {
    std::ofstream os((fs::path(out) / "sweep.csv").string(), std::ios::trunc);
    eval::write_sweep_csv(os, report);
  }
  std::printf("perturbed-average RMSE: plain %.4f, augmented %.4f (ratio %.3f)\n",
              report.perturbed_avg_plain, report.perturbed_avg_aug,
              report.perturbed_avg_aug / report.perturbed_avg_plain);
}

void run_infer(const config::RunConfig& cfg, const std::string& data,
               const std::string& bundle_path, const std::string& out) {
  dataset::DatasetFile df = dataset::read_dataset(data);
  model::ModelBundle bundle = model::load_bundle(bundle_path);
  Matrix chan = dataset::frames_to_channel_rows(df.frames, cfg.windows.baseline,
                                                cfg.windows.baseline_window);
  std::vector<double> lat;
  std::vector<Vector> preds = model::predict_stream(bundle, chan, &lat);

  ensure_dir(out);
  config::write_resolved(cfg, out);
  const std::string path = (fs::path(out) / "predictions.csv").string();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw GloveError(ErrorCategory::io, "cannot write " + path);
  os << "t_ms";
  for (const auto& n : joint_names()) os << ',' << n;
  os << '\n';
  const int W = bundle.config.window_length;
  char buf[40];
  for (size_t i = 0; i < preds.size(); ++i) {
    os << df.frames[W - 1 + i].timestamp_ms;
    for (Index j = 0; j < preds[i].size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.9g", preds[i](j));
      os << ',' << buf;
    }
    os << '\n';
  }
  stream::LatencyStats ls = stream::summarize_latency(lat);
  std::printf("%zu predictions -> %s (latency p50 %.0f us, p95 %.0f us, max %.0f us)\n",
              preds.size(), path.c_str(), ls.p50_us, ls.p95_us, ls.max_us);
}

void run_serve(const config::RunConfig& cfg, const std::string& bundle_path,
               const std::string& head_path, bool stdio) {
  auto bundle = std::make_shared<model::ModelBundle>(model::load_bundle(bundle_path));

  stream::ServeOptions so;
  so.baseline = cfg.windows.baseline;
  so.baseline_window = cfg.windows.baseline_window;
  so.taps = cfg.stream.taps;
  so.tap_threshold = cfg.stream.tap_threshold;
  so.rest_samples = cfg.stream.rest_samples;
  so.right_hand = cfg.stream.right_hand;
  so.queue_capacity = static_cast<std::size_t>(cfg.stream.queue_capacity);
  so.policy = cfg.stream.drop_policy == "block" ? stream::DropPolicy::block
                                                : stream::DropPolicy::drop_oldest;

  std::unique_ptr<heads::Classifier> clf;
  if (!head_path.empty()) {
    clf = std::make_unique<heads::Classifier>(heads::load_head(head_path, bundle));
    so.classifier = clf.get();
  }

  stream::ServeStats st;
  if (stdio) {
    st = stream::serve_stream(std::cin, std::cout, *bundle, so);
  } else {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::fprintf(stderr, "listening on 127.0.0.1:%d\n", cfg.stream.port);
    st = stream::serve_tcp(cfg.stream.port, *bundle, so, &g_stop);
  }
  std::fprintf(stderr,
               "served %ld frames (%ld malformed, %ld dropped): %ld angle, %ld tap, %ld class "
               "events; latency p50 %.0f us\n",
               st.frames_in, st.malformed, st.dropped, st.angle_events, st.tap_events,
               st.class_events, st.latency.p50_us);
}

void run_replay(const std::string& data, Scalar rate) {
  stream::ReplayStats st = stream::replay(data, std::cout, rate);
  std::fprintf(stderr, "replayed %ld frames in %.2f s\n", st.frames, st.wall_s);
}

void run_taps(const config::RunConfig& cfg, const std::string& data) {
  dataset::DatasetFile df = dataset::read_dataset(data);
  if (df.size() == 0) throw GloveError(ErrorCategory::dataset_parse, "taps: empty dataset");
  std::vector<std::int64_t> ts;
  ts.reserve(df.frames.size());
  for (const auto& f : df.frames) ts.push_back(f.timestamp_ms);

  std::vector<signal::TapEvent> taps;
  for (int finger = 0; finger < 5; ++finger) {
    Vector series(df.size());
    const int ch = fingertip_channel(finger);
    for (Index i = 0; i < df.size(); ++i) series(i) = df.frames[i].hsy(ch);
    const Scalar rest = signal::rest_value(series, std::min<Index>(cfg.stream.rest_samples,
                                                                   series.size()));
    if (rest == 0) {
      std::fprintf(stderr, "finger %d: zero rest value, channel disabled\n", finger);
      continue;
    }
    auto events = signal::detect_taps(series, rest, ts,
                                      signal::finger_index(cfg.stream.right_hand, finger),
                                      cfg.stream.tap_threshold);
    taps.insert(taps.end(), events.begin(), events.end());
  }
  std::sort(taps.begin(), taps.end(), [](const auto& a, const auto& b) {
    return a.timestamp_ms != b.timestamp_ms ? a.timestamp_ms < b.timestamp_ms
                                            : a.finger_index < b.finger_index;
  });
  for (const auto& t : taps) {
    stream::EventRecord e;
    e.kind = stream::EventRecord::Kind::tap;
    e.t = t.timestamp_ms;
    e.finger = t.finger_index;
    std::cout << stream::event_to_line(e) << '\n';
  }
  std::fprintf(stderr, "%zu taps in %lld frames\n", taps.size(),
               static_cast<long long>(df.size()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smart-glove sensor stream toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "run", core_path, bundle_path, aug_path, head_path;
  std::vector<std::string> data;
  std::string one_data;

  config::RunConfig cfg;  // defaults; --config replaces, flags then override

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration JSON");
  };
  auto load_cfg = [&]() {
    if (!config_path.empty()) cfg = config::load_run_config(config_path);
  };

  // synth-gen ---------------------------------------------------------------
  auto* sg = app.add_subcommand("synth-gen", "generate synthetic glove recordings");
  int subjects = 1, sessions = 1;
  double sg_minutes = 0;
  std::uint64_t sg_seed = 0;
  add_config(sg);
  sg->add_option("--out", out_dir, "output directory")->required();
  sg->add_option("--subjects", subjects, "number of synthetic subjects");
  sg->add_option("--sessions", sessions, "sessions per subject");
  auto* sg_min = sg->add_option("--minutes", sg_minutes, "recording length per session");
  auto* sg_sd = sg->add_option("--seed", sg_seed, "world seed");
  sg->callback([&] {
    load_cfg();
    if (*sg_min) cfg.synth.duration_s = sg_minutes * 60.0;
    if (*sg_sd) cfg.synth.seed = sg_seed;
    cfg.validate();
    run_synth_gen(cfg, out_dir, subjects, sessions);
  });

  // train / pretrain-aug ----------------------------------------------------
  int ov_epochs = 0, ov_stride = 0, ov_hidden = 0, ov_batch = 0;
  std::uint64_t ov_seed = 0;
  auto add_train_flags = [&](CLI::App* sub) {
    add_config(sub);
    sub->add_option("--data", data, "dataset file (repeatable)")->required();
    sub->add_option("--out", out_dir, "run directory")->required();
    return std::tuple{sub->add_option("--epochs", ov_epochs, "training epochs"),
                      sub->add_option("--stride", ov_stride, "window stride"),
                      sub->add_option("--hidden", ov_hidden, "LSTM hidden size"),
                      sub->add_option("--batch", ov_batch, "batch size"),
                      sub->add_option("--seed", ov_seed, "training seed")};
  };
  auto apply_train_flags = [&](auto& opts) {
    auto& [oe, os, oh, ob, osd] = opts;
    load_cfg();
    if (*oe) cfg.train.epochs = ov_epochs;
    if (*os) cfg.windows.stride = ov_stride;
    if (*oh) cfg.model.hidden_size = ov_hidden;
    if (*ob) cfg.train.batch_size = ov_batch;
    if (*osd) cfg.train.seed = ov_seed;
    cfg.validate();
  };

  auto* tr = app.add_subcommand("train", "train the pose regressor");
  auto tr_opts = add_train_flags(tr);
  tr->callback([&] {
    apply_train_flags(tr_opts);
    run_train(cfg, data, out_dir, /*multitask=*/false);
  });

  auto* pa = app.add_subcommand("pretrain-aug", "multitask training on the augmented dataset");
  auto pa_opts = add_train_flags(pa);
  pa->callback([&] {
    apply_train_flags(pa_opts);
    run_train(cfg, data, out_dir, /*multitask=*/true);
  });

  // train-head ----------------------------------------------------------------
  auto* th = app.add_subcommand("train-head", "train a classification head on a frozen core");
  int th_classes = 0, th_epochs = 0;
  add_config(th);
  th->add_option("--data", data, "labeled dataset file (repeatable)")->required();
  th->add_option("--core", core_path, "frozen core bundle (.gpml)")->required();
  th->add_option("--out", out_dir, "run directory")->required();
  auto* th_cl = th->add_option("--classes", th_classes, "number of classes");
  auto* th_ep = th->add_option("--epochs", th_epochs, "head training epochs");
  th->callback([&] {
    load_cfg();
    if (*th_cl) cfg.head.num_classes = th_classes;
    if (*th_ep) cfg.head.epochs = th_epochs;
    cfg.validate();
    run_train_head(cfg, data, core_path, out_dir);
  });

  // eval ----------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "cross-validated per-joint metrics");
  std::string ev_scheme;
  int ev_folds = 0, ev_stride = 0;
  bool ev_retrain = false;
  add_config(ev);
  ev->add_option("--data", data, "dataset file (repeatable)")->required();
  ev->add_option("--bundle", bundle_path, "saved bundle to evaluate");
  ev->add_option("--out", out_dir, "run directory")->required();
  auto* ev_sc = ev->add_option("--scheme", ev_scheme, "kfold | loso | loseo");
  auto* ev_fd = ev->add_option("--folds", ev_folds, "fold count for kfold");
  auto* ev_st = ev->add_option("--stride", ev_stride, "window stride");
  ev->add_flag("--retrain", ev_retrain, "train a fresh model per fold");
  ev->callback([&] {
    load_cfg();
    if (*ev_sc) cfg.eval.scheme = ev_scheme;
    if (*ev_fd) cfg.eval.folds = ev_folds;
    if (*ev_st) cfg.windows.stride = ev_stride;
    cfg.validate();
    run_eval(cfg, data, bundle_path, out_dir, ev_retrain);
  });

  // sweep -----------------------------------------------------------------------
  auto* sw = app.add_subcommand("sweep", "paired robustness sweep (plain vs augmented bundle)");
  add_config(sw);
  sw->add_option("--data", data, "dataset file (repeatable)")->required();
  sw->add_option("--bundle", bundle_path, "plain bundle")->required();
  sw->add_option("--bundle-aug", aug_path, "augmentation-pretrained bundle")->required();
  sw->add_option("--out", out_dir, "run directory")->required();
  sw->callback([&] {
    load_cfg();
    cfg.validate();
    run_sweep(cfg, data, bundle_path, aug_path, out_dir);
  });

  // infer -------------------------------------------------------------------
  auto* in = app.add_subcommand("infer", "offline sliding-window inference over a recording");
  add_config(in);
  in->add_option("--data", one_data, "dataset file")->required();
  in->add_option("--bundle", bundle_path, "saved bundle")->required();
  in->add_option("--out", out_dir, "run directory")->required();
  in->callback([&] {
    load_cfg();
    cfg.validate();
    run_infer(cfg, one_data, bundle_path, out_dir);
  });

  // serve ---------------------------------------------------------------------
  auto* se = app.add_subcommand("serve", "streaming inference over stdio or TCP");
  bool se_stdio = false, se_taps = false;
  int se_port = 0;
  add_config(se);
  se->add_option("--bundle", bundle_path, "saved bundle")->required();
  se->add_option("--head", head_path, "optional classification head (.gphd)");
  se->add_flag("--stdio", se_stdio, "serve stdin -> stdout instead of TCP");
  auto* se_pt = se->add_option("--port", se_port, "TCP port");
  auto* se_tp = se->add_flag("--taps", se_taps, "emit tap events");
  se->callback([&] {
    load_cfg();
    if (*se_pt) cfg.stream.port = se_port;
    if (*se_tp) cfg.stream.taps = true;
    cfg.validate();
    run_serve(cfg, bundle_path, head_path, se_stdio);
  });

  // replay ----------------------------------------------------------------------
  auto* rp = app.add_subcommand("replay", "pace a recording onto stdout as wire frames");
  double rp_rate = 1.0;
  rp->add_option("--data", one_data, "dataset file")->required();
  rp->add_option("--rate", rp_rate, "speed multiplier (0 = unpaced)");
  rp->callback([&] { run_replay(one_data, rp_rate); });

  // taps ------------------------------------------------------------------------
  auto* tp = app.add_subcommand("taps", "offline tap detection over a recording");
  double tp_threshold = 0;
  add_config(tp);
  tp->add_option("--data", one_data, "dataset file")->required();
  auto* tp_th = tp->add_option("--threshold", tp_threshold, "squared relative-change threshold");
  tp->callback([&] {
    load_cfg();
    if (*tp_th) cfg.stream.tap_threshold = tp_threshold;
    cfg.validate();
    run_taps(cfg, one_data);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const GloveError& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.category_name(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
