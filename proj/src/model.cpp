#include "glove/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "blob_io.hpp"

namespace glove::model {

using nlohmann::json;

void ModelConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw GloveError(ErrorCategory::config, std::string(what) + " must be positive");
  };
  positive(input_channels, "input_channels");
  positive(window_length, "window_length");
  positive(hidden_size, "hidden_size");
  positive(num_stacked_layers, "num_stacked_layers");
  positive(fc1_width, "fc1_width");
  positive(output_dim, "output_dim");
  if (output_dim != kJointCount)
    throw GloveError(ErrorCategory::config, "output_dim must be 22 (joint angle vector)");
  if (multitask_flags_dim != 0 && multitask_flags_dim != 3)
    throw GloveError(ErrorCategory::config, "multitask_flags_dim must be 0 or 3");
}

std::string ModelConfig::to_json() const {
  json j;
  j["input_channels"] = input_channels;
  j["window_length"] = window_length;
  j["hidden_size"] = hidden_size;
  j["num_stacked_layers"] = num_stacked_layers;
  j["fc1_width"] = fc1_width;
  j["output_dim"] = output_dim;
  j["multitask_flags_dim"] = multitask_flags_dim;
  j["mean_pool"] = mean_pool;
  return j.dump();  // object keys are sorted: canonical
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw GloveError(ErrorCategory::config, std::string("bad model config JSON: ") + e.what());
  }
  ModelConfig c;
  try {
    j.at("input_channels").get_to(c.input_channels);
    j.at("window_length").get_to(c.window_length);
    j.at("hidden_size").get_to(c.hidden_size);
    j.at("num_stacked_layers").get_to(c.num_stacked_layers);
    j.at("fc1_width").get_to(c.fc1_width);
    j.at("output_dim").get_to(c.output_dim);
    j.at("multitask_flags_dim").get_to(c.multitask_flags_dim);
    j.at("mean_pool").get_to(c.mean_pool);
  } catch (const json::exception& e) {
    throw GloveError(ErrorCategory::config, std::string("model config missing field: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t ModelConfig::hash() const {
  const std::string s = to_json();
  return fnv1a64(s.data(), s.size());
}

// ---------------------------------------------------------------------------

PoseModel::PoseModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  lstm_.reserve(cfg_.num_stacked_layers);
  Index in = cfg_.input_channels;
  for (int l = 0; l < cfg_.num_stacked_layers; ++l) {
    lstm_.emplace_back("lstm" + std::to_string(l), in, cfg_.hidden_size);
    in = 2 * cfg_.hidden_size;
  }
  fc1_ = nn::FcLayer("fc1", in, cfg_.fc1_width);
  fc2_ = nn::FcLayer("fc2", cfg_.fc1_width, cfg_.output_dim);
  if (cfg_.multitask_flags_dim > 0)
    flags_ = nn::FcLayer("flags", cfg_.fc1_width, cfg_.multitask_flags_dim);
}

void PoseModel::init(std::uint64_t seed) {
  nn::Rng rng(seed);
  for (auto& l : lstm_) l.init(rng);
  fc1_.init(rng);
  fc2_.init(rng);
  if (cfg_.multitask_flags_dim > 0) flags_.init(rng);
}

Matrix PoseModel::forward_batch(const std::vector<Matrix>& xs, Matrix* flag_logits) {
  if (static_cast<int>(xs.size()) != cfg_.window_length)
    throw GloveError(ErrorCategory::shape_mismatch, "forward: sequence length != window_length");
  if (!xs.empty() && xs[0].rows() != cfg_.input_channels)
    throw GloveError(ErrorCategory::shape_mismatch, "forward: channel count != input_channels");
  last_T_ = static_cast<int>(xs.size());
  last_B_ = xs[0].cols();

  std::vector<Matrix> hs = lstm_[0].forward(xs);
  for (size_t l = 1; l < lstm_.size(); ++l) hs = lstm_[l].forward(hs);

  Matrix pooled;
  if (cfg_.mean_pool) {
    pooled = hs[0];
    for (int t = 1; t < last_T_; ++t) pooled += hs[t];
    pooled /= Scalar(last_T_);
  } else {
    pooled = hs.back();
  }

  pre1_ = fc1_.forward(pooled);
  Matrix hidden = nn::relu(pre1_);
  if (flag_logits) {
    if (cfg_.multitask_flags_dim <= 0)
      throw GloveError(ErrorCategory::config, "flag logits requested but multitask head disabled");
    *flag_logits = flags_.forward(hidden);
  }
  return fc2_.forward(hidden);
}

void PoseModel::backward_batch(const Matrix& d_angles, const Matrix* d_flags) {
  Matrix d_hidden = fc2_.backward(d_angles);
  if (d_flags) d_hidden += flags_.backward(*d_flags);
  Matrix d_pre1 = (d_hidden.array() * (pre1_.array() > Scalar(0)).cast<Scalar>()).matrix();
  Matrix d_pooled = fc1_.backward(d_pre1);

  std::vector<Matrix> dhs(last_T_);
  const Matrix zero = Matrix::Zero(d_pooled.rows(), d_pooled.cols());
  if (cfg_.mean_pool) {
    Matrix share = d_pooled / Scalar(last_T_);
    for (int t = 0; t < last_T_; ++t) dhs[t] = share;
  } else {
    for (int t = 0; t + 1 < last_T_; ++t) dhs[t] = zero;
    dhs[last_T_ - 1] = d_pooled;
  }
  for (size_t l = lstm_.size(); l-- > 0;) dhs = lstm_[l].backward(dhs);
}

Vector PoseModel::forward_window(const Matrix& window) {
  if (window.rows() != cfg_.window_length || window.cols() != cfg_.input_channels)
    throw GloveError(ErrorCategory::shape_mismatch, "window must be window_length x input_channels");
  std::vector<Matrix> xs(window.rows());
  for (Index t = 0; t < window.rows(); ++t) xs[t] = window.row(t).transpose();
  return forward_batch(xs).col(0);
}

std::vector<nn::Param*> PoseModel::params() {
  std::vector<nn::Param*> out;
  for (auto& l : lstm_)
    for (nn::Param* p : l.params()) out.push_back(p);
  for (nn::Param* p : fc1_.params()) out.push_back(p);
  for (nn::Param* p : fc2_.params()) out.push_back(p);
  if (cfg_.multitask_flags_dim > 0)
    for (nn::Param* p : flags_.params()) out.push_back(p);
  return out;
}

std::uint64_t PoseModel::param_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto* p : const_cast<PoseModel*>(this)->params())
    h = fnv1a64(p->value.data(), sizeof(Scalar) * p->value.size(), h);
  return h;
}

// ---------------------------------------------------------------------------

std::vector<int> epoch_order(Index n, int epoch, std::uint64_t seed) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  nn::Rng rng(seed ^ (0x9e3779b97f4a7c15ull * (std::uint64_t(epoch) + 1)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

namespace {

// Gathers windows idx into per-timestep column batches (C x B each).
std::vector<Matrix> gather_batch(const WindowSet& data, const std::vector<int>& order,
                                 size_t begin, size_t end) {
  const Index T = data.X[0].rows();
  const Index C = data.X[0].cols();
  const Index B = static_cast<Index>(end - begin);
  std::vector<Matrix> xs(T);
  for (Index t = 0; t < T; ++t) xs[t].resize(C, B);
  for (Index j = 0; j < B; ++j) {
    const Matrix& w = data.X[order[begin + j]];
    for (Index t = 0; t < T; ++t) xs[t].col(j) = w.row(t).transpose();
  }
  return xs;
}

std::vector<Matrix> snapshot_params(const std::vector<nn::Param*>& ps) {
  std::vector<Matrix> s;
  s.reserve(ps.size());
  for (const auto* p : ps) s.push_back(p->value);
  return s;
}

void restore_params(const std::vector<nn::Param*>& ps, const std::vector<Matrix>& s) {
  for (size_t i = 0; i < ps.size(); ++i) ps[i]->value = s[i];
}

}  // namespace

ModelBundle train(const WindowSet& data, const ModelConfig& cfg,
                  const signal::ChannelStats& stats, const TrainOptions& opt) {
  if (data.size() == 0) throw GloveError(ErrorCategory::config, "train: empty dataset");
  if (!data.Y.allFinite()) throw GloveError(ErrorCategory::numeric, "train: non-finite labels");
  if (opt.multitask && (cfg.multitask_flags_dim <= 0 || data.F.rows() != data.size()))
    throw GloveError(ErrorCategory::config, "multitask training needs flag labels and head");

  ModelBundle bundle;
  bundle.config = cfg;
  bundle.stats = stats;
  bundle.net = std::make_shared<PoseModel>(cfg);
  bundle.net->init(opt.seed);
  // Start the output bias at the label means: at lr 1e-4 the optimizer would
  // otherwise spend most of the budget closing a tens-of-degrees DC offset.
  bundle.net->output_layer().b.value = data.Y.colwise().mean().transpose();

  bundle.report.seed = opt.seed;
  bundle.report.epochs = opt.epochs;
  if (opt.epochs == 0) return bundle;

  std::vector<nn::Param*> params = bundle.net->params();
  nn::AdamOptimizer adam(params, opt.adam);
  const Index N = data.size();
  const int B = std::max(1, opt.batch_size);

  std::vector<Matrix> last_good = snapshot_params(params);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::vector<int> order = epoch_order(N, epoch, opt.seed);
    Scalar reg_sum = 0, flag_sum = 0;
    bool bad = false;
    for (Index begin = 0; begin < N && !bad; begin += B) {
      const Index end = std::min<Index>(begin + B, N);
      std::vector<Matrix> xs = gather_batch(data, order, begin, end);
      Matrix targets(cfg.output_dim, end - begin);
      for (Index j = 0; j < end - begin; ++j)
        targets.col(j) = data.Y.row(order[begin + j]).transpose();

      Matrix flag_logits;
      Matrix pred = bundle.net->forward_batch(xs, opt.multitask ? &flag_logits : nullptr);

      Matrix d_angles;
      Scalar reg = nn::smooth_l1_grad(pred, targets, d_angles, opt.smooth_l1_beta);
      Scalar flag_loss = 0;
      Matrix d_flags;
      if (opt.multitask) {
        Matrix ftargets(cfg.multitask_flags_dim, end - begin);
        for (Index j = 0; j < end - begin; ++j)
          ftargets.col(j) = data.F.row(order[begin + j]).transpose();
        flag_loss = nn::bce_with_logits_grad(flag_logits, ftargets, d_flags);
      }
      if (!std::isfinite(reg) || !std::isfinite(flag_loss)) {
        bad = true;
        break;
      }
      reg_sum += reg * Scalar(end - begin);
      flag_sum += flag_loss * Scalar(end - begin);

      bundle.net->backward_batch(d_angles, opt.multitask ? &d_flags : nullptr);
      try {
        adam.step();
      } catch (const GloveError&) {
        bad = true;
      }
    }
    if (bad) {
      restore_params(params, last_good);
      bundle.report.aborted_epoch = epoch;
      break;
    }
    last_good = snapshot_params(params);
    bundle.report.epoch_reg_loss.push_back(reg_sum / Scalar(N));
    bundle.report.epoch_flag_loss.push_back(flag_sum / Scalar(N));
    bundle.report.epoch_loss.push_back((reg_sum + flag_sum) / Scalar(N));
    if (opt.log_every_epochs > 0 && (epoch + 1) % opt.log_every_epochs == 0)
      std::fprintf(stderr, "epoch %d/%d loss %.6f\n", epoch + 1, opt.epochs,
                   bundle.report.epoch_loss.back());
  }
  return bundle;
}

Matrix predict_windows(const ModelBundle& bundle, const std::vector<Matrix>& windows,
                       bool already_normalized, int batch_size) {
  const Index N = static_cast<Index>(windows.size());
  const ModelConfig& cfg = bundle.config;
  Matrix out(N, cfg.output_dim);
  const Index B = std::max(1, batch_size);
  std::vector<Matrix> xs(cfg.window_length);
  for (Index begin = 0; begin < N; begin += B) {
    const Index end = std::min(begin + B, N);
    for (int t = 0; t < cfg.window_length; ++t) xs[t].resize(cfg.input_channels, end - begin);
    for (Index j = 0; j < end - begin; ++j) {
      Matrix w = already_normalized ? windows[begin + j]
                                    : signal::normalize(windows[begin + j], bundle.stats);
      for (int t = 0; t < cfg.window_length; ++t) xs[t].col(j) = w.row(t).transpose();
    }
    out.middleRows(begin, end - begin) = bundle.net->forward_batch(xs).transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------

StreamPredictor::StreamPredictor(const ModelBundle& bundle) : b_(bundle) {
  buf_.resize(b_.config.window_length, b_.config.input_channels);
}

void StreamPredictor::reset() {
  frames_ = 0;
  lat_us_.clear();
}

std::optional<Vector> StreamPredictor::push(const Vector& channels) {
  if (channels.size() != b_.config.input_channels)
    throw GloveError(ErrorCategory::shape_mismatch, "stream frame channel count mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  const int T = b_.config.window_length;
  if (frames_ < T) {
    buf_.row(frames_) = channels.transpose();
  } else {
    for (int t = 0; t + 1 < T; ++t) buf_.row(t) = buf_.row(t + 1);
    buf_.row(T - 1) = channels.transpose();
  }
  ++frames_;
  if (frames_ < T) return std::nullopt;

  Vector angles = b_.net->forward_window(signal::normalize(buf_, b_.stats));
  const auto t1 = std::chrono::steady_clock::now();
  lat_us_.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  return angles;
}

std::vector<Vector> predict_stream(const ModelBundle& bundle, const Matrix& channel_rows,
                                   std::vector<double>* latencies_us) {
  StreamPredictor sp(bundle);
  std::vector<Vector> out;
  for (Index r = 0; r < channel_rows.rows(); ++r) {
    auto pred = sp.push(channel_rows.row(r).transpose());
    if (pred) out.push_back(*pred);
  }
  if (latencies_us) *latencies_us = sp.latencies_us();
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint container.

namespace {

using blob::corrupt;
using blob::get_blob_body;
using blob::get_string;
using blob::get_u32;
using blob::get_u64;
using blob::put_blob;
using blob::put_string;
using blob::put_u32;
using blob::put_u64;

json report_to_json(const TrainReport& r) {
  json j;
  j["epoch_loss"] = r.epoch_loss;
  j["epoch_reg_loss"] = r.epoch_reg_loss;
  j["epoch_flag_loss"] = r.epoch_flag_loss;
  j["seed"] = r.seed;
  j["epochs"] = r.epochs;
  j["aborted_epoch"] = r.aborted_epoch;
  return j;
}

TrainReport report_from_json(const json& j) {
  TrainReport r;
  r.epoch_loss = j.at("epoch_loss").get<std::vector<Scalar>>();
  r.epoch_reg_loss = j.at("epoch_reg_loss").get<std::vector<Scalar>>();
  r.epoch_flag_loss = j.at("epoch_flag_loss").get<std::vector<Scalar>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.epochs = j.at("epochs").get<int>();
  r.aborted_epoch = j.at("aborted_epoch").get<int>();
  return r;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw GloveError(ErrorCategory::io, "cannot open for write: " + path);

  os.write("GPML", 4);
  put_u32(os, kBundleVersion);
  const std::string cfg = bundle.config.to_json();
  put_u64(os, fnv1a64(cfg.data(), cfg.size()));
  put_string(os, cfg);

  std::vector<nn::Param*> ps = bundle.net->params();
  put_u32(os, static_cast<std::uint32_t>(ps.size() + 3));
  put_blob(os, "norm.mean", bundle.stats.mean);
  put_blob(os, "norm.std", bundle.stats.std);
  Matrix degen(bundle.stats.mean.size(), 1);
  for (Index i = 0; i < degen.size(); ++i)
    degen(i, 0) = std::count(bundle.stats.degenerate.begin(), bundle.stats.degenerate.end(),
                             static_cast<int>(i)) > 0
                      ? 1.0
                      : 0.0;
  put_blob(os, "norm.degenerate", degen);
  for (const auto* p : ps) put_blob(os, p->name, p->value);

  put_string(os, report_to_json(bundle.report).dump());
  if (!os) throw GloveError(ErrorCategory::io, "write failed: " + path);
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw GloveError(ErrorCategory::io, "cannot open: " + path);

  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "GPML", 4) != 0) corrupt("bad magic");
  const std::uint32_t version = get_u32(is);
  if (version != kBundleVersion)
    throw GloveError(ErrorCategory::checkpoint_version,
                     "unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t stored_hash = get_u64(is);
  const std::string cfg_text = get_string(is);
  if (fnv1a64(cfg_text.data(), cfg_text.size()) != stored_hash)
    throw GloveError(ErrorCategory::checkpoint_hash,
                     "config hash mismatch (stored config was altered)");

  ModelBundle bundle;
  bundle.config = ModelConfig::from_json(cfg_text);
  bundle.net = std::make_shared<PoseModel>(bundle.config);

  const std::uint32_t n_blobs = get_u32(is);
  std::vector<std::pair<std::string, Matrix>> blobs;
  blobs.reserve(n_blobs);
  for (std::uint32_t k = 0; k < n_blobs; ++k) {
    std::string name = get_string(is);
    blobs.emplace_back(std::move(name), get_blob_body(is));
  }
  auto take = [&](const std::string& name) -> Matrix {
    for (auto& [n, m] : blobs)
      if (n == name) return m;
    corrupt("missing blob '" + name + "'");
  };
  bundle.stats.mean = take("norm.mean");
  bundle.stats.std = take("norm.std");
  Matrix degen = take("norm.degenerate");
  for (Index i = 0; i < degen.size(); ++i)
    if (degen(i, 0) != 0.0) bundle.stats.degenerate.push_back(static_cast<int>(i));

  for (nn::Param* p : bundle.net->params()) {
    Matrix m = take(p->name);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
      throw GloveError(ErrorCategory::checkpoint_hash,
                       "blob '" + p->name + "' shape disagrees with config");
    p->value = std::move(m);
  }

  try {
    bundle.report = report_from_json(json::parse(get_string(is)));
  } catch (const json::exception& e) {
    corrupt(std::string("bad metadata JSON: ") + e.what());
  }
  return bundle;
}

}  // namespace glove::model
