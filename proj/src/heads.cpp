#include "glove/heads.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "blob_io.hpp"

namespace glove::heads {

void HeadConfig::validate() const {
  if (num_classes < 2) throw GloveError(ErrorCategory::config, "head needs >= 2 classes");
  if (hidden < 1) throw GloveError(ErrorCategory::config, "head hidden width must be positive");
}

Classifier::Classifier(std::shared_ptr<const model::ModelBundle> left,
                       std::shared_ptr<const model::ModelBundle> right, HeadConfig cfg)
    : core_left(std::move(left)), core_right(std::move(right)), cfg_(cfg) {
  cfg_.validate();
  if (!core_left) throw GloveError(ErrorCategory::config, "classifier needs a core bundle");
  if (cfg_.both_hands && !core_right)
    throw GloveError(ErrorCategory::config, "both_hands head needs two core bundles");
  if (core_left->config.output_dim != kJointCount ||
      (core_right && core_right->config.output_dim != kJointCount))
    throw GloveError(ErrorCategory::shape_mismatch, "core output dim incompatible with head");
  h1 = nn::FcLayer("head.h1", input_dim(), cfg_.hidden);
  h2 = nn::FcLayer("head.h2", cfg_.hidden, cfg_.num_classes);
  nn::Rng rng(cfg_.seed);
  h1.init(rng);
  h2.init(rng);
}

Classifier attach_head(std::shared_ptr<const model::ModelBundle> core, HeadConfig cfg) {
  cfg.both_hands = false;
  return Classifier(std::move(core), nullptr, cfg);
}

Classifier attach_head2(std::shared_ptr<const model::ModelBundle> left,
                        std::shared_ptr<const model::ModelBundle> right, HeadConfig cfg) {
  cfg.both_hands = true;
  return Classifier(std::move(left), std::move(right), cfg);
}

Matrix Classifier::head_probs(const Matrix& features) const {
  if (features.rows() != input_dim())
    throw GloveError(ErrorCategory::shape_mismatch, "head feature dim mismatch");
  // Inference path keeps the layers' caches untouched (classify is const).
  Matrix a = (h1.W.value * features).colwise() + h1.b.value.col(0);
  a = nn::relu(a);
  Matrix logits = (h2.W.value * a).colwise() + h2.b.value.col(0);
  return nn::softmax_columns(logits);
}

ClassPrediction Classifier::classify(const Matrix& window_left, const Matrix* window_right,
                                     std::int64_t t_ms) const {
  if (cfg_.both_hands && !window_right)
    throw GloveError(ErrorCategory::config, "both_hands head needs both windows");
  Matrix features(input_dim(), 1);
  features.topRows(kJointCount) =
      core_left->net->forward_window(signal::normalize(window_left, core_left->stats));
  if (cfg_.both_hands)
    features.bottomRows(kJointCount) =
        core_right->net->forward_window(signal::normalize(*window_right, core_right->stats));

  ClassPrediction out;
  out.probs = head_probs(features).col(0);
  out.probs.maxCoeff(&out.cls);
  out.t_ms = t_ms;
  return out;
}

std::vector<nn::Param*> Classifier::head_params() {
  std::vector<nn::Param*> out = h1.params();
  for (auto* p : h2.params()) out.push_back(p);
  return out;
}

std::uint64_t Classifier::core_hash() const {
  std::uint64_t h = core_left->net->param_hash();
  if (core_right) h = fnv1a64(&h, sizeof h, core_right->net->param_hash());
  return h;
}

HeadTrainReport train_head(Classifier& clf, const HeadSamples& data, const HeadTrainOptions& opt) {
  const Index n = static_cast<Index>(data.labels.size());
  if (n == 0 || data.left.size() != data.labels.size())
    throw GloveError(ErrorCategory::config, "head training: empty or misaligned samples");
  if (clf.config().both_hands && data.right.size() != data.labels.size())
    throw GloveError(ErrorCategory::config, "head training: missing right-hand windows");

  HeadTrainReport report;
  report.core_hash_before = clf.core_hash();
  std::set<int> distinct(data.labels.begin(), data.labels.end());
  if (distinct.size() < 2) {
    report.degenerate_labels = true;
    std::fprintf(stderr, "train_head: degenerate labels (single class); head will be trivial\n");
  }
  for (int l : data.labels)
    if (l < 0 || l >= clf.config().num_classes)
      throw GloveError(ErrorCategory::config, "head training: label outside [0, num_classes)");

  // Frozen core: features computed once, outside the optimized graph.
  Matrix features(clf.input_dim(), n);
  for (Index i = 0; i < n; ++i) {
    features.col(i).topRows(kJointCount) = clf.core_left->net->forward_window(
        signal::normalize(data.left[i], clf.core_left->stats));
    if (clf.config().both_hands)
      features.col(i).bottomRows(kJointCount) = clf.core_right->net->forward_window(
          signal::normalize(data.right[i], clf.core_right->stats));
  }

  nn::AdamOptimizer adam(clf.head_params(), opt.adam);
  const int B = std::max(1, opt.batch_size);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::vector<int> order = model::epoch_order(n, epoch, opt.seed);
    Scalar loss_sum = 0;
    for (Index begin = 0; begin < n; begin += B) {
      const Index end = std::min<Index>(begin + B, n);
      Matrix xb(clf.input_dim(), end - begin);
      std::vector<int> yb(end - begin);
      for (Index j = 0; j < end - begin; ++j) {
        xb.col(j) = features.col(order[begin + j]);
        yb[j] = data.labels[order[begin + j]];
      }
      Matrix a1 = clf.h1.forward(xb);
      Matrix z1 = nn::relu(a1);
      Matrix logits = clf.h2.forward(z1);
      Matrix dlogits;
      loss_sum += nn::softmax_cross_entropy_grad(logits, yb, dlogits) * Scalar(end - begin);
      Matrix dz1 = clf.h2.backward(dlogits);
      Matrix da1 = (dz1.array() * (a1.array() > Scalar(0)).cast<Scalar>()).matrix();
      clf.h1.backward(da1);
      adam.step();
    }
    report.epoch_loss.push_back(loss_sum / Scalar(n));
  }

  report.core_hash_after = clf.core_hash();
  if (report.core_hash_after != report.core_hash_before)
    throw GloveError(ErrorCategory::numeric, "core parameters changed during head training");
  return report;
}

std::vector<KeyEvent> keyboard_emit(const std::vector<signal::TapEvent>& taps,
                                    const std::vector<ClassPrediction>& predictions,
                                    EmitStats* stats) {
  EmitStats local;
  std::vector<KeyEvent> out;
  for (const auto& tap : taps) {
    // Latest prediction at or before the tap; taps during warmup have none.
    const ClassPrediction* best = nullptr;
    for (const auto& p : predictions) {
      if (p.t_ms <= tap.timestamp_ms && (!best || p.t_ms > best->t_ms)) best = &p;
    }
    if (!best) {
      ++local.dropped_warmup;
      std::fprintf(stderr, "keyboard_emit: tap at %lld ms before first prediction, dropped\n",
                   static_cast<long long>(tap.timestamp_ms));
      continue;
    }
    out.push_back({tap.timestamp_ms, best->cls, tap.finger_index});
    ++local.emitted;
  }
  if (stats) *stats = local;
  return out;
}

namespace {
constexpr std::uint32_t kHeadVersion = 1;
}

void save_head(const Classifier& clf, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw GloveError(ErrorCategory::io, "cannot open for write: " + path);

  nlohmann::json j;
  j["num_classes"] = clf.config().num_classes;
  j["hidden"] = clf.config().hidden;
  j["both_hands"] = clf.config().both_hands;
  j["seed"] = clf.config().seed;

  os.write("GPHD", 4);
  blob::put_u32(os, kHeadVersion);
  blob::put_string(os, j.dump());
  blob::put_blob(os, clf.h1.W.name, clf.h1.W.value);
  blob::put_blob(os, clf.h1.b.name, clf.h1.b.value);
  blob::put_blob(os, clf.h2.W.name, clf.h2.W.value);
  blob::put_blob(os, clf.h2.b.name, clf.h2.b.value);
  if (!os) throw GloveError(ErrorCategory::io, "write failed: " + path);
}

Classifier load_head(const std::string& path, std::shared_ptr<const model::ModelBundle> left,
                     std::shared_ptr<const model::ModelBundle> right) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw GloveError(ErrorCategory::io, "cannot open: " + path);

  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "GPHD", 4) != 0) blob::corrupt("bad magic");
  const std::uint32_t version = blob::get_u32(is);
  if (version != kHeadVersion)
    throw GloveError(ErrorCategory::checkpoint_version,
                     "unsupported head checkpoint version " + std::to_string(version));

  HeadConfig cfg;
  try {
    nlohmann::json j = nlohmann::json::parse(blob::get_string(is));
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.hidden = j.at("hidden").get<int>();
    cfg.both_hands = j.at("both_hands").get<bool>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    blob::corrupt(std::string("bad head config JSON: ") + e.what());
  }

  Classifier clf(std::move(left), cfg.both_hands ? std::move(right) : nullptr, cfg);
  for (auto* p : clf.head_params()) {
    const std::string name = blob::get_string(is);
    if (name != p->name) blob::corrupt("expected blob '" + p->name + "', found '" + name + "'");
    Matrix m = blob::get_blob_body(is);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
      throw GloveError(ErrorCategory::checkpoint_hash,
                       "head blob '" + name + "' shape does not match config");
    p->value = std::move(m);
  }
  return clf;
}

}  // namespace glove::heads
