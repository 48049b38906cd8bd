#include "glove/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace glove::config {

using nlohmann::json;

namespace {

// Pulls known keys out of a JSON object and rejects the rest by full path.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object())
      throw GloveError(ErrorCategory::config, "config section '" + where_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& field) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      it->get_to(field);
    } catch (const json::exception& e) {
      throw GloveError(ErrorCategory::config,
                       "config key '" + path(key) + "': " + std::string(e.what()));
    }
  }

  json sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? json::object() : *it;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw GloveError(ErrorCategory::config, "unknown config key '" + path(item.key()) + "'");
  }

 private:
  std::string path(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

void RunConfig::validate() const {
  model.validate();
  auto positive = [](auto v, const char* what) {
    if (v <= 0) throw GloveError(ErrorCategory::config, std::string(what) + " must be positive");
  };
  positive(train.epochs, "train.epochs");
  positive(train.batch_size, "train.batch_size");
  positive(train.lr, "train.lr");
  positive(train.beta, "train.beta");
  positive(head.hidden, "head.hidden");
  positive(head.epochs, "head.epochs");
  positive(head.batch_size, "head.batch_size");
  positive(head.lr, "head.lr");
  if (head.num_classes < 2)
    throw GloveError(ErrorCategory::config, "head.num_classes must be >= 2");
  positive(windows.stride, "windows.stride");
  positive(windows.baseline_window, "windows.baseline_window");
  positive(eval.folds, "eval.folds");
  scheme();
  if (synth.duration_s < 2.0)  // trajectory generator minimum
    throw GloveError(ErrorCategory::config, "synth.duration_s must be >= 2");
  positive(synth.smoothness, "synth.smoothness");
  if (synth.noise_std < 0 || synth.imu_noise_deg < 0)
    throw GloveError(ErrorCategory::config, "synth noise levels must be nonnegative");
  if (augment.sigma < 0)
    throw GloveError(ErrorCategory::config, "augment.sigma must be nonnegative");
  if (!(augment.scale_lo <= augment.scale_hi))
    throw GloveError(ErrorCategory::config, "augment.scale_lo must not exceed scale_hi");
  if (stream.tap_threshold <= 0)
    throw GloveError(ErrorCategory::config, "stream.tap_threshold must be positive");
  positive(stream.rest_samples, "stream.rest_samples");
  positive(stream.queue_capacity, "stream.queue_capacity");
  if (stream.drop_policy != "drop_oldest" && stream.drop_policy != "block")
    throw GloveError(ErrorCategory::config, "stream.drop_policy must be drop_oldest or block");
  if (stream.rate_multiplier < 0)
    throw GloveError(ErrorCategory::config, "stream.rate_multiplier must be nonnegative");
  if (stream.port < 1 || stream.port > 65535)
    throw GloveError(ErrorCategory::config, "stream.port out of range");
}

eval::Scheme RunConfig::scheme() const {
  if (eval.scheme == "kfold") return eval::Scheme::kfold;
  if (eval.scheme == "loso") return eval::Scheme::leave_one_subject_out;
  if (eval.scheme == "loseo") return eval::Scheme::leave_one_session_out;
  throw GloveError(ErrorCategory::config, "eval.scheme must be kfold, loso, or loseo");
}

std::string RunConfig::to_json_text() const {
  json j;
  j["model"] = json::parse(model.to_json());
  j["train"] = {{"epochs", train.epochs},
                {"batch_size", train.batch_size},
                {"lr", train.lr},
                {"beta", train.beta},
                {"seed", train.seed}};
  j["head"] = {{"num_classes", head.num_classes}, {"hidden", head.hidden},
               {"both_hands", head.both_hands},   {"epochs", head.epochs},
               {"batch_size", head.batch_size},   {"lr", head.lr},
               {"seed", head.seed}};
  j["windows"] = {{"stride", windows.stride},
                  {"baseline", windows.baseline},
                  {"baseline_window", windows.baseline_window}};
  j["eval"] = {{"scheme", eval.scheme}, {"folds", eval.folds}, {"seed", eval.seed}};
  j["synth"] = {{"duration_s", synth.duration_s},
                {"seed", synth.seed},
                {"smoothness", synth.smoothness},
                {"noise_std", synth.noise_std},
                {"drift_per_s", synth.drift_per_s},
                {"imu_noise_deg", synth.imu_noise_deg},
                {"subject", synth.subject},
                {"session", synth.session}};
  j["augment"] = {{"sigma", augment.sigma},
                  {"scale_lo", augment.scale_lo},
                  {"scale_hi", augment.scale_hi},
                  {"seed", augment.seed}};
  j["stream"] = {{"taps", stream.taps},
                 {"tap_threshold", stream.tap_threshold},
                 {"rest_samples", stream.rest_samples},
                 {"right_hand", stream.right_hand},
                 {"queue_capacity", stream.queue_capacity},
                 {"drop_policy", stream.drop_policy},
                 {"rate_multiplier", stream.rate_multiplier},
                 {"port", stream.port}};
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw GloveError(ErrorCategory::config, std::string("bad config JSON: ") + e.what());
  }

  RunConfig c;
  Section root(j, "");

  {
    json m = root.sub("model");
    Section s(m, "model");
    s.get("input_channels", c.model.input_channels);
    s.get("window_length", c.model.window_length);
    s.get("hidden_size", c.model.hidden_size);
    s.get("num_stacked_layers", c.model.num_stacked_layers);
    s.get("fc1_width", c.model.fc1_width);
    s.get("output_dim", c.model.output_dim);
    s.get("multitask_flags_dim", c.model.multitask_flags_dim);
    s.get("mean_pool", c.model.mean_pool);
    s.finish();
  }
  {
    json m = root.sub("train");
    Section s(m, "train");
    s.get("epochs", c.train.epochs);
    s.get("batch_size", c.train.batch_size);
    s.get("lr", c.train.lr);
    s.get("beta", c.train.beta);
    s.get("seed", c.train.seed);
    s.finish();
  }
  {
    json m = root.sub("head");
    Section s(m, "head");
    s.get("num_classes", c.head.num_classes);
    s.get("hidden", c.head.hidden);
    s.get("both_hands", c.head.both_hands);
    s.get("epochs", c.head.epochs);
    s.get("batch_size", c.head.batch_size);
    s.get("lr", c.head.lr);
    s.get("seed", c.head.seed);
    s.finish();
  }
  {
    json m = root.sub("windows");
    Section s(m, "windows");
    s.get("stride", c.windows.stride);
    s.get("baseline", c.windows.baseline);
    s.get("baseline_window", c.windows.baseline_window);
    s.finish();
  }
  {
    json m = root.sub("eval");
    Section s(m, "eval");
    s.get("scheme", c.eval.scheme);
    s.get("folds", c.eval.folds);
    s.get("seed", c.eval.seed);
    s.finish();
  }
  {
    json m = root.sub("synth");
    Section s(m, "synth");
    s.get("duration_s", c.synth.duration_s);
    s.get("seed", c.synth.seed);
    s.get("smoothness", c.synth.smoothness);
    s.get("noise_std", c.synth.noise_std);
    s.get("drift_per_s", c.synth.drift_per_s);
    s.get("imu_noise_deg", c.synth.imu_noise_deg);
    s.get("subject", c.synth.subject);
    s.get("session", c.synth.session);
    s.finish();
  }
  {
    json m = root.sub("augment");
    Section s(m, "augment");
    s.get("sigma", c.augment.sigma);
    s.get("scale_lo", c.augment.scale_lo);
    s.get("scale_hi", c.augment.scale_hi);
    s.get("seed", c.augment.seed);
    s.finish();
  }
  {
    json m = root.sub("stream");
    Section s(m, "stream");
    s.get("taps", c.stream.taps);
    s.get("tap_threshold", c.stream.tap_threshold);
    s.get("rest_samples", c.stream.rest_samples);
    s.get("right_hand", c.stream.right_hand);
    s.get("queue_capacity", c.stream.queue_capacity);
    s.get("drop_policy", c.stream.drop_policy);
    s.get("rate_multiplier", c.stream.rate_multiplier);
    s.get("port", c.stream.port);
    s.finish();
  }
  root.finish();

  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw GloveError(ErrorCategory::io, "cannot open config: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return RunConfig::from_json_text(ss.str());
}

void write_resolved(const RunConfig& cfg, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::string path = (std::filesystem::path(dir) / "config.resolved.json").string();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw GloveError(ErrorCategory::io, "cannot write resolved config: " + path);
  os << cfg.to_json_text();
}

}  // namespace glove::config
