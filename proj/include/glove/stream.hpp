#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "glove/core.hpp"
#include "glove/heads.hpp"
#include "glove/model.hpp"
#include "glove/signal.hpp"

namespace glove::stream {

// One frame per line: {"t":ms,"s":[25],"qh":[w,x,y,z],"qf":[w,x,y,z]}
struct WireFrame {
  std::int64_t t = 0;
  Eigen::Matrix<Scalar, kStrainChannels, 1> s;
  signal::Quaternion qh = signal::Quaternion::Identity();
  signal::Quaternion qf = signal::Quaternion::Identity();
};

std::string frame_to_line(const WireFrame& f);
bool parse_frame_line(const std::string& line, WireFrame& out);  // false when malformed
signal::SensorFrame to_sensor_frame(const WireFrame& f);
WireFrame from_sensor_frame(const signal::SensorFrame& f);

struct EventRecord {
  enum class Kind { angles, tap, cls };
  Kind kind = Kind::angles;
  std::int64_t t = 0;
  double latency_us = 0;
  Vector angles;   // angles events
  int finger = 0;  // tap events
  int cls = -1;    // class events
  Vector probs;
};

std::string event_to_line(const EventRecord& e);
EventRecord parse_event_line(const std::string& line);  // throws dataset_parse

// ---------------------------------------------------------------------------

enum class DropPolicy { block, drop_oldest };

// Mutex/condvar bounded queue. Blocking push applies backpressure; drop_oldest
// discards the front instead and counts it.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity = 256, DropPolicy policy = DropPolicy::drop_oldest)
      : cap_(capacity ? capacity : 1), policy_(policy) {}

  void push(T v) {
    std::unique_lock lk(mu_);
    if (policy_ == DropPolicy::block) {
      not_full_.wait(lk, [&] { return q_.size() < cap_ || closed_; });
      if (closed_) return;
    } else if (q_.size() >= cap_) {
      q_.pop_front();
      ++dropped_;
    }
    q_.push_back(std::move(v));
    not_empty_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock lk(mu_);
    not_empty_.wait(lk, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) return std::nullopt;
    T v = std::move(q_.front());
    q_.pop_front();
    not_full_.notify_one();
    return v;
  }

  void close() {
    std::lock_guard lk(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  long dropped() const {
    std::lock_guard lk(mu_);
    return dropped_;
  }
  std::size_t size() const {
    std::lock_guard lk(mu_);
    return q_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<T> q_;
  std::size_t cap_;
  DropPolicy policy_;
  long dropped_ = 0;
  bool closed_ = false;
};

// ---------------------------------------------------------------------------

struct ServeOptions {
  bool baseline = true;
  int baseline_window = 400;
  bool taps = false;
  Scalar tap_threshold = signal::kDefaultTapThreshold;
  int rest_samples = 200;  // tap rest calibration: first 10 s
  bool right_hand = true;
  const heads::Classifier* classifier = nullptr;  // emit class events when set
  std::size_t queue_capacity = 256;               // TCP ingestion queue
  DropPolicy policy = DropPolicy::drop_oldest;
};

struct LatencyStats {
  double p50_us = 0, p95_us = 0, max_us = 0;
  std::size_t count = 0;
};
LatencyStats summarize_latency(std::vector<double> samples_us);

struct ServeStats {
  long frames_in = 0;
  long malformed = 0;
  long angle_events = 0;
  long tap_events = 0;
  long class_events = 0;
  long dropped = 0;
  LatencyStats latency;
};

// Core loop shared by the stdio and TCP transports: frames in arrival order,
// one angles event per complete window, taps/classes when enabled, events for
// a frame emitted before any later frame's.
ServeStats serve_stream(std::istream& in, std::ostream& out, const model::ModelBundle& bundle,
                        const ServeOptions& opt);

// Single-client TCP loop: accept, serve, repeat until *stop. Ingestion runs on
// a reader thread through the bounded queue (drop policy per options) so a
// slow consumer sheds oldest frames instead of deadlocking.
ServeStats serve_tcp(int port, const model::ModelBundle& bundle, const ServeOptions& opt,
                     std::atomic<bool>* stop);

// Paces dataset rows onto `out` as wire frames at 20 Hz x multiplier
// (multiplier 0: as fast as possible).
struct ReplayStats {
  long frames = 0;
  double wall_s = 0;
};
ReplayStats replay(const std::string& dataset_path, std::ostream& out, double rate_multiplier);

}  // namespace glove::stream
