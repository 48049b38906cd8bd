#include "glove/stream.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <thread>

#include <json.hpp>

#include "glove/dataset.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/select.h>
#include <sys/socket.h>
#include <unistd.h>

namespace glove::stream {

using nlohmann::json;

std::string frame_to_line(const WireFrame& f) {
  json j;
  j["t"] = f.t;
  j["s"] = std::vector<Scalar>(f.s.data(), f.s.data() + f.s.size());
  j["qh"] = {f.qh.w(), f.qh.x(), f.qh.y(), f.qh.z()};
  j["qf"] = {f.qf.w(), f.qf.x(), f.qf.y(), f.qf.z()};
  return j.dump();
}

bool parse_frame_line(const std::string& line, WireFrame& out) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return false;
  if (!j.contains("t") || !j["t"].is_number()) return false;
  const auto* s = j.find("s") != j.end() ? &j["s"] : nullptr;
  const auto* qh = j.find("qh") != j.end() ? &j["qh"] : nullptr;
  const auto* qf = j.find("qf") != j.end() ? &j["qf"] : nullptr;
  if (!s || !qh || !qf || !s->is_array() || s->size() != kStrainChannels) return false;
  if (!qh->is_array() || qh->size() != 4 || !qf->is_array() || qf->size() != 4) return false;
  for (const auto& v : *s)
    if (!v.is_number()) return false;
  for (const auto* q : {qh, qf})
    for (const auto& v : *q)
      if (!v.is_number()) return false;

  out.t = j["t"].get<std::int64_t>();
  for (int i = 0; i < kStrainChannels; ++i) out.s(i) = (*s)[i].get<Scalar>();
  out.qh = signal::Quaternion((*qh)[0].get<Scalar>(), (*qh)[1].get<Scalar>(),
                              (*qh)[2].get<Scalar>(), (*qh)[3].get<Scalar>());
  out.qf = signal::Quaternion((*qf)[0].get<Scalar>(), (*qf)[1].get<Scalar>(),
                              (*qf)[2].get<Scalar>(), (*qf)[3].get<Scalar>());
  return true;
}

signal::SensorFrame to_sensor_frame(const WireFrame& f) {
  signal::SensorFrame out;
  out.timestamp_ms = f.t;
  out.hsy = f.s;
  out.quat_hand = f.qh;
  out.quat_forearm = f.qf;
  return out;
}

WireFrame from_sensor_frame(const signal::SensorFrame& f) {
  WireFrame out;
  out.t = f.timestamp_ms;
  out.s = f.hsy;
  out.qh = f.quat_hand;
  out.qf = f.quat_forearm;
  return out;
}

std::string event_to_line(const EventRecord& e) {
  json j;
  j["t"] = e.t;
  switch (e.kind) {
    case EventRecord::Kind::angles:
      j["kind"] = "angles";
      j["latency_us"] = e.latency_us;
      j["angles"] = std::vector<Scalar>(e.angles.data(), e.angles.data() + e.angles.size());
      break;
    case EventRecord::Kind::tap:
      j["kind"] = "tap";
      j["finger"] = e.finger;
      break;
    case EventRecord::Kind::cls:
      j["kind"] = "class";
      j["latency_us"] = e.latency_us;
      j["class"] = e.cls;
      j["p"] = std::vector<Scalar>(e.probs.data(), e.probs.data() + e.probs.size());
      break;
  }
  return j.dump();
}

EventRecord parse_event_line(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("kind"))
    throw GloveError(ErrorCategory::dataset_parse, "malformed event line");
  EventRecord e;
  const std::string kind = j["kind"].get<std::string>();
  e.t = j.at("t").get<std::int64_t>();
  if (kind == "angles") {
    e.kind = EventRecord::Kind::angles;
    e.latency_us = j.at("latency_us").get<double>();
    auto v = j.at("angles").get<std::vector<Scalar>>();
    e.angles = Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
  } else if (kind == "tap") {
    e.kind = EventRecord::Kind::tap;
    e.finger = j.at("finger").get<int>();
  } else if (kind == "class") {
    e.kind = EventRecord::Kind::cls;
    e.latency_us = j.at("latency_us").get<double>();
    e.cls = j.at("class").get<int>();
    auto v = j.at("p").get<std::vector<Scalar>>();
    e.probs = Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
  } else {
    throw GloveError(ErrorCategory::dataset_parse, "unknown event kind '" + kind + "'");
  }
  return e;
}

LatencyStats summarize_latency(std::vector<double> samples_us) {
  LatencyStats s;
  s.count = samples_us.size();
  if (samples_us.empty()) return s;
  std::sort(samples_us.begin(), samples_us.end());
  auto at = [&](double q) {
    return samples_us[static_cast<std::size_t>(q * double(samples_us.size() - 1))];
  };
  s.p50_us = at(0.5);
  s.p95_us = at(0.95);
  s.max_us = samples_us.back();
  return s;
}

// ---------------------------------------------------------------------------

namespace {

// Per-connection state machine shared by the stdio and TCP transports.
class Session {
 public:
  Session(const model::ModelBundle& bundle, const ServeOptions& opt)
      : opt_(opt), bc_(opt.baseline_window), sp_(bundle) {
    if (opt_.classifier) {
      chan_window_.resize(bundle.config.window_length, kInputChannels);
      window_len_ = bundle.config.window_length;
    }
    rest_sum_.setZero();
  }

  void process_line(const std::string& line, std::vector<EventRecord>& events) {
    events.clear();
    WireFrame wf;
    if (!parse_frame_line(line, wf) || (stats_.frames_in > 0 && wf.t < last_t_)) {
      ++stats_.malformed;
      return;
    }
    last_t_ = wf.t;
    ++stats_.frames_in;

    signal::SensorFrame frame = to_sensor_frame(wf);
    const auto raw_hsy = frame.hsy;  // taps read the uncorrected signal
    if (opt_.baseline) frame = bc_.push(frame);
    const Vector row = signal::channel_row(frame);

    if (opt_.classifier) {
      if (frames_ < window_len_) {
        chan_window_.row(frames_) = row.transpose();
      } else {
        for (int t = 0; t + 1 < window_len_; ++t) chan_window_.row(t) = chan_window_.row(t + 1);
        chan_window_.row(window_len_ - 1) = row.transpose();
      }
      ++frames_;
    }

    auto pred = sp_.push(row);
    if (pred) {
      EventRecord e;
      e.kind = EventRecord::Kind::angles;
      e.t = wf.t;
      e.latency_us = sp_.latencies_us().back();
      e.angles = *pred;
      events.push_back(std::move(e));
      ++stats_.angle_events;
    }

    if (opt_.taps) push_taps(wf, raw_hsy, events);

    if (opt_.classifier && pred) {
      const auto c0 = std::chrono::steady_clock::now();
      // Baseline-corrected window, classifier normalizes with its own stats.
      heads::ClassPrediction cp = opt_.classifier->classify(chan_window_, nullptr, wf.t);
      const auto c1 = std::chrono::steady_clock::now();
      EventRecord e;
      e.kind = EventRecord::Kind::cls;
      e.t = wf.t;
      e.latency_us = std::chrono::duration<double, std::micro>(c1 - c0).count();
      e.cls = cp.cls;
      e.probs = cp.probs;
      events.push_back(std::move(e));
      ++stats_.class_events;
    }
  }

  ServeStats finish() {
    stats_.latency = summarize_latency(sp_.latencies_us());
    return stats_;
  }

  ServeStats& stats() { return stats_; }

 private:
  void push_taps(const WireFrame& wf, const Eigen::Matrix<Scalar, kStrainChannels, 1>& raw,
                 std::vector<EventRecord>& events) {
    if (calibrating_ < opt_.rest_samples) {
      for (int f = 0; f < 5; ++f) rest_sum_(f) += raw(fingertip_channel(f));
      ++calibrating_;
      if (calibrating_ == opt_.rest_samples) {
        for (int f = 0; f < 5; ++f) {
          const Scalar rest = rest_sum_(f) / Scalar(opt_.rest_samples);
          if (rest == 0) {
            std::fprintf(stderr, "serve: fingertip %d rest is zero; taps disabled there\n", f);
            continue;
          }
          detectors_[f].emplace(rest, opt_.tap_threshold);
        }
      }
      return;
    }
    for (int f = 0; f < 5; ++f) {
      if (!detectors_[f]) continue;
      if (detectors_[f]->push(raw(fingertip_channel(f)))) {
        EventRecord e;
        e.kind = EventRecord::Kind::tap;
        e.t = wf.t;
        e.finger = signal::finger_index(opt_.right_hand, f);
        events.push_back(std::move(e));
        ++stats_.tap_events;
      }
    }
  }

  ServeOptions opt_;
  signal::BaselineCorrector bc_;
  model::StreamPredictor sp_;
  ServeStats stats_;
  std::int64_t last_t_ = 0;
  Matrix chan_window_;
  int window_len_ = 0;
  int frames_ = 0;
  int calibrating_ = 0;
  Eigen::Matrix<Scalar, 5, 1> rest_sum_;
  std::array<std::optional<signal::TapDetector>, 5> detectors_;
};

}  // namespace

ServeStats serve_stream(std::istream& in, std::ostream& out, const model::ModelBundle& bundle,
                        const ServeOptions& opt) {
  Session session(bundle, opt);
  std::string line;
  std::vector<EventRecord> events;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    session.process_line(line, events);
    for (const auto& e : events) out << event_to_line(e) << '\n';
  }
  out.flush();
  return session.finish();
}

// ---------------------------------------------------------------------------

namespace {

bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, 0);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

ServeStats serve_tcp(int port, const model::ModelBundle& bundle, const ServeOptions& opt,
                     std::atomic<bool>* stop) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw GloveError(ErrorCategory::io, "socket() failed");
  const int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listener, 1) != 0) {
    ::close(listener);
    throw GloveError(ErrorCategory::io, "cannot listen on port " + std::to_string(port));
  }

  ServeStats total;
  while (!stop || !stop->load()) {
    timeval tv{1, 0};
    fd_set fds;
    FD_ZERO(&fds);
    FD_SET(listener, &fds);
    if (::select(listener + 1, &fds, nullptr, nullptr, &tv) <= 0) continue;
    const int client = ::accept(listener, nullptr, nullptr);
    if (client < 0) continue;

    BoundedQueue<std::string> queue(opt.queue_capacity, opt.policy);
    std::thread reader([&] {
      std::string acc;
      char buf[4096];
      for (;;) {
        const ssize_t n = ::recv(client, buf, sizeof buf, 0);
        if (n <= 0) break;
        acc.append(buf, static_cast<std::size_t>(n));
        std::size_t pos;
        while ((pos = acc.find('\n')) != std::string::npos) {
          queue.push(acc.substr(0, pos));
          acc.erase(0, pos + 1);
        }
      }
      queue.close();
    });

    Session session(bundle, opt);
    std::vector<EventRecord> events;
    bool client_ok = true;
    while (auto line = queue.pop()) {
      if (line->empty()) continue;
      session.process_line(*line, events);
      for (const auto& e : events) {
        if (!send_all(client, event_to_line(e) + "\n")) {
          client_ok = false;
          break;
        }
      }
      if (!client_ok) break;
    }
    if (!client_ok) queue.close();
    reader.join();

    ServeStats s = session.finish();
    s.dropped = queue.dropped();
    std::fprintf(stderr,
                 "serve: session closed frames=%ld malformed=%ld events=%ld dropped=%ld "
                 "p50=%.1fus p95=%.1fus max=%.1fus\n",
                 s.frames_in, s.malformed, s.angle_events + s.tap_events + s.class_events,
                 s.dropped, s.latency.p50_us, s.latency.p95_us, s.latency.max_us);
    ::close(client);

    total.frames_in += s.frames_in;
    total.malformed += s.malformed;
    total.angle_events += s.angle_events;
    total.tap_events += s.tap_events;
    total.class_events += s.class_events;
    total.dropped += s.dropped;
    total.latency = s.latency;
    if (stop && stop->load()) break;
  }
  ::close(listener);
  return total;
}

// ---------------------------------------------------------------------------

ReplayStats replay(const std::string& dataset_path, std::ostream& out, double rate_multiplier) {
  if (rate_multiplier < 0) throw GloveError(ErrorCategory::config, "rate multiplier must be >= 0");
  dataset::Reader reader(dataset_path);  // header errors surface before any frame
  const double interval_s =
      rate_multiplier > 0 ? 1.0 / (reader.header().rate_hz * rate_multiplier) : 0.0;

  ReplayStats stats;
  const auto start = std::chrono::steady_clock::now();
  dataset::Row row;
  while (reader.next(row)) {
    if (interval_s > 0)
      std::this_thread::sleep_until(
          start + std::chrono::duration<double>(interval_s * double(stats.frames)));
    out << frame_to_line(from_sensor_frame(row.frame)) << '\n';
    ++stats.frames;
  }
  out.flush();
  stats.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

}  // namespace glove::stream
