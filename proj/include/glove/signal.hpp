#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include <Eigen/Geometry>

#include "glove/core.hpp"

namespace glove::signal {

using Quaternion = Eigen::Quaternion<Scalar>;

// One 20 Hz sample: 25 strain readings (dR/R0) plus the two IMU orientations.
struct SensorFrame {
  std::int64_t timestamp_ms = 0;
  Eigen::Matrix<Scalar, kStrainChannels, 1> hsy =
      Eigen::Matrix<Scalar, kStrainChannels, 1>::Zero();
  Quaternion quat_hand = Quaternion::Identity();
  Quaternion quat_forearm = Quaternion::Identity();
};

struct WristAngles {
  Scalar flex = 0, abd = 0, sup = 0;  // degrees
};

struct TapEvent {
  int finger_index = 0;  // 1..10, left pinky through right pinky
  std::int64_t timestamp_ms = 0;
};

enum class Color { none, purple, red, blue, green };
const char* color_name(Color c);

// ---------------------------------------------------------------------------
// Baseline correction: subtract the rolling mean of the last n samples
// (inclusive) from each strain channel. During warmup the mean runs over all
// samples seen so far. Quaternions pass through untouched.
class BaselineCorrector {
 public:
  explicit BaselineCorrector(int window = 400);
  SensorFrame push(const SensorFrame& frame);
  void reset();

 private:
  int window_;
  std::deque<Eigen::Matrix<Scalar, kStrainChannels, 1>> history_;
};

std::vector<SensorFrame> baseline_correct(const std::vector<SensorFrame>& stream, int n = 400);

// ---------------------------------------------------------------------------
// Relative wrist orientation: q_rel = conj(q_forearm) * q_hand, decomposed as
// intrinsic X-Y-Z Euler angles with flex = X, abd = Y, sup = Z (degrees).
// Quaternions whose norm deviates from 1 by more than 1e-3 are rejected.
WristAngles relative_wrist_angles(const Quaternion& quat_hand, const Quaternion& quat_forearm);

// Zero-order hold alignment of an IMU stream (rate >= 20 Hz) onto the given
// 20 Hz ticks: each tick takes the latest sample at or before it; ticks before
// the first sample repeat the earliest one.
struct TimedQuat {
  std::int64_t timestamp_ms = 0;
  Quaternion q = Quaternion::Identity();
};
std::vector<TimedQuat> downsample_hold(const std::vector<TimedQuat>& imu, Scalar imu_rate_hz,
                                       const std::vector<std::int64_t>& ticks_ms);

// ---------------------------------------------------------------------------
// Model input assembly: 25 strain channels followed by the IMU-derived wrist
// flex/abd/sup, one row per frame (N x 28).
Vector channel_row(const SensorFrame& frame);
Matrix frames_to_channels(const std::vector<SensorFrame>& frames);

// Window starts for sliding windows of `length` over N rows with `stride`;
// floor((N - length) / stride) + 1 entries, empty when N < length.
std::vector<Index> window_starts(Index n_rows, int length, int stride);

// Materialized windows, each length x C; window k row r is channels row
// k*stride + r.
std::vector<Matrix> make_windows(const Matrix& channels, int length = kWindowLength,
                                 int stride = 1);

// ---------------------------------------------------------------------------
// Per-channel z-score normalization. Channels with zero spread keep std = 1
// and are flagged.
struct ChannelStats {
  Vector mean;
  Vector std;
  std::vector<int> degenerate;

  Index channels() const { return mean.size(); }
};

ChannelStats compute_channel_stats(const Matrix& rows);
Matrix normalize(const Matrix& window, const ChannelStats& stats);
Matrix denormalize(const Matrix& window, const ChannelStats& stats);

// ---------------------------------------------------------------------------
// Tap detection (squared relative change against a rest value, with a
// four-sample rising-edge debounce): f(t) = 1 iff (S(t)/S(0) - 1)^2 >=
// threshold, and a tap fires at t iff f(t-3..t) = 0,0,1,1.
inline constexpr Scalar kDefaultTapThreshold = 0.04;

class TapDetector {
 public:
  TapDetector(Scalar rest_value, Scalar threshold = kDefaultTapThreshold);
  // Returns true when a tap fires at this sample.
  bool push(Scalar value);
  bool flag() const { return f_[3]; }  // latest f value
  void reset();

 private:
  Scalar rest_;
  Scalar threshold_;
  int seen_ = 0;
  bool f_[4] = {false, false, false, false};
};

// Sample indices (0-based) of taps in a channel series.
std::vector<Index> detect_tap_indices(const Vector& series, Scalar rest_value,
                                      Scalar threshold = kDefaultTapThreshold);

std::vector<TapEvent> detect_taps(const Vector& series, Scalar rest_value,
                                  const std::vector<std::int64_t>& timestamps_ms,
                                  int finger_index, Scalar threshold = kDefaultTapThreshold);

// Rest value calibration: mean of the first `rest_samples` readings
// (default 10 s at 20 Hz).
Scalar rest_value(const Vector& series, Index rest_samples = 200);

// Pinch color selection from thumb/finger contact flags; simultaneous
// contacts resolve by index > middle > ring > pinky.
Color select_color(bool thumb, bool index, bool middle, bool ring, bool pinky);

// Ten-finger index 1..10 (left pinky .. left thumb, right thumb .. right
// pinky) from a hand side and per-hand finger (0=thumb..4=pinky).
int finger_index(bool right_hand, int finger_on_hand);

}  // namespace glove::signal
