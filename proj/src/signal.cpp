#include "glove/signal.hpp"

#include <algorithm>
#include <cmath>

namespace glove::signal {

const char* color_name(Color c) {
  switch (c) {
    case Color::none: return "none";
    case Color::purple: return "purple";
    case Color::red: return "red";
    case Color::blue: return "blue";
    case Color::green: return "green";
  }
  return "none";
}

// ---------------------------------------------------------------------------

BaselineCorrector::BaselineCorrector(int window) : window_(window) {
  if (window_ < 1) throw GloveError(ErrorCategory::config, "baseline window must be >= 1");
}

void BaselineCorrector::reset() { history_.clear(); }

SensorFrame BaselineCorrector::push(const SensorFrame& frame) {
  history_.push_back(frame.hsy);
  if (static_cast<int>(history_.size()) > window_) history_.pop_front();
  // x - mean(window) computed as -mean(window - x): the common offset cancels
  // term by term, so a constant stream corrects to exactly zero.
  Eigen::Matrix<Scalar, kStrainChannels, 1> dev_sum;
  dev_sum.setZero();
  for (const auto& h : history_) dev_sum += h - frame.hsy;
  SensorFrame out = frame;
  out.hsy = -dev_sum / static_cast<Scalar>(history_.size());
  return out;
}

std::vector<SensorFrame> baseline_correct(const std::vector<SensorFrame>& stream, int n) {
  BaselineCorrector corrector(n);
  std::vector<SensorFrame> out;
  out.reserve(stream.size());
  for (const auto& f : stream) out.push_back(corrector.push(f));
  return out;
}

// ---------------------------------------------------------------------------

WristAngles relative_wrist_angles(const Quaternion& quat_hand, const Quaternion& quat_forearm) {
  for (const auto* q : {&quat_hand, &quat_forearm}) {
    if (std::abs(q->norm() - 1.0) > 1e-3)
      throw GloveError(ErrorCategory::calibration, "quaternion norm deviates from 1 by > 1e-3");
  }
  Quaternion rel = quat_forearm.conjugate() * quat_hand;
  rel.normalize();
  const Eigen::Matrix<Scalar, 3, 3> r = rel.toRotationMatrix();

  // Intrinsic X-Y-Z decomposition: R = Rx(flex) * Ry(abd) * Rz(sup).
  WristAngles w;
  const Scalar sy = std::clamp(r(0, 2), Scalar(-1), Scalar(1));
  w.abd = rad2deg(std::asin(sy));
  w.flex = rad2deg(std::atan2(-r(1, 2), r(2, 2)));
  w.sup = rad2deg(std::atan2(-r(0, 1), r(0, 0)));
  return w;
}

std::vector<TimedQuat> downsample_hold(const std::vector<TimedQuat>& imu, Scalar imu_rate_hz,
                                       const std::vector<std::int64_t>& ticks_ms) {
  if (imu_rate_hz < kSampleRateHz)
    throw GloveError(ErrorCategory::config, "IMU rate below the 20 Hz output rate");
  std::vector<TimedQuat> out;
  out.reserve(ticks_ms.size());
  if (imu.empty()) return out;
  std::size_t i = 0;
  for (std::int64_t tick : ticks_ms) {
    while (i + 1 < imu.size() && imu[i + 1].timestamp_ms <= tick) ++i;
    // When the tick precedes the first sample, i stays 0: the earliest sample repeats.
    out.push_back({tick, imu[i].q});
  }
  return out;
}

// ---------------------------------------------------------------------------

Vector channel_row(const SensorFrame& frame) {
  Vector row(kInputChannels);
  row.head(kStrainChannels) = frame.hsy;
  WristAngles w = relative_wrist_angles(frame.quat_hand, frame.quat_forearm);
  row(kStrainChannels + 0) = w.flex;
  row(kStrainChannels + 1) = w.abd;
  row(kStrainChannels + 2) = w.sup;
  return row;
}

Matrix frames_to_channels(const std::vector<SensorFrame>& frames) {
  Matrix rows(static_cast<Index>(frames.size()), kInputChannels);
  for (Index i = 0; i < rows.rows(); ++i)
    rows.row(i) = channel_row(frames[static_cast<std::size_t>(i)]).transpose();
  return rows;
}

std::vector<Index> window_starts(Index n_rows, int length, int stride) {
  if (stride < 1) throw GloveError(ErrorCategory::config, "stride must be >= 1");
  std::vector<Index> starts;
  if (n_rows < length) return starts;
  for (Index s = 0; s + length <= n_rows; s += stride) starts.push_back(s);
  return starts;
}

std::vector<Matrix> make_windows(const Matrix& channels, int length, int stride) {
  std::vector<Matrix> windows;
  for (Index s : window_starts(channels.rows(), length, stride))
    windows.push_back(channels.middleRows(s, length));
  return windows;
}

// ---------------------------------------------------------------------------

ChannelStats compute_channel_stats(const Matrix& rows) {
  if (rows.rows() == 0) throw GloveError(ErrorCategory::config, "no rows for channel stats");
  ChannelStats stats;
  stats.mean = rows.colwise().mean().transpose();
  Matrix centered = rows.rowwise() - stats.mean.transpose();
  stats.std = centered.array().square().colwise().mean().sqrt().transpose();
  for (Index c = 0; c < stats.std.size(); ++c) {
    if (stats.std[c] <= 0) {
      stats.std[c] = 1.0;
      stats.degenerate.push_back(static_cast<int>(c));
    }
  }
  return stats;
}

static void check_channels(const Matrix& window, const ChannelStats& stats) {
  if (window.cols() != stats.channels())
    throw GloveError(ErrorCategory::shape_mismatch, "window channel count does not match stats");
}

Matrix normalize(const Matrix& window, const ChannelStats& stats) {
  check_channels(window, stats);
  return (window.rowwise() - stats.mean.transpose()).array().rowwise() /
         stats.std.transpose().array();
}

Matrix denormalize(const Matrix& window, const ChannelStats& stats) {
  check_channels(window, stats);
  return (window.array().rowwise() * stats.std.transpose().array()).matrix().rowwise() +
         stats.mean.transpose();
}

// ---------------------------------------------------------------------------

TapDetector::TapDetector(Scalar rest_value, Scalar threshold)
    : rest_(rest_value), threshold_(threshold) {
  if (rest_ == 0) throw GloveError(ErrorCategory::calibration, "rest value must be nonzero");
  if (threshold_ <= 0) throw GloveError(ErrorCategory::config, "tap threshold must be > 0");
}

void TapDetector::reset() {
  seen_ = 0;
  for (bool& b : f_) b = false;
}

bool TapDetector::push(Scalar value) {
  const Scalar rel = value / rest_ - 1.0;
  f_[0] = f_[1];
  f_[1] = f_[2];
  f_[2] = f_[3];
  f_[3] = rel * rel >= threshold_;
  ++seen_;
  if (seen_ < 4) return false;  // no taps before t = 3
  return !f_[0] && !f_[1] && f_[2] && f_[3];
}

std::vector<Index> detect_tap_indices(const Vector& series, Scalar rest_value, Scalar threshold) {
  TapDetector det(rest_value, threshold);
  std::vector<Index> taps;
  for (Index t = 0; t < series.size(); ++t)
    if (det.push(series[t])) taps.push_back(t);
  return taps;
}

std::vector<TapEvent> detect_taps(const Vector& series, Scalar rest_value,
                                  const std::vector<std::int64_t>& timestamps_ms,
                                  int finger_index, Scalar threshold) {
  if (timestamps_ms.size() != static_cast<std::size_t>(series.size()))
    throw GloveError(ErrorCategory::shape_mismatch, "series and timestamps differ in length");
  std::vector<TapEvent> events;
  for (Index t : detect_tap_indices(series, rest_value, threshold))
    events.push_back({finger_index, timestamps_ms[static_cast<std::size_t>(t)]});
  return events;
}

Scalar rest_value(const Vector& series, Index rest_samples) {
  if (series.size() == 0) throw GloveError(ErrorCategory::calibration, "empty series");
  const Index n = std::min(series.size(), rest_samples);
  return series.head(n).mean();
}

Color select_color(bool thumb, bool index, bool middle, bool ring, bool pinky) {
  if (!thumb) return Color::none;
  if (index) return Color::purple;
  if (middle) return Color::red;
  if (ring) return Color::blue;
  if (pinky) return Color::green;
  return Color::none;
}

int finger_index(bool right_hand, int finger_on_hand) {
  if (finger_on_hand < 0 || finger_on_hand > 4)
    throw GloveError(ErrorCategory::config, "finger_on_hand must be 0..4");
  return right_hand ? 6 + finger_on_hand : 5 - finger_on_hand;
}

}  // namespace glove::signal
