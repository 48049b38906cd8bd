#include "glove/synth.hpp"

#include <cmath>
#include <random>

#include <Eigen/Geometry>

namespace glove::synth {

const std::array<JointLimits, kJointCount>& joint_limits() {
  // MCP flex [0,90], abd [-20,20], PIP [0,110], DIP [0,80] per finger;
  // thumb MCP [0,90]/abd/IP [0,80]; wrist flex [-70,80], abd [-25,35],
  // sup [-85,90].
  static const std::array<JointLimits, kJointCount> limits = [] {
    std::array<JointLimits, kJointCount> a{};
    for (int f = 0; f < 4; ++f) {
      a[4 * f + 0] = {0, 90};
      a[4 * f + 1] = {-20, 20};
      a[4 * f + 2] = {0, 110};
      a[4 * f + 3] = {0, 80};
    }
    a[16] = {0, 90};
    a[17] = {-20, 20};
    a[18] = {0, 80};
    a[19] = {-70, 80};
    a[20] = {-25, 35};
    a[21] = {-85, 90};
    return a;
  }();
  return limits;
}

Scalar GaugeModel::response(Scalar strain_pct) const {
  const Scalar s = std::clamp(strain_pct, Scalar(0), kStrainMaxPct);
  if (s <= knee_strain) return slope_low * s;
  return slope_low * knee_strain + slope_high * (s - knee_strain);
}

Matrix standard_coupling() {
  Matrix c = Matrix::Zero(kStrainChannels, kJointCount);
  // Finger joint columns: finger f in {0=pinky,1=ring,2=middle,3=index} has
  // MCP-flex 4f, abd 4f+1, PIP 4f+2, DIP 4f+3.
  const Scalar kMain = 1.0, kNeighbor = 0.12, kCross = 0.06;
  for (int f = 0; f < 4; ++f) {
    const int mcp = 4 * f, pip = 4 * f + 2, dip = 4 * f + 3;
    const int s_mcp = 3 * f, s_pip = 3 * f + 1, s_dip = 3 * f + 2;
    c(s_mcp, mcp) = kMain;
    c(s_mcp, pip) = kNeighbor;
    c(s_pip, pip) = kMain;
    c(s_pip, mcp) = kNeighbor;
    c(s_pip, dip) = kNeighbor;
    c(s_dip, dip) = kMain;
    c(s_dip, pip) = kNeighbor;
    if (f > 0) c(s_mcp, 4 * (f - 1)) = kCross;      // neighboring finger MCP
    if (f < 3) c(s_mcp, 4 * (f + 1)) += kCross;
  }
  // Thumb flex sensors 12 (MCP, joint 16) and 13 (IP, joint 18).
  c(12, 16) = kMain;
  c(12, 18) = kNeighbor;
  c(13, 18) = kMain;
  c(13, 16) = kNeighbor;
  // Abduction sensors 14..18: pinky, ring, middle, index, thumb.
  const int abd_joint[5] = {1, 5, 9, 13, 17};
  for (int k = 0; k < 5; ++k) c(14 + k, abd_joint[k]) = kMain;
  // Fingertip sensors 19..23 (thumb, index, middle, ring, pinky): stretched by
  // the distal joints of their finger.
  c(19, 18) = 0.8;
  c(19, 16) = 0.3;
  const int tip_finger[4] = {3, 2, 1, 0};  // sensors 20..23 -> index..pinky
  for (int k = 0; k < 4; ++k) {
    const int f = tip_finger[k];
    c(20 + k, 4 * f + 3) = 0.8;
    c(20 + k, 4 * f + 2) = 0.3;
  }
  // Palm sensor 24: wrist flexion plus a whiff of overall curl.
  c(24, 19) = 0.6;
  for (int f = 0; f < 4; ++f) c(24, 4 * f) = 0.08;
  return c;
}

Matrix generate_trajectory(std::uint64_t seed, Scalar duration_s, Scalar smoothness) {
  if (duration_s < 2.0)
    throw GloveError(ErrorCategory::config, "trajectory duration must be >= 2 s");
  if (smoothness <= 0) throw GloveError(ErrorCategory::config, "smoothness must be positive");
  const Index n = static_cast<Index>(std::llround(duration_s * kSampleRateHz));
  Matrix traj(n, kJointCount);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  const auto& limits = joint_limits();
  constexpr int kAbd[5] = {1, 5, 9, 13, 17};

  for (int j = 0; j < kJointCount; ++j) {
    const auto [lo, hi] = limits[j];
    const bool abd = std::find(std::begin(kAbd), std::end(kAbd), j) != std::end(kAbd);
    // Abduction strain is rectified (extension reads zero), so keep those
    // centers positive; everything else centers in the middle band.
    const Scalar center = abd ? hi * (0.15 + 0.4 * unit(rng))
                              : lo + (hi - lo) * (0.3 + 0.4 * unit(rng));
    const Scalar max_amp = std::min(center - lo, hi - center);
    const Scalar amp_total = max_amp * (0.4 + 0.55 * unit(rng));

    const int n_sin = 2 + static_cast<int>(rng() % 4);  // 2..5 components
    std::vector<Scalar> amp(n_sin), freq(n_sin), phase(n_sin);
    Scalar wsum = 0;
    for (int m = 0; m < n_sin; ++m) {
      amp[m] = 0.2 + 0.8 * unit(rng);
      wsum += amp[m];
      freq[m] = (0.1 + 1.9 * unit(rng)) / smoothness;
      phase[m] = 2 * kPi * unit(rng);
    }
    for (int m = 0; m < n_sin; ++m) amp[m] *= amp_total / wsum;

    for (Index i = 0; i < n; ++i) {
      const Scalar t = Scalar(i) / kSampleRateHz;
      Scalar v = center;
      for (int m = 0; m < n_sin; ++m) v += amp[m] * std::sin(2 * kPi * freq[m] * t + phase[m]);
      traj(i, j) = std::clamp(v, lo, hi);
    }
  }
  return traj;
}

SimResult simulate_sensors(const Matrix& trajectory_deg, const GaugeModel& gauge,
                           const Matrix& coupling, std::uint64_t noise_seed,
                           Scalar imu_noise_deg) {
  if (trajectory_deg.cols() != kJointCount)
    throw GloveError(ErrorCategory::shape_mismatch, "trajectory must have 22 columns");
  if (coupling.rows() != kStrainChannels || coupling.cols() != kJointCount)
    throw GloveError(ErrorCategory::shape_mismatch, "coupling must be 25x22");

  const Index n = trajectory_deg.rows();
  SimResult out;
  out.angles = trajectory_deg;
  out.frames.resize(n);

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<Scalar> gauss(0.0, 1.0);
  using AA = Eigen::AngleAxis<Scalar>;
  using V3 = Eigen::Matrix<Scalar, 3, 1>;
  const V3 forearm_axis = V3(0.2, 0.7, 0.66).normalized();

  for (Index i = 0; i < n; ++i) {
    const Scalar t = Scalar(i) / kSampleRateHz;
    signal::SensorFrame& f = out.frames[i];
    f.timestamp_ms = static_cast<std::int64_t>(i) * 50;

    Vector strain_contrib(kJointCount);
    for (int j = 0; j < kJointCount; ++j) strain_contrib(j) = angle_to_strain(trajectory_deg(i, j));
    for (int s = 0; s < kStrainChannels; ++s) {
      Scalar strain = coupling.row(s).dot(strain_contrib);
      if (strain < 0 || strain > kStrainMaxPct) {
        ++out.clipped;
        strain = std::clamp(strain, Scalar(0), kStrainMaxPct);
      }
      Scalar v = gauge.response(strain) + gauge.drift_per_s * t;
      if (gauge.noise_std > 0) v += gauge.noise_std * gauss(rng);
      f.hsy(s) = v;
    }

    // Forearm wanders slowly; the hand sits at the (noisy) wrist pose
    // relative to it, so conj(qf)*qh recovers wrist angles + IMU noise.
    const Scalar sway = 0.3 * std::sin(2 * kPi * 0.05 * t);
    signal::Quaternion qf(AA(sway, forearm_axis));
    const Scalar flex = deg2rad(trajectory_deg(i, 19) + imu_noise_deg * gauss(rng));
    const Scalar abd = deg2rad(trajectory_deg(i, 20) + imu_noise_deg * gauss(rng));
    const Scalar sup = deg2rad(trajectory_deg(i, 21) + imu_noise_deg * gauss(rng));
    signal::Quaternion rel = AA(flex, V3::UnitX()) * AA(abd, V3::UnitY()) * AA(sup, V3::UnitZ());
    f.quat_forearm = qf.normalized();
    f.quat_hand = (qf * rel).normalized();
  }
  return out;
}

}  // namespace glove::synth
