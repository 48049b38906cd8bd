#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "glove/core.hpp"
#include "glove/signal.hpp"

namespace glove::synth {

// Anatomical excursion limits (degrees) used by the trajectory generator,
// ordered as the joint angle vector.
struct JointLimits {
  Scalar lo, hi;
};
const std::array<JointLimits, kJointCount>& joint_limits();

// Strain-gauge response curve: monotone piecewise-linear ΔR/R₀ over strain %
// on [0, 155], steeper below the knee. Endpoints (0.005 detectable, 155 max)
// follow the sensor's characterization; interior shape is a modeling choice.
struct GaugeModel {
  Scalar knee_strain = 20.0;  // %
  Scalar slope_low = 0.08;    // ΔR/R₀ per % strain below the knee
  Scalar slope_high = 0.02;   // above
  Scalar drift_per_s = 0.0;   // additive response drift
  Scalar noise_std = 0.0;     // additive Gaussian response noise

  Scalar response(Scalar strain_pct) const;  // strictly increasing, response(0)=0
};

inline constexpr Scalar kStrainFloorPct = 0.005;
inline constexpr Scalar kStrainMaxPct = 155.0;

// Joint angle (deg) → strain contribution (%): extension doesn't stretch the
// yarn, so negative angles contribute nothing.
inline Scalar angle_to_strain(Scalar theta_deg, Scalar pct_per_deg = 0.3) {
  return std::max(theta_deg, Scalar(0)) * pct_per_deg;
}

// 25 x 22 nonnegative map from joint angles to per-sensor strain; each sensor
// dominated by its own joint with light crosstalk from the same finger.
Matrix standard_coupling();

// Band-limited random joint trajectories: per joint a fixed center plus at
// most five sinusoids (0.1–2 Hz / smoothness), clamped to limits. Returns
// duration*20Hz x 22 degrees. Abduction centers sit positive so their strain
// response stays observable.
Matrix generate_trajectory(std::uint64_t seed, Scalar duration_s, Scalar smoothness = 1.0);

struct SimResult {
  std::vector<signal::SensorFrame> frames;
  Matrix angles;        // copy of the trajectory driving the frames
  long clipped = 0;     // strain samples clipped into [0, 155]
};

// response_i(t) = gauge(Σ_j coupling[i][j]·g(θ_j)) + drift·t + noise, with
// quaternions synthesized from the wrist angle rows (±0.5° orientation noise).
SimResult simulate_sensors(const Matrix& trajectory_deg, const GaugeModel& gauge,
                           const Matrix& coupling, std::uint64_t noise_seed,
                           Scalar imu_noise_deg = 0.5);

}  // namespace glove::synth
