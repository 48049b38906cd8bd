#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace glove {

// All numerics run in double; tests and gradient checks assume it.
using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
using ArrayXX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

inline constexpr int kStrainChannels = 25;
inline constexpr int kWristChannels = 3;   // flex, abd, sup appended after the strain block
inline constexpr int kInputChannels = kStrainChannels + kWristChannels;
inline constexpr int kJointCount = 22;
inline constexpr int kWindowLength = 40;   // 2 s of history at 20 Hz
inline constexpr double kSampleRateHz = 20.0;

constexpr Scalar kPi = 3.14159265358979323846;
inline Scalar deg2rad(Scalar d) { return d * kPi / 180.0; }
inline Scalar rad2deg(Scalar r) { return r * 180.0 / kPi; }

enum class ErrorCategory {
  config,
  shape_mismatch,
  dataset_parse,
  checkpoint_corrupt,
  checkpoint_version,
  checkpoint_hash,
  calibration,
  numeric,
  io,
  usage,
};

const char* error_category_name(ErrorCategory c);

// Single exception type; the category keeps CLI failures machine-parsable.
class GloveError : public std::runtime_error {
 public:
  GloveError(ErrorCategory cat, const std::string& what)
      : std::runtime_error(what), cat_(cat) {}
  ErrorCategory category() const { return cat_; }
  const char* category_name() const { return error_category_name(cat_); }

 private:
  ErrorCategory cat_;
};

// Joint order matches JointAngleVector: {pinky, ring, middle, index} x
// {MCP-flex, MCP-abd, PIP-flex, DIP-flex}, thumb {MCP-flex, MCP-abd, IP-flex},
// wrist {flex, abd, sup}.
const std::vector<std::string>& joint_names();

// Channel order for the 28-column model input: s00..s24 then wrist flex/abd/sup.
const std::vector<std::string>& input_channel_names();

// Fingertip strain channel inside this project's 25-sensor layout, shared by
// the simulator and the tap detector. Fingers per hand: 0=thumb..4=pinky.
int fingertip_channel(int finger_on_hand);

// FNV-1a, used for config hashes and freeze checks.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace glove
