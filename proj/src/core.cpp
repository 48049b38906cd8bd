#include "glove/core.hpp"

#include <cstdio>

namespace glove {

const char* error_category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::shape_mismatch: return "shape-mismatch";
    case ErrorCategory::dataset_parse: return "dataset-parse";
    case ErrorCategory::checkpoint_corrupt: return "corrupt-checkpoint";
    case ErrorCategory::checkpoint_version: return "unsupported-version";
    case ErrorCategory::checkpoint_hash: return "config-hash-mismatch";
    case ErrorCategory::calibration: return "calibration";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::io: return "io";
    case ErrorCategory::usage: return "usage";
  }
  return "unknown";
}

const std::vector<std::string>& joint_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const char* finger : {"pinky", "ring", "middle", "index"})
      for (const char* joint : {"mcp_flex", "mcp_abd", "pip_flex", "dip_flex"})
        v.push_back(std::string(finger) + "_" + joint);
    v.insert(v.end(), {"thumb_mcp_flex", "thumb_mcp_abd", "thumb_ip_flex"});
    v.insert(v.end(), {"wrist_flex", "wrist_abd", "wrist_sup"});
    return v;
  }();
  return names;
}

const std::vector<std::string>& input_channel_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (int i = 0; i < kStrainChannels; ++i) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "s%02d", i);
      v.push_back(buf);
    }
    v.insert(v.end(), {"wrist_flex_in", "wrist_abd_in", "wrist_sup_in"});
    return v;
  }();
  return names;
}

// Sensor layout: 0..11 finger flex triplets (pinky,ring,middle,index x MCP,PIP,DIP),
// 12..13 thumb MCP/IP, 14..18 abduction (pinky..index, thumb), 19..23 fingertips
// (thumb,index,middle,ring,pinky), 24 palm.
int fingertip_channel(int finger_on_hand) {
  if (finger_on_hand < 0 || finger_on_hand > 4)
    throw GloveError(ErrorCategory::config, "finger_on_hand must be 0..4");
  return 19 + finger_on_hand;
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace glove
