#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "glove/core.hpp"
#include "glove/signal.hpp"

namespace glove::dataset {

// Canonical on-disk dataset: '#'-prefixed header, then one whitespace-
// separated row per frame at 9 significant digits. Base columns: t_ms,
// s00..s24, qh_w..qh_z, qf_w..qf_z, ang00..ang21; optional trailing label
// and tap columns.
struct Header {
  int version = 1;
  Scalar rate_hz = kSampleRateHz;
  std::string subject = "synth";
  std::string session = "a";
  std::vector<std::string> columns;  // filled on read; canonical on write
  bool has_label = false;
  bool has_tap = false;
  std::vector<std::string> extra_meta;  // passthrough "#meta ..." lines
};

struct Row {
  signal::SensorFrame frame;
  Vector angles;  // 22, degrees
  int label = -1;
  int tap = 0;
};

struct DatasetFile {
  Header header;
  std::vector<signal::SensorFrame> frames;
  Matrix angles;  // N x 22
  std::vector<int> labels;      // empty unless has_label
  std::vector<int> tap_mask;    // empty unless has_tap
  Index size() const { return static_cast<Index>(frames.size()); }
};

const std::vector<std::string>& canonical_columns();  // the 56 base names

// Streaming row reader; memory stays bounded regardless of file size.
class Reader {
 public:
  explicit Reader(const std::string& path);
  Reader(std::istream& stream, const std::string& name);  // caller keeps ownership

  const Header& header() const { return header_; }
  bool next(Row& row);  // false at EOF; throws dataset_parse with line number
  long line_number() const { return line_; }

 private:
  void parse_header();
  std::ifstream file_;
  std::istream* in_;
  std::string name_;
  Header header_;
  long line_ = 0;
  std::size_t n_cols_ = 0;
};

DatasetFile read_dataset(const std::string& path);
void write_dataset(const DatasetFile& data, const std::string& path);
void write_header(std::ostream& os, const Header& h);
void write_row(std::ostream& os, const Row& row, const Header& h);

// Column-remapping adapter for externally published recordings: the mapping
// JSON gives {"columns": {canonical: source, ...}, "angle_units": "degrees"}.
// Source files carry their own '#columns' (or first-line) name row; unmapped
// source columns are preserved as "#meta extra ..." notes.
DatasetFile adapt_external(const std::string& source_path, const std::string& mapping_json_path);

// Model-input assembly: baseline-corrected strain + IMU-derived wrist angles,
// one row per frame (N x 28).
Matrix frames_to_channel_rows(const std::vector<signal::SensorFrame>& frames,
                              bool baseline_correct = true, int baseline_window = 400);

}  // namespace glove::dataset
