#include "glove/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace glove::dataset {

using nlohmann::json;

const std::vector<std::string>& canonical_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c;
    c.emplace_back("t_ms");
    char buf[16];
    for (int i = 0; i < kStrainChannels; ++i) {
      std::snprintf(buf, sizeof buf, "s%02d", i);
      c.emplace_back(buf);
    }
    for (const char* q : {"qh", "qf"})
      for (const char* a : {"_w", "_x", "_y", "_z"}) c.emplace_back(std::string(q) + a);
    for (int i = 0; i < kJointCount; ++i) {
      std::snprintf(buf, sizeof buf, "ang%02d", i);
      c.emplace_back(buf);
    }
    return c;
  }();
  return cols;
}

namespace {

[[noreturn]] void parse_fail(const std::string& name, long line, const std::string& why) {
  throw GloveError(ErrorCategory::dataset_parse,
                   name + ":" + std::to_string(line) + ": " + why);
}

Scalar parse_number(const char*& p, const char* end, const std::string& name, long line,
                    const std::string& col) {
  while (p < end && (*p == ' ' || *p == '\t')) ++p;
  Scalar v = 0;
  auto [ptr, ec] = std::from_chars(p, end, v);
  if (ec != std::errc()) parse_fail(name, line, "bad value in column '" + col + "'");
  p = ptr;
  return v;
}

void append_g9(std::string& out, Scalar v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", v);
  out.append(buf, n);
}

}  // namespace

// ---------------------------------------------------------------------------

Reader::Reader(const std::string& path) : file_(path), in_(&file_), name_(path) {
  if (!file_) throw GloveError(ErrorCategory::io, "cannot open dataset: " + path);
  parse_header();
}

Reader::Reader(std::istream& stream, const std::string& name) : in_(&stream), name_(name) {
  parse_header();
}

void Reader::parse_header() {
  std::string line;
  bool saw_magic = false, saw_columns = false;
  while (in_->peek() == '#' && std::getline(*in_, line)) {
    ++line_;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "#glove-dataset") {
      std::string ver;
      ls >> ver;
      if (ver.size() < 2 || ver[0] != 'v') parse_fail(name_, line_, "bad version tag '" + ver + "'");
      header_.version = std::atoi(ver.c_str() + 1);
      if (header_.version != 1)
        parse_fail(name_, line_, "unsupported dataset version " + std::to_string(header_.version));
      saw_magic = true;
    } else if (tag == "#rate_hz") {
      ls >> header_.rate_hz;
      if (!(header_.rate_hz > 0)) parse_fail(name_, line_, "sample rate must be positive");
    } else if (tag == "#subject") {
      ls >> header_.subject;
    } else if (tag == "#session") {
      ls >> header_.session;
    } else if (tag == "#meta") {
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      header_.extra_meta.push_back(rest);
    } else if (tag == "#columns") {
      std::string col;
      while (ls >> col) header_.columns.push_back(col);
      saw_columns = true;
      break;
    } else {
      parse_fail(name_, line_, "unknown header line '" + tag + "'");
    }
  }
  if (!saw_magic) parse_fail(name_, line_ + 1, "missing #glove-dataset header");
  if (!saw_columns) parse_fail(name_, line_ + 1, "missing #columns header");

  const auto& want = canonical_columns();
  for (size_t i = 0; i < want.size(); ++i) {
    if (i >= header_.columns.size() || header_.columns[i] != want[i])
      parse_fail(name_, line_, "missing or misplaced column '" + want[i] + "'");
  }
  size_t i = want.size();
  if (i < header_.columns.size() && header_.columns[i] == "label") {
    header_.has_label = true;
    ++i;
  }
  if (i < header_.columns.size() && header_.columns[i] == "tap") {
    header_.has_tap = true;
    ++i;
  }
  if (i != header_.columns.size())
    parse_fail(name_, line_, "unexpected column '" + header_.columns[i] + "'");
  n_cols_ = header_.columns.size();
}

bool Reader::next(Row& row) {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    const auto& cols = header_.columns;

    row.frame.timestamp_ms =
        static_cast<std::int64_t>(std::llround(parse_number(p, end, name_, line_, cols[0])));
    for (int s = 0; s < kStrainChannels; ++s)
      row.frame.hsy(s) = parse_number(p, end, name_, line_, cols[1 + s]);
    Scalar q[8];
    for (int k = 0; k < 8; ++k) q[k] = parse_number(p, end, name_, line_, cols[26 + k]);
    row.frame.quat_hand = signal::Quaternion(q[0], q[1], q[2], q[3]);
    row.frame.quat_forearm = signal::Quaternion(q[4], q[5], q[6], q[7]);
    row.angles.resize(kJointCount);
    for (int j = 0; j < kJointCount; ++j)
      row.angles(j) = parse_number(p, end, name_, line_, cols[34 + j]);
    row.label = header_.has_label
                    ? static_cast<int>(std::llround(parse_number(p, end, name_, line_, "label")))
                    : -1;
    row.tap = header_.has_tap
                  ? static_cast<int>(std::llround(parse_number(p, end, name_, line_, "tap")))
                  : 0;
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    if (p != end) parse_fail(name_, line_, "trailing data beyond declared columns");
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

void write_header(std::ostream& os, const Header& h) {
  os << "#glove-dataset v" << h.version << "\n";
  os << "#rate_hz " << h.rate_hz << "\n";
  os << "#subject " << h.subject << "\n";
  os << "#session " << h.session << "\n";
  for (const auto& m : h.extra_meta) os << "#meta " << m << "\n";
  os << "#columns";
  for (const auto& c : canonical_columns()) os << ' ' << c;
  if (h.has_label) os << " label";
  if (h.has_tap) os << " tap";
  os << "\n";
}

void write_row(std::ostream& os, const Row& row, const Header& h) {
  std::string line;
  line.reserve(16 * 60);
  line += std::to_string(row.frame.timestamp_ms);
  for (int s = 0; s < kStrainChannels; ++s) {
    line += ' ';
    append_g9(line, row.frame.hsy(s));
  }
  for (const signal::Quaternion* q : {&row.frame.quat_hand, &row.frame.quat_forearm}) {
    for (Scalar v : {q->w(), q->x(), q->y(), q->z()}) {
      line += ' ';
      append_g9(line, v);
    }
  }
  for (Index j = 0; j < row.angles.size(); ++j) {
    line += ' ';
    append_g9(line, row.angles(j));
  }
  if (h.has_label) {
    line += ' ';
    line += std::to_string(row.label);
  }
  if (h.has_tap) {
    line += ' ';
    line += std::to_string(row.tap);
  }
  line += '\n';
  os.write(line.data(), static_cast<std::streamsize>(line.size()));
}

DatasetFile read_dataset(const std::string& path) {
  Reader r(path);
  DatasetFile d;
  d.header = r.header();
  std::vector<Vector> angle_rows;
  Row row;
  while (r.next(row)) {
    d.frames.push_back(row.frame);
    angle_rows.push_back(row.angles);
    if (d.header.has_label) d.labels.push_back(row.label);
    if (d.header.has_tap) d.tap_mask.push_back(row.tap);
  }
  d.angles.resize(static_cast<Index>(angle_rows.size()), kJointCount);
  for (Index i = 0; i < d.angles.rows(); ++i) d.angles.row(i) = angle_rows[i].transpose();
  return d;
}

void write_dataset(const DatasetFile& data, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw GloveError(ErrorCategory::io, "cannot open for write: " + path);
  write_header(os, data.header);
  Row row;
  for (Index i = 0; i < data.size(); ++i) {
    row.frame = data.frames[i];
    row.angles = data.angles.row(i).transpose();
    row.label = data.header.has_label ? data.labels[i] : -1;
    row.tap = data.header.has_tap ? data.tap_mask[i] : 0;
    write_row(os, row, data.header);
  }
  if (!os) throw GloveError(ErrorCategory::io, "write failed: " + path);
}

// ---------------------------------------------------------------------------

DatasetFile adapt_external(const std::string& source_path, const std::string& mapping_json_path) {
  json mapping = json::object();
  {
    std::ifstream ms(mapping_json_path);
    if (!ms) throw GloveError(ErrorCategory::io, "cannot open mapping: " + mapping_json_path);
    try {
      ms >> mapping;
    } catch (const json::exception& e) {
      throw GloveError(ErrorCategory::config, std::string("bad mapping JSON: ") + e.what());
    }
  }
  std::string units = mapping.value("angle_units", "degrees");
  Scalar angle_scale = 1.0;
  if (units == "radians")
    angle_scale = 180.0 / kPi;
  else if (units != "degrees")
    throw GloveError(ErrorCategory::config, "unsupported angle_units '" + units + "'");
  json colmap = mapping.value("columns", json::object());

  std::ifstream is(source_path);
  if (!is) throw GloveError(ErrorCategory::io, "cannot open source: " + source_path);

  // Header: prefer a '#columns' line; otherwise the first non-comment line
  // names the columns. Canonical '#' metadata passes through when present.
  DatasetFile out;
  std::vector<std::string> src_cols;
  long line_no = 0;
  std::string line;
  while (is.peek() == '#' && std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    std::string rest;
    std::getline(ls, rest);
    if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
    if (tag == "#columns") {
      std::istringstream cs(rest);
      std::string c;
      while (cs >> c) src_cols.push_back(c);
      break;
    } else if (tag == "#rate_hz") {
      out.header.rate_hz = std::atof(rest.c_str());
    } else if (tag == "#subject") {
      out.header.subject = rest;
    } else if (tag == "#session") {
      out.header.session = rest;
    } else if (tag == "#meta") {
      out.header.extra_meta.push_back(rest);
    }  // other tags (e.g. #glove-dataset) carry no adapter-relevant payload
  }
  if (src_cols.empty()) {
    if (!std::getline(is, line)) parse_fail(source_path, line_no + 1, "no column row");
    ++line_no;
    std::istringstream cs(line);
    std::string c;
    while (cs >> c) src_cols.push_back(c);
  }

  auto source_index = [&](const std::string& canonical) -> int {
    const std::string wanted =
        colmap.contains(canonical) ? colmap.at(canonical).get<std::string>() : canonical;
    auto it = std::find(src_cols.begin(), src_cols.end(), wanted);
    return it == src_cols.end() ? -1 : static_cast<int>(it - src_cols.begin());
  };

  const auto& want = canonical_columns();
  std::vector<int> idx(want.size());
  for (size_t i = 0; i < want.size(); ++i) {
    idx[i] = source_index(want[i]);
    if (idx[i] < 0)
      throw GloveError(ErrorCategory::dataset_parse,
                       "adapter: required column '" + want[i] + "' not mappable");
  }
  const int label_idx = source_index("label");
  const int tap_idx = source_index("tap");
  out.header.has_label = label_idx >= 0;
  out.header.has_tap = tap_idx >= 0;

  std::vector<bool> used(src_cols.size(), false);
  for (int i : idx) used[i] = true;
  if (label_idx >= 0) used[label_idx] = true;
  if (tap_idx >= 0) used[tap_idx] = true;
  std::string extras;
  for (size_t i = 0; i < src_cols.size(); ++i)
    if (!used[i]) extras += (extras.empty() ? "" : " ") + src_cols[i];
  if (!extras.empty()) out.header.extra_meta.push_back("extra_columns " + extras);

  std::vector<Vector> angle_rows;
  std::vector<Scalar> vals(src_cols.size());
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const char* p = line.data();
    const char* end = p + line.size();
    for (size_t i = 0; i < src_cols.size(); ++i)
      vals[i] = parse_number(p, end, source_path, line_no, src_cols[i]);
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    if (p != end) parse_fail(source_path, line_no, "trailing data beyond declared columns");

    Row row;
    row.frame.timestamp_ms = static_cast<std::int64_t>(std::llround(vals[idx[0]]));
    for (int s = 0; s < kStrainChannels; ++s) row.frame.hsy(s) = vals[idx[1 + s]];
    row.frame.quat_hand =
        signal::Quaternion(vals[idx[26]], vals[idx[27]], vals[idx[28]], vals[idx[29]]);
    row.frame.quat_forearm =
        signal::Quaternion(vals[idx[30]], vals[idx[31]], vals[idx[32]], vals[idx[33]]);
    Vector angles(kJointCount);
    for (int j = 0; j < kJointCount; ++j) angles(j) = vals[idx[34 + j]] * angle_scale;
    out.frames.push_back(row.frame);
    angle_rows.push_back(angles);
    if (out.header.has_label) out.labels.push_back(static_cast<int>(std::llround(vals[label_idx])));
    if (out.header.has_tap) out.tap_mask.push_back(static_cast<int>(std::llround(vals[tap_idx])));
  }
  out.angles.resize(static_cast<Index>(angle_rows.size()), kJointCount);
  for (Index i = 0; i < out.angles.rows(); ++i) out.angles.row(i) = angle_rows[i].transpose();
  return out;
}

Matrix frames_to_channel_rows(const std::vector<signal::SensorFrame>& frames,
                              bool baseline_correct, int baseline_window) {
  if (!baseline_correct) return signal::frames_to_channels(frames);
  return signal::frames_to_channels(signal::baseline_correct(frames, baseline_window));
}

}  // namespace glove::dataset
