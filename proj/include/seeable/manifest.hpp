#pragma once

// Dataset manifest: one record per frame. Delimited text, field order:
//   path,video_id,split,label,lm0_x,lm0_y,...,lm67_x,lm67_y
// with label in {real, fake} and 68 landmark pairs in pixel coordinates.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "seeable/common.hpp"
#include "seeable/image.hpp"

namespace seeable {

struct FrameRecord {
  std::string path;  // image file, relative to the manifest's directory
  std::string video_id;
  std::string split;  // train | val | test
  bool is_fake = false;
  Landmarks landmarks;
};

inline void write_manifest(const std::string& path, const std::vector<FrameRecord>& records) {
  std::ofstream f(path);
  if (!f) throw DataError("write_manifest: cannot open " + path);
  f << "path,video_id,split,label";
  for (int i = 0; i < kNumLandmarks; ++i) f << ",lm" << i << "_x,lm" << i << "_y";
  f << '\n';
  char buf[32];
  for (const auto& r : records) {
    if (r.landmarks.size() != kNumLandmarks)
      throw DataError("write_manifest: record without 68 landmarks");
    f << r.path << ',' << r.video_id << ',' << r.split << ',' << (r.is_fake ? "fake" : "real");
    for (const auto& p : r.landmarks) {
      std::snprintf(buf, sizeof buf, "%.3f", p.x);
      f << ',' << buf;
      std::snprintf(buf, sizeof buf, "%.3f", p.y);
      f << ',' << buf;
    }
    f << '\n';
  }
  if (!f) throw DataError("write_manifest: write failed for " + path);
}

// Reads records and resolves image paths against the manifest's directory.
inline std::vector<FrameRecord> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("read_manifest: cannot open " + path);
  const auto base = std::filesystem::path(path).parent_path();

  std::string line;
  if (!std::getline(f, line)) throw DataError("read_manifest: empty file " + path);
  if (line.rfind("path,video_id,split,label", 0) != 0)
    throw DataError("read_manifest: unexpected header in " + path);

  std::vector<FrameRecord> records;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    FrameRecord r;
    std::string label, field;
    if (!std::getline(ss, r.path, ',') || !std::getline(ss, r.video_id, ',') ||
        !std::getline(ss, r.split, ',') || !std::getline(ss, label, ','))
      throw DataError("read_manifest: truncated record at line " + std::to_string(lineno));
    if (label == "real")
      r.is_fake = false;
    else if (label == "fake")
      r.is_fake = true;
    else
      throw DataError("read_manifest: bad label '" + label + "' at line " +
                      std::to_string(lineno));
    r.landmarks.resize(kNumLandmarks);
    for (int i = 0; i < kNumLandmarks; ++i) {
      if (!std::getline(ss, field, ',')) throw DataError("read_manifest: missing landmarks");
      r.landmarks[i].x = std::stod(field);
      if (!std::getline(ss, field, ',')) throw DataError("read_manifest: missing landmarks");
      r.landmarks[i].y = std::stod(field);
    }
    const std::filesystem::path p(r.path);
    if (p.is_relative()) r.path = (base / p).string();
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace seeable
