#pragma once

// Flat self-supervised label codec over (location, type) pairs.

#include <stdexcept>
#include <string>

namespace seeable {

// Discrepancy families: spatial photometric edits vs. frequency-domain ones.
inline constexpr int kTypeSpatial = 0;
inline constexpr int kTypeFrequency = 1;
inline constexpr int kNumTypes = 2;

struct DiscrepancyLabel {
  int y_loc = 0;
  int y_type = 0;
  int y = 0;  // y_loc * n_type + y_type
};

inline int encode_label(int y_loc, int y_type, int n_type) {
  if (n_type < 1) throw std::invalid_argument("encode_label: n_type must be positive");
  if (y_loc < 0) throw std::domain_error("encode_label: y_loc out of range");
  if (y_type < 0 || y_type >= n_type) throw std::domain_error("encode_label: y_type out of range");
  return y_loc * n_type + y_type;
}

inline DiscrepancyLabel decode_label(int y, int n_type) {
  if (n_type < 1) throw std::invalid_argument("decode_label: n_type must be positive");
  if (y < 0) throw std::domain_error("decode_label: y out of range");
  return {y / n_type, y % n_type, y};
}

inline DiscrepancyLabel make_label(int y_loc, int y_type, int n_type, int n_loc) {
  if (y_loc >= n_loc) throw std::domain_error("make_label: y_loc out of range");
  return {y_loc, y_type, encode_label(y_loc, y_type, n_type)};
}

// Position / type accessors on a flat label.
inline int label_pos(int y, int n_type) { return y / n_type; }
inline int label_type(int y, int n_type) { return y % n_type; }

}  // namespace seeable
