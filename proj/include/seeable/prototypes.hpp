#pragma once

// Evenly-distributed unit-norm class prototypes (regular-simplex vertices)
// plus the similarity primitives used for regression targets and matching.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "seeable/common.hpp"

namespace seeable {

// K unit vectors in R^D with constant pairwise dot -1/(K-1).
struct PrototypeSet {
  int dim = 0;
  int count = 0;
  std::vector<double> data;  // row-major count x dim

  std::span<const double> row(int k) const {
    if (k < 0 || k >= count) throw std::out_of_range("PrototypeSet::row: bad index");
    return {data.data() + static_cast<size_t>(k) * dim, static_cast<size_t>(dim)};
  }
};

// Checks unit norms and the constant off-diagonal Gram structure.
inline void validate(const PrototypeSet& ps, double tol = 1e-9) {
  if (ps.count < 2 || ps.count > ps.dim + 1)
    throw std::invalid_argument("PrototypeSet: need 2 <= count <= dim + 1");
  if (ps.data.size() != static_cast<size_t>(ps.count) * ps.dim)
    throw std::invalid_argument("PrototypeSet: data size mismatch");
  const double target = -1.0 / (ps.count - 1);
  for (int i = 0; i < ps.count; ++i) {
    if (std::abs(norm(ps.row(i)) - 1.0) > tol)
      throw NumericError("PrototypeSet: row " + std::to_string(i) + " not unit norm");
    for (int j = i + 1; j < ps.count; ++j) {
      if (std::abs(dot(ps.row(i), ps.row(j)) - target) > tol)
        throw NumericError("PrototypeSet: off-diagonal Gram entry out of tolerance");
    }
  }
}

// Analytic regular-simplex vertices: K points with pairwise dot -1/(K-1),
// constructed in R^(K-1) and zero-padded up to R^dim. The first vertex is
// (1/sqrt(n)) * ones, the others are a * ones + b * e_i with n = K-1.
inline PrototypeSet make_simplex_prototypes(int dim, int count) {
  if (dim < 1) throw std::invalid_argument("make_simplex_prototypes: dim must be positive");
  if (count < 2 || count > dim + 1)
    throw std::invalid_argument("make_simplex_prototypes: need 2 <= count <= dim + 1");
  const int n = count - 1;
  const double ns = static_cast<double>(n);
  const double a = -(1.0 + std::sqrt(ns + 1.0)) / (ns * std::sqrt(ns));
  const double b = std::sqrt((ns + 1.0) / ns);

  PrototypeSet ps;
  ps.dim = dim;
  ps.count = count;
  ps.data.assign(static_cast<size_t>(count) * dim, 0.0);
  for (int c = 0; c < n; ++c) ps.data[c] = 1.0 / std::sqrt(ns);
  for (int i = 1; i < count; ++i) {
    double* row = ps.data.data() + static_cast<size_t>(i) * dim;
    for (int c = 0; c < n; ++c) row[c] = a;
    row[i - 1] += b;
  }
  for (int i = 0; i < count; ++i) {
    std::span<double> row(ps.data.data() + static_cast<size_t>(i) * dim,
                          static_cast<size_t>(dim));
    normalize_inplace(row);  // no-op up to floating error
  }
  return ps;
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: size mismatch");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw std::domain_error("cosine_similarity: zero-norm input");
  if (std::equal(a.begin(), a.end(), b.begin())) return 1.0;  // sim(a, a) = 1 exactly
  const double s = dot(a, b) / (na * nb);
  return std::min(1.0, std::max(-1.0, s));
}

// 1 - cos similarity; the regression variable when b is the class prototype.
inline double d_sim(std::span<const double> a, std::span<const double> b) {
  return 1.0 - cosine_similarity(a, b);
}

// Index of the most similar prototype; ties break to the smallest index.
inline int match_prototype(std::span<const double> z, const PrototypeSet& protos) {
  if (static_cast<int>(z.size()) != protos.dim)
    throw std::invalid_argument("match_prototype: dimension mismatch");
  int best = 0;
  double best_sim = cosine_similarity(z, protos.row(0));
  for (int k = 1; k < protos.count; ++k) {
    const double s = cosine_similarity(z, protos.row(k));
    if (s > best_sim) {
      best_sim = s;
      best = k;
    }
  }
  return best;
}

// Largest |off-diagonal - (-1/(K-1))| and |norm - 1| over the set.
struct GramDeviation {
  double max_offdiag_dev = 0.0;
  double max_norm_dev = 0.0;
};

inline GramDeviation gram_deviation(const PrototypeSet& ps) {
  GramDeviation d;
  const double target = -1.0 / (ps.count - 1);
  for (int i = 0; i < ps.count; ++i) {
    d.max_norm_dev = std::max(d.max_norm_dev, std::abs(norm(ps.row(i)) - 1.0));
    for (int j = i + 1; j < ps.count; ++j)
      d.max_offdiag_dev =
          std::max(d.max_offdiag_dev, std::abs(dot(ps.row(i), ps.row(j)) - target));
  }
  return d;
}

// Text matrix file, version header then one row per line. 17 significant
// digits so doubles round-trip exactly.
inline void save_prototypes(const std::string& path, const PrototypeSet& ps) {
  std::ofstream f(path);
  if (!f) throw DataError("save_prototypes: cannot open " + path);
  f << "seeable-prototypes v1\n" << ps.dim << " " << ps.count << "\n";
  char buf[64];
  for (int i = 0; i < ps.count; ++i) {
    auto row = ps.row(i);
    for (int c = 0; c < ps.dim; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", row[c]);
      f << buf << (c + 1 == ps.dim ? '\n' : ' ');
    }
  }
  if (!f) throw DataError("save_prototypes: write failed for " + path);
}

inline PrototypeSet load_prototypes(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("load_prototypes: cannot open " + path);
  std::string header;
  std::getline(f, header);
  if (header != "seeable-prototypes v1")
    throw DataError("load_prototypes: unsupported header '" + header + "'");
  PrototypeSet ps;
  f >> ps.dim >> ps.count;
  if (!f || ps.dim < 1 || ps.count < 1) throw DataError("load_prototypes: bad dimensions");
  ps.data.resize(static_cast<size_t>(ps.dim) * ps.count);
  for (double& v : ps.data)
    if (!(f >> v)) throw DataError("load_prototypes: truncated matrix");
  return ps;
}

}  // namespace seeable
