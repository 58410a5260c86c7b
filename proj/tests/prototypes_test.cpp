#include "seeable/prototypes.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "seeable/common.hpp"
#include "testutil.hpp"

using namespace seeable;

TEST(Prototypes, EquilateralTriangleInR2) {
  const auto ps = make_simplex_prototypes(2, 3);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(norm(ps.row(i)), 1.0, 1e-9);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) EXPECT_NEAR(dot(ps.row(i), ps.row(j)), -0.5, 1e-9);
}

TEST(Prototypes, PaperScaleGram) {
  const auto ps = make_simplex_prototypes(128, 33);
  int pairs = 0;
  for (int i = 0; i < 33; ++i) {
    EXPECT_NEAR(norm(ps.row(i)), 1.0, 1e-9);
    for (int j = i + 1; j < 33; ++j) {
      EXPECT_NEAR(dot(ps.row(i), ps.row(j)), -0.03125, 1e-9);
      ++pairs;
    }
  }
  EXPECT_EQ(pairs, 528);
  EXPECT_NO_THROW(validate(ps));
}

// Independent oracle: maximize the minimum pairwise angle of `count` unit
// vectors by projected gradient ascent, using a smooth inverse-square
// repulsion surrogate. For count <= dim + 1 the optimum is the regular
// simplex with constant pairwise dot -1/(count-1).
static std::vector<double> packing_oracle_gram(int dim, int count, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> v(count, std::vector<double>(dim));
  for (auto& row : v) {
    for (double& x : row) x = rng.normal();
    normalize_inplace(row);
  }
  const int steps = 20000;
  for (int step = 0; step < steps; ++step) {
    const double lr = 0.05 * (1.0 - 0.95 * step / steps);
    std::vector<std::vector<double>> g(count, std::vector<double>(dim, 0.0));
    for (int i = 0; i < count; ++i)
      for (int j = i + 1; j < count; ++j) {
        double d2 = 0.0;
        for (int c = 0; c < dim; ++c) {
          const double t = v[i][c] - v[j][c];
          d2 += t * t;
        }
        const double w = 1.0 / (d2 * d2);
        for (int c = 0; c < dim; ++c) {
          const double t = v[i][c] - v[j][c];
          g[i][c] += w * t;  // push apart
          g[j][c] -= w * t;
        }
      }
    for (int i = 0; i < count; ++i) {
      for (int c = 0; c < dim; ++c) v[i][c] += lr * g[i][c];
      normalize_inplace(v[i]);
    }
  }
  std::vector<double> offdiag;
  for (int i = 0; i < count; ++i)
    for (int j = i + 1; j < count; ++j) offdiag.push_back(dot(v[i], v[j]));
  std::sort(offdiag.begin(), offdiag.end());
  return offdiag;
}

TEST(Prototypes, AnalyticMatchesPackingOracle) {
  const auto ps = make_simplex_prototypes(4, 5);
  std::vector<double> analytic;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) analytic.push_back(dot(ps.row(i), ps.row(j)));
  std::sort(analytic.begin(), analytic.end());
  for (double d : analytic) EXPECT_NEAR(d, -0.25, 1e-9);

  const auto oracle = packing_oracle_gram(4, 5, 17);
  ASSERT_EQ(oracle.size(), analytic.size());
  for (size_t k = 0; k < oracle.size(); ++k) EXPECT_NEAR(oracle[k], analytic[k], 2e-3);
}

TEST(Prototypes, RejectsBadCounts) {
  EXPECT_THROW(make_simplex_prototypes(8, 1), std::invalid_argument);
  EXPECT_THROW(make_simplex_prototypes(8, 0), std::invalid_argument);
  EXPECT_THROW(make_simplex_prototypes(4, 6), std::invalid_argument);
  EXPECT_NO_THROW(make_simplex_prototypes(4, 5));
}

TEST(Prototypes, FullSimplexCentroidAtOrigin) {
  for (int dim : {2, 7, 32}) {
    const auto ps = make_simplex_prototypes(dim, dim + 1);
    std::vector<double> mean(dim, 0.0);
    for (int i = 0; i < ps.count; ++i) axpy(1.0 / ps.count, ps.row(i), mean);
    EXPECT_LE(norm(mean), 1e-8) << "dim=" << dim;
  }
}

TEST(Prototypes, GramPropertyAcrossShapes) {
  for (auto [dim, count] : {std::pair{3, 3}, {8, 5}, {16, 17}, {200, 33}, {5, 2}}) {
    const auto ps = make_simplex_prototypes(dim, count);
    EXPECT_NO_THROW(validate(ps)) << dim << "," << count;
  }
}

TEST(CosineSimilarity, Basics) {
  std::vector<double> v{0.3, -1.2, 2.0};
  std::vector<double> nv{-0.3, 1.2, -2.0};
  EXPECT_DOUBLE_EQ(cosine_similarity(v, v), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(v, nv), -1.0);
  std::vector<double> e1{1, 0, 0}, e2{0, 1, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(e1, e2), 0.0);
  std::vector<double> zero{0, 0, 0};
  EXPECT_THROW(cosine_similarity(v, zero), std::domain_error);
  EXPECT_THROW(cosine_similarity(zero, v), std::domain_error);
}

TEST(DSim, PrototypePairs) {
  const auto ps = make_simplex_prototypes(128, 33);
  EXPECT_NEAR(d_sim(ps.row(4), ps.row(4)), 0.0, 1e-12);
  // simplex dot -1/32 -> distance 1 + 1/32 everywhere off-diagonal
  for (auto [i, j] : {std::pair{0, 1}, {5, 20}, {31, 32}})
    EXPECT_NEAR(d_sim(ps.row(i), ps.row(j)), 1.03125, 1e-9);
  // wrong-class distance K/(K-1)
  EXPECT_NEAR(d_sim(ps.row(2), ps.row(9)), 33.0 / 32.0, 1e-9);
}

TEST(MatchPrototype, ExactAndPerturbed) {
  const auto ps = make_simplex_prototypes(16, 9);
  for (int k = 0; k < ps.count; ++k) EXPECT_EQ(match_prototype(ps.row(k), ps), k);

  // blend toward p1, still nearest to p1; checked against an exhaustive scan
  std::vector<double> z(ps.dim);
  for (int c = 0; c < ps.dim; ++c) z[c] = 0.9 * ps.row(1)[c] + 0.1 * ps.row(2)[c];
  normalize_inplace(z);
  int expected = 0;
  double best = -2.0;
  for (int k = 0; k < ps.count; ++k) {
    const double s = cosine_similarity(z, ps.row(k));
    if (s > best) {
      best = s;
      expected = k;
    }
  }
  EXPECT_EQ(expected, 1);
  EXPECT_EQ(match_prototype(z, ps), expected);
}

TEST(MatchPrototype, TieBreaksToSmallestIndex) {
  // exact tie by construction: orthogonal prototypes, anchor on the bisector
  PrototypeSet ps;
  ps.dim = 2;
  ps.count = 2;
  ps.data = {1.0, 0.0, 0.0, 1.0};
  std::vector<double> z{0.5, 0.5};
  normalize_inplace(z);
  ASSERT_EQ(z[0], z[1]);
  EXPECT_EQ(match_prototype(z, ps), 0);

  // midpoint of two simplex vertices (K=3, D=2)
  const auto tri = make_simplex_prototypes(2, 3);
  std::vector<double> mid(2);
  for (int c = 0; c < 2; ++c) mid[c] = 0.5 * (tri.row(0)[c] + tri.row(1)[c]);
  normalize_inplace(mid);
  const double s0 = cosine_similarity(mid, tri.row(0));
  const double s1 = cosine_similarity(mid, tri.row(1));
  const int got = match_prototype(mid, tri);
  if (s0 == s1) {
    EXPECT_EQ(got, 0);
  } else {
    EXPECT_EQ(got, s0 > s1 ? 0 : 1);
    EXPECT_NEAR(s0, s1, 1e-15);
  }
}

TEST(MatchPrototype, ScaleInvariant) {
  const auto ps = make_simplex_prototypes(12, 7);
  Rng rng(99);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> z(ps.dim);
    for (double& v : z) v = rng.normal();
    const int base = match_prototype(z, ps);
    for (double scale : {0.001, 7.3, 4096.0}) {
      std::vector<double> zs(z);
      for (double& v : zs) v *= scale;
      EXPECT_EQ(match_prototype(zs, ps), base);
    }
  }
}

TEST(PrototypeIO, ExactRoundTrip) {
  testutil::TempDir dir("seeable_proto_io");
  const auto ps = make_simplex_prototypes(19, 11);
  const std::string path = dir.str() + "/protos.txt";
  save_prototypes(path, ps);
  const auto back = load_prototypes(path);
  ASSERT_EQ(back.dim, ps.dim);
  ASSERT_EQ(back.count, ps.count);
  ASSERT_EQ(back.data.size(), ps.data.size());
  for (size_t i = 0; i < ps.data.size(); ++i) EXPECT_EQ(back.data[i], ps.data[i]) << i;
}

TEST(PrototypeIO, RejectsBadFiles) {
  testutil::TempDir dir("seeable_proto_bad");
  EXPECT_THROW(load_prototypes(dir.str() + "/missing.txt"), DataError);
  const std::string path = dir.str() + "/garbage.txt";
  {
    std::ofstream f(path);
    f << "not a prototype file\n";
  }
  EXPECT_THROW(load_prototypes(path), DataError);
}
