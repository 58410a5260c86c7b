#include "seeable/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "seeable/common.hpp"
#include "seeable/graph.hpp"
#include "seeable/prototypes.hpp"
#include "testutil.hpp"

using namespace seeable;

namespace {

EmbeddingBatch random_batch(int n, int dim, int n_classes, uint64_t seed,
                            bool normalize_rows = true) {
  Rng rng(seed);
  EmbeddingBatch b;
  b.n = n;
  b.dim = dim;
  b.z.resize(static_cast<size_t>(n) * dim);
  for (double& v : b.z) v = rng.normal();
  if (normalize_rows)
    for (int i = 0; i < n; ++i)
      normalize_inplace(std::span<double>(b.z.data() + static_cast<size_t>(i) * dim, dim));
  b.labels.resize(n);
  for (int i = 0; i < n; ++i) b.labels[i] = rng.below_int(n_classes);
  return b;
}

// Brute-force SupCon straight from the definition: per-anchor mean NT-Xent
// over its positives with the denominator over all other batch members.
double brute_supcon(const EmbeddingBatch& b, double tau) {
  double total = 0.0;
  for (int i = 0; i < b.n; ++i) {
    std::vector<int> pos;
    for (int j = 0; j < b.n; ++j)
      if (j != i && b.labels[j] == b.labels[i]) pos.push_back(j);
    if (pos.empty()) continue;
    double den = 0.0;
    for (int j = 0; j < b.n; ++j)
      if (j != i) den += std::exp(cosine_similarity(b.row(i), b.row(j)) / tau);
    for (int p : pos)
      total += -std::log(std::exp(cosine_similarity(b.row(i), b.row(p)) / tau) / den) /
               static_cast<double>(pos.size());
  }
  return total;
}

// Brute-force BCR prototype term, mirroring the documented contrast set
// (other-class embeddings plus non-target prototypes).
double brute_bcr(const EmbeddingBatch& b, const PrototypeSet& ps, double tau, int offset) {
  double total = brute_supcon(b, tau);
  for (int i = 0; i < b.n; ++i) {
    const int target = b.labels[i] + offset;
    double den = std::exp(cosine_similarity(b.row(i), ps.row(target)) / tau);
    for (int j = 0; j < b.n; ++j)
      if (j != i && b.labels[j] != b.labels[i])
        den += std::exp(cosine_similarity(b.row(i), b.row(j)) / tau);
    for (int k = 0; k < ps.count; ++k)
      if (k != target) den += std::exp(cosine_similarity(b.row(i), ps.row(k)) / tau);
    int n_pos = 0;
    for (int j = 0; j < b.n; ++j)
      if (j != i && b.labels[j] == b.labels[i]) ++n_pos;
    total += -std::log(std::exp(cosine_similarity(b.row(i), ps.row(target)) / tau) / den) /
             std::max(n_pos, 1);
  }
  return total;
}

EmbeddingBatch collapse_batch(const PrototypeSet& ps, const std::vector<int>& labels,
                              int offset) {
  EmbeddingBatch b;
  b.n = static_cast<int>(labels.size());
  b.dim = ps.dim;
  b.labels = labels;
  b.z.resize(static_cast<size_t>(b.n) * b.dim);
  for (int i = 0; i < b.n; ++i) {
    auto p = ps.row(labels[i] + offset);
    std::copy(p.begin(), p.end(), b.z.begin() + static_cast<size_t>(i) * b.dim);
  }
  return b;
}

// Rotates each row by an angle up to max_angle toward a random tangent.
EmbeddingBatch jitter_batch(const EmbeddingBatch& b, double max_angle, Rng& rng) {
  EmbeddingBatch out = b;
  for (int i = 0; i < b.n; ++i) {
    std::span<double> row(out.z.data() + static_cast<size_t>(i) * b.dim,
                          static_cast<size_t>(b.dim));
    std::vector<double> u(b.dim);
    for (double& v : u) v = rng.normal();
    const double proj = dot(u, row);
    for (int c = 0; c < b.dim; ++c) u[c] -= proj * row[c];
    normalize_inplace(u);
    const double theta = rng.uniform(1e-4, max_angle);
    for (int c = 0; c < b.dim; ++c) row[c] = std::cos(theta) * row[c] + std::sin(theta) * u[c];
  }
  return out;
}

}  // namespace

TEST(NtXent, ScalarArithmeticCases) {
  std::vector<double> a{1, 0, 0};
  std::vector<double> ortho{0, 1, 0};
  // anchor == positive, one orthogonal negative, tau 1
  EXPECT_NEAR(nt_xent(a, a, {ortho}, 1.0), -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0)),
              1e-12);
  // anchor orthogonal to both positive and the single negative
  std::vector<double> b{0, 0, 1};
  EXPECT_NEAR(nt_xent(a, ortho, {b}, 1.0), std::log(2.0), 1e-12);
}

TEST(NtXent, SmallTauSaturatesToZero) {
  std::vector<double> a{1, 0};
  std::vector<double> n1{0, 1}, n2{-1, 0};
  double prev = nt_xent(a, a, {n1, n2}, 1.0);
  for (double tau : {0.3, 0.1, 0.03, 0.01, 0.001}) {
    const double v = nt_xent(a, a, {n1, n2}, tau);
    EXPECT_LE(v, prev);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
  EXPECT_NEAR(prev, 0.0, 1e-12);
}

TEST(NtXent, Errors) {
  std::vector<double> a{1, 0};
  EXPECT_THROW(nt_xent(a, a, {}, 1.0), std::domain_error);
  EXPECT_THROW(nt_xent(a, a, {a}, 0.0), std::invalid_argument);
}

TEST(SupCon, MatchesBruteForceOracle) {
  for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto b = random_batch(9, 6, 3, seed);
    EXPECT_NEAR(supcon(b, 0.5), brute_supcon(b, 0.5), 1e-10);
    EXPECT_NEAR(supcon(b, 0.1), brute_supcon(b, 0.1), 1e-9);
  }
}

TEST(SupCon, TwoAntipodalClasses) {
  EmbeddingBatch b;
  b.n = 4;
  b.dim = 3;
  b.z = {1, 0, 0, 1, 0, 0, -1, 0, 0, -1, 0, 0};
  b.labels = {0, 0, 1, 1};
  EXPECT_NEAR(supcon(b, 1.0), brute_supcon(b, 1.0), 1e-12);
  // analytic: every anchor has one positive at sim 1 and two negatives at -1
  const double expected = 4.0 * (-1.0 + std::log(std::exp(1.0) + 2.0 * std::exp(-1.0)));
  EXPECT_NEAR(supcon(b, 1.0), expected, 1e-12);
}

TEST(SupCon, SingleCollapsedClassIsMinimal) {
  EmbeddingBatch b;
  b.n = 5;
  b.dim = 4;
  b.z.assign(20, 0.0);
  for (int i = 0; i < 5; ++i) b.z[static_cast<size_t>(i) * 4] = 1.0;
  b.labels.assign(5, 0);
  const double collapsed = supcon(b, 0.5);
  EXPECT_NEAR(collapsed, 5.0 * std::log(4.0), 1e-12);
  Rng rng(7);
  for (int t = 0; t < 50; ++t) EXPECT_LT(collapsed, supcon(jitter_batch(b, 0.4, rng), 0.5));
}

TEST(SupCon, PermutationInvariant) {
  const auto b = random_batch(8, 5, 3, 42);
  Rng rng(5);
  const auto perm = rng.permutation(b.n);
  EmbeddingBatch p = b;
  for (int i = 0; i < b.n; ++i) {
    std::copy(b.row(perm[i]).begin(), b.row(perm[i]).end(),
              p.z.begin() + static_cast<size_t>(i) * b.dim);
    p.labels[i] = b.labels[perm[i]];
  }
  EXPECT_NEAR(supcon(b, 0.2), supcon(p, 0.2), 1e-10);
}

TEST(SupCon, DegenerateBatchThrows) {
  auto b = random_batch(4, 5, 4, 11);
  b.labels = {0, 1, 2, 3};
  EXPECT_THROW(supcon(b, 0.5), DataError);
}

TEST(Bcr, MatchesBruteForceOracle) {
  const auto ps = make_simplex_prototypes(8, 5);
  for (uint64_t seed : {10u, 11u, 12u}) {
    const auto b = random_batch(7, 8, 4, seed);
    EXPECT_NEAR(bcr(b, ps, 0.3, nullptr, 0), brute_bcr(b, ps, 0.3, 0), 1e-9);
    EXPECT_NEAR(bcr(b, ps, 0.3, nullptr, 1), brute_bcr(b, ps, 0.3, 1), 1e-9);
  }
}

TEST(Bcr, SingleSamplePerClassBoundary) {
  const auto ps = make_simplex_prototypes(6, 4);
  auto b = random_batch(4, 6, 4, 3);
  b.labels = {0, 1, 2, 3};  // all positive sets empty
  const double v = bcr(b, ps, 0.2);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, brute_bcr(b, ps, 0.2, 0), 1e-10);
}

TEST(Bcr, CollapseBeatsJitteredConfigurations) {
  const auto ps = make_simplex_prototypes(8, 4);
  const std::vector<int> labels{0, 0, 1, 1, 2, 2, 3, 3};
  const auto collapsed = collapse_batch(ps, labels, 0);
  const double v0 = bcr(collapsed, ps, 0.1);
  Rng rng(2024);
  for (int t = 0; t < 200; ++t) {
    const auto j = jitter_batch(collapsed, 0.3, rng);
    EXPECT_LT(v0, bcr(j, ps, 0.1)) << "trial " << t;
  }
}

TEST(Bcr, GradientMatchesFiniteDifferences) {
  const auto ps = make_simplex_prototypes(16, 5);
  for (uint64_t seed : {21u, 22u, 23u}) {
    auto b = random_batch(8, 16, 5, seed);
    std::vector<double> analytic;
    bcr(b, ps, 0.2, &analytic, 0);
    const auto fd = testutil::fd_gradient(
        [&](const std::vector<double>& zs) {
          EmbeddingBatch probe = b;
          probe.z = zs;
          return bcr(probe, ps, 0.2, nullptr, 0);
        },
        b.z);
    EXPECT_LT(testutil::rel_error(analytic, fd), 1e-6);
  }
}

TEST(Bcr, RejectsLabelPrototypeMismatch) {
  const auto ps = make_simplex_prototypes(6, 3);
  auto b = random_batch(4, 6, 3, 9);
  b.labels = {0, 1, 2, 2};
  EXPECT_THROW(bcr(b, ps, 0.2, nullptr, 1), std::invalid_argument);  // 2+1 out of range
}

TEST(Bcr, PrototypeTermMonotoneInTargetLogit) {
  // the per-sample prototype term, as a function of the target similarity
  // with the other logits frozen, never increases as the target grows
  const double tau = 0.15;
  std::vector<double> others{-0.3, 0.1, -0.9, 0.4};
  double prev = std::numeric_limits<double>::infinity();
  for (double s = -1.0; s <= 1.0; s += 0.05) {
    double den = std::exp(s / tau);
    for (double o : others) den += std::exp(o / tau);
    const double term = -std::log(std::exp(s / tau) / den);
    EXPECT_LT(term, prev);
    prev = term;
  }
}

TEST(Losses, OrthogonalTransformInvariance) {
  const auto ps = make_simplex_prototypes(10, 6);
  const auto b = random_batch(8, 10, 6, 77);
  Rng rng(78);
  const auto q = testutil::random_rotation(10, rng);

  EmbeddingBatch rb = b;
  for (int i = 0; i < b.n; ++i) {
    const auto rot = testutil::apply_rotation(q, b.row(i));
    std::copy(rot.begin(), rot.end(), rb.z.begin() + static_cast<size_t>(i) * b.dim);
  }
  PrototypeSet rp = ps;
  for (int k = 0; k < ps.count; ++k) {
    const auto rot = testutil::apply_rotation(q, ps.row(k));
    std::copy(rot.begin(), rot.end(), rp.data.begin() + static_cast<size_t>(k) * ps.dim);
  }

  EXPECT_NEAR(bcr(b, ps, 0.2), bcr(rb, rp, 0.2), 1e-9);
  const auto g = build_grid_graph(3, 1);
  EXPECT_NEAR(guidance_loss(b, ps, g, 2), guidance_loss(rb, rp, g, 2), 1e-9);
}

TEST(Guidance, CollapseIsExactlyZero) {
  const auto ps = make_simplex_prototypes(8, 6);
  const auto g = build_grid_graph(3, 1);
  const auto b = collapse_batch(ps, {0, 1, 2, 3, 4, 5}, 0);
  EXPECT_DOUBLE_EQ(guidance_loss(b, ps, g, 2), 0.0);
}

TEST(Guidance, WrongTypeSamePositionCase) {
  // one sample sitting exactly at the same-position wrong-type prototype
  const int K = 33;
  const auto ps = make_simplex_prototypes(32, K);
  const auto g = build_grid_graph(4, 4);
  EmbeddingBatch b;
  b.n = 2;
  b.dim = ps.dim;
  b.labels = {encode_label(3, 0, 2), encode_label(7, 1, 2)};
  b.z.resize(2 * ps.dim);
  // sample 0 sits at the (3,1) prototype: same position, wrong type
  auto wrong = ps.row(encode_label(3, 1, 2) + 1);
  std::copy(wrong.begin(), wrong.end(), b.z.begin());
  auto right = ps.row(b.labels[1] + 1);
  std::copy(right.begin(), right.end(), b.z.begin() + ps.dim);

  const double v = guidance_loss(b, ps, g, 2, nullptr, 1);
  EXPECT_NEAR(v, 0.25 * static_cast<double>(K) / (K - 1), 1e-9);
}

TEST(Guidance, GradientMatchesFiniteDifferences) {
  const auto ps = make_simplex_prototypes(16, 5);
  const auto g = build_grid_graph(5, 1);
  for (uint64_t seed : {31u, 32u, 33u}) {
    auto b = random_batch(8, 16, 5, seed);
    std::vector<double> analytic;
    guidance_loss(b, ps, g, 1, &analytic, 0);
    const auto fd = testutil::fd_gradient(
        [&](const std::vector<double>& zs) {
          EmbeddingBatch probe = b;
          probe.z = zs;
          return guidance_loss(probe, ps, g, 1, nullptr, 0);
        },
        b.z);
    EXPECT_LT(testutil::rel_error(analytic, fd), 1e-6);
  }
}

TEST(TotalLoss, LambdaStructure) {
  const auto ps = make_simplex_prototypes(12, 9);
  const auto g = build_grid_graph(3, 3);
  const auto b = random_batch(6, 12, 9, 55);

  const auto at = [&](double lambda) { return total_loss(b, ps, g, 0.2, lambda, nullptr, 1, 0); };
  EXPECT_DOUBLE_EQ(at(0.0).total, bcr(b, ps, 0.2));
  // affine in lambda
  const double l1 = 0.04, l2 = 0.16;
  EXPECT_NEAR(at(l1).total + at(l2).total - 2.0 * at((l1 + l2) / 2).total, 0.0, 1e-12);
  // collapse: guidance vanishes for any lambda
  const auto collapsed = collapse_batch(ps, {0, 1, 2, 3, 4, 5, 6, 7, 8}, 0);
  EXPECT_DOUBLE_EQ(total_loss(collapsed, ps, g, 0.2, 0.1, nullptr, 1, 0).total,
                   bcr(collapsed, ps, 0.2));
  EXPECT_THROW(at(-0.1), std::invalid_argument);
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  const auto ps = make_simplex_prototypes(16, 5);
  const auto g = build_grid_graph(5, 1);
  auto b = random_batch(8, 16, 5, 40);
  std::vector<double> analytic;
  total_loss(b, ps, g, 0.2, 0.1, &analytic, 1, 0);
  const auto fd = testutil::fd_gradient(
      [&](const std::vector<double>& zs) {
        EmbeddingBatch probe = b;
        probe.z = zs;
        return total_loss(probe, ps, g, 0.2, 0.1, nullptr, 1, 0).total;
      },
      b.z);
  EXPECT_LT(testutil::rel_error(analytic, fd), 1e-6);
}

TEST(TotalLoss, PermutationInvariant) {
  const auto ps = make_simplex_prototypes(12, 6);
  const auto g = build_grid_graph(3, 1);  // 3 locations x 2 types = 6 classes
  const auto b = random_batch(7, 12, 6, 91);
  Rng rng(92);
  const auto perm = rng.permutation(b.n);
  EmbeddingBatch p = b;
  for (int i = 0; i < b.n; ++i) {
    std::copy(b.row(perm[i]).begin(), b.row(perm[i]).end(),
              p.z.begin() + static_cast<size_t>(i) * b.dim);
    p.labels[i] = b.labels[perm[i]];
  }
  EXPECT_NEAR(total_loss(b, ps, g, 0.2, 0.07).total, total_loss(p, ps, g, 0.2, 0.07).total,
              1e-10);
}

TEST(LambdaSchedule, PaperRamp) {
  EXPECT_DOUBLE_EQ(lambda_schedule(0, 200, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(lambda_schedule(199, 200, 0.1), 0.1);
  EXPECT_NEAR(lambda_schedule(99, 200, 0.1), 0.1 * 99.0 / 199.0, 1e-15);
  double prev = -1.0;
  for (int e = 0; e < 200; ++e) {
    const double v = lambda_schedule(e, 200, 0.1);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_THROW(lambda_schedule(200, 200, 0.1), std::invalid_argument);
}

TEST(CePrototypeLoss, GradientAndBasicShape) {
  const auto ps = make_simplex_prototypes(16, 5);
  auto b = random_batch(6, 16, 5, 60);
  std::vector<double> analytic;
  const double v = ce_prototype_loss(b, ps, 0.2, 5, 0, &analytic);
  EXPECT_GT(v, 0.0);
  const auto fd = testutil::fd_gradient(
      [&](const std::vector<double>& zs) {
        EmbeddingBatch probe = b;
        probe.z = zs;
        return ce_prototype_loss(probe, ps, 0.2, 5, 0);
      },
      b.z);
  EXPECT_LT(testutil::rel_error(analytic, fd), 1e-6);
}
