#include <gtest/gtest.h>

#include <sstream>

#include "seeable/graph.hpp"
#include "seeable/labels.hpp"

using namespace seeable;

TEST(LabelCodec, EncodeExamples) {
  EXPECT_EQ(encode_label(0, 0, 2), 0);
  EXPECT_EQ(encode_label(3, 1, 2), 7);
  EXPECT_EQ(encode_label(15, 1, 2), 31);
  EXPECT_THROW(encode_label(-1, 0, 2), std::domain_error);
  EXPECT_THROW(encode_label(0, 2, 2), std::domain_error);
}

TEST(LabelCodec, DecodeExamples) {
  auto l = decode_label(7, 2);
  EXPECT_EQ(l.y_loc, 3);
  EXPECT_EQ(l.y_type, 1);
  l = decode_label(0, 2);
  EXPECT_EQ(l.y_loc, 0);
  EXPECT_EQ(l.y_type, 0);
  EXPECT_THROW(decode_label(-1, 2), std::domain_error);
}

TEST(LabelCodec, RoundTripAll32) {
  for (int loc = 0; loc < 16; ++loc)
    for (int type = 0; type < 2; ++type) {
      const int y = encode_label(loc, type, 2);
      const auto back = decode_label(y, 2);
      EXPECT_EQ(back.y_loc, loc);
      EXPECT_EQ(back.y_type, type);
      EXPECT_EQ(back.y, y);
    }
}

TEST(GridGraph, NodeAndEdgeCounts) {
  auto g = build_grid_graph(4, 4);
  EXPECT_EQ(g.n_nodes, 16);
  EXPECT_EQ(edge_count(g), 24);

  g = build_grid_graph(1, 1);
  EXPECT_EQ(g.n_nodes, 1);
  EXPECT_EQ(edge_count(g), 0);

  g = build_grid_graph(2, 3);
  EXPECT_EQ(g.n_nodes, 6);
  EXPECT_EQ(edge_count(g), 7);
  EXPECT_EQ(edge_count(g), 2 * (3 - 1) + 3 * (2 - 1));
}

TEST(GridGraph, DistanceExamples) {
  const auto g = build_grid_graph(4, 4);
  EXPECT_EQ(graph_distance(g, 0, 0), 0);
  EXPECT_EQ(graph_distance(g, 0, 15), 6);
  EXPECT_EQ(graph_distance(g, 5, 6), 1);
  EXPECT_THROW(graph_distance(g, 0, 16), std::invalid_argument);
}

TEST(GridGraph, DistanceEqualsManhattanUpTo6x6) {
  for (int rows = 1; rows <= 6; ++rows)
    for (int cols = 1; cols <= 6; ++cols) {
      const auto g = build_grid_graph(rows, cols);
      for (int i = 0; i < g.n_nodes; ++i)
        for (int j = 0; j < g.n_nodes; ++j) {
          const int manhattan =
              std::abs(i / cols - j / cols) + std::abs(i % cols - j % cols);
          EXPECT_EQ(graph_distance(g, i, j), manhattan)
              << rows << "x" << cols << " " << i << "->" << j;
        }
    }
}

TEST(GridGraph, DistanceAxioms) {
  const auto g = build_grid_graph(5, 3);
  for (int i = 0; i < g.n_nodes; ++i) {
    EXPECT_EQ(graph_distance(g, i, i), 0);
    for (int j = 0; j < g.n_nodes; ++j) {
      EXPECT_EQ(graph_distance(g, i, j), graph_distance(g, j, i));
      for (int k = 0; k < g.n_nodes; ++k)
        EXPECT_LE(graph_distance(g, i, k),
                  graph_distance(g, i, j) + graph_distance(g, j, k));
    }
  }
}

TEST(Symmetry, MirrorExamples) {
  EXPECT_EQ(sym_location(0, 4, 4), 3);
  EXPECT_EQ(sym_location(5, 4, 4), 6);
  // odd column count: center column is a fixed point
  EXPECT_EQ(sym_location(1, 3, 3), 1);
  EXPECT_EQ(sym_location(4, 3, 3), 4);
  EXPECT_EQ(sym_location(7, 3, 3), 7);
}

TEST(Symmetry, InvolutionPreservesRow) {
  for (int rows = 1; rows <= 5; ++rows)
    for (int cols = 1; cols <= 5; ++cols)
      for (int loc = 0; loc < rows * cols; ++loc) {
        const int s = sym_location(loc, rows, cols);
        EXPECT_EQ(sym_location(s, rows, cols), loc);
        EXPECT_EQ(s / cols, loc / cols);
      }
}

TEST(GuidanceWeight, ThreeBranches) {
  const auto g = build_grid_graph(4, 4);
  const int n_type = 2;
  // same position, type-only error -> smallest penalty
  EXPECT_DOUBLE_EQ(guidance_weight(encode_label(5, 0, 2), encode_label(5, 1, 2), g, n_type), 0.25);
  EXPECT_DOUBLE_EQ(guidance_weight(encode_label(5, 1, 2), encode_label(5, 1, 2), g, n_type), 0.25);
  // mirrored column in the same row
  EXPECT_DOUBLE_EQ(guidance_weight(encode_label(5, 0, 2), encode_label(6, 1, 2), g, n_type), 0.5);
  EXPECT_DOUBLE_EQ(guidance_weight(encode_label(0, 0, 2), encode_label(3, 0, 2), g, n_type), 0.5);
  // everything else: raw hop count
  EXPECT_DOUBLE_EQ(guidance_weight(encode_label(0, 0, 2), encode_label(15, 0, 2), g, n_type), 6.0);
  EXPECT_DOUBLE_EQ(guidance_weight(encode_label(0, 1, 2), encode_label(1, 0, 2), g, n_type), 1.0);
}

TEST(GuidanceWeight, AlwaysPositiveAndTypeErrorsSmallest) {
  const auto g = build_grid_graph(4, 4);
  const int n_cls = 32;
  for (int pred = 0; pred < n_cls; ++pred)
    for (int truth = 0; truth < n_cls; ++truth) {
      const double w = guidance_weight(pred, truth, g, 2);
      EXPECT_GT(w, 0.0);
      if (label_pos(pred, 2) == label_pos(truth, 2)) {
        EXPECT_DOUBLE_EQ(w, 0.25);
      } else {
        EXPECT_GE(w, 0.5);
      }
    }
}

TEST(GridGraph, DistanceMatrixDump) {
  const auto g = build_grid_graph(2, 2);
  std::ostringstream os;
  write_distance_matrix(g, os);
  EXPECT_EQ(os.str(), "0,1,1,2\n1,0,2,1\n1,2,0,1\n2,1,1,0\n");
}
