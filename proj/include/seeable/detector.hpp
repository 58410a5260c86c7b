#pragma once

// Anomaly scoring: synthesize every (location, type) discrepancy on the test
// face, embed each, and sum feature-norm-weighted prototype agreements. High
// totals mean the model localizes its own perturbations cleanly (consistent
// with the training distribution); the negated score ranks forgeries.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "seeable/common.hpp"
#include "seeable/encoder.hpp"
#include "seeable/factory.hpp"
#include "seeable/labels.hpp"
#include "seeable/prototypes.hpp"

namespace seeable {

struct ScoringConfig {
  SubmaskScheme scheme;
  PerturbationConfig perturb;
  int reserve_offset = 1;  // prototype index of class 0
  uint64_t seed = 0;       // base for per-(frame, class) streams
  int max_frames = 30;
  int jobs = 1;

  int n_classes() const { return scheme.n_loc() * kNumTypes; }
};

struct FrameScore {
  double score = 0.0;                  // sum of the contributions
  std::vector<double> contributions;   // one per discrepancy class
};

// Per-class contributions |h_k| * (1 + sim(z_k, p_k)) for one frame. The
// per-class perturbation stream is derived from (seed, frame_index, k), so
// scoring is reproducible; classes are evaluated (possibly in parallel) into
// indexed slots and reduced in index order.
inline FrameScore score_frame(const Image& img, const Landmarks& lms, const Embedder& model,
                              const PrototypeSet& protos, const ScoringConfig& cfg,
                              int frame_index = 0) {
  const int n_cls = cfg.n_classes();
  if (model.embed_dim() != protos.dim)
    throw std::invalid_argument("score_frame: embedding/prototype dimension mismatch");
  if (cfg.reserve_offset + n_cls > protos.count)
    throw std::invalid_argument("score_frame: prototype set too small");

  FrameScore out;
  out.contributions.assign(n_cls, 0.0);
  parallel_for(n_cls, cfg.jobs, [&](int k) {
    Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(frame_index), static_cast<uint64_t>(k)));
    const auto lbl = decode_label(k, kNumTypes);
    const auto sd = synthesize_sd(img, lms, lbl.y_loc, lbl.y_type, rng, cfg.scheme, cfg.perturb);
    const auto emb = embed_image(model, sd.image);
    const double sim = cosine_similarity(emb.z, protos.row(k + cfg.reserve_offset));
    out.contributions[k] = emb.h_norm * (1.0 + sim);
  });
  for (double c : out.contributions) out.score += c;
  return out;
}

struct ScoreReport {
  std::vector<double> frame_scores;
  double video_score = 0.0;                 // arithmetic mean of frame scores
  std::vector<double> class_contributions;  // per class, mean over frames
  int n_frames_scored = 0;
};

// Evenly spaced subsample of at most max_frames indices from [0, n).
inline std::vector<int> subsample_indices(int n, int max_frames) {
  const int m = std::min(n, max_frames);
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i)
    idx[i] = static_cast<int>((static_cast<long long>(i) * n) / m);
  return idx;
}

inline ScoreReport score_video(const std::vector<Image>& frames,
                               const std::vector<Landmarks>& landmarks, const Embedder& model,
                               const PrototypeSet& protos, const ScoringConfig& cfg) {
  if (frames.empty()) throw std::domain_error("score_video: empty frame list");
  if (frames.size() != landmarks.size())
    throw std::invalid_argument("score_video: frame/landmark count mismatch");

  ScoreReport rep;
  rep.class_contributions.assign(cfg.n_classes(), 0.0);
  const auto idx = subsample_indices(static_cast<int>(frames.size()), cfg.max_frames);
  for (int i : idx) {
    const auto fs = score_frame(frames[i], landmarks[i], model, protos, cfg, i);
    rep.frame_scores.push_back(fs.score);
    for (size_t k = 0; k < fs.contributions.size(); ++k)
      rep.class_contributions[k] += fs.contributions[k];
  }
  rep.n_frames_scored = static_cast<int>(idx.size());
  double sum = 0.0;
  for (double s : rep.frame_scores) sum += s;
  rep.video_score = sum / static_cast<double>(rep.frame_scores.size());
  for (double& c : rep.class_contributions) c /= static_cast<double>(rep.n_frames_scored);
  return rep;
}

// One line per scored video. consistency_score is the raw sum; anomaly_score
// its negation, oriented so forgeries rank high.
struct ScoreRow {
  std::string video_id;
  std::string label;  // "real" | "fake"
  double consistency_score = 0.0;
  double anomaly_score = 0.0;
  int n_frames = 0;
};

inline void write_scores(const std::string& path, const std::vector<ScoreRow>& rows) {
  std::ofstream f(path);
  if (!f) throw DataError("write_scores: cannot open " + path);
  f << "video_id,label,consistency_score,anomaly_score,n_frames\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.consistency_score);
    f << r.video_id << ',' << r.label << ',' << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.anomaly_score);
    f << buf << ',' << r.n_frames << '\n';
  }
}

inline std::vector<ScoreRow> read_scores(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("read_scores: cannot open " + path);
  std::string line;
  std::getline(f, line);
  if (line != "video_id,label,consistency_score,anomaly_score,n_frames")
    throw DataError("read_scores: unexpected header in " + path);
  std::vector<ScoreRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    ScoreRow r;
    std::string field;
    std::getline(ss, r.video_id, ',');
    std::getline(ss, r.label, ',');
    std::getline(ss, field, ',');
    r.consistency_score = std::stod(field);
    std::getline(ss, field, ',');
    r.anomaly_score = std::stod(field);
    std::getline(ss, field, ',');
    r.n_frames = std::stoi(field);
    if (r.label != "real" && r.label != "fake")
      throw DataError("read_scores: bad label '" + r.label + "'");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace seeable
