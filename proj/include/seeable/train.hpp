#pragma once

// One-class training over real faces: batch construction through the
// discrepancy factory, SGD with momentum, cosine learning rate, the guidance
// ramp, per-epoch loss logging, checkpointing, and rank-based AUC.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "seeable/common.hpp"
#include "seeable/detector.hpp"
#include "seeable/encoder.hpp"
#include "seeable/factory.hpp"
#include "seeable/graph.hpp"
#include "seeable/losses.hpp"
#include "seeable/manifest.hpp"
#include "seeable/masks.hpp"
#include "seeable/prototypes.hpp"

namespace seeable {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 6;
  double momentum = 0.9;
  double lr_start = 1e-3;
  double lr_end = 1e-5;
  double tau = 0.1;
  double lambda_max = 0.1;
  std::string lambda_mode = "up";  // up | down | const
  uint64_t seed = 1;
  int grid_rows = 4;
  int grid_cols = 4;
  double feather_sigma = 3.0;
  int image_size = 256;
  std::vector<int> conv_channels = {8, 16, 32};
  int embed_dim = 128;
  int reserve_offset = 1;           // extra pristine prototype slot when 1
  std::string objective = "bcr";    // bcr | supcon | ce
  int max_frames = 30;              // video scoring subsample
  int jobs = 1;

  int n_classes() const { return grid_rows * grid_cols * kNumTypes; }
  int prototype_count() const { return n_classes() + reserve_offset; }

  void validate() const {
    if (epochs < 1 || batch_size < 1 || grid_rows < 1 || grid_cols < 1 || embed_dim < 1 ||
        image_size < 2 || max_frames < 1 || jobs < 1)
      throw std::invalid_argument("TrainConfig: positive field required");
    if (lr_end > lr_start) throw std::invalid_argument("TrainConfig: lr_end <= lr_start");
    if (tau <= 0.0 || lambda_max < 0.0 || momentum < 0.0 || momentum >= 1.0)
      throw std::invalid_argument("TrainConfig: bad optimizer constants");
    if (lambda_mode != "up" && lambda_mode != "down" && lambda_mode != "const")
      throw std::invalid_argument("TrainConfig: lambda_mode must be up|down|const");
    if (objective != "bcr" && objective != "supcon" && objective != "ce")
      throw std::invalid_argument("TrainConfig: objective must be bcr|supcon|ce");
    if (reserve_offset != 0 && reserve_offset != 1)
      throw std::invalid_argument("TrainConfig: reserve_offset is 0 or 1");
    if (prototype_count() > embed_dim + 1)
      throw std::invalid_argument("TrainConfig: need prototype count <= embed_dim + 1");
  }

  SubmaskScheme scheme() const {
    return {SubmaskKind::Grid, grid_rows, grid_cols, feather_sigma};
  }
};

// ---- key = value config file, one field per line ----

inline std::string config_to_string(const TrainConfig& c) {
  std::ostringstream f;
  f << "epochs = " << c.epochs << "\n";
  f << "batch_size = " << c.batch_size << "\n";
  f << "momentum = " << c.momentum << "\n";
  f << "lr_start = " << c.lr_start << "\n";
  f << "lr_end = " << c.lr_end << "\n";
  f << "tau = " << c.tau << "\n";
  f << "lambda_max = " << c.lambda_max << "\n";
  f << "lambda_mode = " << c.lambda_mode << "\n";
  f << "seed = " << c.seed << "\n";
  f << "grid_rows = " << c.grid_rows << "\n";
  f << "grid_cols = " << c.grid_cols << "\n";
  f << "feather_sigma = " << c.feather_sigma << "\n";
  f << "image_size = " << c.image_size << "\n";
  f << "conv_channels = ";
  for (size_t i = 0; i < c.conv_channels.size(); ++i)
    f << c.conv_channels[i] << (i + 1 < c.conv_channels.size() ? "," : "");
  f << "\n";
  f << "embed_dim = " << c.embed_dim << "\n";
  f << "reserve_offset = " << c.reserve_offset << "\n";
  f << "objective = " << c.objective << "\n";
  f << "max_frames = " << c.max_frames << "\n";
  f << "jobs = " << c.jobs << "\n";
  return f.str();
}

inline void write_config(const std::string& path, const TrainConfig& c) {
  std::ofstream f(path);
  if (!f) throw DataError("write_config: cannot open " + path);
  f << config_to_string(c);
}

inline TrainConfig parse_config_text(std::istream& in) {
  TrainConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw DataError("config: bad line " + std::to_string(lineno));
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "epochs") c.epochs = std::stoi(val);
      else if (key == "batch_size") c.batch_size = std::stoi(val);
      else if (key == "momentum") c.momentum = std::stod(val);
      else if (key == "lr_start") c.lr_start = std::stod(val);
      else if (key == "lr_end") c.lr_end = std::stod(val);
      else if (key == "tau") c.tau = std::stod(val);
      else if (key == "lambda_max") c.lambda_max = std::stod(val);
      else if (key == "lambda_mode") c.lambda_mode = val;
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "grid_rows") c.grid_rows = std::stoi(val);
      else if (key == "grid_cols") c.grid_cols = std::stoi(val);
      else if (key == "feather_sigma") c.feather_sigma = std::stod(val);
      else if (key == "image_size") c.image_size = std::stoi(val);
      else if (key == "embed_dim") c.embed_dim = std::stoi(val);
      else if (key == "reserve_offset") c.reserve_offset = std::stoi(val);
      else if (key == "objective") c.objective = val;
      else if (key == "max_frames") c.max_frames = std::stoi(val);
      else if (key == "jobs") c.jobs = std::stoi(val);
      else if (key == "conv_channels") {
        c.conv_channels.clear();
        std::istringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ',')) c.conv_channels.push_back(std::stoi(tok));
      } else {
        throw DataError("config: unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw DataError("config: bad value for '" + key + "'");
    }
  }
  return c;
}

inline TrainConfig read_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("read_config: cannot open " + path);
  return parse_config_text(f);
}

inline double cosine_lr(int epoch, int total_epochs, double lr_start, double lr_end) {
  if (total_epochs <= 1) return lr_start;
  const double t = static_cast<double>(epoch) / (total_epochs - 1);
  return lr_end + 0.5 * (lr_start - lr_end) * (1.0 + std::cos(3.14159265358979323846 * t));
}

inline double lambda_at(const TrainConfig& c, int epoch) {
  if (c.lambda_mode == "const") return c.lambda_max;
  const double up = lambda_schedule(epoch, c.epochs, c.lambda_max);
  return c.lambda_mode == "up" ? up : c.lambda_max - up;
}

// ---- training data access ----

struct VideoGroup {
  std::string video_id;
  std::vector<const FrameRecord*> frames;
};

// Training pool: train-split videos; the one-class guarantee is asserted
// here, a fake-labeled record in the train split is a data error.
inline std::vector<VideoGroup> training_videos(const std::vector<FrameRecord>& records) {
  std::map<std::string, VideoGroup> by_id;
  for (const auto& r : records) {
    if (r.split != "train") continue;
    if (r.is_fake)
      throw DataError("training_videos: fake-labeled record in train split (video " +
                      r.video_id + ")");
    auto& g = by_id[r.video_id];
    g.video_id = r.video_id;
    g.frames.push_back(&r);
  }
  std::vector<VideoGroup> out;
  out.reserve(by_id.size());
  for (auto& [id, g] : by_id) out.push_back(std::move(g));
  return out;
}

// Loads a record's image at the working resolution (landmarks rescaled).
struct LoadedFace {
  Image image;
  Landmarks landmarks;
};

inline LoadedFace load_face(const FrameRecord& rec, int image_size) {
  LoadedFace f;
  f.image = load_image(rec.path);
  f.landmarks = rec.landmarks;
  if (f.image.width != image_size || f.image.height != image_size) {
    const double sx = static_cast<double>(image_size) / f.image.width;
    const double sy = static_cast<double>(image_size) / f.image.height;
    f.image = resize_bilinear(f.image, image_size, image_size);
    for (auto& p : f.landmarks) {
      p.x = (p.x + 0.5) * sx - 0.5;
      p.y = (p.y + 0.5) * sy - 0.5;
    }
  }
  if (!landmarks_in_bounds(f.landmarks, image_size, image_size))
    throw DataError("load_face: landmarks out of bounds for " + rec.path);
  return f;
}

// In-memory image cache with a byte budget; entries above it load on demand.
class FaceCache {
 public:
  explicit FaceCache(size_t max_bytes = size_t(1) << 30) : max_bytes_(max_bytes) {}

  const LoadedFace& get(const FrameRecord& rec, int image_size) {
    const std::string key = rec.path + "@" + std::to_string(image_size);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    LoadedFace face = load_face(rec, image_size);
    const size_t bytes = face.image.px.size() * sizeof(float);
    if (bytes_ + bytes > max_bytes_ && !cache_.empty()) {
      scratch_ = std::move(face);
      return scratch_;
    }
    bytes_ += bytes;
    return cache_.emplace(key, std::move(face)).first->second;
  }

 private:
  size_t max_bytes_;
  size_t bytes_ = 0;
  std::unordered_map<std::string, LoadedFace> cache_;
  LoadedFace scratch_;
};

struct BatchItem {
  Image image;          // face with one synthesized discrepancy
  int label = 0;        // flat class
  std::string video_id;
};

// One optimization batch: batch_size distinct videos, one frame each, one
// uniformly drawn (location, type) discrepancy per image.
inline std::vector<BatchItem> build_batch(const std::vector<VideoGroup>& videos,
                                          const std::vector<int>& video_order, size_t cursor,
                                          Rng& rng, const TrainConfig& cfg, FaceCache& cache) {
  if (static_cast<int>(videos.size()) < cfg.batch_size)
    throw DataError("build_batch: fewer distinct videos than batch_size");
  const auto scheme = cfg.scheme();
  PerturbationConfig pcfg;
  std::vector<BatchItem> batch;
  batch.reserve(cfg.batch_size);
  for (int b = 0; b < cfg.batch_size; ++b) {
    const auto& video = videos[video_order[(cursor + b) % video_order.size()]];
    const auto& rec = *video.frames[rng.below_int(static_cast<int>(video.frames.size()))];
    const auto& face = cache.get(rec, cfg.image_size);
    const int y_loc = rng.below_int(scheme.n_loc());
    const int y_type = rng.below_int(kNumTypes);
    auto sd = synthesize_sd(face.image, face.landmarks, y_loc, y_type, rng, scheme,
                            PerturbationConfig{});
    batch.push_back({std::move(sd.image), sd.label.y, video.video_id});
  }
  return batch;
}

// Draws a standalone batch (fresh shuffle) straight from manifest records.
inline std::vector<BatchItem> build_batch(const std::vector<FrameRecord>& records, Rng& rng,
                                          const TrainConfig& cfg, FaceCache& cache) {
  const auto videos = training_videos(records);
  if (static_cast<int>(videos.size()) < cfg.batch_size)
    throw DataError("build_batch: fewer distinct videos than batch_size");
  const auto order = rng.permutation(static_cast<int>(videos.size()));
  return build_batch(videos, order, 0, rng, cfg, cache);
}

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double lambda = 0.0;
  double bcr = 0.0;
  double guidance = 0.0;
  double total = 0.0;
  double wall_seconds = 0.0;
};

inline void write_training_log(const std::string& path, const std::vector<EpochLog>& rows) {
  std::ofstream f(path);
  if (!f) throw DataError("write_training_log: cannot open " + path);
  f << "epoch,lr,lambda,bcr,guidance,total,wall_seconds\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.3f\n", r.epoch, r.lr,
                  r.lambda, r.bcr, r.guidance, r.total, r.wall_seconds);
    f << buf;
  }
}

struct TrainResult {
  ToyEncoder encoder;
  PrototypeSet prototypes;
  TrainConfig config;
  std::vector<EpochLog> log;
  int epochs_run = 0;
};

// Full training loop. Deterministic for a fixed seed at any jobs level:
// per-sample gradients land in indexed slots and reduce in batch order.
inline TrainResult train(const std::vector<FrameRecord>& records, const TrainConfig& cfg) {
  cfg.validate();
  const auto videos = training_videos(records);
  if (static_cast<int>(videos.size()) < cfg.batch_size)
    throw DataError("train: fewer distinct train videos than batch_size");

  ToyEncoderSpec spec;
  spec.image_size = cfg.image_size;
  spec.conv_channels = cfg.conv_channels;
  spec.embed_dim = cfg.embed_dim;
  spec.validate();

  TrainResult result{ToyEncoder(spec, cfg.seed), make_simplex_prototypes(cfg.embed_dim,
                                                                         cfg.prototype_count()),
                     cfg,
                     {},
                     0};
  ToyEncoder& enc = result.encoder;
  const PatchGraph graph = build_grid_graph(cfg.grid_rows, cfg.grid_cols);
  FaceCache cache;
  Rng root(derive_seed(cfg.seed, 0x7261494E));

  std::vector<double> velocity(enc.n_params(), 0.0);
  std::vector<double> grad(enc.n_params(), 0.0);
  const int n_videos = static_cast<int>(videos.size());
  const int steps = (n_videos + cfg.batch_size - 1) / cfg.batch_size;
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr_start, cfg.lr_end);
    const double lambda = lambda_at(cfg, epoch);
    Rng erng = root.child(0xE60000 + static_cast<uint64_t>(epoch));
    const auto order = erng.permutation(n_videos);

    EpochLog row;
    row.epoch = epoch;
    row.lr = lr;
    row.lambda = lambda;

    for (int step = 0; step < steps; ++step) {
      auto batch = build_batch(videos, order, static_cast<size_t>(step) * cfg.batch_size, erng,
                               cfg, cache);
      const int N = static_cast<int>(batch.size());

      EmbeddingBatch eb;
      eb.n = N;
      eb.dim = cfg.embed_dim;
      eb.z.resize(static_cast<size_t>(N) * cfg.embed_dim);
      eb.labels.resize(N);
      eb.h_norms.resize(N);
      std::vector<ToyEncoder::Trace> traces(N);
      parallel_for(N, cfg.jobs, [&](int i) {
        enc.forward(batch[i].image, traces[i]);
        std::copy(traces[i].z.begin(), traces[i].z.end(),
                  eb.z.begin() + static_cast<size_t>(i) * cfg.embed_dim);
        eb.labels[i] = batch[i].label;
        eb.h_norms[i] = traces[i].h_norm;
      });
      eb.validate();

      // objective value and gradient in embedding space
      std::vector<double> dz(eb.z.size(), 0.0), dz_gui;
      LossBreakdown lb;
      lb.lambda = lambda;
      if (cfg.objective == "bcr") {
        lb.bcr = bcr(eb, result.prototypes, cfg.tau, &dz, cfg.reserve_offset);
      } else if (cfg.objective == "supcon") {
        lb.bcr = supcon_lenient(eb, cfg.tau, &dz);
      } else {
        lb.bcr = ce_prototype_loss(eb, result.prototypes, cfg.tau, cfg.n_classes(),
                                   cfg.reserve_offset, &dz);
      }
      lb.guidance = guidance_loss(eb, result.prototypes, graph, kNumTypes, &dz_gui,
                                  cfg.reserve_offset);
      lb.total = lb.bcr + lambda * lb.guidance;
      for (size_t c = 0; c < dz.size(); ++c) dz[c] += lambda * dz_gui[c];
      if (!std::isfinite(lb.total))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));

      // backprop per sample into indexed buffers, reduce in order
      std::fill(grad.begin(), grad.end(), 0.0);
      if (cfg.jobs <= 1) {
        for (int i = 0; i < N; ++i)
          enc.backward(traces[i],
                       std::span<const double>(dz.data() + static_cast<size_t>(i) * cfg.embed_dim,
                                               cfg.embed_dim),
                       grad);
      } else {
        std::vector<std::vector<double>> partial(N);
        parallel_for(N, cfg.jobs, [&](int i) {
          partial[i].assign(enc.n_params(), 0.0);
          enc.backward(traces[i],
                       std::span<const double>(dz.data() + static_cast<size_t>(i) * cfg.embed_dim,
                                               cfg.embed_dim),
                       partial[i]);
        });
        for (int i = 0; i < N; ++i)
          for (size_t c = 0; c < grad.size(); ++c) grad[c] += partial[i][c];
      }

      auto& params = enc.params();
      const double inv_n = 1.0 / N;
      for (size_t c = 0; c < params.size(); ++c) {
        velocity[c] = cfg.momentum * velocity[c] - lr * grad[c] * inv_n;
        params[c] += velocity[c];
      }

      row.bcr += lb.bcr / steps;
      row.guidance += lb.guidance / steps;
      row.total += lb.total / steps;
    }

    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(row);
    ++result.epochs_run;
  }
  return result;
}

// ---- checkpoint: versioned binary, bit-exact round-trip ----

namespace ckpt_detail {

inline void put_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
inline void put_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline void put_doubles(std::ostream& os, const std::vector<double>& v) {
  put_u64(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}
inline void put_string(std::ostream& os, const std::string& s) {
  put_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
inline uint64_t get_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
inline std::vector<double> get_doubles(std::istream& is) {
  std::vector<double> v(get_u64(is));
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
  return v;
}
inline std::string get_string(std::istream& is) {
  std::string s(get_u64(is), '\0');
  is.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}

}  // namespace ckpt_detail

inline constexpr char kCheckpointMagic[8] = {'S', 'E', 'E', 'A', 'B', 'L', 'E', '1'};

inline void save_checkpoint(const std::string& path, const TrainResult& r) {
  using namespace ckpt_detail;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("save_checkpoint: cannot open " + path);
  f.write(kCheckpointMagic, 8);
  put_u32(f, 1);  // format version
  put_string(f, config_to_string(r.config));

  put_u32(f, static_cast<uint32_t>(r.prototypes.dim));
  put_u32(f, static_cast<uint32_t>(r.prototypes.count));
  put_doubles(f, r.prototypes.data);
  put_doubles(f, r.encoder.params());
  put_u32(f, static_cast<uint32_t>(r.epochs_run));

  std::ostringstream tail;
  const size_t start = r.log.size() > 32 ? r.log.size() - 32 : 0;
  for (size_t i = start; i < r.log.size(); ++i)
    tail << r.log[i].epoch << ',' << r.log[i].total << '\n';
  put_string(f, tail.str());
  if (!f) throw DataError("save_checkpoint: write failed for " + path);
}

inline TrainResult load_checkpoint(const std::string& path) {
  using namespace ckpt_detail;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw DataError("load_checkpoint: bad magic in " + path);
  const uint32_t version = get_u32(f);
  if (version != 1) throw DataError("load_checkpoint: unsupported version");

  std::istringstream cfg_in(get_string(f));
  TrainConfig cfg = parse_config_text(cfg_in);

  PrototypeSet protos;
  protos.dim = static_cast<int>(get_u32(f));
  protos.count = static_cast<int>(get_u32(f));
  protos.data = get_doubles(f);
  if (protos.data.size() != static_cast<size_t>(protos.dim) * protos.count)
    throw DataError("load_checkpoint: prototype block truncated");

  ToyEncoderSpec spec;
  spec.image_size = cfg.image_size;
  spec.conv_channels = cfg.conv_channels;
  spec.embed_dim = cfg.embed_dim;
  TrainResult r{ToyEncoder(spec, 0), std::move(protos), cfg, {}, 0};
  auto params = get_doubles(f);
  if (params.size() != r.encoder.n_params())
    throw DataError("load_checkpoint: parameter block mismatch");
  r.encoder.params() = std::move(params);
  r.epochs_run = static_cast<int>(get_u32(f));
  get_string(f);  // log tail, informational
  if (!f) throw DataError("load_checkpoint: truncated file " + path);
  return r;
}

// ---- rank-based AUC (fake = positive class) ----

// Exact pair counting: ties contribute one half. Concordant/tie counts are
// integers, so the result matches a brute-force pairwise scan bit for bit.
inline double evaluate_auc(std::vector<std::pair<double, bool>> scored) {
  uint64_t n_pos = 0, n_neg = 0;
  for (const auto& [s, fake] : scored) {
    if (!std::isfinite(s)) throw std::invalid_argument("evaluate_auc: non-finite score");
    (fake ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0)
    throw std::domain_error("evaluate_auc: need both classes present");
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  uint64_t concordant = 0, ties = 0, neg_below = 0;
  size_t i = 0;
  while (i < scored.size()) {
    size_t j = i;
    uint64_t pos_here = 0, neg_here = 0;
    while (j < scored.size() && scored[j].first == scored[i].first) {
      (scored[j].second ? pos_here : neg_here)++;
      ++j;
    }
    concordant += pos_here * neg_below;
    ties += pos_here * neg_here;
    neg_below += neg_here;
    i = j;
  }
  return (static_cast<double>(concordant) + 0.5 * static_cast<double>(ties)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace seeable
