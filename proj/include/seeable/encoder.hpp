#pragma once

// Pluggable encoder/projector contract plus a small trainable CNN that
// fulfils it: 3x3 conv + ReLU + 2x2 average-pool blocks, flattened features,
// and a single dense projection onto the embedding sphere. Gradients are
// hand-written; double precision throughout so finite-difference checks are
// meaningful.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "seeable/common.hpp"
#include "seeable/image.hpp"

namespace seeable {

// image -> features h, features -> unit embedding z.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int feature_dim() const = 0;
  virtual int embed_dim() const = 0;
  virtual std::vector<double> features(const Image& img) const = 0;
  virtual std::vector<double> embed_features(std::span<const double> h) const = 0;
};

struct EmbedResult {
  double h_norm = 0.0;
  std::vector<double> z;
};

inline EmbedResult embed_image(const Embedder& model, const Image& img) {
  EmbedResult out;
  const auto h = model.features(img);
  out.h_norm = norm(h);
  out.z = model.embed_features(h);
  return out;
}

struct ToyEncoderSpec {
  int image_size = 64;
  int in_channels = 3;
  std::vector<int> conv_channels = {8, 16, 32};
  int embed_dim = 32;

  int n_layers() const { return static_cast<int>(conv_channels.size()); }

  int final_side() const {
    int side = image_size;
    for (size_t i = 0; i < conv_channels.size(); ++i) {
      if (side % 2 != 0) throw std::invalid_argument("ToyEncoderSpec: side not divisible by 2");
      side /= 2;
    }
    return side;
  }

  int feature_dim() const { return conv_channels.back() * final_side() * final_side(); }

  void validate() const {
    if (image_size < 2 || in_channels < 1 || embed_dim < 1 || conv_channels.empty())
      throw std::invalid_argument("ToyEncoderSpec: bad dimensions");
    (void)final_side();
  }
};

class ToyEncoder : public Embedder {
 public:
  ToyEncoder(const ToyEncoderSpec& spec, uint64_t seed) : spec_(spec) {
    spec_.validate();
    layout();
    params_.assign(n_params_, 0.0);
    Rng rng(derive_seed(seed, 0x7031));
    int c_in = spec_.in_channels;
    for (int l = 0; l < spec_.n_layers(); ++l) {
      const int c_out = spec_.conv_channels[l];
      const double std_w = std::sqrt(2.0 / (c_in * 9.0));
      double* w = params_.data() + w_off_[l];
      for (int i = 0; i < c_out * c_in * 9; ++i) w[i] = std_w * rng.normal();
      // biases start at zero
      c_in = c_out;
    }
    const double std_p = 1.0 / std::sqrt(static_cast<double>(feature_dim()));
    double* wp = params_.data() + proj_w_off_;
    for (int i = 0; i < spec_.embed_dim * feature_dim(); ++i) wp[i] = std_p * rng.normal();
  }

  const ToyEncoderSpec& spec() const { return spec_; }
  int feature_dim() const override { return spec_.feature_dim(); }
  int embed_dim() const override { return spec_.embed_dim; }
  size_t n_params() const { return n_params_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Activation cache for one forward pass; reusable across calls.
  struct Trace {
    std::vector<std::vector<double>> inputs;    // per layer: input planes
    std::vector<std::vector<double>> pre_act;   // per layer: conv output before ReLU
    std::vector<double> h;                      // flattened features
    std::vector<double> z_raw;                  // projector output before normalization
    std::vector<double> z;                      // unit embedding
    double h_norm = 0.0;
    double z_raw_norm = 0.0;
  };

  void forward(const Image& img, Trace& t) const {
    if (img.width != spec_.image_size || img.height != spec_.image_size)
      throw std::invalid_argument("ToyEncoder: image size mismatch, expected " +
                                  std::to_string(spec_.image_size));
    const int L = spec_.n_layers();
    t.inputs.resize(L);
    t.pre_act.resize(L);

    // normalized planar input; with six channels the second half carries the
    // 3x3 high-pass residual per color, which exposes local grain changes
    int side = spec_.image_size;
    t.inputs[0].resize(static_cast<size_t>(spec_.in_channels) * side * side);
    for (int c = 0; c < std::min(3, spec_.in_channels); ++c)
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
          t.inputs[0][(static_cast<size_t>(c) * side + y) * side + x] =
              img.at(x, y, c) / 255.0 - 0.5;
    for (int c = 3; c < spec_.in_channels; ++c) {
      const int base = c - 3;
      auto px = [&](int x, int y) {
        x = std::min(std::max(x, 0), side - 1);
        y = std::min(std::max(y, 0), side - 1);
        return static_cast<double>(img.at(x, y, base)) / 255.0;
      };
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          double acc = 0.0;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) acc += px(x + dx, y + dy);
          t.inputs[0][(static_cast<size_t>(c) * side + y) * side + x] =
              px(x, y) - acc / 9.0;
        }
    }

    int c_in = spec_.in_channels;
    for (int l = 0; l < L; ++l) {
      const int c_out = spec_.conv_channels[l];
      conv_forward(t.inputs[l].data(), c_in, side, params_.data() + w_off_[l],
                   params_.data() + b_off_[l], c_out, t.pre_act[l]);
      if (l + 1 < L) t.inputs[l + 1].resize(static_cast<size_t>(c_out) * (side / 2) * (side / 2));
      std::vector<double>& pooled = (l + 1 < L) ? t.inputs[l + 1] : t.h;
      if (l + 1 == L) pooled.resize(static_cast<size_t>(c_out) * (side / 2) * (side / 2));
      act_pool_forward(t.pre_act[l], c_out, side, l == 0, pooled);
      side /= 2;
      c_in = c_out;
    }
    t.h_norm = norm(t.h);

    // dense projection
    t.z_raw.assign(spec_.embed_dim, 0.0);
    const double* wp = params_.data() + proj_w_off_;
    const double* bp = params_.data() + proj_b_off_;
    const int F = feature_dim();
    for (int d = 0; d < spec_.embed_dim; ++d) {
      double acc = bp[d];
      const double* row = wp + static_cast<size_t>(d) * F;
      for (int f = 0; f < F; ++f) acc += row[f] * t.h[f];
      t.z_raw[d] = acc;
    }
    t.z_raw_norm = norm(t.z_raw);
    if (t.z_raw_norm == 0.0) throw NumericError("ToyEncoder: zero-norm projector output");
    t.z = t.z_raw;
    for (double& v : t.z) v /= t.z_raw_norm;
  }

  // Accumulates d loss / d params into grad (same layout as params) given
  // d loss / d z for the traced sample.
  void backward(const Trace& t, std::span<const double> dz, std::span<double> grad) const {
    const int D = spec_.embed_dim;
    const int F = feature_dim();
    // through z = z_raw / |z_raw|
    std::vector<double> dz_raw(D);
    const double zdg = dot(t.z, dz);
    for (int d = 0; d < D; ++d) dz_raw[d] = (dz[d] - t.z[d] * zdg) / t.z_raw_norm;

    // dense layer
    std::vector<double> dh(F, 0.0);
    const double* wp = params_.data() + proj_w_off_;
    double* gwp = grad.data() + proj_w_off_;
    double* gbp = grad.data() + proj_b_off_;
    for (int d = 0; d < D; ++d) {
      const double g = dz_raw[d];
      gbp[d] += g;
      const double* row = wp + static_cast<size_t>(d) * F;
      double* grow = gwp + static_cast<size_t>(d) * F;
      for (int f = 0; f < F; ++f) {
        grow[f] += g * t.h[f];
        dh[f] += g * row[f];
      }
    }

    // conv stack in reverse
    const int L = spec_.n_layers();
    std::vector<double> d_pooled = std::move(dh);
    for (int l = L - 1; l >= 0; --l) {
      const int c_out = spec_.conv_channels[l];
      const int c_in = l == 0 ? spec_.in_channels : spec_.conv_channels[l - 1];
      const int side = spec_.image_size >> l;
      std::vector<double> d_pre(static_cast<size_t>(c_out) * side * side);
      act_pool_backward(t.pre_act[l], c_out, side, l == 0, d_pooled, d_pre);
      std::vector<double> d_in;
      if (l > 0) d_in.assign(static_cast<size_t>(c_in) * side * side, 0.0);
      conv_backward(t.inputs[l].data(), c_in, side, params_.data() + w_off_[l], c_out, d_pre,
                    grad.data() + w_off_[l], grad.data() + b_off_[l],
                    l > 0 ? d_in.data() : nullptr);
      d_pooled = std::move(d_in);
    }
  }

  std::vector<double> features(const Image& img) const override {
    Trace t;
    forward(img, t);
    return t.h;
  }

  std::vector<double> embed_features(std::span<const double> h) const override {
    const int F = feature_dim();
    if (static_cast<int>(h.size()) != F)
      throw std::invalid_argument("ToyEncoder: feature size mismatch");
    std::vector<double> z(spec_.embed_dim);
    const double* wp = params_.data() + proj_w_off_;
    const double* bp = params_.data() + proj_b_off_;
    for (int d = 0; d < spec_.embed_dim; ++d) {
      double acc = bp[d];
      const double* row = wp + static_cast<size_t>(d) * F;
      for (int f = 0; f < F; ++f) acc += row[f] * h[f];
      z[d] = acc;
    }
    normalize_inplace(z);
    return z;
  }

 private:
  void layout() {
    const int L = spec_.n_layers();
    w_off_.resize(L);
    b_off_.resize(L);
    size_t off = 0;
    int c_in = spec_.in_channels;
    for (int l = 0; l < L; ++l) {
      const int c_out = spec_.conv_channels[l];
      w_off_[l] = off;
      off += static_cast<size_t>(c_out) * c_in * 9;
      b_off_[l] = off;
      off += c_out;
      c_in = c_out;
    }
    proj_w_off_ = off;
    off += static_cast<size_t>(spec_.embed_dim) * feature_dim();
    proj_b_off_ = off;
    off += spec_.embed_dim;
    n_params_ = off;
  }

  // 3x3 same-convolution with zero padding, planar layout.
  static void conv_forward(const double* in, int c_in, int side, const double* w,
                           const double* b, int c_out, std::vector<double>& out) {
    out.assign(static_cast<size_t>(c_out) * side * side, 0.0);
    for (int co = 0; co < c_out; ++co) {
      double* o = out.data() + static_cast<size_t>(co) * side * side;
      for (int i = 0; i < side * side; ++i) o[i] = b[co];
      for (int ci = 0; ci < c_in; ++ci) {
        const double* src = in + static_cast<size_t>(ci) * side * side;
        const double* k = w + (static_cast<size_t>(co) * c_in + ci) * 9;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const double kv = k[(dy + 1) * 3 + (dx + 1)];
            if (kv == 0.0) continue;
            const int y0 = std::max(0, -dy), y1 = std::min(side, side - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(side, side - dx);
            for (int y = y0; y < y1; ++y) {
              const double* srow = src + static_cast<size_t>(y + dy) * side + dx;
              double* orow = o + static_cast<size_t>(y) * side;
              for (int x = x0; x < x1; ++x) orow[x] += kv * srow[x];
            }
          }
      }
    }
  }

  static void conv_backward(const double* in, int c_in, int side, const double* w, int c_out,
                            const std::vector<double>& d_out, double* gw, double* gb,
                            double* d_in) {
    for (int co = 0; co < c_out; ++co) {
      const double* go = d_out.data() + static_cast<size_t>(co) * side * side;
      double acc_b = 0.0;
      for (int i = 0; i < side * side; ++i) acc_b += go[i];
      gb[co] += acc_b;
      for (int ci = 0; ci < c_in; ++ci) {
        const double* src = in + static_cast<size_t>(ci) * side * side;
        const double* k = w + (static_cast<size_t>(co) * c_in + ci) * 9;
        double* gk = gw + (static_cast<size_t>(co) * c_in + ci) * 9;
        double* dsrc = d_in ? d_in + static_cast<size_t>(ci) * side * side : nullptr;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int y0 = std::max(0, -dy), y1 = std::min(side, side - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(side, side - dx);
            double acc_w = 0.0;
            const double kv = k[(dy + 1) * 3 + (dx + 1)];
            for (int y = y0; y < y1; ++y) {
              const double* srow = src + static_cast<size_t>(y + dy) * side + dx;
              const double* grow = go + static_cast<size_t>(y) * side;
              for (int x = x0; x < x1; ++x) acc_w += grow[x] * srow[x];
              if (dsrc) {
                double* drow = dsrc + static_cast<size_t>(y + dy) * side + dx;
                for (int x = x0; x < x1; ++x) drow[x] += grow[x] * kv;
              }
            }
            gk[(dy + 1) * 3 + (dx + 1)] += acc_w;
          }
      }
    }
  }

  // Activation + 2x2 average pool. The first layer uses |x| instead of
  // ReLU: the perturbation families are sign-symmetric (a +20 and a -20
  // channel shift share a label), so without a magnitude nonlinearity the
  // early-training gradients of opposite-signed edits cancel.
  static void act_pool_forward(const std::vector<double>& pre, int channels, int side,
                               bool use_abs, std::vector<double>& pooled) {
    const int half = side / 2;
    for (int c = 0; c < channels; ++c) {
      const double* src = pre.data() + static_cast<size_t>(c) * side * side;
      double* dst = pooled.data() + static_cast<size_t>(c) * half * half;
      for (int y = 0; y < half; ++y)
        for (int x = 0; x < half; ++x) {
          double acc = 0.0;
          for (int yy = 0; yy < 2; ++yy)
            for (int xx = 0; xx < 2; ++xx) {
              const double v = src[static_cast<size_t>(2 * y + yy) * side + 2 * x + xx];
              acc += use_abs ? std::abs(v) : (v > 0.0 ? v : 0.0);
            }
          dst[static_cast<size_t>(y) * half + x] = acc * 0.25;
        }
    }
  }

  static void act_pool_backward(const std::vector<double>& pre, int channels, int side,
                                bool use_abs, const std::vector<double>& d_pooled,
                                std::vector<double>& d_pre) {
    const int half = side / 2;
    for (int c = 0; c < channels; ++c) {
      const double* src = pre.data() + static_cast<size_t>(c) * side * side;
      const double* gp = d_pooled.data() + static_cast<size_t>(c) * half * half;
      double* out = d_pre.data() + static_cast<size_t>(c) * side * side;
      for (int y = 0; y < half; ++y)
        for (int x = 0; x < half; ++x) {
          const double g = gp[static_cast<size_t>(y) * half + x] * 0.25;
          for (int yy = 0; yy < 2; ++yy)
            for (int xx = 0; xx < 2; ++xx) {
              const size_t idx = static_cast<size_t>(2 * y + yy) * side + 2 * x + xx;
              if (use_abs)
                out[idx] = src[idx] > 0.0 ? g : (src[idx] < 0.0 ? -g : 0.0);
              else
                out[idx] = src[idx] > 0.0 ? g : 0.0;
            }
        }
    }
  }

  ToyEncoderSpec spec_;
  std::vector<double> params_;
  std::vector<size_t> w_off_, b_off_;
  size_t proj_w_off_ = 0, proj_b_off_ = 0;
  size_t n_params_ = 0;
};

}  // namespace seeable
