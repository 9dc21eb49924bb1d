#pragma once

// Policy network: conv backbone over the range pseudo-image, shared MLP
// trunk over the assembled observation, Beta actor head (Softplus + eps)
// and scalar value head. Forward passes record activations in an external
// workspace; backward produces exact reverse-mode gradients of a scalar
// loss with respect to every parameter.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asyncnav/core.hpp"
#include "asyncnav/pointcloud.hpp"
#include "asyncnav/temporal.hpp"

namespace asyncnav {

struct ArchConfig {
  int rows = 18;  // N_phi
  int cols = 60;  // N_theta
  int conv1_ch = 8;
  int conv2_ch = 16;
  int feature_dim = 32;
  int hidden1 = 128;
  int hidden2 = 128;
  int action_dim = 3;
  double epsilon = 1.0;  // Beta offset, > 0
  double v_max = 5.0;    // symmetric action bound (m/s)

  // conv: 3x3, stride 2, pad 1
  int c1_rows() const { return (rows + 1) / 2; }
  int c1_cols() const { return (cols + 1) / 2; }
  int c2_rows() const { return (c1_rows() + 1) / 2; }
  int c2_cols() const { return (c1_cols() + 1) / 2; }
  int flat_dim() const { return conv2_ch * c2_rows() * c2_cols(); }
  int obs_dim() const { return feature_dim + 3 + 4 + 3 + 3 + action_dim + 1 + kTemDim; }

  bool operator==(const ArchConfig& o) const {
    return rows == o.rows && cols == o.cols && conv1_ch == o.conv1_ch &&
           conv2_ch == o.conv2_ch && feature_dim == o.feature_dim && hidden1 == o.hidden1 &&
           hidden2 == o.hidden2 && action_dim == o.action_dim && epsilon == o.epsilon &&
           v_max == o.v_max;
  }
};

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double sigmoid(double x) {
  return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Per-sample activation record; reusable across calls, one per thread.
struct Workspace {
  std::vector<double> img_n;             // normalized image
  std::vector<double> a1, z1, a2, z2;    // conv pre/post activations
  std::vector<double> obs, xn;           // raw and scaled trunk input
  std::vector<double> t1, y1, t2, y2;    // mlp pre/post activations
  std::vector<double> actor_pre;
  std::vector<double> alpha, beta;
  double value = 0.0;
  bool has_forward = false;
  bool has_image = false;

  // backward scratch
  std::vector<double> d_actor_pre, d_y2, d_t2, d_y1, d_t1, d_xn, d_z2, d_a2, d_z1, d_a1;
};

class Network {
 public:
  explicit Network(const ArchConfig& arch, uint64_t seed = 0) : arch_(arch) {
    layout();
    params_.assign(total_, 0.0);
    init_params(seed);
  }

  const ArchConfig& arch() const { return arch_; }
  size_t param_count() const { return total_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  void prepare(Workspace& ws) const {
    const ArchConfig& a = arch_;
    ws.img_n.assign(static_cast<size_t>(a.rows) * a.cols, 0.0);
    ws.a1.assign(static_cast<size_t>(a.conv1_ch) * a.c1_rows() * a.c1_cols(), 0.0);
    ws.z1 = ws.a1;
    ws.a2.assign(static_cast<size_t>(a.conv2_ch) * a.c2_rows() * a.c2_cols(), 0.0);
    ws.z2 = ws.a2;
    ws.obs.assign(a.obs_dim(), 0.0);
    ws.xn = ws.obs;
    ws.t1.assign(a.hidden1, 0.0);
    ws.y1 = ws.t1;
    ws.t2.assign(a.hidden2, 0.0);
    ws.y2 = ws.t2;
    ws.actor_pre.assign(2 * a.action_dim, 0.0);
    ws.alpha.assign(a.action_dim, 0.0);
    ws.beta.assign(a.action_dim, 0.0);
    ws.d_actor_pre = ws.actor_pre;
    ws.d_y2 = ws.t2;
    ws.d_t2 = ws.t2;
    ws.d_y1 = ws.t1;
    ws.d_t1 = ws.t1;
    ws.d_xn = ws.obs;
    ws.d_z2 = ws.a2;
    ws.d_a2 = ws.a2;
    ws.d_z1 = ws.a1;
    ws.d_a1 = ws.a1;
    ws.has_forward = false;
    ws.has_image = false;
  }

  // Conv backbone: pseudo-image -> feature vector (written into
  // ws.obs[0..feature_dim)). Input cells are normalized by r_max.
  void encode(const PseudoImage& img, Workspace& ws) const {
    const ArchConfig& a = arch_;
    if (img.rows() != a.rows || img.cols() != a.cols)
      throw std::invalid_argument("encode: pseudo-image dims do not match architecture");
    if (ws.img_n.size() != img.values.size()) prepare(ws);
    const double inv = 1.0 / img.spec.r_max;
    for (size_t i = 0; i < img.values.size(); ++i) ws.img_n[i] = img.values[i] * inv;

    conv_forward(ws.img_n.data(), 1, a.rows, a.cols, params_.data() + o_c1w_,
                 params_.data() + o_c1b_, a.conv1_ch, ws.a1.data());
    relu(ws.a1, ws.z1);
    conv_forward(ws.z1.data(), a.conv1_ch, a.c1_rows(), a.c1_cols(), params_.data() + o_c2w_,
                 params_.data() + o_c2b_, a.conv2_ch, ws.a2.data());
    relu(ws.a2, ws.z2);
    linear_forward(ws.z2.data(), a.flat_dim(), params_.data() + o_fcw_, params_.data() + o_fcb_,
                   a.feature_dim, ws.obs.data());
    ws.has_image = true;
  }

  std::vector<double> encode_feature(const PseudoImage& img, Workspace& ws) const {
    encode(img, ws);
    return {ws.obs.begin(), ws.obs.begin() + arch_.feature_dim};
  }

  // Shared MLP + heads over ws.obs (feature slots must already be filled).
  // proprio fills the non-feature slots when provided.
  void forward_trunk(Workspace& ws, const double* proprio = nullptr) const {
    const ArchConfig& a = arch_;
    if (ws.obs.size() != static_cast<size_t>(a.obs_dim())) prepare(ws);
    if (proprio != nullptr)
      for (int i = a.feature_dim; i < a.obs_dim(); ++i) ws.obs[i] = proprio[i - a.feature_dim];
    for (int i = 0; i < a.obs_dim(); ++i) ws.xn[i] = ws.obs[i] * input_scale(i);

    linear_forward(ws.xn.data(), a.obs_dim(), params_.data() + o_h1w_, params_.data() + o_h1b_,
                   a.hidden1, ws.t1.data());
    tanh_vec(ws.t1, ws.y1);
    linear_forward(ws.y1.data(), a.hidden1, params_.data() + o_h2w_, params_.data() + o_h2b_,
                   a.hidden2, ws.t2.data());
    tanh_vec(ws.t2, ws.y2);
    linear_forward(ws.y2.data(), a.hidden2, params_.data() + o_aw_, params_.data() + o_ab_,
                   2 * a.action_dim, ws.actor_pre.data());
    for (int d = 0; d < a.action_dim; ++d) {
      ws.alpha[d] = softplus(ws.actor_pre[d]) + a.epsilon;
      ws.beta[d] = softplus(ws.actor_pre[a.action_dim + d]) + a.epsilon;
    }
    ws.value = params_[o_vb_];
    const double* vw = params_.data() + o_vw_;
    for (int i = 0; i < a.hidden2; ++i) ws.value += vw[i] * ws.y2[i];
    ws.has_forward = true;
  }

  // Full pass: image through the backbone, then trunk + heads.
  void forward(const PseudoImage& img, const double* proprio, Workspace& ws) const {
    encode(img, ws);
    forward_trunk(ws, proprio);
  }

  // Exact reverse-mode gradients of a scalar loss seeded by
  // (d_alpha, d_beta, d_value); accumulates into `grad` (same layout as
  // params). The conv backbone contributes only when the forward pass went
  // through encode().
  void backward(Workspace& ws, const double* d_alpha, const double* d_beta, double d_value,
                std::vector<double>& grad) const {
    const ArchConfig& a = arch_;
    if (!ws.has_forward) throw std::logic_error("backward: no recorded forward pass");
    if (grad.size() != total_) grad.assign(total_, 0.0);

    for (int d = 0; d < a.action_dim; ++d) {
      ws.d_actor_pre[d] = d_alpha[d] * sigmoid(ws.actor_pre[d]);
      ws.d_actor_pre[a.action_dim + d] = d_beta[d] * sigmoid(ws.actor_pre[a.action_dim + d]);
    }

    // heads -> y2
    std::fill(ws.d_y2.begin(), ws.d_y2.end(), 0.0);
    linear_backward(ws.y2.data(), a.hidden2, params_.data() + o_aw_, ws.d_actor_pre.data(),
                    2 * a.action_dim, grad.data() + o_aw_, grad.data() + o_ab_, ws.d_y2.data());
    const double* vw = params_.data() + o_vw_;
    double* gvw = grad.data() + o_vw_;
    for (int i = 0; i < a.hidden2; ++i) {
      gvw[i] += d_value * ws.y2[i];
      ws.d_y2[i] += d_value * vw[i];
    }
    grad[o_vb_] += d_value;

    // y2 -> y1
    for (int i = 0; i < a.hidden2; ++i) ws.d_t2[i] = ws.d_y2[i] * (1.0 - ws.y2[i] * ws.y2[i]);
    std::fill(ws.d_y1.begin(), ws.d_y1.end(), 0.0);
    linear_backward(ws.y1.data(), a.hidden1, params_.data() + o_h2w_, ws.d_t2.data(), a.hidden2,
                    grad.data() + o_h2w_, grad.data() + o_h2b_, ws.d_y1.data());

    // y1 -> xn
    for (int i = 0; i < a.hidden1; ++i) ws.d_t1[i] = ws.d_y1[i] * (1.0 - ws.y1[i] * ws.y1[i]);
    std::fill(ws.d_xn.begin(), ws.d_xn.end(), 0.0);
    linear_backward(ws.xn.data(), a.obs_dim(), params_.data() + o_h1w_, ws.d_t1.data(), a.hidden1,
                    grad.data() + o_h1w_, grad.data() + o_h1b_, ws.d_xn.data());

    if (!ws.has_image) return;

    // feature slots -> conv stack (input scale for features is 1)
    std::fill(ws.d_z2.begin(), ws.d_z2.end(), 0.0);
    linear_backward(ws.z2.data(), a.flat_dim(), params_.data() + o_fcw_, ws.d_xn.data(),
                    a.feature_dim, grad.data() + o_fcw_, grad.data() + o_fcb_, ws.d_z2.data());
    for (size_t i = 0; i < ws.a2.size(); ++i) ws.d_a2[i] = ws.a2[i] > 0.0 ? ws.d_z2[i] : 0.0;
    std::fill(ws.d_z1.begin(), ws.d_z1.end(), 0.0);
    conv_backward(ws.z1.data(), a.conv1_ch, a.c1_rows(), a.c1_cols(), params_.data() + o_c2w_,
                  ws.d_a2.data(), a.conv2_ch, grad.data() + o_c2w_, grad.data() + o_c2b_,
                  ws.d_z1.data());
    for (size_t i = 0; i < ws.a1.size(); ++i) ws.d_a1[i] = ws.a1[i] > 0.0 ? ws.d_z1[i] : 0.0;
    conv_backward(ws.img_n.data(), 1, a.rows, a.cols, params_.data() + o_c1w_, ws.d_a1.data(),
                  a.conv1_ch, grad.data() + o_c1w_, grad.data() + o_c1b_, nullptr);
  }

  // Fixed input scaling applied before the trunk; feature and TEM slots
  // pass through unscaled.
  double input_scale(int idx) const {
    const int f = arch_.feature_dim;
    if (idx < f) return 1.0;           // z, already in [0,1]
    if (idx < f + 3) return 0.1;       // p_rel
    if (idx < f + 7) return 1.0;       // quaternion
    if (idx < f + 13) return 0.2;      // v, omega
    if (idx < f + 13 + arch_.action_dim) return 1.0 / arch_.v_max;  // a_prev
    if (idx == f + 13 + arch_.action_dim) return 0.25;              // v_des
    return 1.0;                                                     // TEM
  }

  void save(std::ostream& out) const {
    const ArchConfig& a = arch_;
    out << "asyncnav-checkpoint v1\n";
    out << "arch " << a.rows << ' ' << a.cols << ' ' << a.conv1_ch << ' ' << a.conv2_ch << ' '
        << a.feature_dim << ' ' << a.hidden1 << ' ' << a.hidden2 << ' ' << a.action_dim << ' '
        << strformat("%a %a", a.epsilon, a.v_max) << '\n';
    out << "params " << total_ << '\n';
    for (size_t i = 0; i < total_; ++i) out << strformat("%a\n", params_[i]);
  }

  static Network load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "asyncnav-checkpoint v1")
      throw std::runtime_error("checkpoint: bad magic/version");
    ArchConfig a;
    std::string tag;
    in >> tag;
    if (tag != "arch") throw std::runtime_error("checkpoint: missing arch record");
    std::string eps_s, vmax_s;
    in >> a.rows >> a.cols >> a.conv1_ch >> a.conv2_ch >> a.feature_dim >> a.hidden1 >>
        a.hidden2 >> a.action_dim >> eps_s >> vmax_s;
    a.epsilon = std::strtod(eps_s.c_str(), nullptr);
    a.v_max = std::strtod(vmax_s.c_str(), nullptr);
    size_t count = 0;
    in >> tag >> count;
    if (tag != "params" || in.fail()) throw std::runtime_error("checkpoint: missing params record");
    Network net(a);
    if (count != net.total_) throw std::runtime_error("checkpoint: parameter count mismatch");
    for (size_t i = 0; i < count; ++i) {
      std::string v;
      if (!(in >> v)) throw std::runtime_error("checkpoint: truncated parameter block");
      net.params_[i] = std::strtod(v.c_str(), nullptr);
    }
    return net;
  }

 private:
  void layout() {
    const ArchConfig& a = arch_;
    size_t o = 0;
    auto take = [&o](size_t n) { size_t r = o; o += n; return r; };
    o_c1w_ = take(static_cast<size_t>(a.conv1_ch) * 1 * 9);
    o_c1b_ = take(a.conv1_ch);
    o_c2w_ = take(static_cast<size_t>(a.conv2_ch) * a.conv1_ch * 9);
    o_c2b_ = take(a.conv2_ch);
    o_fcw_ = take(static_cast<size_t>(a.feature_dim) * a.flat_dim());
    o_fcb_ = take(a.feature_dim);
    o_h1w_ = take(static_cast<size_t>(a.hidden1) * a.obs_dim());
    o_h1b_ = take(a.hidden1);
    o_h2w_ = take(static_cast<size_t>(a.hidden2) * a.hidden1);
    o_h2b_ = take(a.hidden2);
    o_aw_ = take(static_cast<size_t>(2 * a.action_dim) * a.hidden2);
    o_ab_ = take(2 * a.action_dim);
    o_vw_ = take(a.hidden2);
    o_vb_ = take(1);
    total_ = o;
  }

  void init_params(uint64_t seed) {
    Rng rng(derive_seed(seed, 0x4e455457u));  // init stream
    auto xavier = [&](size_t off, int fan_in, int fan_out, size_t n, double gain) {
      const double limit = gain * std::sqrt(6.0 / (fan_in + fan_out));
      for (size_t i = 0; i < n; ++i) params_[off + i] = rng.uniform(-limit, limit);
    };
    const ArchConfig& a = arch_;
    xavier(o_c1w_, 9, 9 * a.conv1_ch, static_cast<size_t>(a.conv1_ch) * 9, 1.0);
    xavier(o_c2w_, 9 * a.conv1_ch, 9 * a.conv2_ch,
           static_cast<size_t>(a.conv2_ch) * a.conv1_ch * 9, 1.0);
    xavier(o_fcw_, a.flat_dim(), a.feature_dim, static_cast<size_t>(a.feature_dim) * a.flat_dim(),
           1.0);
    xavier(o_h1w_, a.obs_dim(), a.hidden1, static_cast<size_t>(a.hidden1) * a.obs_dim(), 1.0);
    xavier(o_h2w_, a.hidden1, a.hidden2, static_cast<size_t>(a.hidden2) * a.hidden1, 1.0);
    xavier(o_aw_, a.hidden2, 2 * a.action_dim, static_cast<size_t>(2 * a.action_dim) * a.hidden2,
           0.01);
    xavier(o_vw_, a.hidden2, 1, a.hidden2, 1.0);
    // biases stay zero
  }

  static void relu(const std::vector<double>& in, std::vector<double>& out) {
    for (size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  }
  static void tanh_vec(const std::vector<double>& in, std::vector<double>& out) {
    for (size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
  }

  static void linear_forward(const double* x, int in_dim, const double* w, const double* b,
                             int out_dim, double* y) {
    for (int o = 0; o < out_dim; ++o) {
      const double* wo = w + static_cast<size_t>(o) * in_dim;
      double acc = b[o];
      for (int i = 0; i < in_dim; ++i) acc += wo[i] * x[i];
      y[o] = acc;
    }
  }

  static void linear_backward(const double* x, int in_dim, const double* w, const double* dy,
                              int out_dim, double* gw, double* gb, double* dx) {
    for (int o = 0; o < out_dim; ++o) {
      const double g = dy[o];
      if (g == 0.0) continue;
      const double* wo = w + static_cast<size_t>(o) * in_dim;
      double* gwo = gw + static_cast<size_t>(o) * in_dim;
      for (int i = 0; i < in_dim; ++i) {
        gwo[i] += g * x[i];
        if (dx != nullptr) dx[i] += g * wo[i];
      }
      gb[o] += g;
    }
  }

  // 3x3 conv, stride 2, pad 1. Weights: [out_ch][in_ch][3][3].
  static void conv_forward(const double* x, int in_ch, int h, int w, const double* weights,
                           const double* bias, int out_ch, double* y) {
    const int oh = (h + 1) / 2, ow = (w + 1) / 2;
    for (int oc = 0; oc < out_ch; ++oc) {
      double* yo = y + static_cast<size_t>(oc) * oh * ow;
      for (int i = 0; i < oh * ow; ++i) yo[i] = bias[oc];
      for (int ic = 0; ic < in_ch; ++ic) {
        const double* xi = x + static_cast<size_t>(ic) * h * w;
        const double* wk = weights + (static_cast<size_t>(oc) * in_ch + ic) * 9;
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            double acc = 0.0;
            for (int ky = 0; ky < 3; ++ky) {
              const int iy = 2 * oy - 1 + ky;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < 3; ++kx) {
                const int ix = 2 * ox - 1 + kx;
                if (ix < 0 || ix >= w) continue;
                acc += wk[ky * 3 + kx] * xi[iy * w + ix];
              }
            }
            yo[oy * ow + ox] += acc;
          }
      }
    }
  }

  static void conv_backward(const double* x, int in_ch, int h, int w, const double* weights,
                            const double* dy, int out_ch, double* gw, double* gb, double* dx) {
    const int oh = (h + 1) / 2, ow = (w + 1) / 2;
    for (int oc = 0; oc < out_ch; ++oc) {
      const double* dyo = dy + static_cast<size_t>(oc) * oh * ow;
      for (int i = 0; i < oh * ow; ++i) gb[oc] += dyo[i];
      for (int ic = 0; ic < in_ch; ++ic) {
        const double* xi = x + static_cast<size_t>(ic) * h * w;
        const double* wk = weights + (static_cast<size_t>(oc) * in_ch + ic) * 9;
        double* gwk = gw + (static_cast<size_t>(oc) * in_ch + ic) * 9;
        double* dxi = dx != nullptr ? dx + static_cast<size_t>(ic) * h * w : nullptr;
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            const double g = dyo[oy * ow + ox];
            if (g == 0.0) continue;
            for (int ky = 0; ky < 3; ++ky) {
              const int iy = 2 * oy - 1 + ky;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < 3; ++kx) {
                const int ix = 2 * ox - 1 + kx;
                if (ix < 0 || ix >= w) continue;
                gwk[ky * 3 + kx] += g * xi[iy * w + ix];
                if (dxi != nullptr) dxi[iy * w + ix] += g * wk[ky * 3 + kx];
              }
            }
          }
      }
    }
  }

  ArchConfig arch_;
  std::vector<double> params_;
  size_t o_c1w_ = 0, o_c1b_ = 0, o_c2w_ = 0, o_c2b_ = 0, o_fcw_ = 0, o_fcb_ = 0;
  size_t o_h1w_ = 0, o_h1b_ = 0, o_h2w_ = 0, o_h2b_ = 0, o_aw_ = 0, o_ab_ = 0;
  size_t o_vw_ = 0, o_vb_ = 0;
  size_t total_ = 0;
};

}  // namespace asyncnav
