#include "sixv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sixv::tensor {

std::vector<std::pair<int, int>> active_taps(const MaskedConvSpec& spec) {
  const int ch = spec.kernel_h / 2;
  const int cw = spec.kernel_w / 2;
  std::vector<std::pair<int, int>> taps;
  for (int ky = 0; ky < spec.kernel_h; ++ky) {
    for (int kx = 0; kx < spec.kernel_w; ++kx) {
      bool keep = false;
      switch (spec.mask) {
        case MaskKind::None: keep = true; break;
        case MaskKind::Vertical: keep = ky < ch; break;
        case MaskKind::HorizontalA: keep = ky == ch && kx < cw; break;
        case MaskKind::HorizontalB: keep = ky == ch && kx <= cw; break;
      }
      if (keep) taps.emplace_back(ky, kx);
    }
  }
  return taps;
}

Tape::Var Tape::emplace(Tensor value, std::function<void()> back) {
  nodes_.push_back(Node{std::move(value), {}, std::move(back)});
  Node& n = nodes_.back();
  n.grad = Tensor(n.value.shape);
  return Var(nodes_.size() - 1);
}

Tape::Var Tape::input(Tensor t) { return emplace(std::move(t)); }

Tape::Var Tape::conv2d(Var x, Var w, Var b, const MaskedConvSpec& spec) {
  const Tensor& in = value(x);
  const Tensor& wt = value(w);
  const Tensor& bias = value(b);
  if (in.shape.size() != 4 || in.dim(3) != spec.in_channels)
    throw Error(ErrorCode::ShapeMismatch, "conv2d: bad input shape");
  if (wt.shape != std::vector<int>{spec.kernel_h, spec.kernel_w, spec.in_channels,
                                   spec.out_channels})
    throw Error(ErrorCode::ShapeMismatch, "conv2d: bad weight shape");
  if (bias.shape != std::vector<int>{spec.out_channels})
    throw Error(ErrorCode::ShapeMismatch, "conv2d: bad bias shape");

  const int N = in.dim(0), H = in.dim(1), W = in.dim(2);
  const int IC = spec.in_channels, OC = spec.out_channels;
  const int ph = spec.kernel_h / 2, pw = spec.kernel_w / 2;
  const auto taps = active_taps(spec);

  Tensor out({N, H, W, OC});
  for (int n = 0; n < N; ++n) {
    for (int y = 0; y < H; ++y) {
      for (int xw = 0; xw < W; ++xw) {
        float* o = &out.data[size_t(((n * H + y) * W + xw) * OC)];
        for (int oc = 0; oc < OC; ++oc) o[oc] = bias.data[size_t(oc)];
        for (auto [ky, kx] : taps) {
          const int iy = y + ky - ph, ix = xw + kx - pw;
          if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
          const float* ip = &in.data[size_t(((n * H + iy) * W + ix) * IC)];
          const float* wp = &wt.data[size_t(((ky * spec.kernel_w + kx) * IC) * OC)];
          for (int ic = 0; ic < IC; ++ic) {
            const float a = ip[ic];
            const float* wrow = wp + size_t(ic) * OC;
            for (int oc = 0; oc < OC; ++oc) o[oc] += a * wrow[oc];
          }
        }
      }
    }
  }

  Var v = emplace(std::move(out), [this, x, w, b, spec, taps, v = Var(nodes_.size())]() {
    const Tensor& in = value(x);
    const Tensor& wt = value(w);
    const Tensor& go = grad(v);
    Tensor& gi = grd(x);
    Tensor& gw = grd(w);
    Tensor& gb = grd(b);
    const int N = in.dim(0), H = in.dim(1), W = in.dim(2);
    const int IC = spec.in_channels, OC = spec.out_channels;
    const int ph = spec.kernel_h / 2, pw = spec.kernel_w / 2;
    for (int n = 0; n < N; ++n) {
      for (int y = 0; y < H; ++y) {
        for (int xw = 0; xw < W; ++xw) {
          const float* g = &go.data[size_t(((n * H + y) * W + xw) * OC)];
          for (int oc = 0; oc < OC; ++oc) gb.data[size_t(oc)] += g[oc];
          for (auto [ky, kx] : taps) {
            const int iy = y + ky - ph, ix = xw + kx - pw;
            if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
            const float* ip = &in.data[size_t(((n * H + iy) * W + ix) * IC)];
            float* gip = &gi.data[size_t(((n * H + iy) * W + ix) * IC)];
            const size_t wbase = size_t(((ky * spec.kernel_w + kx) * IC) * OC);
            for (int ic = 0; ic < IC; ++ic) {
              const float* wrow = &wt.data[wbase + size_t(ic) * OC];
              float* gwrow = &gw.data[wbase + size_t(ic) * OC];
              float acc = 0.0f;
              const float a = ip[ic];
              for (int oc = 0; oc < OC; ++oc) {
                acc += g[oc] * wrow[oc];
                gwrow[oc] += a * g[oc];
              }
              gip[ic] += acc;
            }
          }
        }
      }
    }
  });
  return v;
}

Tape::Var Tape::dense(Var x, Var w, Var b) {
  const Tensor& in = value(x);
  const Tensor& wt = value(w);
  const Tensor& bias = value(b);
  if (in.shape.size() != 2 || wt.shape.size() != 2 || in.dim(1) != wt.dim(0) ||
      bias.shape != std::vector<int>{wt.dim(1)})
    throw Error(ErrorCode::ShapeMismatch, "dense: bad shapes");
  const int N = in.dim(0), D = in.dim(1), M = wt.dim(1);
  Tensor out({N, M});
  for (int n = 0; n < N; ++n) {
    float* o = &out.data[size_t(n * M)];
    for (int m = 0; m < M; ++m) o[m] = bias.data[size_t(m)];
    const float* ip = &in.data[size_t(n * D)];
    for (int d = 0; d < D; ++d) {
      const float a = ip[d];
      const float* wrow = &wt.data[size_t(d * M)];
      for (int m = 0; m < M; ++m) o[m] += a * wrow[m];
    }
  }
  Var v = emplace(std::move(out), [this, x, w, b, v = Var(nodes_.size())]() {
    const Tensor& in = value(x);
    const Tensor& wt = value(w);
    const Tensor& go = grad(v);
    Tensor& gi = grd(x);
    Tensor& gw = grd(w);
    Tensor& gb = grd(b);
    const int N = in.dim(0), D = in.dim(1), M = wt.dim(1);
    for (int n = 0; n < N; ++n) {
      const float* g = &go.data[size_t(n * M)];
      for (int m = 0; m < M; ++m) gb.data[size_t(m)] += g[m];
      const float* ip = &in.data[size_t(n * D)];
      float* gip = &gi.data[size_t(n * D)];
      for (int d = 0; d < D; ++d) {
        const float* wrow = &wt.data[size_t(d * M)];
        float* gwrow = &gw.data[size_t(d * M)];
        float acc = 0.0f;
        const float a = ip[d];
        for (int m = 0; m < M; ++m) {
          acc += g[m] * wrow[m];
          gwrow[m] += a * g[m];
        }
        gip[d] += acc;
      }
    }
  });
  return v;
}

Tape::Var Tape::add(Var a, Var b) {
  if (!value(a).same_shape(value(b)))
    throw Error(ErrorCode::ShapeMismatch, "add: shape mismatch");
  Tensor out = value(a);
  const Tensor& bb = value(b);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bb.data[i];
  return emplace(std::move(out), [this, a, b, v = Var(nodes_.size())]() {
    const Tensor& g = grad(v);
    Tensor& ga = grd(a);
    Tensor& gb = grd(b);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] += g.data[i];
    }
  });
}

Tape::Var Tape::mul(Var a, Var b) {
  if (!value(a).same_shape(value(b)))
    throw Error(ErrorCode::ShapeMismatch, "mul: shape mismatch");
  Tensor out = value(a);
  const Tensor& bb = value(b);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bb.data[i];
  return emplace(std::move(out), [this, a, b, v = Var(nodes_.size())]() {
    const Tensor& g = grad(v);
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    Tensor& ga = grd(a);
    Tensor& gb = grd(b);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i] * bv.data[i];
      gb.data[i] += g.data[i] * av.data[i];
    }
  });
}

Tape::Var Tape::scale(Var a, float s) {
  Tensor out = value(a);
  for (float& x : out.data) x *= s;
  return emplace(std::move(out), [this, a, s, v = Var(nodes_.size())]() {
    const Tensor& g = grad(v);
    Tensor& ga = grd(a);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += s * g.data[i];
  });
}

Tape::Var Tape::tanh_(Var a) {
  Tensor out = value(a);
  for (float& x : out.data) x = std::tanh(x);
  return emplace(std::move(out), [this, a, v = Var(nodes_.size())]() {
    const Tensor& g = grad(v);
    const Tensor& y = value(v);
    Tensor& ga = grd(a);
    for (size_t i = 0; i < g.data.size(); ++i)
      ga.data[i] += g.data[i] * (1.0f - y.data[i] * y.data[i]);
  });
}

Tape::Var Tape::sigmoid_(Var a) {
  Tensor out = value(a);
  for (float& x : out.data) x = 1.0f / (1.0f + std::exp(-x));
  return emplace(std::move(out), [this, a, v = Var(nodes_.size())]() {
    const Tensor& g = grad(v);
    const Tensor& y = value(v);
    Tensor& ga = grd(a);
    for (size_t i = 0; i < g.data.size(); ++i)
      ga.data[i] += g.data[i] * y.data[i] * (1.0f - y.data[i]);
  });
}

Tape::Var Tape::relu_(Var a) {
  Tensor out = value(a);
  for (float& x : out.data) x = std::max(x, 0.0f);
  return emplace(std::move(out), [this, a, v = Var(nodes_.size())]() {
    const Tensor& g = grad(v);
    const Tensor& x = value(a);
    Tensor& ga = grd(a);
    for (size_t i = 0; i < g.data.size(); ++i)
      if (x.data[i] > 0.0f) ga.data[i] += g.data[i];
  });
}

Tape::Var Tape::exp_(Var a) {
  Tensor out = value(a);
  for (float& x : out.data) x = std::exp(x);
  return emplace(std::move(out), [this, a, v = Var(nodes_.size())]() {
    const Tensor& g = grad(v);
    const Tensor& y = value(v);
    Tensor& ga = grd(a);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * y.data[i];
  });
}

Tape::Var Tape::square_(Var a) {
  Tensor out = value(a);
  for (float& x : out.data) x = x * x;
  return emplace(std::move(out), [this, a, v = Var(nodes_.size())]() {
    const Tensor& g = grad(v);
    const Tensor& x = value(a);
    Tensor& ga = grd(a);
    for (size_t i = 0; i < g.data.size(); ++i)
      ga.data[i] += 2.0f * g.data[i] * x.data[i];
  });
}

Tape::Var Tape::reshape(Var a, std::vector<int> shape) {
  if (Tensor::numel(shape) != value(a).size())
    throw Error(ErrorCode::ShapeMismatch, "reshape: element count mismatch");
  Tensor out = value(a);
  out.shape = shape;
  return emplace(std::move(out), [this, a, v = Var(nodes_.size())]() {
    const Tensor& g = grad(v);
    Tensor& ga = grd(a);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
  });
}

Tape::Var Tape::gate(Var a) {
  const Tensor& in = value(a);
  const int C = in.shape.back();
  if (C % 2 != 0)
    throw Error(ErrorCode::OddChannelCount, "gate: channel count must be even");
  const int H = C / 2;
  const size_t rows = size_t(in.size() / C);
  std::vector<int> oshape = in.shape;
  oshape.back() = H;
  Tensor out(oshape);
  for (size_t r = 0; r < rows; ++r) {
    const float* ip = &in.data[r * size_t(C)];
    float* op = &out.data[r * size_t(H)];
    for (int c = 0; c < H; ++c) {
      const float f = std::tanh(ip[c]);
      const float g = 1.0f / (1.0f + std::exp(-ip[H + c]));
      op[c] = f * g;
    }
  }
  return emplace(std::move(out), [this, a, C, H, rows, v = Var(nodes_.size())]() {
    const Tensor& g = grad(v);
    const Tensor& in = value(a);
    Tensor& ga = grd(a);
    for (size_t r = 0; r < rows; ++r) {
      const float* ip = &in.data[r * size_t(C)];
      float* gp = &ga.data[r * size_t(C)];
      const float* go = &g.data[r * size_t(H)];
      for (int c = 0; c < H; ++c) {
        const float f = std::tanh(ip[c]);
        const float s = 1.0f / (1.0f + std::exp(-ip[H + c]));
        gp[c] += go[c] * s * (1.0f - f * f);
        gp[H + c] += go[c] * f * s * (1.0f - s);
      }
    }
  });
}

Tape::Var Tape::sum(Var a) {
  double acc = 0.0;
  for (float x : value(a).data) acc += x;
  Tensor out({1});
  out.data[0] = float(acc);
  return emplace(std::move(out), [this, a, v = Var(nodes_.size())]() {
    const float g = grad(v).data[0];
    Tensor& ga = grd(a);
    for (float& x : ga.data) x += g;
  });
}

Tape::Var Tape::bce_with_logits_mean(Var logits, Tensor targets) {
  const Tensor& z = value(logits);
  if (!z.same_shape(targets))
    throw Error(ErrorCode::ShapeMismatch, "bce: target shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < z.data.size(); ++i) {
    const float zi = z.data[i];
    const float ti = targets.data[i];
    // softplus(z) - t*z, numerically stable for both signs
    const float sp = zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi));
    acc += double(sp - ti * zi);
  }
  const float n = float(z.data.size());
  Tensor out({1});
  out.data[0] = float(acc) / n;
  return emplace(std::move(out),
                 [this, logits, t = std::move(targets), n, v = Var(nodes_.size())]() {
    const float g = grad(v).data[0] / n;
    const Tensor& z = value(logits);
    Tensor& gz = grd(logits);
    for (size_t i = 0; i < z.data.size(); ++i) {
      const float s = 1.0f / (1.0f + std::exp(-z.data[i]));
      gz.data[i] += g * (s - t.data[i]);
    }
  });
}

Tape::Var Tape::kl_unit_gauss(Var mu, Var logvar) {
  const Tensor& m = value(mu);
  const Tensor& lv = value(logvar);
  if (!m.same_shape(lv))
    throw Error(ErrorCode::ShapeMismatch, "kl: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < m.data.size(); ++i)
    acc += -0.5 * double(1.0f + lv.data[i] - m.data[i] * m.data[i] -
                         std::exp(lv.data[i]));
  Tensor out({1});
  out.data[0] = float(acc);
  return emplace(std::move(out), [this, mu, logvar, v = Var(nodes_.size())]() {
    const float g = grad(v).data[0];
    const Tensor& m = value(mu);
    const Tensor& lv = value(logvar);
    Tensor& gm = grd(mu);
    Tensor& gl = grd(logvar);
    for (size_t i = 0; i < m.data.size(); ++i) {
      gm.data[i] += g * m.data[i];
      gl.data[i] += g * 0.5f * (std::exp(lv.data[i]) - 1.0f);
    }
  });
}

Tape::Var Tape::reparam(Var mu, Var logvar, Tensor eps) {
  const Tensor& m = value(mu);
  const Tensor& lv = value(logvar);
  if (!m.same_shape(lv) || !m.same_shape(eps))
    throw Error(ErrorCode::ShapeMismatch, "reparam: shape mismatch");
  Tensor out = m;
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] += eps.data[i] * std::exp(0.5f * lv.data[i]);
  return emplace(std::move(out),
                 [this, mu, logvar, e = std::move(eps), v = Var(nodes_.size())]() {
    const Tensor& g = grad(v);
    const Tensor& lv = value(logvar);
    Tensor& gm = grd(mu);
    Tensor& gl = grd(logvar);
    for (size_t i = 0; i < g.data.size(); ++i) {
      const float sd = std::exp(0.5f * lv.data[i]);
      gm.data[i] += g.data[i];
      gl.data[i] += g.data[i] * e.data[i] * 0.5f * sd;
    }
  });
}

void Tape::backward(Var loss) {
  if (consumed_)
    throw Error(ErrorCode::GraphConsumed, "backward already called on this tape");
  consumed_ = true;
  if (value(loss).size() != 1)
    throw Error(ErrorCode::ShapeMismatch, "backward: loss must be scalar");
  grd(loss).data[0] = 1.0f;
  for (int i = loss; i >= 0; --i) {
    if (nodes_[size_t(i)].back) nodes_[size_t(i)].back();
  }
}

void Adam::step(ParamMap& params, const ParamMap& grads) {
  ++t_;
  const float bc1 = 1.0f - std::pow(beta1_, float(t_));
  const float bc2 = 1.0f - std::pow(beta2_, float(t_));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    if (!g.same_shape(p))
      throw Error(ErrorCode::ShapeMismatch, "adam: grad shape mismatch for " + name);
    Tensor& m = m_.try_emplace(name, Tensor(p.shape)).first->second;
    Tensor& v = v_.try_emplace(name, Tensor(p.shape)).first->second;
    for (size_t i = 0; i < p.data.size(); ++i) {
      m.data[i] = beta1_ * m.data[i] + (1.0f - beta1_) * g.data[i];
      v.data[i] = beta2_ * v.data[i] + (1.0f - beta2_) * g.data[i] * g.data[i];
      const float mhat = m.data[i] / bc1;
      const float vhat = v.data[i] / bc2;
      p.data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

namespace {
constexpr char kMagic[8] = {'S', 'V', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(const std::string& in, size_t& off) {
  if (off + sizeof(T) > in.size())
    throw Error(ErrorCode::IoError, "checkpoint truncated");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}
}  // namespace

std::string serialize_checkpoint(const ParamMap& params) {
  std::string out(kMagic, sizeof(kMagic));
  put<uint32_t>(out, uint32_t(params.size()));
  for (const auto& [name, t] : params) {
    put<uint16_t>(out, uint16_t(name.size()));
    out.append(name);
    put<uint8_t>(out, uint8_t(t.shape.size()));
    for (int d : t.shape) put<int32_t>(out, int32_t(d));
    out.append(reinterpret_cast<const char*>(t.data.data()),
               t.data.size() * sizeof(float));
  }
  return out;
}

ParamMap deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorCode::IoError, "bad checkpoint magic");
  size_t off = sizeof(kMagic);
  uint32_t count = get<uint32_t>(bytes, off);
  ParamMap params;
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t nlen = get<uint16_t>(bytes, off);
    if (off + nlen > bytes.size())
      throw Error(ErrorCode::IoError, "checkpoint truncated");
    std::string name = bytes.substr(off, nlen);
    off += nlen;
    uint8_t nd = get<uint8_t>(bytes, off);
    std::vector<int> shape;
    for (uint8_t d = 0; d < nd; ++d) shape.push_back(get<int32_t>(bytes, off));
    Tensor t(shape);
    size_t nbytes = t.data.size() * sizeof(float);
    if (off + nbytes > bytes.size())
      throw Error(ErrorCode::IoError, "checkpoint truncated");
    std::memcpy(t.data.data(), bytes.data() + off, nbytes);
    off += nbytes;
    params.emplace(std::move(name), std::move(t));
  }
  return params;
}

void save_checkpoint(const std::string& path, const ParamMap& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  std::string bytes = serialize_checkpoint(params);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

ParamMap load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

Tensor init_weights(std::vector<int> shape, int fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const float bound = std::sqrt(6.0f / float(std::max(fan_in, 1)));
  for (float& x : t.data) x = (rng.next_float() * 2.0f - 1.0f) * bound;
  return t;
}

}  // namespace sixv::tensor
