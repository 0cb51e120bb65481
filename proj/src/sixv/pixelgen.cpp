#include "sixv/pixelgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sixv::pixelgen {

using tensor::MaskedConvSpec;
using tensor::MaskKind;
using tensor::ParamMap;
using tensor::Tape;
using tensor::Tensor;

namespace {
MaskedConvSpec spec3(MaskKind mask, int in_c, int out_c) {
  return MaskedConvSpec{3, 3, mask, in_c, out_c};
}
MaskedConvSpec spec1(int in_c, int out_c) {
  return MaskedConvSpec{1, 1, MaskKind::None, in_c, out_c};
}
}  // namespace

Tensor augment_position(const Tensor& images) {
  const int B = images.dim(0), H = images.dim(1), W = images.dim(2);
  if (images.dim(3) != 1)
    throw Error(ErrorCode::ShapeMismatch, "augment_position expects one channel");
  Tensor out({B, H, W, 3});
  for (int b = 0; b < B; ++b) {
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) {
        const size_t src = size_t(((b * H) + i) * W + j);
        const size_t dst = src * 3;
        out.data[dst] = images.data[src];
        out.data[dst + 1] = float(i % 8) / 7.0f;
        out.data[dst + 2] = float(j) / 15.0f;
      }
    }
  }
  return out;
}

PixelModel PixelModel::create(int subclass_id, uint64_t seed, int hidden,
                              int blocks) {
  Rng rng(seed);
  const int g = 2 * hidden;  // gate width
  ParamMap p;
  p["in_v.w"] = tensor::init_weights({3, 3, 3, g}, 9, rng);
  p["in_v.b"] = Tensor({g});
  p["in_h.w"] = tensor::init_weights({3, 3, 3, g}, 3, rng);
  p["in_h.b"] = Tensor({g});
  p["in_link.w"] = tensor::init_weights({1, 1, g, g}, g, rng);
  p["in_link.b"] = Tensor({g});
  for (int i = 0; i < blocks; ++i) {
    const std::string b = "b" + std::to_string(i);
    p[b + ".v.w"] = tensor::init_weights({3, 3, hidden, g}, 3 * hidden, rng);
    p[b + ".v.b"] = Tensor({g});
    p[b + ".h.w"] = tensor::init_weights({3, 3, hidden, g}, 2 * hidden, rng);
    p[b + ".h.b"] = Tensor({g});
    p[b + ".link.w"] = tensor::init_weights({1, 1, g, g}, g, rng);
    p[b + ".link.b"] = Tensor({g});
    p[b + ".out.w"] = tensor::init_weights({1, 1, hidden, hidden}, hidden, rng);
    p[b + ".out.b"] = Tensor({hidden});
  }
  p["head1.w"] = tensor::init_weights({1, 1, hidden, hidden}, hidden, rng);
  p["head1.b"] = Tensor({hidden});
  p["head2.w"] = tensor::init_weights({1, 1, hidden, 1}, hidden, rng);
  p["head2.b"] = Tensor({1});
  return PixelModel(std::move(p), subclass_id, hidden, blocks);
}

PixelModel PixelModel::from_params(ParamMap params, int subclass_id, int hidden,
                                   int blocks) {
  return PixelModel(std::move(params), subclass_id, hidden, blocks);
}

Tape::Var PixelModel::forward(Tape& tape, Tape::Var x,
                              std::map<std::string, Tape::Var>& pvars) const {
  pvars.clear();
  for (const auto& [name, t] : params_) pvars[name] = tape.input(t);
  const int h = hidden_, g = 2 * hidden_;

  auto vc0 = tape.conv2d(x, pvars["in_v.w"], pvars["in_v.b"],
                         spec3(MaskKind::Vertical, 3, g));
  auto hc0 = tape.add(tape.conv2d(x, pvars["in_h.w"], pvars["in_h.b"],
                                  spec3(MaskKind::HorizontalA, 3, g)),
                      tape.conv2d(vc0, pvars["in_link.w"], pvars["in_link.b"],
                                  spec1(g, g)));
  auto v = tape.gate(vc0);
  auto hs = tape.gate(hc0);

  for (int i = 0; i < blocks_; ++i) {
    const std::string b = "b" + std::to_string(i);
    auto vc = tape.conv2d(v, pvars[b + ".v.w"], pvars[b + ".v.b"],
                          spec3(MaskKind::Vertical, h, g));
    auto hc = tape.add(tape.conv2d(hs, pvars[b + ".h.w"], pvars[b + ".h.b"],
                                   spec3(MaskKind::HorizontalB, h, g)),
                       tape.conv2d(vc, pvars[b + ".link.w"], pvars[b + ".link.b"],
                                   spec1(g, g)));
    v = tape.gate(vc);
    hs = tape.add(hs, tape.conv2d(tape.gate(hc), pvars[b + ".out.w"],
                                  pvars[b + ".out.b"], spec1(h, h)));
  }
  auto head = tape.relu_(tape.conv2d(hs, pvars["head1.w"], pvars["head1.b"],
                                     spec1(h, h)));
  return tape.conv2d(head, pvars["head2.w"], pvars["head2.b"], spec1(h, 1));
}

Tensor PixelModel::logits(const Tensor& images) const {
  Tape tape;
  std::map<std::string, Tape::Var> pvars;
  auto out = forward(tape, tape.input(augment_position(images)), pvars);
  return tape.value(out);
}

namespace {
// Incremental sampler state: per-stream activation grids filled in raster
// order. Values at positions before the current pixel stay valid because every
// path through the model is causal.
struct Sampler {
  const ParamMap& p;
  int H, W, h, g, blocks;
  std::vector<float> x;                       // H*W
  std::vector<float> v0, h0;                  // gated streams, H*W*h
  std::vector<std::vector<float>> v, hs;      // per block outputs, H*W*h

  Sampler(const ParamMap& params, int height, int width, int hidden, int nblocks)
      : p(params), H(height), W(width), h(hidden), g(2 * hidden), blocks(nblocks) {
    // Channel 0 holds sampled bits; 1 and 2 the constant coordinate channels.
    x.assign(size_t(H * W * 3), 0.0f);
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) {
        x[size_t((i * W + j) * 3 + 1)] = float(i % 8) / 7.0f;
        x[size_t((i * W + j) * 3 + 2)] = float(j) / 15.0f;
      }
    }
    v0.assign(size_t(H * W * h), 0.0f);
    h0.assign(size_t(H * W * h), 0.0f);
    v.assign(size_t(blocks), std::vector<float>(size_t(H * W * h), 0.0f));
    hs.assign(size_t(blocks), std::vector<float>(size_t(H * W * h), 0.0f));
  }

  const Tensor& t(const std::string& name) const { return p.at(name); }

  // 3x3 vertical conv (row above only) of a stream with `ic` channels.
  void conv_vert(const std::vector<float>& in, int ic, const std::string& name,
                 int i, int j, float* out) const {
    const Tensor& w = t(name + ".w");
    const Tensor& b = t(name + ".b");
    const int oc = b.dim(0);
    for (int c = 0; c < oc; ++c) out[c] = b.data[size_t(c)];
    if (i == 0) return;
    for (int kx = 0; kx < 3; ++kx) {
      const int jx = j + kx - 1;
      if (jx < 0 || jx >= W) continue;
      const float* ip = &in[size_t(((i - 1) * W + jx) * ic)];
      const float* wp = &w.data[size_t((0 * 3 + kx) * ic) * size_t(oc)];
      for (int c = 0; c < ic; ++c) {
        const float a = ip[c];
        const float* wrow = wp + size_t(c) * size_t(oc);
        for (int o = 0; o < oc; ++o) out[o] += a * wrow[o];
      }
    }
  }

  // Horizontal conv on the center row; `taps` lists kx offsets (-1 and/or 0).
  void conv_horiz(const std::vector<float>& in, int ic, const std::string& name,
                  int i, int j, std::initializer_list<int> taps, float* out) const {
    const Tensor& w = t(name + ".w");
    const Tensor& b = t(name + ".b");
    const int oc = b.dim(0);
    for (int c = 0; c < oc; ++c) out[c] = b.data[size_t(c)];
    for (int dx : taps) {
      const int jx = j + dx;
      if (jx < 0) continue;
      const int kx = dx + 1;
      const float* ip = &in[size_t((i * W + jx) * ic)];
      const float* wp = &w.data[size_t((1 * 3 + kx) * ic) * size_t(oc)];
      for (int c = 0; c < ic; ++c) {
        const float a = ip[c];
        const float* wrow = wp + size_t(c) * size_t(oc);
        for (int o = 0; o < oc; ++o) out[o] += a * wrow[o];
      }
    }
  }

  void linear(const float* in, int ic, const std::string& name, float* out) const {
    const Tensor& w = t(name + ".w");
    const Tensor& b = t(name + ".b");
    const int oc = b.dim(0);
    for (int c = 0; c < oc; ++c) out[c] = b.data[size_t(c)];
    for (int c = 0; c < ic; ++c) {
      const float a = in[c];
      const float* wrow = &w.data[size_t(c) * size_t(oc)];
      for (int o = 0; o < oc; ++o) out[o] += a * wrow[o];
    }
  }

  static void gate(const float* in, int half, float* out) {
    for (int c = 0; c < half; ++c) {
      const float f = std::tanh(in[c]);
      const float s = 1.0f / (1.0f + std::exp(-in[half + c]));
      out[c] = f * s;
    }
  }

  // Computes the logit at (i,j) from already-sampled pixels and records all
  // intermediate activations at (i,j).
  float logit_at(int i, int j) {
    const size_t q = size_t(i * W + j);
    std::vector<float> vc(size_t(g), 0.0f), hc(size_t(g), 0.0f), tmp(size_t(g), 0.0f);

    conv_vert(x, 3, "in_v", i, j, vc.data());
    conv_horiz(x, 3, "in_h", i, j, {-1}, hc.data());
    linear(vc.data(), g, "in_link", tmp.data());
    for (int c = 0; c < g; ++c) hc[size_t(c)] += tmp[size_t(c)];
    gate(vc.data(), h, &v0[q * size_t(h)]);
    gate(hc.data(), h, &h0[q * size_t(h)]);

    const std::vector<float>* vin = &v0;
    const std::vector<float>* hin = &h0;
    std::vector<float> gated(size_t(h), 0.0f), res(size_t(h), 0.0f);
    for (int bidx = 0; bidx < blocks; ++bidx) {
      const std::string b = "b" + std::to_string(bidx);
      conv_vert(*vin, h, b + ".v", i, j, vc.data());
      conv_horiz(*hin, h, b + ".h", i, j, {-1, 0}, hc.data());
      linear(vc.data(), g, b + ".link", tmp.data());
      for (int c = 0; c < g; ++c) hc[size_t(c)] += tmp[size_t(c)];
      gate(vc.data(), h, &v[size_t(bidx)][q * size_t(h)]);
      gate(hc.data(), h, gated.data());
      linear(gated.data(), h, b + ".out", res.data());
      const float* hprev = &(*hin)[q * size_t(h)];
      float* hout = &hs[size_t(bidx)][q * size_t(h)];
      for (int c = 0; c < h; ++c) hout[c] = hprev[c] + res[c];
      vin = &v[size_t(bidx)];
      hin = &hs[size_t(bidx)];
    }

    std::vector<float> head(size_t(h), 0.0f), logit(1, 0.0f);
    linear(&(*hin)[q * size_t(h)], h, "head1", head.data());
    for (int c = 0; c < h; ++c) head[size_t(c)] = std::max(head[size_t(c)], 0.0f);
    linear(head.data(), h, "head2", logit.data());
    return logit[0];
  }
};
}  // namespace

imgcode::AddressImage PixelModel::sample_image(Rng& rng, float temperature) const {
  Sampler s(params_, 8, 16, hidden_, blocks_);
  imgcode::AddressImage img;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 16; ++j) {
      const float z = s.logit_at(i, j) / std::max(temperature, 1e-6f);
      const double prob = 1.0 / (1.0 + std::exp(-double(z)));
      const uint8_t bit = rng.next_bool(prob) ? 1 : 0;
      img.set(i, j, bit);
      s.x[size_t((i * 16 + j) * 3)] = float(bit);
    }
  }
  return img;
}

CandidateBatch PixelModel::sample(size_t count, Rng& rng, DedupLedger& ledger,
                                  const SampleOptions& opts) const {
  CandidateBatch batch;
  batch.origin_subclass = subclass_id_;
  if (count == 0) return batch;
  const size_t cap = count * size_t(std::max(opts.attempt_cap_factor, 1));
  size_t attempts = 0;
  while (batch.addresses.size() < count && attempts < cap) {
    ++attempts;
    imgcode::AddressImage img = sample_image(rng, opts.temperature);
    addr::Address a = imgcode::decode(img);
    if (!ledger.insert_if_new(a)) continue;
    batch.addresses.push_back(a);
  }
  if (batch.addresses.size() < count)
    throw GenerationStalledError(std::move(batch), count);
  return batch;
}

std::vector<double> PixelModel::train_tensor(const std::vector<Tensor>& examples,
                                             int h, int w, const TrainOptions& opts,
                                             Rng& rng) {
  if (examples.empty())
    throw Error(ErrorCode::EmptyCorpus, "pixel model training corpus is empty");
  tensor::Adam opt(opts.lr);
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> losses;
  const size_t px = size_t(h * w);

  for (int e = 0; e < opts.epochs; ++e) {
    for (size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[size_t(rng.next_below(i + 1))]);
    double loss_sum = 0.0;
    size_t nb = 0;
    for (size_t off = 0; off < order.size(); off += size_t(opts.batch)) {
      const size_t end = std::min(off + size_t(opts.batch), order.size());
      Tensor x({int(end - off), h, w, 1});
      for (size_t b = off; b < end; ++b)
        std::copy(examples[order[b]].data.begin(), examples[order[b]].data.end(),
                  x.data.begin() + long((b - off) * px));
      Tape tape;
      std::map<std::string, Tape::Var> pvars;
      auto out = forward(tape, tape.input(augment_position(x)), pvars);
      auto loss = tape.bce_with_logits_mean(out, x);
      tape.backward(loss);
      ParamMap grads;
      for (const auto& [name, var] : pvars) grads[name] = tape.grad(var);
      opt.step(params_, grads);
      loss_sum += double(tape.value(loss).data[0]);
      ++nb;
    }
    losses.push_back(loss_sum / double(std::max<size_t>(nb, 1)));
  }
  return losses;
}

std::vector<double> PixelModel::train(const std::vector<imgcode::StitchedImage>& corpus,
                                      const TrainOptions& opts, Rng& rng) {
  std::vector<Tensor> examples;
  examples.reserve(corpus.size());
  for (const auto& s : corpus) {
    Tensor t({1, 16, 16, 1});
    for (int i = 0; i < 256; ++i) t.data[size_t(i)] = float(s.pixels[size_t(i)]);
    examples.push_back(std::move(t));
  }
  return train_tensor(examples, 16, 16, opts, rng);
}

std::vector<double> PixelModel::train_single(
    const std::vector<imgcode::AddressImage>& corpus, const TrainOptions& opts,
    Rng& rng) {
  std::vector<Tensor> examples;
  examples.reserve(corpus.size());
  for (const auto& s : corpus) {
    Tensor t({1, 8, 16, 1});
    for (int i = 0; i < 128; ++i) t.data[size_t(i)] = float(s.pixels[size_t(i)]);
    examples.push_back(std::move(t));
  }
  return train_tensor(examples, 8, 16, opts, rng);
}

void PixelModel::fine_tune(const std::vector<addr::Address>& actives,
                           const std::vector<imgcode::StitchedImage>& replay,
                           int epochs, Rng& rng, double replay_ratio,
                           size_t max_examples, int stitch_fanout, int batch,
                           float lr) {
  if (actives.empty()) return;
  auto imgs = imgcode::sorted_images(actives);
  auto fresh = imgcode::stitch_pairs(imgs, stitch_fanout);
  if (fresh.size() > max_examples) {
    // Deterministic seeded subsample keeps the fine-tune pass bounded.
    std::vector<imgcode::StitchedImage> keep;
    keep.reserve(max_examples);
    for (size_t i = 0; i < max_examples; ++i)
      keep.push_back(fresh[size_t(rng.next_below(fresh.size()))]);
    fresh = std::move(keep);
  }
  std::vector<imgcode::StitchedImage> corpus = fresh;
  const size_t replay_count =
      std::min(size_t(double(fresh.size()) * replay_ratio), replay.size() * 4);
  for (size_t i = 0; i < replay_count && !replay.empty(); ++i)
    corpus.push_back(replay[size_t(rng.next_below(replay.size()))]);

  TrainOptions opts;
  opts.epochs = epochs;
  opts.batch = batch;
  opts.lr = lr;
  train(corpus, opts, rng);
}

void save_model(const std::string& path, const PixelModel& m) {
  ParamMap p = m.params();
  Tensor meta({3});
  meta.data = {float(m.subclass_id()), float(m.hidden()), float(m.blocks())};
  p["__meta"] = meta;
  tensor::save_checkpoint(path, p);
}

PixelModel load_model(const std::string& path) {
  ParamMap p = tensor::load_checkpoint(path);
  auto it = p.find("__meta");
  if (it == p.end() || it->second.data.size() != 3)
    throw Error(ErrorCode::IoError, "checkpoint missing model metadata: " + path);
  int subclass = int(it->second.data[0]);
  int hidden = int(it->second.data[1]);
  int blocks = int(it->second.data[2]);
  p.erase(it);
  return PixelModel::from_params(std::move(p), subclass, hidden, blocks);
}

}  // namespace sixv::pixelgen
