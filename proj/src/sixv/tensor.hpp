#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sixv/error.hpp"
#include "sixv/rng.hpp"

namespace sixv::tensor {

// Dense row-major float tensor. Image tensors use NHWC layout; conv weights
// are {kh, kw, in_c, out_c} so the out-channel loop is contiguous.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(size_t(numel(shape)), 0.0f);
  }
  Tensor(std::vector<int> s, std::vector<float> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != size_t(numel(shape)))
      throw Error(ErrorCode::ShapeMismatch, "tensor data/shape mismatch");
  }

  static int64_t numel(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }
  int64_t size() const { return int64_t(data.size()); }
  float& operator[](size_t i) { return data[i]; }
  float operator[](size_t i) const { return data[i]; }
  int dim(int i) const { return shape[size_t(i)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

enum class MaskKind { None, Vertical, HorizontalA, HorizontalB };

struct MaskedConvSpec {
  int kernel_h = 3;
  int kernel_w = 3;
  MaskKind mask = MaskKind::None;
  int in_channels = 1;
  int out_channels = 1;
};

// Kernel taps the mask leaves live. Vertical: rows strictly above center.
// HorizontalA: center row, strictly left. HorizontalB: center row, left
// including the center tap.
std::vector<std::pair<int, int>> active_taps(const MaskedConvSpec& spec);

// Reverse-mode tape. Build a fresh tape per forward pass; backward() may be
// called once.
class Tape {
public:
  using Var = int;

  Var input(Tensor t);

  Var conv2d(Var x, Var w, Var b, const MaskedConvSpec& spec);
  Var dense(Var x, Var w, Var b);  // x:{N,D} w:{D,M} b:{M}
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, float s);
  Var tanh_(Var a);
  Var sigmoid_(Var a);
  Var relu_(Var a);
  Var exp_(Var a);
  Var square_(Var a);
  Var reshape(Var a, std::vector<int> shape);
  // Splits the last dim in half: out = tanh(first) * sigmoid(second).
  Var gate(Var a);
  Var sum(Var a);
  // mean over all elements of softplus(z) - t*z  (binary cross-entropy with
  // logits against targets t).
  Var bce_with_logits_mean(Var logits, Tensor targets);
  // -0.5 * sum(1 + logvar - mu^2 - exp(logvar)), scalar.
  Var kl_unit_gauss(Var mu, Var logvar);
  // mu + eps * exp(0.5 * logvar), eps constant.
  Var reparam(Var mu, Var logvar, Tensor eps);

  void backward(Var loss);

  const Tensor& value(Var v) const { return nodes_[size_t(v)].value; }
  const Tensor& grad(Var v) const { return nodes_[size_t(v)].grad; }

private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> back;  // empty for leaves
  };

  Var emplace(Tensor value, std::function<void()> back = {});
  Tensor& val(Var v) { return nodes_[size_t(v)].value; }
  Tensor& grd(Var v) { return nodes_[size_t(v)].grad; }

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Named parameter bundle for one model.
using ParamMap = std::map<std::string, Tensor>;

// Adaptive first-order optimizer (Adam).
class Adam {
public:
  explicit Adam(float lr = 1e-3f, float beta1 = 0.9f, float beta2 = 0.999f,
                float eps = 1e-8f)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamMap& params, const ParamMap& grads);
  void reset() { m_.clear(); v_.clear(); t_ = 0; }
  float lr() const { return lr_; }
  void set_lr(float lr) { lr_ = lr; }

private:
  float lr_, beta1_, beta2_, eps_;
  ParamMap m_, v_;
  int64_t t_ = 0;
};

// Versioned binary checkpoint container; round-trips bit-exactly.
void save_checkpoint(const std::string& path, const ParamMap& params);
ParamMap load_checkpoint(const std::string& path);
std::string serialize_checkpoint(const ParamMap& params);
ParamMap deserialize_checkpoint(const std::string& bytes);

// He-style uniform init scaled by fan-in.
Tensor init_weights(std::vector<int> shape, int fan_in, Rng& rng);

}  // namespace sixv::tensor
