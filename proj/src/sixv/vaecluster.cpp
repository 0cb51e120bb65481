#include "sixv/vaecluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sixv::vaecluster {

using tensor::MaskedConvSpec;
using tensor::MaskKind;
using tensor::ParamMap;
using tensor::Tape;
using tensor::Tensor;

namespace {
constexpr int kEncC1 = 8;
constexpr int kEncC2 = 16;
constexpr int kFlat = 8 * 16 * kEncC2;

MaskedConvSpec conv_spec(int in_c, int out_c) {
  return MaskedConvSpec{3, 3, MaskKind::None, in_c, out_c};
}

Tensor images_to_tensor(const std::vector<imgcode::AddressImage>& imgs,
                        const std::vector<size_t>& idx) {
  Tensor x({int(idx.size()), 8, 16, 1});
  for (size_t b = 0; b < idx.size(); ++b)
    for (int i = 0; i < 128; ++i)
      x.data[b * 128 + size_t(i)] = float(imgs[idx[b]].pixels[size_t(i)]);
  return x;
}
}  // namespace

VaeModel VaeModel::create(int latent_dim, uint64_t seed) {
  Rng rng(seed);
  ParamMap p;
  p["enc1.w"] = tensor::init_weights({3, 3, 1, kEncC1}, 9, rng);
  p["enc1.b"] = Tensor({kEncC1});
  p["enc2.w"] = tensor::init_weights({3, 3, kEncC1, kEncC2}, 9 * kEncC1, rng);
  p["enc2.b"] = Tensor({kEncC2});
  p["mu.w"] = tensor::init_weights({kFlat, latent_dim}, kFlat, rng);
  p["mu.b"] = Tensor({latent_dim});
  p["logvar.w"] = tensor::init_weights({kFlat, latent_dim}, kFlat, rng);
  p["logvar.b"] = Tensor({latent_dim});
  p["dec1.w"] = tensor::init_weights({latent_dim, kFlat}, latent_dim, rng);
  p["dec1.b"] = Tensor({kFlat});
  p["dec2.w"] = tensor::init_weights({3, 3, kEncC2, kEncC1}, 9 * kEncC2, rng);
  p["dec2.b"] = Tensor({kEncC1});
  p["dec3.w"] = tensor::init_weights({3, 3, kEncC1, 1}, 9 * kEncC1, rng);
  p["dec3.b"] = Tensor({1});
  return VaeModel(std::move(p), latent_dim);
}

VaeModel VaeModel::from_params(ParamMap params, int latent_dim) {
  return VaeModel(std::move(params), latent_dim);
}

struct VaeModel::Forward {
  Tape::Var mu, logvar, logits;
};

VaeModel::Forward VaeModel::encode_decode(
    Tape& tape, const Tensor& x, const Tensor* eps,
    std::map<std::string, Tape::Var>* pvars) const {
  std::map<std::string, Tape::Var> vars;
  for (const auto& [name, t] : params_) vars[name] = tape.input(t);
  if (pvars) *pvars = vars;

  const int B = x.dim(0);
  Tape::Var xin = tape.input(x);
  auto h1 = tape.relu_(tape.conv2d(xin, vars["enc1.w"], vars["enc1.b"],
                                   conv_spec(1, kEncC1)));
  auto h2 = tape.relu_(tape.conv2d(h1, vars["enc2.w"], vars["enc2.b"],
                                   conv_spec(kEncC1, kEncC2)));
  auto flat = tape.reshape(h2, {B, kFlat});
  auto mu = tape.dense(flat, vars["mu.w"], vars["mu.b"]);
  auto logvar = tape.dense(flat, vars["logvar.w"], vars["logvar.b"]);

  Tape::Var z = eps ? tape.reparam(mu, logvar, *eps) : mu;
  auto d1 = tape.relu_(tape.dense(z, vars["dec1.w"], vars["dec1.b"]));
  auto d1img = tape.reshape(d1, {B, 8, 16, kEncC2});
  auto d2 = tape.relu_(tape.conv2d(d1img, vars["dec2.w"], vars["dec2.b"],
                                   conv_spec(kEncC2, kEncC1)));
  auto logits = tape.conv2d(d2, vars["dec3.w"], vars["dec3.b"], conv_spec(kEncC1, 1));
  return Forward{mu, logvar, logits};
}

std::vector<double> VaeModel::train(const std::vector<imgcode::AddressImage>& images,
                                    int epochs, Rng& rng, int batch,
                                    float kl_weight, float lr) {
  if (images.size() < 2)
    throw Error(ErrorCode::InsufficientData, "VAE training needs >= 2 images");
  tensor::Adam opt(lr);
  std::vector<size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> epoch_losses;

  for (int e = 0; e < epochs; ++e) {
    // Fisher-Yates with our RNG so shuffles reproduce across platforms.
    for (size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[size_t(rng.next_below(i + 1))]);
    double loss_sum = 0.0;
    size_t nb = 0;
    for (size_t off = 0; off < order.size(); off += size_t(batch)) {
      std::vector<size_t> idx(order.begin() + long(off),
                              order.begin() + long(std::min(off + size_t(batch),
                                                            order.size())));
      Tensor x = images_to_tensor(images, idx);
      const int B = int(idx.size());
      Tensor eps({B, latent_dim_});
      for (float& v : eps.data) v = float(rng.next_gauss());

      Tape tape;
      std::map<std::string, Tape::Var> pvars;
      Forward f = encode_decode(tape, x, &eps, &pvars);
      // Per-image pixel-sum reconstruction plus weighted KL, averaged over batch.
      auto recon = tape.scale(tape.bce_with_logits_mean(f.logits, x), 128.0f);
      auto kl = tape.scale(tape.kl_unit_gauss(f.mu, f.logvar), kl_weight / float(B));
      auto loss = tape.add(recon, kl);
      tape.backward(loss);

      ParamMap grads;
      for (const auto& [name, var] : pvars) grads[name] = tape.grad(var);
      opt.step(params_, grads);
      loss_sum += double(tape.value(loss).data[0]);
      ++nb;
    }
    epoch_losses.push_back(loss_sum / double(std::max<size_t>(nb, 1)));
  }
  return epoch_losses;
}

std::vector<float> VaeModel::latent_of(const imgcode::AddressImage& img) const {
  return latents_of({img})[0];
}

std::vector<std::vector<float>> VaeModel::latents_of(
    const std::vector<imgcode::AddressImage>& imgs) const {
  std::vector<std::vector<float>> out;
  out.reserve(imgs.size());
  const size_t chunk = 256;
  for (size_t off = 0; off < imgs.size(); off += chunk) {
    std::vector<size_t> idx;
    for (size_t i = off; i < std::min(off + chunk, imgs.size()); ++i) idx.push_back(i);
    Tensor x = images_to_tensor(imgs, idx);
    Tape tape;
    Forward f = encode_decode(tape, x, nullptr, nullptr);
    const Tensor& mu = tape.value(f.mu);
    for (size_t b = 0; b < idx.size(); ++b)
      out.emplace_back(mu.data.begin() + long(b * size_t(latent_dim_)),
                       mu.data.begin() + long((b + 1) * size_t(latent_dim_)));
  }
  return out;
}

std::array<float, 128> VaeModel::reconstruct_probs(
    const imgcode::AddressImage& img) const {
  Tensor x({1, 8, 16, 1});
  for (int i = 0; i < 128; ++i) x.data[size_t(i)] = float(img.pixels[size_t(i)]);
  Tape tape;
  Forward f = encode_decode(tape, x, nullptr, nullptr);
  const Tensor& logits = tape.value(f.logits);
  std::array<float, 128> probs{};
  for (int i = 0; i < 128; ++i)
    probs[size_t(i)] = 1.0f / (1.0f + std::exp(-logits.data[size_t(i)]));
  return probs;
}

std::vector<size_t> Clustering::subclass_sizes() const {
  std::vector<size_t> sizes(size_t(k), 0);
  for (int a : assignments) sizes[size_t(a)]++;
  return sizes;
}

namespace {
double sq_dist(const std::vector<float>& a, const std::vector<float>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double t = double(a[i]) - double(b[i]);
    d += t * t;
  }
  return d;
}
}  // namespace

Clustering kmeans(const std::vector<std::vector<float>>& points, int k, Rng& rng,
                  int max_iters) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "kmeans: k must be >= 1");
  if (points.size() < size_t(k))
    throw Error(ErrorCode::TooFewPoints,
                "kmeans: " + std::to_string(points.size()) + " points < k=" +
                    std::to_string(k));
  const size_t n = points.size();
  const size_t dim = points[0].size();

  // Farthest-point init from a seeded start.
  std::vector<std::vector<float>> centroids;
  centroids.push_back(points[size_t(rng.next_below(n))]);
  std::vector<double> mind(n, std::numeric_limits<double>::max());
  while (centroids.size() < size_t(k)) {
    size_t far = 0;
    double best = -1.0;
    for (size_t i = 0; i < n; ++i) {
      mind[i] = std::min(mind[i], sq_dist(points[i], centroids.back()));
      if (mind[i] > best) { best = mind[i]; far = i; }
    }
    centroids.push_back(points[far]);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = std::numeric_limits<double>::max();
      for (int c = 0; c < k; ++c) {
        double d = sq_dist(points[i], centroids[size_t(c)]);
        if (d < best_d) { best_d = d; best_c = c; }
      }
      if (assign[i] != best_c) { assign[i] = best_c; changed = true; }
    }

    std::vector<std::vector<double>> sums(size_t(k), std::vector<double>(dim, 0.0));
    std::vector<size_t> counts(size_t(k), 0);
    for (size_t i = 0; i < n; ++i) {
      counts[size_t(assign[i])]++;
      for (size_t d = 0; d < dim; ++d) sums[size_t(assign[i])][d] += double(points[i][d]);
    }
    for (int c = 0; c < k; ++c) {
      if (counts[size_t(c)] == 0) {
        // Repair: re-seed from the point farthest from its centroid in the
        // largest cluster.
        int largest = int(std::max_element(counts.begin(), counts.end()) -
                          counts.begin());
        size_t far = 0;
        double best = -1.0;
        for (size_t i = 0; i < n; ++i) {
          if (assign[i] != largest) continue;
          double d = sq_dist(points[i], centroids[size_t(largest)]);
          if (d > best) { best = d; far = i; }
        }
        centroids[size_t(c)] = points[far];
        changed = true;
        continue;
      }
      for (size_t d = 0; d < dim; ++d)
        centroids[size_t(c)][d] = float(sums[size_t(c)][d] / double(counts[size_t(c)]));
    }
    if (!changed) break;
  }

  // Guarantee no empty subclass in the returned partition.
  std::vector<size_t> counts(size_t(k), 0);
  for (int a : assign) counts[size_t(a)]++;
  for (int c = 0; c < k; ++c) {
    if (counts[size_t(c)] > 0) continue;
    int largest = int(std::max_element(counts.begin(), counts.end()) - counts.begin());
    for (size_t i = 0; i < n; ++i) {
      if (assign[i] == largest) {
        assign[i] = c;
        counts[size_t(largest)]--;
        counts[size_t(c)]++;
        break;
      }
    }
  }

  Clustering out;
  out.k = k;
  out.assignments = std::move(assign);
  out.centroids = std::move(centroids);
  return out;
}

}  // namespace sixv::vaecluster
