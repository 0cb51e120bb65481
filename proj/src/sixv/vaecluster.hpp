#pragma once

#include <vector>

#include "sixv/imgcode.hpp"
#include "sixv/tensor.hpp"

namespace sixv::vaecluster {

// Convolutional VAE over 8x16 binary images. Encoder: two 3x3 convs + dense
// heads for mu / log-variance; decoder mirrors it back to Bernoulli logits.
class VaeModel {
public:
  static VaeModel create(int latent_dim, uint64_t seed);
  static VaeModel from_params(tensor::ParamMap params, int latent_dim);

  // Returns per-epoch mean loss (reconstruction + KL).
  std::vector<double> train(const std::vector<imgcode::AddressImage>& images,
                            int epochs, Rng& rng, int batch = 32,
                            float kl_weight = 0.1f, float lr = 1e-3f);

  // Mean head of the encoder (deterministic).
  std::vector<float> latent_of(const imgcode::AddressImage& img) const;
  std::vector<std::vector<float>> latents_of(
      const std::vector<imgcode::AddressImage>& imgs) const;

  // Decoder round trip through mu: per-pixel Bernoulli probabilities.
  std::array<float, 128> reconstruct_probs(const imgcode::AddressImage& img) const;

  int latent_dim() const { return latent_dim_; }
  const tensor::ParamMap& params() const { return params_; }

private:
  VaeModel(tensor::ParamMap params, int latent_dim)
      : params_(std::move(params)), latent_dim_(latent_dim) {}

  struct Forward;
  Forward encode_decode(tensor::Tape& tape, const tensor::Tensor& x,
                        const tensor::Tensor* eps,
                        std::map<std::string, tensor::Tape::Var>* pvars) const;

  tensor::ParamMap params_;
  int latent_dim_;
};

struct Clustering {
  int k = 0;
  std::vector<int> assignments;             // per input point
  std::vector<std::vector<float>> centroids;

  std::vector<size_t> subclass_sizes() const;
};

// Lloyd iteration with seeded farthest-point init; empty clusters repaired by
// splitting the largest.
Clustering kmeans(const std::vector<std::vector<float>>& points, int k, Rng& rng,
                  int max_iters = 100);

}  // namespace sixv::vaecluster
