#pragma once

#include <mutex>
#include <set>
#include <vector>

#include "sixv/imgcode.hpp"
#include "sixv/tensor.hpp"

namespace sixv::pixelgen {

// Global record of every candidate ever emitted; shared across subclasses.
class DedupLedger {
public:
  // Returns true when the address was not present before.
  bool insert_if_new(const addr::Address& a) {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_.insert(a).second;
  }
  bool contains(const addr::Address& a) const {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_.count(a) > 0;
  }
  void insert_all(const std::vector<addr::Address>& as) {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& a : as) seen_.insert(a);
  }
  size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_.size();
  }

private:
  mutable std::mutex mu_;
  std::set<addr::Address> seen_;
};

struct CandidateBatch {
  std::vector<addr::Address> addresses;
  int origin_subclass = -1;
  int generation_round = 0;
};

// Raised when the attempt cap runs out before `count` novel addresses emerge;
// carries whatever was generated so the caller can still use it.
class GenerationStalledError : public Error {
public:
  GenerationStalledError(CandidateBatch partial, size_t requested)
      : Error(ErrorCode::GenerationStalled,
              "generation stalled: " + std::to_string(partial.addresses.size()) +
                  " of " + std::to_string(requested) + " candidates"),
        partial_batch(std::move(partial)) {}
  CandidateBatch partial_batch;
};

struct TrainOptions {
  int epochs = 40;
  int batch = 64;
  float lr = 1e-3f;
};

struct SampleOptions {
  float temperature = 1.0f;
  int attempt_cap_factor = 20;  // cap = factor * count
};

// Appends two constant coordinate channels to a {B,H,W,1} image batch:
// (row mod 8)/7 and col/15. Address rows repeat with period 8, so stitched
// 16x16 training inputs and 8x16 sampling grids see identical encodings, and
// the channels depend only on position — causality is unaffected.
tensor::Tensor augment_position(const tensor::Tensor& images);

// Gated PixelCNN over binary images: a masked causal input layer feeding a
// vertical stack and a horizontal stack, L gated blocks with residual links on
// the horizontal path, and a Bernoulli logit head. Fully convolutional, so the
// same weights run on 16x16 training inputs and 8x16 sampling grids. The raw
// bit plane is augmented with constant coordinate channels (augment_position)
// before the input layer; without them the convolutional stacks cannot tell
// deep all-zero rows apart and the pinned address structure is unlearnable.
class PixelModel {
public:
  static PixelModel create(int subclass_id, uint64_t seed, int hidden = 16,
                           int blocks = 5);
  static PixelModel from_params(tensor::ParamMap params, int subclass_id,
                                int hidden, int blocks);

  // Per-epoch mean BCE loss over the corpus.
  std::vector<double> train(const std::vector<imgcode::StitchedImage>& corpus,
                            const TrainOptions& opts, Rng& rng);
  std::vector<double> train_single(const std::vector<imgcode::AddressImage>& corpus,
                                   const TrainOptions& opts, Rng& rng);

  // Per-pixel logits for a batch of images, any HxW. images is {B,H,W,1}.
  tensor::Tensor logits(const tensor::Tensor& images) const;

  // Raster-order autoregressive sampling of one 8x16 image.
  imgcode::AddressImage sample_image(Rng& rng, float temperature = 1.0f) const;

  // Samples until `count` unique addresses that are new to the ledger, or the
  // attempt cap is reached (throws GenerationStalled with partial batch
  // retrievable via the exception handler path in the pipeline).
  CandidateBatch sample(size_t count, Rng& rng, DedupLedger& ledger,
                        const SampleOptions& opts = {}) const;

  // Feedback fine-tuning: actives are stitched among themselves and mixed with
  // replay samples from the original corpus at `replay_ratio` replicas per
  // active example.
  void fine_tune(const std::vector<addr::Address>& actives,
                 const std::vector<imgcode::StitchedImage>& replay,
                 int epochs, Rng& rng, double replay_ratio = 1.0,
                 size_t max_examples = 512, int stitch_fanout = 5,
                 int batch = 64, float lr = 1e-3f);

  int subclass_id() const { return subclass_id_; }
  int hidden() const { return hidden_; }
  int blocks() const { return blocks_; }
  const tensor::ParamMap& params() const { return params_; }

  // Tape-based forward used by training and the causality tests. `x` must be
  // a position-augmented batch (see augment_position).
  tensor::Tape::Var forward(tensor::Tape& tape, tensor::Tape::Var x,
                            std::map<std::string, tensor::Tape::Var>& pvars) const;

private:
  PixelModel(tensor::ParamMap params, int subclass_id, int hidden, int blocks)
      : params_(std::move(params)), subclass_id_(subclass_id), hidden_(hidden),
        blocks_(blocks) {}

  std::vector<double> train_tensor(const std::vector<tensor::Tensor>& examples,
                                   int h, int w, const TrainOptions& opts, Rng& rng);

  tensor::ParamMap params_;
  int subclass_id_;
  int hidden_;
  int blocks_;
};

// Checkpoint helpers carrying the model geometry alongside the parameters.
void save_model(const std::string& path, const PixelModel& m);
PixelModel load_model(const std::string& path);

}  // namespace sixv::pixelgen
