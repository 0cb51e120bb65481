#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sixv/baseline.hpp"
#include "sixv/imgcode.hpp"
#include "sixv/metrics.hpp"
#include "sixv/oracle.hpp"
#include "sixv/pixelgen.hpp"
#include "sixv/vaecluster.hpp"

namespace sixv::pipeline {

struct RunConfig {
  int k = 6;
  uint64_t budget = 0;
  uint64_t feedback_cadence = 0;  // 0 = auto: max(budget/10, 500)
  int fine_tune_epochs = 10;
  int train_epochs = 40;
  int batch = 64;
  int vae_epochs = 200;
  int stitch_fanout = 5;
  double p_pct = 25.0;  // two-stage split
  uint64_t seed = 1;
  imgcode::EntropyMode entropy_mode = imgcode::EntropyMode::Standard;
  double replay_ratio = 1.0;
  bool use_stitching = true;
  bool use_feedback = true;
  int hidden = 16;
  int blocks = 5;
  int latent_dim = 16;
  float vae_kl_weight = 0.1f;
  float lr = 3e-3f;  // 1e-3 converges too slowly at desk-scale epoch counts
  float temperature = 1.0f;
  size_t fine_tune_max_examples = 512;
  int alias_probes = 16;

  uint64_t effective_cadence() const {
    if (feedback_cadence > 0) return feedback_cadence;
    return std::max<uint64_t>(budget / 10, 500);
  }

  static RunConfig from_json(const std::string& json);
  static RunConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

struct RunResult {
  metrics::EvalReport report;
  std::set<addr::Address> candidates;  // every probed candidate
  std::set<addr::Address> actives;     // non-aliased actives discovered
  std::map<addr::Prefix, std::vector<addr::Address>> aliased_retained;
  oracle::ProbeLedger ledger;
  std::vector<addr::Address> clustered_addresses;
  std::vector<int> cluster_assignments;
  std::vector<std::string> notes;
  std::vector<pixelgen::PixelModel> models;
};

RunResult run_6vision(const addr::SeedSet& seeds, const oracle::SyntheticUniverse& u,
                      const RunConfig& cfg);

struct TwoStageResult {
  double cg = 0.0;
  double hr_pre2 = 0.0;  // stage-1 detector
  double hr_tau2 = 0.0;  // tree baseline with enriched seeds
  double hr_tau1 = 0.0;  // tree baseline alone, full budget
  RunResult stage1;
  std::set<addr::Address> stage2_actives;

  std::string to_json() const;
};

TwoStageResult run_two_stage(const addr::SeedSet& seeds,
                             const oracle::SyntheticUniverse& u,
                             const RunConfig& cfg);

// Writes dataset_actives.txt (aliased prefixes collapsed to their retained
// sample), prefix_counts.csv and summary.json (with the CR over the input's
// few-seed prefixes) under out_dir.
void export_dataset(const RunResult& result, const addr::SeedSet& seeds,
                    const std::string& out_dir);

// Writes report.json, rounds.csv, actives.txt, candidates and model
// checkpoints plus a manifest under out_dir.
void write_run_artifacts(const RunResult& result, const RunConfig& cfg,
                         const std::string& out_dir);

struct AblationRow {
  std::string config;
  double hit_rate = 0.0;
  uint64_t cover_num = 0;
  uint64_t actives_found = 0;
};

// The four stitching/feedback configurations.
std::vector<AblationRow> run_ablation(const addr::SeedSet& seeds,
                                      const oracle::SyntheticUniverse& u,
                                      const RunConfig& cfg);

}  // namespace sixv::pipeline
