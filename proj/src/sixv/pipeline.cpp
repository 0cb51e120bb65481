#include "sixv/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sixv/error.hpp"

namespace sixv::pipeline {

namespace fs = std::filesystem;

RunConfig RunConfig::from_json(const std::string& json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("bad run config JSON: ") + e.what());
  }
  RunConfig c;
  c.k = j.value("k", c.k);
  c.budget = j.value("budget", c.budget);
  c.feedback_cadence = j.value("feedback_cadence", c.feedback_cadence);
  c.fine_tune_epochs = j.value("fine_tune_epochs", c.fine_tune_epochs);
  c.train_epochs = j.value("train_epochs", c.train_epochs);
  c.batch = j.value("batch", c.batch);
  c.vae_epochs = j.value("vae_epochs", c.vae_epochs);
  c.stitch_fanout = j.value("stitch_fanout", c.stitch_fanout);
  c.p_pct = j.value("p_pct", c.p_pct);
  c.seed = j.value("seed", c.seed);
  c.replay_ratio = j.value("replay_ratio", c.replay_ratio);
  c.use_stitching = j.value("use_stitching", c.use_stitching);
  c.use_feedback = j.value("use_feedback", c.use_feedback);
  c.hidden = j.value("hidden", c.hidden);
  c.blocks = j.value("blocks", c.blocks);
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.vae_kl_weight = j.value("vae_kl_weight", c.vae_kl_weight);
  c.lr = j.value("lr", c.lr);
  c.temperature = j.value("temperature", c.temperature);
  c.fine_tune_max_examples = j.value("fine_tune_max_examples", c.fine_tune_max_examples);
  c.alias_probes = j.value("alias_probes", c.alias_probes);
  const std::string mode = j.value("entropy_mode", std::string("standard"));
  if (mode == "standard") c.entropy_mode = imgcode::EntropyMode::Standard;
  else if (mode == "quarter") c.entropy_mode = imgcode::EntropyMode::QuarterScaled;
  else throw Error(ErrorCode::InvalidSpec, "entropy_mode must be standard|quarter");
  return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string RunConfig::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["budget"] = budget;
  j["feedback_cadence"] = feedback_cadence;
  j["fine_tune_epochs"] = fine_tune_epochs;
  j["train_epochs"] = train_epochs;
  j["batch"] = batch;
  j["vae_epochs"] = vae_epochs;
  j["stitch_fanout"] = stitch_fanout;
  j["p_pct"] = p_pct;
  j["seed"] = seed;
  j["replay_ratio"] = replay_ratio;
  j["use_stitching"] = use_stitching;
  j["use_feedback"] = use_feedback;
  j["hidden"] = hidden;
  j["blocks"] = blocks;
  j["latent_dim"] = latent_dim;
  j["vae_kl_weight"] = vae_kl_weight;
  j["lr"] = lr;
  j["temperature"] = temperature;
  j["fine_tune_max_examples"] = fine_tune_max_examples;
  j["alias_probes"] = alias_probes;
  j["entropy_mode"] =
      entropy_mode == imgcode::EntropyMode::Standard ? "standard" : "quarter";
  return j.dump(2);
}

namespace {

int alias_check_len(const addr::Prefix& p) {
  return std::min(std::max(96, p.length() + 16), 128);
}

struct Subclass {
  std::vector<addr::Address> members;
  std::vector<imgcode::StitchedImage> corpus;  // replay source
  bool disabled = false;
};

}  // namespace

RunResult run_6vision(const addr::SeedSet& seeds, const oracle::SyntheticUniverse& u,
                      const RunConfig& cfg) {
  if (cfg.budget == 0)
    throw Error(ErrorCode::InvalidSpec, "budget must be positive");
  RunResult result;
  Rng master(cfg.seed);
  Rng vae_rng = master.fork(1);
  Rng km_rng = master.fork(2);

  int k = cfg.k;
  if (size_t(k) > seeds.size()) {
    k = int(seeds.size());
    result.notes.push_back("k lowered to " + std::to_string(k) +
                           " to match seed count");
  }

  // Cluster the seed images in VAE latent space.
  const auto& addresses = seeds.addresses();
  std::vector<imgcode::AddressImage> images;
  images.reserve(addresses.size());
  for (const auto& a : addresses) images.push_back(imgcode::encode(a));

  auto vae = vaecluster::VaeModel::create(cfg.latent_dim, master.fork(3).next_u64());
  vae.train(images, cfg.vae_epochs, vae_rng, 32, cfg.vae_kl_weight, cfg.lr);
  auto clustering = vaecluster::kmeans(vae.latents_of(images), k, km_rng);
  result.clustered_addresses = addresses;
  result.cluster_assignments = clustering.assignments;

  std::vector<Subclass> subclasses{size_t(k)};
  for (size_t i = 0; i < addresses.size(); ++i)
    subclasses[size_t(clustering.assignments[i])].members.push_back(addresses[i]);

  // Per-subclass generative models.
  for (int c = 0; c < k; ++c) {
    auto& sc = subclasses[size_t(c)];
    auto model = pixelgen::PixelModel::create(
        c, hash_mix(cfg.seed, uint64_t(100 + c)), cfg.hidden, cfg.blocks);
    Rng train_rng(hash_mix(cfg.seed, uint64_t(200 + c)));
    pixelgen::TrainOptions topts;
    topts.epochs = cfg.train_epochs;
    topts.batch = cfg.batch;
    topts.lr = cfg.lr;
    auto imgs = imgcode::sorted_images(sc.members);
    sc.corpus = imgcode::stitch_pairs(imgs, cfg.stitch_fanout);
    if (cfg.use_stitching) {
      model.train(sc.corpus, topts, train_rng);
    } else {
      model.train_single(imgs, topts, train_rng);
    }
    result.models.push_back(std::move(model));
  }

  // Generation / probe / feedback rounds.
  pixelgen::DedupLedger dedup;
  dedup.insert_all(addresses);
  std::set<addr::Prefix> alias_checked;
  const auto prefix_table = u.prefix_table();
  int round = 0;

  while (result.ledger.budget_spent < cfg.budget) {
    ++round;
    const uint64_t remaining = cfg.budget - result.ledger.budget_spent;
    const uint64_t this_round = std::min(cfg.effective_cadence(), remaining);

    // Quota proportional to subclass size over live subclasses.
    std::vector<uint64_t> quota(size_t(k), 0);
    size_t live_members = 0;
    for (const auto& sc : subclasses)
      if (!sc.disabled) live_members += sc.members.size();
    if (live_members == 0) {
      result.notes.push_back("all subclasses stalled; run stopped early");
      break;
    }
    uint64_t assigned = 0;
    int last_live = -1;
    for (int c = 0; c < k; ++c) {
      if (subclasses[size_t(c)].disabled) continue;
      quota[size_t(c)] = this_round * subclasses[size_t(c)].members.size() / live_members;
      assigned += quota[size_t(c)];
      last_live = c;
    }
    if (last_live >= 0) quota[size_t(last_live)] += this_round - assigned;

    // Sample per subclass; a stalled subclass is disabled and its shortfall
    // reallocated round-robin over the live ones.
    std::vector<std::vector<addr::Address>> round_candidates{size_t(k)};
    uint64_t shortfall = 0;
    for (int c = 0; c < k; ++c) {
      if (subclasses[size_t(c)].disabled || quota[size_t(c)] == 0) continue;
      Rng srng(hash_mix(cfg.seed, uint64_t(1000) + uint64_t(round) * 64 + uint64_t(c)));
      pixelgen::SampleOptions sopts;
      sopts.temperature = cfg.temperature;
      try {
        auto batch = result.models[size_t(c)].sample(size_t(quota[size_t(c)]), srng,
                                                     dedup, sopts);
        round_candidates[size_t(c)] = std::move(batch.addresses);
      } catch (pixelgen::GenerationStalledError& e) {
        round_candidates[size_t(c)] = std::move(e.partial_batch.addresses);
        shortfall += quota[size_t(c)] - round_candidates[size_t(c)].size();
        subclasses[size_t(c)].disabled = true;
        result.notes.push_back("subclass " + std::to_string(c) +
                               " stalled in round " + std::to_string(round));
      }
    }
    for (int c = 0; shortfall > 0; c = (c + 1) % k) {
      bool any_live = std::any_of(subclasses.begin(), subclasses.end(),
                                  [](const Subclass& s) { return !s.disabled; });
      if (!any_live) break;
      if (subclasses[size_t(c)].disabled) continue;
      Rng srng(hash_mix(cfg.seed, uint64_t(5000) + uint64_t(round) * 64 + uint64_t(c)));
      pixelgen::SampleOptions sopts;
      sopts.temperature = cfg.temperature;
      const size_t extra = size_t(std::min<uint64_t>(shortfall, 256));
      try {
        auto batch = result.models[size_t(c)].sample(extra, srng, dedup, sopts);
        for (auto& a : batch.addresses) round_candidates[size_t(c)].push_back(a);
        shortfall -= extra;
      } catch (pixelgen::GenerationStalledError& e) {
        for (auto& a : e.partial_batch.addresses) round_candidates[size_t(c)].push_back(a);
        shortfall -= std::min<uint64_t>(shortfall, e.partial_batch.addresses.size());
        subclasses[size_t(c)].disabled = true;
      }
    }

    // Probe.
    std::vector<std::vector<addr::Address>> round_actives{size_t(k)};
    std::set<addr::Address> new_actives;
    for (int c = 0; c < k; ++c) {
      auto res = oracle::probe(u, round_candidates[size_t(c)], result.ledger, cfg.budget);
      for (const auto& v : res.verdicts) {
        result.candidates.insert(v.address);
        if (v.active) {
          round_actives[size_t(c)].push_back(v.address);
          new_actives.insert(v.address);
        }
      }
      if (res.budget_exhausted) break;
    }

    // Alias screening over prefixes holding new actives.
    for (const auto& a : new_actives) {
      addr::Prefix p = addr::SeedSet::longest_match(prefix_table, a);
      if (p.length() == 0 || alias_checked.count(p)) continue;
      alias_checked.insert(p);
      if (oracle::detect_alias(u, p, cfg.alias_probes, alias_check_len(p)))
        result.ledger.aliased_prefixes.insert(p);
    }
    for (int c = 0; c < k; ++c) {
      auto& vec = round_actives[size_t(c)];
      std::vector<addr::Address> kept;
      for (const auto& a : vec) {
        bool aliased = false;
        for (const auto& p : result.ledger.aliased_prefixes) {
          if (p.contains(a)) {
            auto& retained = result.aliased_retained[p];
            if (retained.size() < 10) retained.push_back(a);
            aliased = true;
            break;
          }
        }
        if (!aliased) kept.push_back(a);
      }
      vec = std::move(kept);
      for (const auto& a : vec) result.actives.insert(a);
    }

    // Round stats.
    metrics::RoundStats rs;
    rs.round = round;
    rs.budget_spent = result.ledger.budget_spent;
    rs.actives_found = result.actives.size();
    rs.hit_rate = result.candidates.empty()
        ? 0.0
        : double(result.actives.size()) / double(result.candidates.size());
    rs.cover_num = metrics::cover_num(result.actives, prefix_table);
    result.report.rounds.push_back(rs);

    const bool last_round = result.ledger.budget_spent >= cfg.budget;
    if (cfg.use_feedback && !last_round) {
      for (int c = 0; c < k; ++c) {
        if (round_actives[size_t(c)].empty() || subclasses[size_t(c)].disabled)
          continue;
        Rng frng(hash_mix(cfg.seed, uint64_t(9000) + uint64_t(round) * 64 + uint64_t(c)));
        result.models[size_t(c)].fine_tune(
            round_actives[size_t(c)], subclasses[size_t(c)].corpus,
            cfg.fine_tune_epochs, frng, cfg.replay_ratio,
            cfg.fine_tune_max_examples, cfg.stitch_fanout, cfg.batch, cfg.lr);
      }
    }
  }

  result.report.budget = result.ledger.budget_spent;
  result.report.actives_found = result.actives.size();
  result.report.cover_num = metrics::cover_num(result.actives, prefix_table);
  if (!result.candidates.empty()) {
    std::set<addr::Address> seed_set(addresses.begin(), addresses.end());
    result.report.hit_rate =
        metrics::hit_rate(result.candidates, result.actives, seed_set);
  }
  return result;
}

namespace {

// Probes a candidate list against the universe with a fresh ledger and
// returns (probed candidates, actives among them).
std::pair<std::set<addr::Address>, std::set<addr::Address>> probe_batch(
    const oracle::SyntheticUniverse& u, const std::vector<addr::Address>& batch,
    uint64_t cap) {
  oracle::ProbeLedger ledger;
  auto res = oracle::probe(u, batch, ledger, cap);
  std::set<addr::Address> probed, actives;
  for (const auto& v : res.verdicts) {
    probed.insert(v.address);
    if (v.active) actives.insert(v.address);
  }
  return {probed, actives};
}

}  // namespace

TwoStageResult run_two_stage(const addr::SeedSet& seeds,
                             const oracle::SyntheticUniverse& u,
                             const RunConfig& cfg) {
  if (cfg.p_pct <= 0.0 || cfg.p_pct >= 100.0)
    throw Error(ErrorCode::InvalidArgument, "p_pct must be in (0,100)");
  const uint64_t stage1_budget = uint64_t(double(cfg.budget) * cfg.p_pct / 100.0);
  if (stage1_budget == 0)
    throw Error(ErrorCode::InvalidArgument,
                "stage-1 budget is zero at p=" + std::to_string(cfg.p_pct));
  const uint64_t stage2_budget = cfg.budget - stage1_budget;

  TwoStageResult out;

  RunConfig c1 = cfg;
  c1.budget = stage1_budget;
  out.stage1 = run_6vision(seeds, u, c1);
  out.hr_pre2 = out.stage1.report.hit_rate;

  // Stage 2: the tree baseline fed with seeds enriched by stage-1 actives.
  std::vector<addr::Address> enriched = seeds.addresses();
  for (const auto& a : out.stage1.actives) enriched.push_back(a);
  auto tree2 = baseline::build_tree(enriched);
  auto gen2 = baseline::generate(*tree2, stage2_budget);
  std::vector<addr::Address> fresh2;
  for (const auto& a : gen2.addresses)
    if (!out.stage1.candidates.count(a)) fresh2.push_back(a);
  auto [probed2, actives2] = probe_batch(u, fresh2, stage2_budget);
  out.stage2_actives = actives2;
  if (!probed2.empty()) {
    std::set<addr::Address> s2(enriched.begin(), enriched.end());
    out.hr_tau2 = metrics::hit_rate(probed2, actives2, s2);
  }

  // Baseline alone on the full budget.
  auto tree1 = baseline::build_tree(seeds);
  auto gen1 = baseline::generate(*tree1, cfg.budget);
  auto [probed1, actives1] = probe_batch(u, gen1.addresses, cfg.budget);
  if (!probed1.empty()) {
    std::set<addr::Address> s1(seeds.addresses().begin(), seeds.addresses().end());
    out.hr_tau1 = metrics::hit_rate(probed1, actives1, s1);
  }

  out.cg = metrics::conversion_gain(cfg.p_pct, out.hr_pre2, out.hr_tau2, out.hr_tau1);
  return out;
}

std::string TwoStageResult::to_json() const {
  nlohmann::json j;
  j["cg"] = cg;
  j["hr_pre2"] = hr_pre2;
  j["hr_tau2"] = hr_tau2;
  j["hr_tau1"] = hr_tau1;
  j["stage1_actives"] = stage1.actives.size();
  j["stage2_actives"] = stage2_actives.size();
  return j.dump(2);
}

void export_dataset(const RunResult& result, const addr::SeedSet& seeds,
                    const std::string& out_dir) {
  fs::create_directories(out_dir);

  std::ofstream actives(fs::path(out_dir) / "dataset_actives.txt");
  for (const auto& a : result.actives) actives << addr::format_address(a) << "\n";
  for (const auto& [p, retained] : result.aliased_retained) {
    for (const auto& a : retained) actives << addr::format_address(a) << "\n";
  }

  // Post-run per-prefix counts: seeds plus discovered actives.
  std::map<addr::Prefix, uint64_t> counts;
  for (const auto& a : seeds.addresses()) counts[seeds.prefix_of(a)]++;
  const auto& table = seeds.prefix_table();
  for (const auto& a : result.actives)
    counts[addr::SeedSet::longest_match(table, a)]++;

  std::ofstream csv(fs::path(out_dir) / "prefix_counts.csv");
  csv << "prefix,count\n";
  for (const auto& [p, c] : counts) csv << p.to_string() << ',' << c << '\n';

  // CR over the prefixes that were few-seed on input.
  auto census = addr::few_seed_census(seeds, 10);
  std::map<addr::Prefix, uint64_t> few_counts;
  for (const auto& [p, c] : census.counts)
    if (c < 10) few_counts[p] = counts[p];

  nlohmann::json j;
  j["actives"] = result.actives.size();
  j["aliased_prefixes"] = result.aliased_retained.size();
  j["conversion_rate"] =
      few_counts.empty() ? 0.0 : metrics::conversion_rate(few_counts);
  j["few_seed_prefixes"] = few_counts.size();
  std::ofstream summary(fs::path(out_dir) / "summary.json");
  summary << j.dump(2) << "\n";
}

void write_run_artifacts(const RunResult& result, const RunConfig& cfg,
                         const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "report.json");
    f << result.report.to_json() << "\n";
  }
  {
    std::ofstream f(fs::path(out_dir) / "rounds.csv");
    f << result.report.rounds_csv();
  }
  {
    std::ofstream f(fs::path(out_dir) / "actives.txt");
    for (const auto& a : result.actives) f << addr::format_address(a) << "\n";
  }
  {
    std::ofstream f(fs::path(out_dir) / "candidates.txt");
    for (const auto& a : result.candidates) f << addr::format_address(a) << "\n";
    nlohmann::json side;
    side["round"] = result.report.rounds.size();
    side["seed"] = cfg.seed;
    side["subclass"] = -1;
    std::ofstream sf(fs::path(out_dir) / "candidates.json");
    sf << side.dump(2) << "\n";
  }
  {
    std::ofstream f(fs::path(out_dir) / "clusters.csv");
    f << "address,subclass_id\n";
    for (size_t i = 0; i < result.clustered_addresses.size(); ++i)
      f << addr::format_address(result.clustered_addresses[i]) << ','
        << result.cluster_assignments[i] << '\n';
  }
  for (const auto& m : result.models) {
    pixelgen::save_model(
        (fs::path(out_dir) / ("model_" + std::to_string(m.subclass_id()) + ".ckpt"))
            .string(),
        m);
  }
  nlohmann::json manifest;
  manifest["config"] = nlohmann::json::parse(cfg.to_json());
  manifest["notes"] = result.notes;
  manifest["artifacts"] = {"report.json", "rounds.csv", "actives.txt",
                           "candidates.txt", "clusters.csv"};
  std::ofstream mf(fs::path(out_dir) / "manifest.json");
  mf << manifest.dump(2) << "\n";
}

std::vector<AblationRow> run_ablation(const addr::SeedSet& seeds,
                                      const oracle::SyntheticUniverse& u,
                                      const RunConfig& cfg) {
  const struct { const char* name; bool stitch, feedback; } configs[] = {
      {"full", true, true},
      {"no-stitch", false, true},
      {"no-feedback", true, false},
      {"neither", false, false},
  };
  std::vector<AblationRow> rows;
  for (const auto& c : configs) {
    RunConfig rc = cfg;
    rc.use_stitching = c.stitch;
    rc.use_feedback = c.feedback;
    auto res = run_6vision(seeds, u, rc);
    rows.push_back(AblationRow{c.name, res.report.hit_rate, res.report.cover_num,
                               res.report.actives_found});
  }
  return rows;
}

}  // namespace sixv::pipeline
