// Command-line front end. Talks to the library exclusively through the C API.
//
// Exit codes: 0 success, 1 domain error (bad input data, failed run),
// 2 usage error.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sixvision.h"

namespace {

struct StringOut {
  char* ptr = nullptr;
  ~StringOut() { sv_free_string(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

[[noreturn]] void die(const std::string& context) {
  std::cerr << "error: " << context << ": " << sv_last_error() << "\n";
  std::exit(1);
}

void check(sv_status st, const std::string& context) {
  if (st != SV_OK) die(context);
}

void emit(const std::string& content, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(out_path);
  if (!f) {
    std::cerr << "error: cannot write " << out_path << "\n";
    std::exit(1);
  }
  f << content;
}

// Shared knobs that override the optional config file. -1 / empty = unset.
struct ConfigFlags {
  std::string config_path;
  int64_t budget = -1;
  int64_t seed = -1;
  int k = -1;
  int64_t cadence = -1;
  int train_epochs = -1;
  int vae_epochs = -1;
  int fine_tune_epochs = -1;
  double p_pct = -1.0;
  double temperature = -1.0;
  std::string entropy_mode;
  bool no_stitch = false;
  bool no_feedback = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool with_budget = true) {
  cmd->add_option("--config", f.config_path, "JSON run-config file; flags below override it");
  if (with_budget) cmd->add_option("--budget", f.budget, "probe budget");
  cmd->add_option("--seed", f.seed, "RNG seed (bitwise-reproducible outputs)");
  cmd->add_option("--k", f.k, "number of subclasses");
  cmd->add_option("--cadence", f.cadence, "candidates generated per feedback round");
  cmd->add_option("--train-epochs", f.train_epochs, "generator training epochs");
  cmd->add_option("--vae-epochs", f.vae_epochs, "clustering VAE training epochs");
  cmd->add_option("--fine-tune-epochs", f.fine_tune_epochs, "feedback fine-tune epochs");
  cmd->add_option("--p", f.p_pct, "two-stage budget split percentage");
  cmd->add_option("--temperature", f.temperature, "sampling temperature");
  cmd->add_option("--entropy-mode", f.entropy_mode, "standard|quarter");
  cmd->add_flag("--no-stitch", f.no_stitch, "train on single 8x16 images");
  cmd->add_flag("--no-feedback", f.no_feedback, "skip probe-feedback fine-tuning");
}

std::string build_config(const ConfigFlags& f) {
  nlohmann::json j = nlohmann::json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) {
      std::cerr << "error: cannot open config " << f.config_path << "\n";
      std::exit(1);
    }
    try {
      in >> j;
    } catch (const std::exception& e) {
      std::cerr << "error: bad config JSON: " << e.what() << "\n";
      std::exit(1);
    }
  }
  if (f.budget >= 0) j["budget"] = f.budget;
  if (f.seed >= 0) j["seed"] = f.seed;
  if (f.k >= 0) j["k"] = f.k;
  if (f.cadence >= 0) j["feedback_cadence"] = f.cadence;
  if (f.train_epochs >= 0) j["train_epochs"] = f.train_epochs;
  if (f.vae_epochs >= 0) j["vae_epochs"] = f.vae_epochs;
  if (f.fine_tune_epochs >= 0) j["fine_tune_epochs"] = f.fine_tune_epochs;
  if (f.p_pct >= 0.0) j["p_pct"] = f.p_pct;
  if (f.temperature >= 0.0) j["temperature"] = f.temperature;
  if (!f.entropy_mode.empty()) j["entropy_mode"] = f.entropy_mode;
  if (f.no_stitch) j["use_stitching"] = false;
  if (f.no_feedback) j["use_feedback"] = false;
  return j.dump();
}

struct SeedsetHandle {
  sv_seedset* ptr = nullptr;
  ~SeedsetHandle() { sv_seedset_free(ptr); }
};

struct UniverseHandle {
  sv_universe* ptr = nullptr;
  ~UniverseHandle() { sv_universe_free(ptr); }
};

// Seeds come from an explicit hitlist when given, otherwise from the
// universe's revealed sample.
void load_inputs(const std::string& universe_path, const std::string& hitlist,
                 const std::string& prefixes, UniverseHandle& u, SeedsetHandle& s) {
  check(sv_universe_load_file(universe_path.c_str(), &u.ptr), "loading universe");
  if (hitlist.empty()) {
    check(sv_universe_seeds(u.ptr, &s.ptr), "sampling universe seeds");
  } else {
    check(sv_seedset_load(hitlist.c_str(),
                          prefixes.empty() ? nullptr : prefixes.c_str(), &s.ptr),
          "loading hitlist");
  }
}

int entropy_mode_code(const std::string& mode) {
  if (mode.empty() || mode == "standard") return 0;
  if (mode == "quarter") return 1;
  std::cerr << "error: --mode must be standard or quarter\n";
  std::exit(2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IPv6 target-generation pipeline"};
  app.require_subcommand(1);

  // encode
  std::string enc_addr, enc_format = "bits", enc_out;
  auto* enc = app.add_subcommand("encode", "Encode an address as an 8x16 binary image");
  enc->add_option("--addr", enc_addr, "IPv6 address text")->required();
  enc->add_option("--format", enc_format, "bits|pgm|csv (default bits)");
  enc->add_option("--out", enc_out, "output file (default stdout)");

  // entropy
  std::string ent_hitlist, ent_prefixes, ent_mode = "standard", ent_pgm, ent_csv;
  auto* ent = app.add_subcommand("entropy", "Per-bit entropy heatmap of a hitlist");
  ent->add_option("--hitlist", ent_hitlist, "addresses, one per line")->required();
  ent->add_option("--prefixes", ent_prefixes, "prefix table, one prefix/len per line");
  ent->add_option("--mode", ent_mode, "standard|quarter");
  ent->add_option("--out-pgm", ent_pgm, "PGM heatmap path (darker = lower entropy)");
  ent->add_option("--out-csv", ent_csv, "CSV of raw per-bit values");

  // census
  std::string cen_hitlist, cen_prefixes, cen_out;
  size_t cen_threshold = 10;
  auto* cen = app.add_subcommand("census", "Per-prefix seed counts and few-seed ratio");
  cen->add_option("--hitlist", cen_hitlist)->required();
  cen->add_option("--prefixes", cen_prefixes, "prefix table");
  cen->add_option("--threshold", cen_threshold, "few-seed threshold (default 10)");
  cen->add_option("--out", cen_out, "JSON output file (default stdout)");

  // cluster
  std::string clu_hitlist, clu_prefixes, clu_out;
  ConfigFlags clu_flags;
  auto* clu = app.add_subcommand("cluster", "VAE + k-means subclass assignment");
  clu->add_option("--hitlist", clu_hitlist)->required();
  clu->add_option("--prefixes", clu_prefixes, "prefix table");
  clu->add_option("--out", clu_out, "CSV output file (default stdout)");
  add_config_flags(clu, clu_flags, false);

  // train
  std::string trn_hitlist, trn_prefixes, trn_dir;
  ConfigFlags trn_flags;
  auto* trn = app.add_subcommand("train", "Cluster seeds and train per-subclass generators");
  trn->add_option("--hitlist", trn_hitlist)->required();
  trn->add_option("--prefixes", trn_prefixes, "prefix table");
  trn->add_option("--out-dir", trn_dir, "checkpoint directory")->required();
  add_config_flags(trn, trn_flags, false);

  // generate
  std::string gen_model, gen_out;
  size_t gen_count = 100;
  uint64_t gen_seed = 1;
  double gen_temp = 1.0;
  auto* gen = app.add_subcommand("generate", "Sample addresses from a model checkpoint");
  gen->add_option("--model", gen_model, "checkpoint file")->required();
  gen->add_option("--count", gen_count, "addresses to sample (default 100)");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--temperature", gen_temp, "sampling temperature");
  gen->add_option("--out", gen_out, "output file (default stdout)");

  // universe
  std::string uni_spec, uni_hitlist, uni_prefixes;
  bool uni_summary = false;
  auto* uni = app.add_subcommand("universe", "Materialize a synthetic universe spec");
  uni->add_option("--spec", uni_spec, "universe JSON document")->required();
  uni->add_option("--out-hitlist", uni_hitlist, "write revealed seeds here");
  uni->add_option("--out-prefixes", uni_prefixes, "write the prefix table here");
  uni->add_flag("--summary", uni_summary, "print a JSON summary");

  // run
  std::string run_universe, run_hitlist, run_prefixes, run_dir;
  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "Full generation / probe / feedback campaign");
  run->add_option("--universe", run_universe, "universe JSON document")->required();
  run->add_option("--hitlist", run_hitlist, "seed hitlist (default: universe sample)");
  run->add_option("--prefixes", run_prefixes, "prefix table");
  run->add_option("--out-dir", run_dir, "artifact directory");
  add_config_flags(run, run_flags);

  // two-stage
  std::string ts_universe, ts_hitlist, ts_prefixes;
  ConfigFlags ts_flags;
  auto* ts = app.add_subcommand("two-stage",
                                "Detector stage then tree-baseline stage at a budget split");
  ts->add_option("--universe", ts_universe)->required();
  ts->add_option("--hitlist", ts_hitlist, "seed hitlist (default: universe sample)");
  ts->add_option("--prefixes", ts_prefixes, "prefix table");
  add_config_flags(ts, ts_flags);

  // ablate
  std::string abl_universe, abl_hitlist, abl_prefixes, abl_out;
  ConfigFlags abl_flags;
  auto* abl = app.add_subcommand("ablate",
                                 "Compare the four stitching/feedback configurations");
  abl->add_option("--universe", abl_universe)->required();
  abl->add_option("--hitlist", abl_hitlist, "seed hitlist (default: universe sample)");
  abl->add_option("--prefixes", abl_prefixes, "prefix table");
  abl->add_option("--out", abl_out, "CSV output file (default stdout)");
  add_config_flags(abl, abl_flags);

  // eval
  std::string ev_candidates, ev_actives, ev_seeds, ev_prefixes, ev_out;
  bool ev_scan = false;
  int ev_rate = 10;
  auto* ev = app.add_subcommand("eval", "Hit rate / coverage over address files");
  ev->add_option("--candidates", ev_candidates, "probed candidates, one per line")
      ->required();
  ev->add_option("--actives", ev_actives, "responding addresses, one per line");
  ev->add_option("--seeds", ev_seeds, "seed addresses excluded from hits");
  ev->add_option("--prefixes", ev_prefixes, "prefix table for coverage");
  ev->add_option("--out", ev_out, "JSON output file (default stdout)");
  ev->add_flag("--scan", ev_scan,
               "derive actives by running the scanner named in $SIXV_SCANNER "
               "over the candidates (optional adapter, never required)");
  ev->add_option("--rate-mbps", ev_rate, "scanner rate limit (default 10)");

  // export
  std::string exp_universe, exp_hitlist, exp_prefixes, exp_dir;
  ConfigFlags exp_flags;
  auto* exp = app.add_subcommand("export",
                                 "Run a campaign and export the deduplicated dataset");
  exp->add_option("--universe", exp_universe)->required();
  exp->add_option("--hitlist", exp_hitlist, "seed hitlist (default: universe sample)");
  exp->add_option("--prefixes", exp_prefixes, "prefix table");
  exp->add_option("--out-dir", exp_dir, "dataset directory")->required();
  add_config_flags(exp, exp_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (enc->parsed()) {
    uint8_t bytes[16];
    check(sv_parse_address(enc_addr.c_str(), bytes), "parsing address");
    if (enc_format == "bits") {
      char bits[129];
      check(sv_encode_bits(bytes, bits), "encoding");
      emit(bits, enc_out);
    } else if (enc_format == "pgm") {
      StringOut out;
      check(sv_encode_pgm(bytes, &out.ptr), "encoding");
      emit(out.str(), enc_out);
    } else if (enc_format == "csv") {
      StringOut out;
      check(sv_encode_csv(bytes, &out.ptr), "encoding");
      emit(out.str(), enc_out);
    } else {
      std::cerr << "error: --format must be bits, pgm or csv\n";
      return 2;
    }
  } else if (ent->parsed()) {
    SeedsetHandle s;
    check(sv_seedset_load(ent_hitlist.c_str(),
                          ent_prefixes.empty() ? nullptr : ent_prefixes.c_str(),
                          &s.ptr),
          "loading hitlist");
    const int mode = entropy_mode_code(ent_mode);
    StringOut csv;
    double ce = 0.0;
    check(sv_entropy_csv(s.ptr, mode, &csv.ptr, &ce), "computing entropy");
    if (!ent_csv.empty()) emit(csv.str(), ent_csv);
    if (!ent_pgm.empty()) {
      StringOut pgm;
      check(sv_entropy_pgm(s.ptr, mode, &pgm.ptr), "rendering heatmap");
      emit(pgm.str(), ent_pgm);
    }
    std::cout << "comprehensive_entropy " << ce << "\n";
  } else if (cen->parsed()) {
    SeedsetHandle s;
    check(sv_seedset_load(cen_hitlist.c_str(),
                          cen_prefixes.empty() ? nullptr : cen_prefixes.c_str(),
                          &s.ptr),
          "loading hitlist");
    StringOut out;
    check(sv_census_json(s.ptr, cen_threshold, &out.ptr), "census");
    emit(out.str(), cen_out);
  } else if (clu->parsed()) {
    SeedsetHandle s;
    check(sv_seedset_load(clu_hitlist.c_str(),
                          clu_prefixes.empty() ? nullptr : clu_prefixes.c_str(),
                          &s.ptr),
          "loading hitlist");
    StringOut out;
    const std::string cfg = build_config(clu_flags);
    check(sv_cluster_csv(s.ptr, cfg.c_str(), &out.ptr), "clustering");
    emit(out.str(), clu_out);
  } else if (trn->parsed()) {
    SeedsetHandle s;
    check(sv_seedset_load(trn_hitlist.c_str(),
                          trn_prefixes.empty() ? nullptr : trn_prefixes.c_str(),
                          &s.ptr),
          "loading hitlist");
    StringOut out;
    const std::string cfg = build_config(trn_flags);
    check(sv_train(s.ptr, cfg.c_str(), trn_dir.c_str(), &out.ptr), "training");
    std::cout << out.str() << "\n";
  } else if (gen->parsed()) {
    StringOut out;
    check(sv_generate(gen_model.c_str(), gen_count, gen_seed, gen_temp, &out.ptr),
          "generating");
    emit(out.str(), gen_out);
  } else if (uni->parsed()) {
    UniverseHandle u;
    check(sv_universe_load_file(uni_spec.c_str(), &u.ptr), "loading universe");
    if (!uni_hitlist.empty() || !uni_prefixes.empty()) {
      if (uni_hitlist.empty() || uni_prefixes.empty()) {
        std::cerr << "error: --out-hitlist and --out-prefixes go together\n";
        return 2;
      }
      check(sv_universe_materialize(u.ptr, uni_hitlist.c_str(), uni_prefixes.c_str()),
            "materializing universe");
    }
    if (uni_summary || (uni_hitlist.empty() && uni_prefixes.empty())) {
      StringOut out;
      check(sv_universe_summary_json(u.ptr, &out.ptr), "summarizing universe");
      emit(out.str(), "");
    }
  } else if (run->parsed()) {
    UniverseHandle u;
    SeedsetHandle s;
    load_inputs(run_universe, run_hitlist, run_prefixes, u, s);
    StringOut out;
    const std::string cfg = build_config(run_flags);
    check(sv_run(s.ptr, u.ptr, cfg.c_str(),
                 run_dir.empty() ? nullptr : run_dir.c_str(), &out.ptr),
          "running campaign");
    std::cout << out.str() << "\n";
  } else if (ts->parsed()) {
    UniverseHandle u;
    SeedsetHandle s;
    load_inputs(ts_universe, ts_hitlist, ts_prefixes, u, s);
    StringOut out;
    const std::string cfg = build_config(ts_flags);
    check(sv_two_stage(s.ptr, u.ptr, cfg.c_str(), &out.ptr), "two-stage run");
    std::cout << out.str() << "\n";
  } else if (abl->parsed()) {
    UniverseHandle u;
    SeedsetHandle s;
    load_inputs(abl_universe, abl_hitlist, abl_prefixes, u, s);
    StringOut out;
    const std::string cfg = build_config(abl_flags);
    check(sv_ablate(s.ptr, u.ptr, cfg.c_str(), &out.ptr), "ablation");
    emit(out.str(), abl_out);
  } else if (ev->parsed()) {
    std::string actives_path = ev_actives;
    std::string temp_actives;
    if (ev_scan) {
      const char* scanner = std::getenv("SIXV_SCANNER");
      if (!scanner || !*scanner) {
        std::cerr << "error: --scan needs $SIXV_SCANNER to name a scanner binary\n";
        return 1;
      }
      StringOut responders;
      check(sv_external_scan(ev_candidates.c_str(), scanner, ev_rate, &responders.ptr),
            "external scan");
      temp_actives = ev_candidates + ".responders";
      emit(responders.str(), temp_actives);
      actives_path = temp_actives;
    }
    if (actives_path.empty()) {
      std::cerr << "error: eval needs --actives (or --scan)\n";
      return 2;
    }
    StringOut out;
    check(sv_eval_json(ev_candidates.c_str(), actives_path.c_str(),
                       ev_seeds.empty() ? nullptr : ev_seeds.c_str(),
                       ev_prefixes.empty() ? nullptr : ev_prefixes.c_str(), &out.ptr),
          "evaluating");
    emit(out.str(), ev_out);
  } else if (exp->parsed()) {
    UniverseHandle u;
    SeedsetHandle s;
    load_inputs(exp_universe, exp_hitlist, exp_prefixes, u, s);
    StringOut out;
    const std::string cfg = build_config(exp_flags);
    check(sv_export(s.ptr, u.ptr, cfg.c_str(), exp_dir.c_str(), &out.ptr),
          "exporting dataset");
    std::cout << out.str() << "\n";
  }
  return 0;
}
