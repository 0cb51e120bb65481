#include "sixvision.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sixv/addr.hpp"
#include "sixv/baseline.hpp"
#include "sixv/imgcode.hpp"
#include "sixv/metrics.hpp"
#include "sixv/oracle.hpp"
#include "sixv/pipeline.hpp"
#include "sixv/pixelgen.hpp"
#include "sixv/vaecluster.hpp"

using namespace sixv;

namespace {

thread_local std::string g_last_error = "no error";

sv_status status_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::MalformedAddress: return SV_ERR_MALFORMED_ADDRESS;
    case ErrorCode::MalformedPrefix: return SV_ERR_MALFORMED_PREFIX;
    case ErrorCode::EmptySeedSet: return SV_ERR_EMPTY_SEED_SET;
    case ErrorCode::EmptySet: return SV_ERR_EMPTY_SET;
    case ErrorCode::EmptySubclass: return SV_ERR_EMPTY_SUBCLASS;
    case ErrorCode::EmptyCorpus: return SV_ERR_EMPTY_CORPUS;
    case ErrorCode::EmptyCandidates: return SV_ERR_EMPTY_CANDIDATES;
    case ErrorCode::ShapeMismatch: return SV_ERR_SHAPE_MISMATCH;
    case ErrorCode::OddChannelCount: return SV_ERR_ODD_CHANNEL_COUNT;
    case ErrorCode::GraphConsumed: return SV_ERR_GRAPH_CONSUMED;
    case ErrorCode::InsufficientData: return SV_ERR_INSUFFICIENT_DATA;
    case ErrorCode::TooFewPoints: return SV_ERR_TOO_FEW_POINTS;
    case ErrorCode::GenerationStalled: return SV_ERR_GENERATION_STALLED;
    case ErrorCode::BudgetExhausted: return SV_ERR_BUDGET_EXHAUSTED;
    case ErrorCode::InvalidSpec: return SV_ERR_INVALID_SPEC;
    case ErrorCode::ZeroBaseline: return SV_ERR_ZERO_BASELINE;
    case ErrorCode::ScannerUnavailable: return SV_ERR_SCANNER_UNAVAILABLE;
    case ErrorCode::ScannerParseError: return SV_ERR_SCANNER_PARSE;
    case ErrorCode::InvalidArgument: return SV_ERR_INVALID_ARGUMENT;
    case ErrorCode::IoError: return SV_ERR_IO;
  }
  return SV_ERR_UNKNOWN;
}

// Runs `fn`, translating exceptions into status codes + last-error text.
template <typename Fn>
sv_status guarded(Fn&& fn) {
  try {
    fn();
    return SV_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SV_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown failure";
    return SV_ERR_UNKNOWN;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_out(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

addr::Address addr_of(const uint8_t bytes[16]) {
  std::array<uint8_t, 16> b;
  std::memcpy(b.data(), bytes, 16);
  return addr::Address(b);
}

void require(bool cond, const char* what) {
  if (!cond) throw Error(ErrorCode::InvalidArgument, what);
}

pipeline::RunConfig config_of(const char* config_json) {
  if (!config_json || !*config_json) return pipeline::RunConfig{};
  return pipeline::RunConfig::from_json(config_json);
}

imgcode::EntropyMode mode_of(int mode) {
  require(mode == 0 || mode == 1, "mode must be 0 (standard) or 1 (quarter)");
  return mode == 0 ? imgcode::EntropyMode::Standard
                   : imgcode::EntropyMode::QuarterScaled;
}

}  // namespace

struct sv_seedset {
  addr::SeedSet set;
};

struct sv_universe {
  oracle::SyntheticUniverse u;
};

extern "C" {

const char* sv_last_error(void) { return g_last_error.c_str(); }

void sv_free_string(char* s) { std::free(s); }

sv_status sv_parse_address(const char* text, uint8_t out_bytes[16]) {
  return guarded([&] {
    require(text && out_bytes, "text and out_bytes are required");
    auto a = addr::parse_address(text);
    std::memcpy(out_bytes, a.bytes().data(), 16);
  });
}

sv_status sv_format_address(const uint8_t bytes[16], char** out_text) {
  return guarded([&] {
    require(bytes && out_text, "bytes and out_text are required");
    set_out(out_text, addr::format_address(addr_of(bytes)));
  });
}

sv_status sv_encode_bits(const uint8_t bytes[16], char out_bits[129]) {
  return guarded([&] {
    require(bytes && out_bits, "bytes and out_bits are required");
    auto img = imgcode::encode(addr_of(bytes));
    for (int i = 0; i < 128; ++i) out_bits[i] = char('0' + img.pixels[size_t(i)]);
    out_bits[128] = '\0';
  });
}

sv_status sv_decode_bits(const char* bits, uint8_t out_bytes[16]) {
  return guarded([&] {
    require(bits && out_bytes, "bits and out_bytes are required");
    require(std::strlen(bits) == 128, "bits must hold exactly 128 characters");
    imgcode::AddressImage img;
    for (int i = 0; i < 128; ++i) {
      require(bits[i] == '0' || bits[i] == '1', "bits must be '0'/'1'");
      img.pixels[size_t(i)] = uint8_t(bits[i] - '0');
    }
    auto a = imgcode::decode(img);
    std::memcpy(out_bytes, a.bytes().data(), 16);
  });
}

sv_status sv_encode_pgm(const uint8_t bytes[16], char** out_pgm) {
  return guarded([&] {
    require(bytes && out_pgm, "bytes and out_pgm are required");
    set_out(out_pgm, imgcode::to_pgm(imgcode::encode(addr_of(bytes))));
  });
}

sv_status sv_encode_csv(const uint8_t bytes[16], char** out_csv) {
  return guarded([&] {
    require(bytes && out_csv, "bytes and out_csv are required");
    set_out(out_csv, imgcode::to_csv(imgcode::encode(addr_of(bytes))));
  });
}

sv_status sv_seedset_load(const char* hitlist_path, const char* prefix_table_path,
                          sv_seedset** out) {
  return guarded([&] {
    require(hitlist_path && out, "hitlist_path and out are required");
    *out = new sv_seedset{addr::load_hitlist(
        hitlist_path, prefix_table_path ? prefix_table_path : "")};
  });
}

void sv_seedset_free(sv_seedset* s) { delete s; }

size_t sv_seedset_size(const sv_seedset* s) { return s ? s->set.size() : 0; }

sv_status sv_entropy_csv(const sv_seedset* s, int mode, char** out_csv,
                         double* out_ce) {
  return guarded([&] {
    require(s, "seed set is required");
    auto e = imgcode::set_entropy(s->set.addresses(), mode_of(mode));
    set_out(out_csv, imgcode::to_csv(e));
    if (out_ce) *out_ce = e.ce;
  });
}

sv_status sv_entropy_pgm(const sv_seedset* s, int mode, char** out_pgm) {
  return guarded([&] {
    require(s && out_pgm, "seed set and out_pgm are required");
    auto m = mode_of(mode);
    set_out(out_pgm, imgcode::to_pgm(imgcode::set_entropy(s->set.addresses(), m), m));
  });
}

sv_status sv_census_json(const sv_seedset* s, size_t threshold, char** out_json) {
  return guarded([&] {
    require(s && out_json, "seed set and out_json are required");
    auto report = addr::few_seed_census(s->set, threshold);
    nlohmann::json j;
    j["prefixes"] = report.prefixes;
    j["few_seed"] = report.few_seed;
    j["few_seed_ratio"] = report.ratio;
    j["threshold"] = threshold;
    j["counts"] = nlohmann::json::array();
    for (const auto& [p, c] : report.counts)
      j["counts"].push_back({{"prefix", p.to_string()}, {"seeds", c}});
    set_out(out_json, j.dump(2));
  });
}

sv_status sv_universe_from_json(const char* spec_json, sv_universe** out) {
  return guarded([&] {
    require(spec_json && out, "spec_json and out are required");
    *out = new sv_universe{oracle::build_universe(spec_json)};
  });
}

sv_status sv_universe_load_file(const char* path, sv_universe** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = new sv_universe{oracle::build_universe_file(path)};
  });
}

void sv_universe_free(sv_universe* u) { delete u; }

sv_status sv_universe_seeds(const sv_universe* u, sv_seedset** out) {
  return guarded([&] {
    require(u && out, "universe and out are required");
    *out = new sv_seedset{u->u.sample_seeds()};
  });
}

sv_status sv_universe_materialize(const sv_universe* u, const char* hitlist_path,
                                  const char* prefix_table_path) {
  return guarded([&] {
    require(u && hitlist_path && prefix_table_path,
            "universe and both output paths are required");
    auto seeds = u->u.sample_seeds();
    std::ofstream hl(hitlist_path);
    if (!hl) throw Error(ErrorCode::IoError, std::string("cannot write ") + hitlist_path);
    for (const auto& a : seeds.addresses()) hl << addr::format_address(a) << "\n";
    std::ofstream pt(prefix_table_path);
    if (!pt)
      throw Error(ErrorCode::IoError, std::string("cannot write ") + prefix_table_path);
    for (const auto& p : u->u.prefix_table()) pt << p.to_string() << "\n";
  });
}

sv_status sv_universe_is_active(const sv_universe* u, const uint8_t bytes[16],
                                int* out_active) {
  return guarded([&] {
    require(u && bytes && out_active, "universe, bytes and out_active are required");
    *out_active = u->u.is_active(addr_of(bytes)) ? 1 : 0;
  });
}

sv_status sv_universe_summary_json(const sv_universe* u, char** out_json) {
  return guarded([&] {
    require(u && out_json, "universe and out_json are required");
    nlohmann::json j;
    j["seed"] = u->u.seed();
    j["prefixes"] = nlohmann::json::array();
    for (const auto& p : u->u.prefixes()) {
      nlohmann::json e;
      e["prefix"] = p.prefix.to_string();
      switch (p.scheme) {
        case oracle::Scheme::CounterLow64: e["scheme"] = "counter-low64"; break;
        case oracle::Scheme::RandomSparse: e["scheme"] = "random-sparse"; break;
        case oracle::Scheme::WordPattern: e["scheme"] = "word-pattern"; break;
        case oracle::Scheme::Aliased: e["scheme"] = "aliased"; break;
      }
      e["seeds"] = p.seeds;
      auto gt = u->u.ground_truth_count(p);
      if (gt) e["actives"] = *gt;
      j["prefixes"].push_back(e);
    }
    set_out(out_json, j.dump(2));
  });
}

sv_status sv_cluster_csv(const sv_seedset* s, const char* config_json,
                         char** out_csv) {
  return guarded([&] {
    require(s && out_csv, "seed set and out_csv are required");
    auto cfg = config_of(config_json);
    const auto& addresses = s->set.addresses();
    if (addresses.empty())
      throw Error(ErrorCode::EmptySeedSet, "cannot cluster an empty seed set");
    int k = int(std::min<size_t>(size_t(cfg.k), addresses.size()));
    std::vector<imgcode::AddressImage> images;
    for (const auto& a : addresses) images.push_back(imgcode::encode(a));
    Rng master(cfg.seed);
    Rng vae_rng = master.fork(1);
    Rng km_rng = master.fork(2);
    auto vae = vaecluster::VaeModel::create(cfg.latent_dim, master.fork(3).next_u64());
    vae.train(images, cfg.vae_epochs, vae_rng, 32, cfg.vae_kl_weight, cfg.lr);
    auto clustering = vaecluster::kmeans(vae.latents_of(images), k, km_rng);
    std::ostringstream out;
    out << "address,subclass_id\n";
    for (size_t i = 0; i < addresses.size(); ++i)
      out << addr::format_address(addresses[i]) << ','
          << clustering.assignments[i] << '\n';
    set_out(out_csv, out.str());
  });
}

sv_status sv_train(const sv_seedset* s, const char* config_json,
                   const char* out_dir, char** out_summary_json) {
  return guarded([&] {
    require(s && out_dir, "seed set and out_dir are required");
    auto cfg = config_of(config_json);
    const auto& addresses = s->set.addresses();
    if (addresses.empty())
      throw Error(ErrorCode::EmptySeedSet, "cannot train on an empty seed set");
    int k = int(std::min<size_t>(size_t(cfg.k), addresses.size()));
    std::vector<imgcode::AddressImage> images;
    for (const auto& a : addresses) images.push_back(imgcode::encode(a));
    Rng master(cfg.seed);
    Rng vae_rng = master.fork(1);
    Rng km_rng = master.fork(2);
    auto vae = vaecluster::VaeModel::create(cfg.latent_dim, master.fork(3).next_u64());
    vae.train(images, cfg.vae_epochs, vae_rng, 32, cfg.vae_kl_weight, cfg.lr);
    auto clustering = vaecluster::kmeans(vae.latents_of(images), k, km_rng);

    std::filesystem::create_directories(out_dir);
    {
      std::ofstream f(std::filesystem::path(out_dir) / "clusters.csv");
      f << "address,subclass_id\n";
      for (size_t i = 0; i < addresses.size(); ++i)
        f << addr::format_address(addresses[i]) << ','
          << clustering.assignments[i] << '\n';
    }

    std::vector<std::vector<addr::Address>> members{size_t(k)};
    for (size_t i = 0; i < addresses.size(); ++i)
      members[size_t(clustering.assignments[i])].push_back(addresses[i]);

    nlohmann::json summary;
    summary["subclasses"] = nlohmann::json::array();
    for (int c = 0; c < k; ++c) {
      auto model = pixelgen::PixelModel::create(
          c, hash_mix(cfg.seed, uint64_t(100 + c)), cfg.hidden, cfg.blocks);
      Rng train_rng(hash_mix(cfg.seed, uint64_t(200 + c)));
      pixelgen::TrainOptions topts;
      topts.epochs = cfg.train_epochs;
      topts.batch = cfg.batch;
      topts.lr = cfg.lr;
      std::vector<double> losses;
      auto imgs = imgcode::sorted_images(members[size_t(c)]);
      if (cfg.use_stitching) {
        losses = model.train(imgcode::stitch_pairs(imgs, cfg.stitch_fanout),
                             topts, train_rng);
      } else {
        losses = model.train_single(imgs, topts, train_rng);
      }
      pixelgen::save_model(
          (std::filesystem::path(out_dir) / ("model_" + std::to_string(c) + ".ckpt"))
              .string(),
          model);
      summary["subclasses"].push_back(
          {{"subclass", c},
           {"members", members[size_t(c)].size()},
           {"final_loss", losses.empty() ? 0.0 : losses.back()}});
    }
    set_out(out_summary_json, summary.dump(2));
  });
}

sv_status sv_generate(const char* checkpoint_path, size_t count, uint64_t seed,
                      double temperature, char** out_addresses) {
  return guarded([&] {
    require(checkpoint_path && out_addresses,
            "checkpoint_path and out_addresses are required");
    require(count > 0, "count must be positive");
    auto model = pixelgen::load_model(checkpoint_path);
    Rng rng(seed);
    pixelgen::DedupLedger ledger;
    pixelgen::SampleOptions opts;
    opts.temperature = float(temperature);
    std::vector<addr::Address> got;
    try {
      auto batch = model.sample(count, rng, ledger, opts);
      got = std::move(batch.addresses);
    } catch (pixelgen::GenerationStalledError& e) {
      got = std::move(e.partial_batch.addresses);
    }
    std::ostringstream out;
    for (const auto& a : got) out << addr::format_address(a) << "\n";
    set_out(out_addresses, out.str());
  });
}

sv_status sv_run(const sv_seedset* s, const sv_universe* u,
                 const char* config_json, const char* out_dir,
                 char** out_report_json) {
  return guarded([&] {
    require(s && u, "seed set and universe are required");
    auto cfg = config_of(config_json);
    auto result = pipeline::run_6vision(s->set, u->u, cfg);
    if (out_dir) pipeline::write_run_artifacts(result, cfg, out_dir);
    set_out(out_report_json, result.report.to_json());
  });
}

sv_status sv_two_stage(const sv_seedset* s, const sv_universe* u,
                       const char* config_json, char** out_json) {
  return guarded([&] {
    require(s && u && out_json, "seed set, universe and out_json are required");
    auto cfg = config_of(config_json);
    set_out(out_json, pipeline::run_two_stage(s->set, u->u, cfg).to_json());
  });
}

sv_status sv_ablate(const sv_seedset* s, const sv_universe* u,
                    const char* config_json, char** out_csv) {
  return guarded([&] {
    require(s && u && out_csv, "seed set, universe and out_csv are required");
    auto cfg = config_of(config_json);
    auto rows = pipeline::run_ablation(s->set, u->u, cfg);
    std::ostringstream out;
    out << "config,hitrate,cover_num,actives\n";
    for (const auto& r : rows)
      out << r.config << ',' << r.hit_rate << ',' << r.cover_num << ','
          << r.actives_found << '\n';
    set_out(out_csv, out.str());
  });
}

sv_status sv_export(const sv_seedset* s, const sv_universe* u,
                    const char* config_json, const char* out_dir,
                    char** out_summary_json) {
  return guarded([&] {
    require(s && u && out_dir, "seed set, universe and out_dir are required");
    auto cfg = config_of(config_json);
    auto result = pipeline::run_6vision(s->set, u->u, cfg);
    pipeline::export_dataset(result, s->set, out_dir);
    std::ifstream in(std::filesystem::path(out_dir) / "summary.json");
    std::ostringstream ss;
    ss << in.rdbuf();
    set_out(out_summary_json, ss.str());
  });
}

sv_status sv_external_scan(const char* candidates_path, const char* scanner_path,
                           int rate_mbps, char** out_responders) {
  return guarded([&] {
    require(candidates_path && scanner_path && out_responders,
            "candidates_path, scanner_path and out_responders are required");
    std::ifstream in(candidates_path);
    if (!in)
      throw Error(ErrorCode::IoError, std::string("cannot open ") + candidates_path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    auto batch = addr::parse_hitlist_lines(lines);
    oracle::ExternalScanConfig cfg;
    cfg.enabled = true;
    cfg.scanner_path = scanner_path;
    cfg.rate_mbps = rate_mbps;
    auto verdicts = oracle::external_scan(batch, cfg);
    std::ostringstream out;
    for (const auto& v : verdicts)
      if (v.active) out << addr::format_address(v.address) << "\n";
    set_out(out_responders, out.str());
  });
}

sv_status sv_eval_json(const char* candidates_path, const char* actives_path,
                       const char* seeds_path, const char* prefix_table_path,
                       char** out_json) {
  return guarded([&] {
    require(candidates_path && actives_path && out_json,
            "candidates_path, actives_path and out_json are required");
    auto read_addrs = [](const char* path) {
      std::ifstream in(path);
      if (!in) throw Error(ErrorCode::IoError, std::string("cannot open ") + path);
      std::vector<std::string> lines;
      std::string line;
      while (std::getline(in, line)) lines.push_back(line);
      return addr::parse_hitlist_lines(lines);
    };
    auto cand = read_addrs(candidates_path);
    auto act = read_addrs(actives_path);
    std::set<addr::Address> candidates(cand.begin(), cand.end());
    std::set<addr::Address> actives(act.begin(), act.end());
    std::set<addr::Address> seeds;
    if (seeds_path) {
      auto sv = read_addrs(seeds_path);
      seeds.insert(sv.begin(), sv.end());
    }
    nlohmann::json j;
    j["candidates"] = candidates.size();
    j["actives"] = actives.size();
    j["hit_rate"] = metrics::hit_rate(candidates, actives, seeds);
    if (prefix_table_path) {
      auto table = addr::load_prefix_table(prefix_table_path);
      j["cover_num"] = metrics::cover_num(actives, table);
    }
    set_out(out_json, j.dump(2));
  });
}

}  // extern "C"
