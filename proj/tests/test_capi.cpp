#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "sixvision.h"

namespace fs = std::filesystem;

namespace {

struct StringOut {
  char* s = nullptr;
  ~StringOut() { sv_free_string(s); }
  std::string str() const { return s ? s : ""; }
};

std::string write_temp(const std::string& name, const std::string& body) {
  auto path = (fs::temp_directory_path() / name).string();
  std::ofstream f(path);
  f << body;
  return path;
}

const char* kUniverseSpec = R"({
  "universe_seed": 4,
  "prefixes": [
    {"prefix": "2001:db8:10::/64", "scheme": "counter-low64", "count": 64, "seeds": 4},
    {"prefix": "2001:db8:f0::/48", "scheme": "aliased", "seeds": 2}
  ]
})";

}  // namespace

TEST_CASE("C address codec round-trips and reports malformed input") {
  uint8_t bytes[16];
  REQUIRE(sv_parse_address("2001:db8::1", bytes) == SV_OK);
  CHECK(bytes[0] == 0x20);
  CHECK(bytes[15] == 0x01);
  StringOut text;
  REQUIRE(sv_format_address(bytes, &text.s) == SV_OK);
  CHECK(text.str() == "2001:db8::1");

  CHECK(sv_parse_address("not-an-address", bytes) == SV_ERR_MALFORMED_ADDRESS);
  CHECK(std::strlen(sv_last_error()) > 0);
  CHECK(sv_parse_address(nullptr, bytes) == SV_ERR_INVALID_ARGUMENT);
  CHECK(sv_format_address(nullptr, &text.s) == SV_ERR_INVALID_ARGUMENT);
}

TEST_CASE("C image codec matches the worked bit layout") {
  uint8_t bytes[16];
  REQUIRE(sv_parse_address("2804:14d:1087:8ea7:a51d:da6a:d200:e055", bytes) == SV_OK);
  char bits[129];
  REQUIRE(sv_encode_bits(bytes, bits) == SV_OK);
  CHECK(std::strlen(bits) == 128);
  CHECK(std::string(bits, 16) == "0010100000000100");  // 0x2804

  uint8_t back[16];
  REQUIRE(sv_decode_bits(bits, back) == SV_OK);
  CHECK(std::memcmp(bytes, back, 16) == 0);
  CHECK(sv_decode_bits("01", back) == SV_ERR_INVALID_ARGUMENT);

  StringOut pgm, csv;
  REQUIRE(sv_encode_pgm(bytes, &pgm.s) == SV_OK);
  CHECK(pgm.str().rfind("P2\n16 8\n255\n", 0) == 0);
  REQUIRE(sv_encode_csv(bytes, &csv.s) == SV_OK);
  CHECK(csv.str().rfind("0,0,1,0,1,0,0,0", 0) == 0);
}

TEST_CASE("seed sets load from hitlists and expose entropy and census") {
  auto hitlist = write_temp("sv_capi_hits.txt",
                            "# comment\n::\n::1\n");
  auto prefixes = write_temp("sv_capi_prefixes.txt", "::/0\n");
  sv_seedset* s = nullptr;
  REQUIRE(sv_seedset_load(hitlist.c_str(), prefixes.c_str(), &s) == SV_OK);
  CHECK(sv_seedset_size(s) == 2);

  double ce = 0.0;
  StringOut csv;
  REQUIRE(sv_entropy_csv(s, 0, &csv.s, &ce) == SV_OK);
  CHECK(ce == doctest::Approx(1.0 / 128.0).epsilon(1e-9));
  REQUIRE(sv_entropy_csv(s, 1, nullptr, &ce) == SV_OK);
  CHECK(ce == doctest::Approx(0.25 / 128.0).epsilon(1e-9));
  CHECK(sv_entropy_csv(s, 7, &csv.s, &ce) == SV_ERR_INVALID_ARGUMENT);

  StringOut pgm;
  REQUIRE(sv_entropy_pgm(s, 0, &pgm.s) == SV_OK);
  CHECK(pgm.str().rfind("P2\n16 8\n255\n", 0) == 0);

  StringOut census;
  REQUIRE(sv_census_json(s, 10, &census.s) == SV_OK);
  CHECK(census.str().find("few_seed_ratio") != std::string::npos);
  CHECK(sv_census_json(s, 0, &census.s) == SV_ERR_INVALID_ARGUMENT);

  sv_seedset_free(s);

  sv_seedset* bad = nullptr;
  auto empty = write_temp("sv_capi_empty.txt", "# nothing\n");
  CHECK(sv_seedset_load(empty.c_str(), nullptr, &bad) == SV_ERR_EMPTY_SEED_SET);
  CHECK(sv_seedset_load("/no/such/file", nullptr, &bad) == SV_ERR_IO);
  fs::remove(hitlist);
  fs::remove(prefixes);
  fs::remove(empty);
}

TEST_CASE("universe handles answer activity and materialize to disk") {
  sv_universe* u = nullptr;
  REQUIRE(sv_universe_from_json(kUniverseSpec, &u) == SV_OK);

  uint8_t bytes[16];
  int active = -1;
  REQUIRE(sv_parse_address("2001:db8:10::3f", bytes) == SV_OK);  // suffix 63 < 64
  REQUIRE(sv_universe_is_active(u, bytes, &active) == SV_OK);
  CHECK(active == 1);
  REQUIRE(sv_parse_address("2001:db8:10::40", bytes) == SV_OK);
  REQUIRE(sv_universe_is_active(u, bytes, &active) == SV_OK);
  CHECK(active == 0);

  sv_seedset* seeds = nullptr;
  REQUIRE(sv_universe_seeds(u, &seeds) == SV_OK);
  CHECK(sv_seedset_size(seeds) == 6);
  sv_seedset_free(seeds);

  auto hits = (fs::temp_directory_path() / "sv_capi_u_hits.txt").string();
  auto pfx = (fs::temp_directory_path() / "sv_capi_u_prefixes.txt").string();
  REQUIRE(sv_universe_materialize(u, hits.c_str(), pfx.c_str()) == SV_OK);
  sv_seedset* reload = nullptr;
  REQUIRE(sv_seedset_load(hits.c_str(), pfx.c_str(), &reload) == SV_OK);
  CHECK(sv_seedset_size(reload) == 6);
  sv_seedset_free(reload);

  StringOut summary;
  REQUIRE(sv_universe_summary_json(u, &summary.s) == SV_OK);
  CHECK(summary.str().find("counter-low64") != std::string::npos);
  sv_universe_free(u);

  sv_universe* bad = nullptr;
  CHECK(sv_universe_from_json("junk", &bad) == SV_ERR_INVALID_SPEC);
  fs::remove(hits);
  fs::remove(pfx);
}

TEST_CASE("cluster, train, and generate through the C surface") {
  sv_universe* u = nullptr;
  REQUIRE(sv_universe_from_json(kUniverseSpec, &u) == SV_OK);
  sv_seedset* seeds = nullptr;
  REQUIRE(sv_universe_seeds(u, &seeds) == SV_OK);

  const char* cfg = R"({"k": 2, "vae_epochs": 8, "train_epochs": 2,
                        "hidden": 4, "blocks": 1, "seed": 9})";

  StringOut clusters;
  REQUIRE(sv_cluster_csv(seeds, cfg, &clusters.s) == SV_OK);
  CHECK(clusters.str().rfind("address,subclass_id", 0) == 0);

  auto dir = fs::temp_directory_path() / "sv_capi_train";
  fs::remove_all(dir);
  StringOut summary;
  REQUIRE(sv_train(seeds, cfg, dir.string().c_str(), &summary.s) == SV_OK);
  CHECK(fs::exists(dir / "clusters.csv"));
  CHECK(fs::exists(dir / "model_0.ckpt"));

  StringOut out;
  REQUIRE(sv_generate((dir / "model_0.ckpt").string().c_str(), 3, 11, 1.0,
                      &out.s) == SV_OK);
  // Three newline-separated parseable addresses.
  size_t lines = 0;
  std::string text = out.str();
  for (size_t pos = 0; pos < text.size();) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    if (!line.empty()) {
      uint8_t b[16];
      CHECK(sv_parse_address(line.c_str(), b) == SV_OK);
      ++lines;
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  CHECK(lines == 3);
  CHECK(sv_generate("/no/such.ckpt", 3, 11, 1.0, &out.s) == SV_ERR_IO);

  sv_seedset_free(seeds);
  sv_universe_free(u);
  fs::remove_all(dir);
}

TEST_CASE("full runs and evaluation through the C surface") {
  sv_universe* u = nullptr;
  REQUIRE(sv_universe_from_json(kUniverseSpec, &u) == SV_OK);
  sv_seedset* seeds = nullptr;
  REQUIRE(sv_universe_seeds(u, &seeds) == SV_OK);

  const char* cfg = R"({"budget": 120, "feedback_cadence": 60, "k": 2,
                        "vae_epochs": 8, "train_epochs": 2, "fine_tune_epochs": 1,
                        "hidden": 4, "blocks": 1, "seed": 3})";
  auto dir = fs::temp_directory_path() / "sv_capi_run";
  fs::remove_all(dir);
  StringOut report;
  REQUIRE(sv_run(seeds, u, cfg, dir.string().c_str(), &report.s) == SV_OK);
  CHECK(report.str().find("\"hit_rate\"") != std::string::npos);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "candidates.txt"));

  // Budget-less config is rejected for runs.
  StringOut r2;
  CHECK(sv_run(seeds, u, "{}", nullptr, &r2.s) == SV_ERR_INVALID_SPEC);

  StringOut eval;
  auto cands = write_temp("sv_capi_cands.txt",
                          "2001:db8::1\n2001:db8::2\n2001:db8::3\n2001:db8::4\n");
  auto acts = write_temp("sv_capi_acts.txt", "2001:db8::1\n2001:db8::9\n");
  REQUIRE(sv_eval_json(cands.c_str(), acts.c_str(), nullptr, nullptr,
                       &eval.s) == SV_OK);
  CHECK(eval.str().find("\"hit_rate\": 0.25") != std::string::npos);

  sv_seedset_free(seeds);
  sv_universe_free(u);
  fs::remove_all(dir);
  fs::remove(cands);
  fs::remove(acts);
}
