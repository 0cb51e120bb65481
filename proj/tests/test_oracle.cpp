#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/stat.h>

#include "sixv/oracle.hpp"

using namespace sixv;
using oracle::Scheme;
using oracle::SyntheticUniverse;

namespace {

const char* kSpec = R"({
  "universe_seed": 7,
  "prefixes": [
    {"prefix": "2001:db8:100::/64", "scheme": "counter-low64", "count": 50, "seeds": 5},
    {"prefix": "2001:db8:200::/64", "scheme": "random-sparse", "density": 0.05, "seeds": 4},
    {"prefix": "2001:db8:300::/64", "scheme": "word-pattern",
     "template": "20010db80300000000000000000*00*0", "seeds": 6},
    {"prefix": "2001:db8:f00::/48", "scheme": "aliased", "seeds": 3}
  ]
})";

}  // namespace

TEST_CASE("universe activity follows each scheme exactly") {
  auto u = oracle::build_universe(kSpec);
  CHECK(u.seed() == 7);
  REQUIRE(u.prefixes().size() == 4);

  // counter-low64: active iff suffix < count.
  auto counter = addr::parse_prefix("2001:db8:100::/64");
  CHECK(u.is_active(oracle::address_with_suffix(counter, 0)));
  CHECK(u.is_active(oracle::address_with_suffix(counter, 49)));
  CHECK(!u.is_active(oracle::address_with_suffix(counter, 50)));
  CHECK(!u.is_active(oracle::address_with_suffix(counter, 1'000'000)));

  // word-pattern: only template matches respond.
  CHECK(u.is_active(addr::parse_address("2001:db8:300::5:30")));  // frees 5,3
  CHECK(!u.is_active(addr::parse_address("2001:db8:300::15:3")));
  CHECK(!u.is_active(addr::parse_address("2001:db8:300::1")));

  // aliased: everything responds.
  CHECK(u.is_active(addr::parse_address("2001:db8:f00::dead:beef")));
  CHECK(u.is_active(addr::parse_address("2001:db8:f00:ffff::1")));

  // outside every prefix: silent.
  CHECK(!u.is_active(addr::parse_address("2001:db9::1")));

  // Pure function of (address, seed): a second build answers identically.
  auto u2 = oracle::build_universe(kSpec);
  auto sparse = addr::parse_prefix("2001:db8:200::/64");
  for (uint64_t i = 0; i < 500; ++i) {
    auto a = oracle::address_with_suffix(sparse, i);
    CHECK(u.is_active(a) == u2.is_active(a));
  }
}

TEST_CASE("revealed seeds are the first actives of each scheme") {
  auto u = oracle::build_universe(kSpec);
  auto seeds = u.sample_seeds();
  // 5 counter + 4 sparse + 6 pattern + 3 aliased.
  CHECK(seeds.size() == 18);
  auto counter = addr::parse_prefix("2001:db8:100::/64");
  for (uint64_t i = 0; i < 5; ++i)
    CHECK(seeds.contains(oracle::address_with_suffix(counter, i)));
  // Word-pattern seeds enumerate the free nybbles lexicographically.
  CHECK(seeds.contains(addr::parse_address("2001:db8:300::")));
  CHECK(seeds.contains(addr::parse_address("2001:db8:300::10")));  // second enumerant
  // Every revealed seed really is active.
  for (const auto& a : seeds.addresses()) CHECK(u.is_active(a));
}

TEST_CASE("ground truth counts and uniform hit probabilities") {
  auto u = oracle::build_universe(kSpec);
  const auto& ps = u.prefixes();
  CHECK(u.ground_truth_count(ps[0]) == 50);
  CHECK(!u.ground_truth_count(ps[1]).has_value());
  CHECK(u.ground_truth_count(ps[2]) == 256);  // two free nybbles
  CHECK(u.uniform_random_hit_probability(ps[0]) ==
        doctest::Approx(50.0 * std::pow(2.0, -64.0)));
  CHECK(u.uniform_random_hit_probability(ps[1]) == doctest::Approx(0.05));
  CHECK(u.uniform_random_hit_probability(ps[3]) == doctest::Approx(1.0));
}

TEST_CASE("universe spec validation") {
  CHECK_THROWS_AS(oracle::build_universe("not json"), Error);
  CHECK_THROWS_AS(oracle::build_universe(R"({"prefixes": []})"), Error);
  CHECK_THROWS_AS(oracle::build_universe(
      R"({"prefixes": [{"prefix": "::/64", "scheme": "bogus"}]})"), Error);
  CHECK_THROWS_AS(oracle::build_universe(
      R"({"prefixes": [{"prefix": "::/64", "scheme": "counter-low64", "count": 0}]})"),
      Error);
  CHECK_THROWS_AS(oracle::build_universe(
      R"({"prefixes": [{"prefix": "::/64", "scheme": "random-sparse", "density": 0}]})"),
      Error);
  // Template must be 32 chars and agree with its prefix.
  CHECK_THROWS_AS(oracle::build_universe(
      R"({"prefixes": [{"prefix": "2001:db8::/32", "scheme": "word-pattern", "template": "abc"}]})"),
      Error);
  CHECK_THROWS_AS(oracle::build_universe(
      R"({"prefixes": [{"prefix": "2001:db8::/32", "scheme": "word-pattern",
          "template": "ffff0db8000000000000000000000000"}]})"),
      Error);
}

TEST_CASE("probe ledger caches verdicts and spends budget once per address") {
  auto u = oracle::build_universe(kSpec);
  oracle::ProbeLedger ledger;
  auto counter = addr::parse_prefix("2001:db8:100::/64");
  std::vector<addr::Address> batch;
  for (uint64_t i = 45; i < 55; ++i)
    batch.push_back(oracle::address_with_suffix(counter, i));

  auto r1 = oracle::probe(u, batch, ledger);
  CHECK(r1.verdicts.size() == 10);
  CHECK(!r1.budget_exhausted);
  CHECK(ledger.budget_spent == 10);
  int active = 0;
  for (const auto& v : r1.verdicts) active += v.active;
  CHECK(active == 5);  // suffixes 45..49

  // Re-probing the same batch is free and returns identical verdicts.
  auto r2 = oracle::probe(u, batch, ledger);
  CHECK(ledger.budget_spent == 10);
  for (size_t i = 0; i < batch.size(); ++i) {
    CHECK(r2.verdicts[i].active == r1.verdicts[i].active);
    CHECK(r2.verdicts[i].rtt_ticks == r1.verdicts[i].rtt_ticks);
  }
  CHECK(ledger.budget_spent == ledger.probed.size());
}

TEST_CASE("a hard budget cap yields a partial result, not an exception") {
  auto u = oracle::build_universe(kSpec);
  oracle::ProbeLedger ledger;
  auto counter = addr::parse_prefix("2001:db8:100::/64");
  std::vector<addr::Address> batch;
  for (uint64_t i = 0; i < 20; ++i)
    batch.push_back(oracle::address_with_suffix(counter, i));
  auto r = oracle::probe(u, batch, ledger, 8);
  CHECK(r.budget_exhausted);
  CHECK(r.verdicts.size() == 8);
  CHECK(ledger.budget_spent == 8);
}

TEST_CASE("addresses under a detected alias answer free") {
  auto u = oracle::build_universe(kSpec);
  oracle::ProbeLedger ledger;
  ledger.aliased_prefixes.insert(addr::parse_prefix("2001:db8:f00::/48"));
  std::vector<addr::Address> batch = {addr::parse_address("2001:db8:f00::1234"),
                                      addr::parse_address("2001:db8:100::1")};
  auto r = oracle::probe(u, batch, ledger, 10);
  CHECK(r.verdicts.size() == 2);
  CHECK(r.verdicts[0].active);
  CHECK(ledger.budget_spent == 1);             // only the non-aliased address
  CHECK(ledger.probed.count(batch[0]) == 0);   // alias answers are not stored
}

TEST_CASE("alias detection separates aliased from genuine prefixes") {
  auto u = oracle::build_universe(kSpec);
  CHECK(oracle::detect_alias(u, addr::parse_prefix("2001:db8:f00::/48"), 16, 96));
  CHECK(!oracle::detect_alias(u, addr::parse_prefix("2001:db8:100::/64"), 16, 96));
  CHECK(!oracle::detect_alias(u, addr::parse_prefix("2001:db8:300::/64"), 16, 96));
  CHECK_THROWS_AS(oracle::detect_alias(u, addr::parse_prefix("2001:db8::/96"), 16, 96),
                  Error);
}

TEST_CASE("external scan shells out to an operator-supplied binary") {
  oracle::ExternalScanConfig off;
  CHECK_THROWS_AS(oracle::external_scan({}, off), Error);

  // A mock scanner that answers every third input line.
  auto dir = std::filesystem::temp_directory_path();
  auto scanner = (dir / "sixv_mock_scanner.sh").string();
  {
    std::ofstream f(scanner);
    f << "#!/bin/sh\nawk 'NR % 3 == 1'\n";
  }
  ::chmod(scanner.c_str(), 0755);

  std::vector<addr::Address> batch;
  for (int i = 1; i <= 9; ++i)
    batch.push_back(addr::parse_address("2001:db8::" + std::to_string(i)));
  oracle::ExternalScanConfig cfg;
  cfg.enabled = true;
  cfg.scanner_path = scanner;
  auto verdicts = oracle::external_scan(batch, cfg);
  REQUIRE(verdicts.size() == 9);
  for (size_t i = 0; i < 9; ++i) CHECK(verdicts[i].active == (i % 3 == 0));

  // Garbage output is a parse error, not silent misclassification.
  {
    std::ofstream f(scanner);
    f << "#!/bin/sh\necho zzz-not-an-address\n";
  }
  CHECK_THROWS_AS(oracle::external_scan(batch, cfg), Error);
  std::remove(scanner.c_str());
}
