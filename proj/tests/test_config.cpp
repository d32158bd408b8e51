#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "vp/config.hpp"

using namespace vp;

namespace {

const char* kSample = R"(
[profile]
kind = power_law
c = 1
epsilon = 0.8

[physics]
lambda = 0.2
c0 = 1
c1 = 1

[sampling]
r_max = 3
h_x = 1
h_v = 2

[run]
cutoffs = 3 4 5
t_final = 0.5
dt = 0.01
method = tree
theta = 0.3
softening = 0.05

[params]
gamma = auto
eta = auto
delta = auto
alpha = auto

[diagnostics]
energy_r = 2
mu_spacing = 1
h_rho = 1

[output]
dir = out
)";

}  // namespace

TEST_CASE("ini parse and serialize round trip") {
  const IniDoc doc = parse_ini(kSample);
  const std::string once = serialize_ini(doc);
  const std::string twice = serialize_ini(parse_ini(once));
  CHECK(once == twice);
  REQUIRE(doc.find("run", "dt") != nullptr);
  CHECK(*doc.find("run", "dt") == "0.01");
}

TEST_CASE("strict ini rejects malformed input") {
  CHECK_THROWS_AS(parse_ini("key = 1\n"), std::invalid_argument);  // key before section
  CHECK_THROWS_AS(parse_ini("[a]\nkey\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ini("[a]\nk = 1\nk = 2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ini("[a]\n[a]\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ini("[a\nk = 1\n"), std::invalid_argument);
}

TEST_CASE("run config round trip is the identity") {
  const RunConfig a = parse_run_config(kSample);
  const std::string s1 = serialize_run_config(a);
  const RunConfig b = parse_run_config(s1);
  CHECK(serialize_run_config(b) == s1);
  CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK_THROWS_AS(parse_run_config(std::string(kSample) + "\n[bogus]\nx = 1\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(std::string(kSample) + "\n[extra]\n"),
                  std::invalid_argument);
  std::string bad = kSample;
  const auto pos = bad.find("dir = out");
  bad.replace(pos, 9, "dirx = out");
  CHECK_THROWS_AS(parse_run_config(bad), std::invalid_argument);
}

TEST_CASE("auto parameters resolve to interval midpoints") {
  RunConfig cfg = parse_run_config(kSample);
  CHECK(cfg.gamma_auto);
  const ParamBundle b = cfg.resolve_params();
  const auto r = param_ranges(0.8);
  CHECK(b.gamma == doctest::Approx(r.gamma.midpoint()).epsilon(1e-14));
  CHECK(b.eta == doctest::Approx(r.eta_interval(b.gamma).midpoint()).epsilon(1e-14));
  CHECK(b.delta == 0.0);  // direct regime
  CHECK_NOTHROW(b.validate());
  CHECK(!cfg.gamma_auto);  // resolution is recorded
}

TEST_CASE("out-of-range epsilon and delta are config errors") {
  std::string bad = kSample;
  bad.replace(bad.find("epsilon = 0.8"), 13, "epsilon = 1.2");
  CHECK_THROWS_AS(parse_run_config(bad), std::invalid_argument);

  std::string bad2 = kSample;
  bad2.replace(bad2.find("epsilon = 0.8"), 13, "epsilon = 0.5");
  bad2.replace(bad2.find("delta = auto"), 12, "delta = 0.6");
  CHECK_THROWS_AS(parse_run_config(bad2), std::invalid_argument);  // cap is 13/24

  std::string ok = kSample;
  ok.replace(ok.find("epsilon = 0.8"), 13, "epsilon = 0.5");
  ok.replace(ok.find("delta = auto"), 12, "delta = 0.2");
  CHECK_NOTHROW(parse_run_config(ok));
}

TEST_CASE("config hash is sensitive to changes") {
  const RunConfig a = parse_run_config(kSample);
  std::string other = kSample;
  other.replace(other.find("dt = 0.01"), 9, "dt = 0.02");
  const RunConfig b = parse_run_config(other);
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("columnar table format") {
  const std::string path = "table_test.txt";
  write_table(path, "demo", {"a", "b"}, {{1.0, 0.1}, {2.0, 1.0 / 3.0}});
  std::ifstream in(path);
  std::string l1, l2, l3, l4;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  std::getline(in, l4);
  in.close();
  std::remove(path.c_str());
  CHECK(l1 == "# demo");
  CHECK(l2 == "# columns: a b");
  CHECK(l3 == "1 0.10000000000000001");
  CHECK(l4 == "2 0.33333333333333331");
}

TEST_CASE("format_g17 re-parses exactly") {
  for (double x : {0.1, 1.0 / 3.0, 2.5e-17, 123456.789}) {
    CHECK(std::stod(format_g17(x)) == x);
  }
}
