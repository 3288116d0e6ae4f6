#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <sys/wait.h>

#include "gridtopo/error.hpp"
#include "gridtopo/experiments.hpp"
#include "test_support.hpp"

using namespace gridtopo;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const fs::path& file) {
  std::ifstream in(file);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args, const test::TempDir& dir) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(GRIDTOPO_CLI) + " " + args + " >" + out.string() + " 2>" +
                          err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

}  // namespace

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK(c.ts == 0.01);
  CHECK(c.burn_in == 10000);
  CHECK(c.psd == 10.0);
  CHECK(c.fir_order == 20);
  CHECK(c.rho == 1e-3);
  CHECK(c.tau == 0.2 * std::numbers::pi);
  CHECK(c.omega_points == 65);
  CHECK(c.prune);
}

TEST_CASE("config text parsing") {
  const auto entries = parse_config_text(
      "# comment\n\n ts = 0.02  # trailing\nseed=5\n  fir_order =  7 \nseed = 6\n");
  CHECK(entries.size() == 3);
  CHECK(entries.at("ts") == "0.02");
  CHECK(entries.at("seed") == "6");
  CHECK(entries.at("fir_order") == "7");
  CHECK_THROWS_AS(parse_config_text("just words\n"), Error);
  CHECK_THROWS_AS(parse_config_text("ts =\n"), Error);
  CHECK_THROWS_AS(resolve_config({{"bogus", "1"}}, {}), Error);
  CHECK_THROWS_AS(resolve_config({{"ts", "fast"}}, {}), Error);
  CHECK_THROWS_AS(resolve_config({{"tau", "4"}}, {}), Error);
  CHECK_THROWS_AS(resolve_config({{"sample_list", "100,50"}}, {}), Error);
  CHECK_THROWS_AS(resolve_config({{"prune", "maybe"}}, {}), Error);
}

TEST_CASE("precedence: flag over file over default, per field") {
  const std::vector<std::pair<std::string, std::pair<std::string, std::string>>> fields = {
      {"ts", {"0.02", "0.005"}},       {"samples", {"1234", "4321"}},
      {"burn_in", {"10", "20"}},       {"seed", {"3", "4"}},
      {"psd", {"2.5", "3.5"}},         {"fir_order", {"8", "9"}},
      {"rho", {"0.01", "0.02"}},       {"tau", {"0.5", "0.7"}},
      {"omega_points", {"33", "17"}},  {"threads", {"2", "3"}},
      {"prefilter", {"none", "difference"}}, {"prune", {"false", "true"}},
      {"sample_list", {"100,200", "300,400"}},
  };
  const RunConfig defaults;
  for (const auto& [key, values] : fields) {
    CAPTURE(key);
    const auto text = [&](const RunConfig& c) {
      // Extract the line for `key` from the canonical text form.
      std::istringstream in(to_config_text(c));
      std::string line;
      while (std::getline(in, line))
        if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
      return std::string();
    };
    const auto from_default = resolve_config({}, {});
    const auto from_file = resolve_config({{key, values.first}}, {});
    const auto from_cli = resolve_config({{key, values.first}}, {{key, values.second}});
    CHECK(text(from_default) == text(defaults));
    CHECK(text(from_file) != text(defaults));
    RunConfig expect_file, expect_cli;
    apply_config_entry(expect_file, key, values.first);
    apply_config_entry(expect_cli, key, values.second);
    CHECK(text(from_file) == text(expect_file));
    CHECK(text(from_cli) == text(expect_cli));
  }
}

TEST_CASE("config text round trip") {
  RunConfig c;
  c.ts = 0.003;
  c.seed = 77;
  c.tau = 0.123456789;
  c.prune = false;
  c.sample_list = {10, 20, 30};
  const auto back = resolve_config(parse_config_text(to_config_text(c)), {});
  CHECK(to_config_text(back) == to_config_text(c));
}

TEST_CASE("fixtures sit in the documented parameter ranges") {
  for (const auto& name : fixture_names()) {
    const auto g = fixture_graph(name);
    CHECK(stability_check(g, 0.01).stable);
    for (const auto& p : g.nodes()) {
      CHECK((p.inertia / 1e-4 >= 0.75 && p.inertia / 1e-4 <= 0.85));
      CHECK((p.damping / 0.01 >= 1.45 && p.damping / 0.01 <= 1.55));
    }
    for (const auto& e : g.edges()) CHECK((e.susceptance >= 0.28 && e.susceptance <= 0.32));
  }
  CHECK(fixture_graph("loopy5") == fixture_graph("loopy5"));
  CHECK_THROWS_AS(fixture_graph("hexagon"), Error);
}

TEST_CASE("sweep rows, seeds and failure recording") {
  RunConfig c;
  c.seed = 40;
  c.fir_order = 4;
  c.timing = false;
  c.sample_list = {20, 20000, 50000};
  const auto result = run_sweep(fixture_graph("path3"), c);
  REQUIRE(result.rows.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(result.rows[k].samples == c.sample_list[k]);
    CHECK(result.rows[k].seed == 40 + k);
    CHECK(result.rows[k].wall_time_s == 0.0);
  }
  CHECK_FALSE(result.rows[0].ok);
  CHECK(result.rows[0].error.find("estimation") != std::string::npos);
  CHECK(result.rows[1].ok);
  CHECK(result.rows[2].ok);

  test::TempDir dir;
  write_sweep_csv(result, dir / "sweep.csv");
  std::ifstream in(dir / "sweep.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "samples,relative_error,fp,fn,wall_time_s,seed,status");
  std::getline(in, line);
  CHECK(line.rfind("20,nan,,,0,40,estimation: ", 0) == 0);
  CHECK(count_lines(dir / "sweep.csv") == 4);
}

TEST_CASE("cli: gen-case") {
  test::TempDir dir;
  auto r = run_cli("gen-case --kind cycle --n 4 --seed 0 --out " + (dir / "c4").string(), dir);
  CHECK(r.status == 0);
  CHECK(count_lines(dir / "c4" / "edges.csv") == 5);

  r = run_cli("gen-case --kind path --n 2 --out " + (dir / "p2").string(), dir);
  CHECK(r.status == 0);
  CHECK(count_lines(dir / "p2" / "edges.csv") == 2);

  r = run_cli("gen-case --kind random_loopy --n 10 --seed 3 --susceptance 0.5 2 --out " +
                  (dir / "r10").string(),
              dir);
  CHECK(r.status == 0);
  GraphSpec spec;
  spec.kind = GraphKind::RandomLoopy;
  spec.n = 10;
  spec.seed = 3;
  spec.susceptance = {0.5, 2.0};
  CHECK(load_case(dir / "r10") == generate_graph(spec));

  r = run_cli("gen-case --kind blob --n 4 --out " + (dir / "x").string(), dir);
  CHECK(r.status != 0);
  CHECK(r.err.rfind("config error:", 0) == 0);
}

TEST_CASE("cli: simulate is reproducible and refuses unstable models") {
  test::TempDir dir;
  REQUIRE(run_cli("gen-case --fixture path3 --out " + (dir / "case").string(), dir).status == 0);
  const auto args = "simulate --case " + (dir / "case").string() + " --samples 100000 --seed 1 ";
  auto r = run_cli(args + "--out " + (dir / "a.bin").string(), dir);
  CHECK(r.status == 0);
  CHECK(r.out == "N=3 T=100000 ts=0.01 seed=1\n");
  CHECK(run_cli(args + "--out " + (dir / "b.bin").string(), dir).status == 0);
  CHECK(fs::file_size(dir / "a.bin") == 28 + 3 * 100000 * 8);
  CHECK(slurp(dir / "a.bin") == slurp(dir / "b.bin"));

  r = run_cli(args + "--ts 1 --out " + (dir / "u.bin").string(), dir);
  CHECK(r.status != 0);
  CHECK(r.err.rfind("instability error:", 0) == 0);
  CHECK_FALSE(fs::exists(dir / "u.bin"));

  r = run_cli("simulate --case " + (dir / "nope").string() + " --out " +
                  (dir / "n.bin").string(),
              dir);
  CHECK(r.status != 0);
  CHECK(r.err.rfind("io error:", 0) == 0);
}

TEST_CASE("cli: config file and flag precedence") {
  test::TempDir dir;
  REQUIRE(run_cli("gen-case --fixture path3 --out " + (dir / "case").string(), dir).status == 0);
  std::ofstream(dir / "run.cfg") << "# test run\nsamples = 2000\nseed = 9\nburn_in = 100\n";
  const auto base = "simulate --case " + (dir / "case").string() + " --config " +
                    (dir / "run.cfg").string() + " --out " + (dir / "p.bin").string();
  CHECK(run_cli(base, dir).out == "N=3 T=2000 ts=0.01 seed=9\n");
  CHECK(run_cli(base + " --seed 12", dir).out == "N=3 T=2000 ts=0.01 seed=12\n");
  std::ofstream(dir / "bad.cfg") << "samples: 10\n";
  const auto r = run_cli("simulate --case " + (dir / "case").string() + " --config " +
                             (dir / "bad.cfg").string() + " --out " + (dir / "q.bin").string(),
                         dir);
  CHECK(r.status != 0);
  CHECK(r.err.rfind("config error:", 0) == 0);
}

TEST_CASE("cli: estimate, evaluate, oracle and sweep") {
  test::TempDir dir;
  const auto c = (dir / "case").string();
  REQUIRE(run_cli("gen-case --fixture path3 --out " + c, dir).status == 0);
  REQUIRE(run_cli("simulate --case " + c + " --samples 500000 --seed 1 --out " +
                      (dir / "p.bin").string(),
                  dir)
              .status == 0);

  auto r = run_cli("estimate --panel " + (dir / "p.bin").string() + " --out " +
                       (dir / "e.csv").string(),
                   dir);
  CHECK(r.status == 0);
  CHECK(r.out.find("rel_err") == std::string::npos);
  CHECK(count_lines(dir / "e.csv") == 4);
  CHECK(fs::exists(dir / "e.verdicts.csv"));

  r = run_cli("estimate --panel " + (dir / "p.bin").string() + " --truth " + c + " --out " +
                  (dir / "e.csv").string(),
              dir);
  CHECK(r.out.find("fp=0 fn=0 true=2 rel_err=0\n") != std::string::npos);
  r = run_cli("estimate --no-prune --panel " + (dir / "p.bin").string() + " --truth " + c +
                  " --out " + (dir / "np.csv").string(),
              dir);
  CHECK(r.out.find("fp=1 fn=0 true=2 rel_err=0.5\n") != std::string::npos);

  r = run_cli("evaluate " + (dir / "np.csv").string() + " --truth " + c, dir);
  CHECK(r.status == 0);
  CHECK(r.out == "fp=1 fn=0 true=2 rel_err=0.5\n");

  r = run_cli("oracle --case " + c + " --out " + (dir / "o.csv").string(), dir);
  CHECK(r.status == 0);
  CHECK(count_lines(dir / "o.csv") == 1 + 6 * 65);

  REQUIRE(run_cli("gen-case --kind path --n 2 --out " + (dir / "two").string(), dir).status == 0);
  r = run_cli("oracle --case " + (dir / "two").string() + " --omega-points 9 --out " +
                  (dir / "o2.csv").string(),
              dir);
  CHECK(r.status == 0);
  CHECK(count_lines(dir / "o2.csv") == 1 + 2 * 9);

  r = run_cli("sweep --case " + c + " --sample-list 10000,100000,500000 --no-timing --out " +
                  (dir / "s.csv").string(),
              dir);
  CHECK(r.status == 0);
  std::ifstream in(dir / "s.csv");
  std::string line, last;
  while (std::getline(in, line)) last = line;
  CHECK(last.rfind("500000,0,0,0,0,3,ok", 0) == 0);

  r = run_cli("estimate --panel " + (dir / "missing.bin").string() + " --out x.csv", dir);
  CHECK(r.status != 0);
  CHECK(r.err.rfind("io error:", 0) == 0);
  r = run_cli("frobnicate", dir);
  CHECK(r.status != 0);
}
