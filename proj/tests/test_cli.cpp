#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "aniso/cli.hpp"

using namespace aniso;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("aniso_cli_" + std::to_string(std::rand()) + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

std::string write_config(const fs::path& dir, const std::string& name, const std::string& body) {
  const fs::path p = dir / name;
  std::ofstream(p) << body;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

// Data rows of a trace CSV, split into fields.
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  for (const auto& line : lines(slurp(p))) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string f;
    while (std::getline(in, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

std::map<std::string, std::string> summary(const fs::path& p) {
  std::map<std::string, std::string> out;
  for (const auto& line : lines(slurp(p))) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

int run(const std::string& cfg, const std::optional<std::string>& out = std::nullopt,
        const std::optional<std::uint64_t>& seed = std::nullopt) {
  std::ostringstream o, e;
  return cmd_run(cfg, {out, seed, std::nullopt, false}, o, e);
}

const char* kSkew = R"([experiment]
kind = ppa_run
[problem]
spec = skew2
x0 = 3, 3
[kernel]
spec = sep_power:p=4
[solver]
max_outer = 60
dual_norm_tol = -1
)";

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse(R"([experiment]
kind = rate_study
seed = 11
output = results
[problem]
spec = growth_linear
x0 = 1, -2
[kernel]
grid = iso_power:p=2; sep_power:p=3
[solver]
lambdas = 1, 0.5
tail = 4
)");
  CHECK(c.kind == ExperimentKind::RateStudy);
  CHECK(*c.seed == 11);
  CHECK(c.output_dir == "results");
  CHECK(c.kernel_grid == std::vector<std::string>{"iso_power:p=2", "sep_power:p=3"});
  CHECK(c.lambda_grid == std::vector<double>{1.0, 0.5});
  CHECK(c.x0->size() == 2);
  CHECK(c.tail == 4);

  CHECK_THROWS_AS(parse("[experiment]\nkind = ppa_run\nbogus = 1\n"), ParseError);
  CHECK_THROWS_AS(parse("[experiment]\nkind = fly\n"), ParseError);
  CHECK_THROWS_AS(parse("[problem]\nspec = skew2\n"), ParseError);
  CHECK_THROWS_AS(parse("[experiment]\nkind = ppa_run\n[solver]\nlambda = two\n"), ParseError);
  CHECK_THROWS_AS(parse("[experiment]\nkind = ppa_run\n[solver]\nlambda = 1.5\n"), ParseError);
  CHECK_THROWS_AS(parse("[experiment]\nkind = ppa_run\n[problem]\nspec = skew3\n"), ParseError);
  CHECK_THROWS_AS(parse("[experiment]\nkind = ppa_run\n[kernel]\nspec = huber\n"), ParseError);
  CHECK_THROWS_AS(parse("[experiment]\nkind = ppa_run\n[problem]\nx0 = 1, 2, 3\n"), ParseError);
  CHECK_THROWS_AS(parse("[experiment\nkind = ppa_run\n"), ParseError);
  CHECK_THROWS_AS(parse("[extras]\nfoo = 1\n[experiment]\nkind = ppa_run\n"), ParseError);
}

TEST_CASE("malformed config exits nonzero without writing a CSV") {
  TempDir tmp;
  const fs::path out = tmp.path / "out";
  const auto cfg = write_config(tmp.path, "bad.ini",
                                "[experiment]\nkind = ppa_run\noutput = " + out.string() + "\n[problem]\nspec = nonsense\n");
  std::ostringstream o, e;
  CHECK(cmd_run(cfg, {}, o, e) != 0);
  CHECK(e.str().find("nonsense") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
  CHECK(run((tmp.path / "missing.ini").string()) != 0);

  // A run that fails mid-way writes nothing either.
  const auto starved = write_config(tmp.path, "starved.ini",
                                    "[experiment]\nkind = ppa_run\noutput = " + out.string() +
                                        "\n[problem]\nspec = skew2\nx0 = 3, 1\n[kernel]\nspec = sep_power:p=4\n"
                                        "[solver]\nmax_outer = 5\nresidual_tol = 1e-300\n");
  CHECK(run(starved) == 1);
  CHECK_FALSE(fs::exists(out / "trace.csv"));
}

TEST_CASE("skew run: dual Bregman column is nonincreasing") {
  TempDir tmp;
  const auto cfg = write_config(tmp.path, "skew.ini", kSkew);
  REQUIRE(run(cfg, (tmp.path / "out").string()) == 0);
  const auto rows = csv_rows(tmp.path / "out" / "trace.csv");
  const auto sum = summary(tmp.path / "out" / "summary.txt");
  CHECK(rows.size() == 60);
  CHECK(std::stoul(sum.at("iterations")) == rows.size());
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][2]) <= std::stod(rows[i - 1][2]) + 1e-14);
}

TEST_CASE("growth-linear classical PPA summary rate") {
  TempDir tmp;
  const auto cfg = write_config(tmp.path, "grow.ini", R"([experiment]
kind = ppa_run
[problem]
spec = growth_linear
[kernel]
spec = iso_power:p=2
[solver]
max_outer = 400
)");
  REQUIRE(run(cfg, (tmp.path / "out").string()) == 0);
  const auto sum = summary(tmp.path / "out" / "summary.txt");
  CHECK(std::stod(sum.at("q_factor_dist_2")) <= 0.914);
  CHECK(std::stod(sum.at("order_dist_2")) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("identical config and seed give identical traces") {
  TempDir tmp;
  const auto ppa = write_config(tmp.path, "skew.ini", kSkew);
  const auto alm = write_config(tmp.path, "game.ini", R"([experiment]
kind = alm_run
seed = 5
[problem]
spec = game:n=6,m=7
[kernel]
spec = sep_power:p=3
dual = sep_power:p=2
[solver]
max_outer = 40
)");
  for (const auto& cfg : {ppa, alm}) {
    REQUIRE(run(cfg, (tmp.path / "a").string()) == 0);
    REQUIRE(run(cfg, (tmp.path / "b").string()) == 0);
    auto a = lines(slurp(tmp.path / "a" / "trace.csv"));
    auto b = lines(slurp(tmp.path / "b" / "trace.csv"));
    REQUIRE(a.size() > 2);
    CHECK(a[0].rfind("# generated ", 0) == 0);
    a.erase(a.begin());
    b.erase(b.begin());
    CHECK(a == b);
  }
  REQUIRE(run(alm, (tmp.path / "c").string(), 6) == 0);
  CHECK(csv_rows(tmp.path / "a" / "trace.csv") != csv_rows(tmp.path / "c" / "trace.csv"));
  const auto rows = csv_rows(tmp.path / "a" / "trace.csv");
  CHECK(rows.size() == 40);
  CHECK(rows.front().size() == 14);
}

TEST_CASE("verify: default passes, tight tolerance and mutation fail") {
  VerifyOptions opts;
  opts.points = 20;
  std::ostringstream o, e;
  CHECK(cmd_verify(opts, std::nullopt, o, e) == 0);
  CHECK(o.str().find("FAIL") == std::string::npos);

  VerifyOptions tight = opts;
  tight.tol = 1e-15;
  std::ostringstream o2, e2;
  CHECK(cmd_verify(tight, std::nullopt, o2, e2) == 1);
  CHECK(e2.str().find("FAILED") != std::string::npos);

  VerifyOptions mutated = opts;
  mutated.mutation.flip_grad_phi_star_sign = true;
  const auto rows = verify_identities(mutated);
  for (const auto& r : rows) CHECK(r.passed == (r.name != "moreau_decomposition"));
  std::ostringstream o3, e3;
  CHECK(cmd_verify(mutated, std::nullopt, o3, e3) == 1);
  CHECK(e3.str().find("moreau_decomposition") != std::string::npos);
}

TEST_CASE("rate study") {
  TempDir tmp;
  auto c = parse(R"([experiment]
kind = rate_study
[problem]
spec = growth_linear
[kernel]
grid = iso_power:p=2; sep_power:p=3
[solver]
max_outer = 400
dual_norm_tol = 1e-14
tail = 4
)");
  c.output_dir = (tmp.path / "rs").string();
  const auto rows = rate_study(c, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].order_2 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(rows[0].q_factor_2 <= 0.914);
  CHECK(rows[1].order_p >= 1.9);
  CHECK(std::isfinite(rows[1].rate_p));
  CHECK(fs::exists(tmp.path / "rs" / "trace_0.csv"));
  CHECK(fs::exists(tmp.path / "rs" / "trace_1.csv"));

  // Threads do not change the results.
  const auto serial = rate_study(c, 1, false);
  CHECK(serial[1].order_p == rows[1].order_p);

  // Identity with the quadratic kernel halves the iterate: order 1, rate 1/2.
  auto id = parse("[experiment]\nkind = rate_study\n[problem]\nspec = identity:n=2\nx0 = 1, 1\n[kernel]\ngrid = sep_power:p=2\n[solver]\ndual_norm_tol = 1e-14\n");
  id.output_dir = (tmp.path / "id").string();
  const auto half = rate_study(id, 1);
  REQUIRE(half.size() == 1);
  CHECK(half[0].order_2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(half[0].rate_2 == doctest::Approx(0.5).epsilon(1e-8));

  auto empty = c;
  empty.kernel_grid.clear();
  CHECK(rate_study(empty, 4).empty());
  const auto cfg = write_config(tmp.path, "empty.ini", "[experiment]\nkind = rate_study\n[problem]\nspec = growth_linear\n");
  std::ostringstream o, e;
  CHECK(cmd_rate_study(cfg, (tmp.path / "e").string(), std::nullopt, o, e) == 0);
  CHECK(lines(o.str()).back().rfind("kernel,", 0) == 0);
}

TEST_CASE("thread budget follows the environment") {
  setenv("ANISO_PPA_THREADS", "3", 1);
  CHECK(thread_budget() == 3);
  setenv("ANISO_PPA_THREADS", "zero", 1);
  CHECK(thread_budget() >= 1);
  unsetenv("ANISO_PPA_THREADS");
  CHECK(thread_budget() >= 1);
}
