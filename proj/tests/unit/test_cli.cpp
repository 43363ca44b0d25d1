#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ntkspec/cli.hpp"
#include "ntkspec/io.hpp"
#include "oracles.hpp"

using namespace ntkspec;
namespace fs = std::filesystem;

namespace {

std::string outdir(const std::string& name) {
  const auto p = fs::path(NTKSPEC_TEST_TMP) / ("cli_" + name);
  fs::remove_all(p);
  return p.string();
}

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("list parsing") {
  CHECK(parse_real_list("0.5x3") == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(parse_real_list("1,2.5,3") == std::vector<double>{1.0, 2.5, 3.0});
  CHECK(parse_int_list("500,3000x2") == std::vector<int>{500, 3000, 3000});
  CHECK_THROWS(parse_real_list("1,,2"));
  CHECK_THROWS(parse_real_list("0.5x0"));
  CHECK_THROWS(parse_int_list("2.5"));
  const auto g = parse_grid("-1:3:5");
  CHECK(g.lo == -1.0);
  CHECK(g.hi == 3.0);
  CHECK(g.points == 5);
  CHECK_THROWS(parse_grid("3:1:5"));
  CHECK_THROWS(parse_grid("0:1"));
}

TEST_CASE("limit ck reproduces the MP curve") {
  const std::string dir = outdir("limit_ck");
  const int code = run({"limit", "ck", "--L", "1", "--gamma", "0.5", "--activation", "identity", "--mu0",
                        "point:1", "--eta", "0.001", "--grid", "0.2:2.7:101", "--out", dir});
  CHECK(code == kExitOk);
  json meta;
  const auto curve = read_curve_csv(dir + "/limit_ck.csv", &meta);
  for (std::size_t j = 0; j < curve.size(); ++j) {
    CHECK(std::abs(curve.density[j] - oracle::mp_density(0.5, curve.grid[j])) <= 5e-3);
  }
  CHECK(meta["config"]["activation"] == "identity");
  CHECK(meta["activation"]["b_sigma"].get<double>() == doctest::Approx(1.0));
  CHECK(fs::exists(dir + "/limit_ck.json"));
  CHECK(fs::exists(dir + "/limit_ck.svg"));

  const std::string first = slurp(dir + "/limit_ck.csv");
  const std::string first_json = slurp(dir + "/limit_ck.json");
  CHECK(run({"limit", "ck", "--L", "1", "--gamma", "0.5", "--activation", "identity", "--mu0", "point:1",
             "--eta", "0.001", "--grid", "0.2:2.7:101", "--out", dir}) == kExitOk);
  CHECK(slurp(dir + "/limit_ck.csv") == first);
  CHECK(slurp(dir + "/limit_ck.json") == first_json);
}

TEST_CASE("limit ntk for atan depth five is separated from zero") {
  const std::string dir = outdir("limit_ntk");
  CHECK(run({"limit", "ntk", "--L", "5", "--gammas", "0.5x5", "--activation", "atan", "--mu0", "mp:3",
             "--grid", "0:60:600", "--out", dir}) == kExitOk);
  json meta;
  const auto curve = read_curve_csv(dir + "/limit_ntk.csv", &meta);
  const double r_plus = meta["constants"]["r_plus"].get<double>();
  const auto cdf = cdf_from_curve(curve);
  double below = 0.0;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    if (curve.grid[j] <= r_plus / 2) below = cdf[j];
  }
  CHECK(below <= 0.01);
}

TEST_CASE("usage errors exit with code 1") {
  std::string err;
  CHECK(run({"limit", "ck", "--L", "1", "--gamma", "0", "--out", outdir("bad")}, &err) == kExitError);
  CHECK(err.find("gamma") != std::string::npos);
  CHECK(run({"limit", "bogus", "--L", "1", "--gamma", "0.5", "--out", outdir("bad")}) == kExitError);
  CHECK(run({"limit", "ck", "--L", "1", "--gamma", "0.5", "--activation", "relu", "--out", outdir("bad")}) ==
        kExitError);
  CHECK(run({"--no-such-flag"}) == kExitError);
  CHECK(run({}) == kExitError);
  CHECK(run({"--help"}) == kExitOk);
}

TEST_CASE("config file supplies flags") {
  const std::string dir = outdir("config");
  fs::create_directories(dir);
  const std::string cfg = dir + "/run.conf";
  {
    std::ofstream out(cfg);
    out << "# limit settings\nL=1\ngamma=0.5\nactivation=identity\nmu0=point:1\ngrid=0.2:2.7:21\n";
  }
  CHECK(run({"limit", "ck", "--config", cfg, "--out", dir}) == kExitOk);
  const auto curve = read_curve_csv(dir + "/limit_ck.csv");
  CHECK(curve.size() == 21);
}

TEST_CASE("simulate, compare and check") {
  const std::string dir = outdir("sim");
  const std::vector<std::string> sim{"simulate", "ck", "--n", "300", "--dims", "150,600", "--activation", "tanh",
                                     "--seed", "3", "--out", dir};
  CHECK(run(sim) == kExitOk);
  const std::string eigs = dir + "/sim_ck_eigs.csv";
  REQUIRE(fs::exists(eigs));
  CHECK(fs::exists(dir + "/sim_ck_hist.csv"));
  CHECK(fs::exists(dir + "/sim_ck_orthonormality.json"));
  const std::string first = slurp(eigs);
  CHECK(run(sim) == kExitOk);
  CHECK(slurp(eigs) == first);
  CHECK(read_eigenvalues(eigs).size() == 300);

  CHECK(run({"limit", "ck", "--gammas", "0.5", "--activation", "tanh", "--mu0", "mp:2", "--grid", "-0.5:6:800",
             "--out", dir}) == kExitOk);
  CHECK(run({"compare", "--eigs", eigs, "--curve", dir + "/limit_ck.csv", "--out", dir}) == kExitOk);
  const json report = json::parse(slurp(dir + "/compare.json"));
  CHECK(report["kolmogorov"].get<double>() <= 0.1);

  const std::string input = dir + "/x.csv";
  write_matrix_csv(input, Matrix::Identity(4, 4));
  CHECK(run({"check", "--input", input, "--epsilon", "0.1", "--B", "1", "--out", dir}) == kExitOk);
  const json ortho = json::parse(slurp(dir + "/orthonormality.json"));
  CHECK(ortho["pass"] == true);
  CHECK(ortho["op_norm"].get<double>() == doctest::Approx(1.0));

  CHECK(run({"simulate", "ntk", "--input", input, "--n", "4", "--dims", "4,8", "--remove-pcs", "1", "--out",
             dir}) == kExitOk);
  CHECK(run({"simulate", "ntk-multi", "--k", "2", "--n", "20", "--dims", "10,30,30", "--taus", "1,2,0.5",
             "--out", dir}) == kExitOk);
  CHECK(read_eigenvalues(dir + "/sim_ntk-multi_eigs.csv").size() == 40);
  CHECK(run({"simulate", "surrogate", "--n", "20", "--dims", "10,30", "--out", dir}) == kExitOk);
  CHECK(run({"simulate", "ck", "--input", dir + "/absent.csv", "--n", "4", "--dims", "4,8", "--out", dir}) == kExitError);
  CHECK(fs::exists(dir + "/error.json"));
}

TEST_CASE("mu0 specifications") {
  RunConfig cfg;
  cfg.mu0 = "point:2";
  CHECK(resolve_mu0(cfg).size() == 1);
  cfg.mu0 = "mp:0.5";
  CHECK(resolve_mu0(cfg).size() == 4000);
  cfg.mu0 = "mp-sim:2";
  CHECK(resolve_mu0(cfg).size() == 4000);
  cfg.mu0 = "empirical";
  cfg.n = 30;
  cfg.dims = "10,20";
  cfg.input = "gaussian";
  const auto emp = resolve_mu0(cfg);
  CHECK(emp.size() == 30);
  cfg.mu0 = "nope:1";
  CHECK_THROWS(resolve_mu0(cfg));
  cfg.mu0 = "point:-1";
  CHECK_THROWS(resolve_mu0(cfg));
}

TEST_CASE("demo pipeline at reduced scale") {
  const std::string dir = outdir("demo");
  const int code = run({"demo", "fig2-synthetic", "--n", "200", "--dims", "100,300x2", "--activation", "tanh",
                        "--out", dir});
  CHECK((code == kExitOk || code == kExitPartial));
  const json report = json::parse(slurp(dir + "/fig2-synthetic_report.json"));
  for (const char* panel : {"input", "ck", "ntk"}) {
    CAPTURE(panel);
    CHECK(report["panels"][panel]["kolmogorov"].get<double>() <= 0.2);
  }
  CHECK(fs::exists(dir + "/fig2-synthetic_ntk_limit.svg"));
}
