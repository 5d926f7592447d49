#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lsabr.hpp"

namespace fs = std::filesystem;
using namespace lsabr;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("lsabr_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Run run(const std::string& args) {
  const fs::path out = scratch() / "stdout", err = scratch() / "stderr";
  const std::string cmd = std::string(LSABR_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string drop_first_line(const std::string& s) { return s.substr(s.find('\n') + 1); }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) v.push_back(l);
  return v;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run("").code == 2);
  CHECK(run("bogus").code == 2);
  CHECK(run("price --nope 1").code == 2);
  CHECK(run("--config /does/not/exist price").code == 2);
  CHECK(run("price --t -1").code == 2);
  CHECK(run("price --grid 5by5").code == 2);
  CHECK(run("price --sigma 0.3").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("config files are validated") {
  CHECK(run("--config " + write_file("bad_order.conf", "alpha = 0.3\ntheta = 0.2\n").string() + " price").code == 2);
  const Run r = run("--config " + write_file("typo.conf", "kapa = 2\n").string() + " price");
  CHECK(r.code == 2);
  CHECK(r.err.find("kapa") != std::string::npos);
}

TEST_CASE("single-point price matches the library bit for bit") {
  const Run r = run("price --sigma 0.4 --x 0 --t 1 --strike 1");
  REQUIRE(r.code == 0);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 3);
  CHECK(ls[0].rfind("# config_hash=", 0) == 0);
  CHECK(ls[1] == "sigma,x,t,price");
  ModelParams p;
  CHECK(ls[2] == "0.4,0,1," + format_double(price_zero_volvol(p, 1.0, 1.0, 0.4, 0.0)));
  CHECK(run("price --sigma 0.9 --x 0").code == 2);
}

TEST_CASE("config layering: flags override the file") {
  const fs::path conf = write_file("k2.conf", "kappa = 2\nt = 0.5\n");
  const Run r = run("--config " + conf.string() + " price --sigma 0.3 --x 0.1 --t 2");
  REQUIRE(r.code == 0);
  ModelParams p;
  p.kappa = 2.0;
  CHECK(lines(r.out)[2] == "0.3,0.1,2," + format_double(price_zero_volvol(p, 2.0, 1.0, 0.3, 0.1)));
}

TEST_CASE("grid price output") {
  const Run r = run("price --grid 4x9 --out " + (scratch() / "grid.csv").string());
  REQUIRE(r.code == 0);
  CHECK(lines(slurp(scratch() / "grid.csv")).size() == 2 + 4 * 9);
}

TEST_CASE("kernel density") {
  const Run r = run("kernel --sigma 0.4 --x 0 --y 0 --t 1");
  REQUIRE(r.code == 0);
  ModelParams p;
  CHECK(lines(r.out)[2] == "0.4,0,0,1," + format_double(kernel_density(p, 1.0, 0.4, 0.0, 0.0)));
  CHECK(run("kernel --sigma 0.4 --x 0 --y 0 --t 0").code == 2);
}

TEST_CASE("fd-solve: L at nu = 0 reproduces L0, runs are deterministic") {
  const Run l = run("fd-solve --generator L --nu 0 --grid 12x21 --t 0.5");
  const Run l0 = run("fd-solve --generator L0 --grid 12x21 --t 0.5");
  REQUIRE(l.code == 0);
  REQUIRE(l0.code == 0);
  CHECK(drop_first_line(l.out) == drop_first_line(l0.out));
  CHECK(l.out.find("generator=L,") != std::string::npos);
  CHECK(run("fd-solve --generator L --nu 0 --grid 12x21 --t 0.5").out == l.out);

  std::istringstream is(l0.out);
  const auto [meta, field] = read_checkpoint(is);
  CHECK(meta.t == 0.5);
  CHECK(meta.generator == "L0");
  CHECK(field.n_sigma() == 12);
  CHECK(field.n_x() == 21);
  CHECK(run("fd-solve --generator L7").code == 2);
}

TEST_CASE("fd-solve report and self-difference") {
  const fs::path rep = scratch() / "fd.json";
  const Run r = run("fd-solve --generator L --nu 0.2 --grid 12x21 --t 0.5 --richardson --report " + rep.string());
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(rep));
  CHECK(j["generator"] == "L");
  CHECK(j["self_difference"].get<double>() >= 0.0);
  CHECK(j["self_difference"].get<double>() < 1e-3);
  CHECK(run("fd-solve --payoff call --grid 12x41 --t 0.25").code == 0);
}

TEST_CASE("verify suites and exit codes") {
  const Run g = run("verify --suite garding --grid 15x31 --out " + (scratch() / "g.json").string());
  CHECK(g.code == 0);
  const json j = json::parse(slurp(scratch() / "g.json"));
  CHECK(j["verdict"] == "pass");
  CHECK(j["environment"].contains("config_hash"));
  CHECK(run("verify --suite garding --nu 0 --grid 15x31").code == 2);
  CHECK(run("verify --suite nonsense").code == 2);
  // a grid far too coarse for the field identities fails them
  const Run coarse = run("verify --suite identities --grid 12x65");
  CHECK(coarse.code == 1);
  CHECK(json::parse(coarse.out)["verdict"] == "fail");
}

TEST_CASE("error study with a single nu has no slope") {
  const fs::path rep = scratch() / "study.json";
  const Run r = run("error-study --nu-list 0.2 --report " + rep.string());
  REQUIRE(r.code == 0);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 3);
  CHECK(ls[1] == "nu,error");
  const json j = json::parse(slurp(rep));
  CHECK(j["fitted_slope"].is_null());
  CHECK(j["message"] == "single nu value: no slope");
  CHECK(run("error-study --nu-list 0.2,0.1").code == 2);
  CHECK(run("error-study --payoff call").code == 2);
}
