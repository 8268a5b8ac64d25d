#include <filesystem>
#include <fstream>
#include <sstream>

#include "app.hpp"
#include "cubiclab/output.hpp"
#include "doctest.h"

using namespace cubiclab;
using namespace cubiclab::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("cubiclab_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> data_lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

int cli(std::vector<std::string> args) {
  std::vector<char*> argv{const_cast<char*>("cubiclab")};
  for (auto& a : args) argv.push_back(a.data());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

json config(const std::string& command, const json& overrides = json::object()) {
  json c = default_config(command);
  for (auto& [k, v] : overrides.items()) c[k] = v;
  return c;
}

}  // namespace

TEST_CASE("complex literals") {
  CHECK(parse_complex("0.3+0.1i") == std::complex<double>(0.3, 0.1));
  CHECK(parse_complex("i") == std::complex<double>(0, 1));
  CHECK(parse_complex("-i") == std::complex<double>(0, -1));
  CHECK(parse_complex("-0.8+0.2i") == std::complex<double>(-0.8, 0.2));
  CHECK(parse_complex("2") == std::complex<double>(2, 0));
  CHECK(parse_complex("1e-3-2.5i") == std::complex<double>(1e-3, -2.5));
  CHECK(parse_complex("-2e+1i") == std::complex<double>(0, -20));
  CHECK_THROWS(parse_complex("1+"));
  CHECK_THROWS(parse_complex("abc"));
}

TEST_CASE("convergents command writes the Fibonacci table") {
  auto out = scratch("conv");
  CHECK(cli({"convergents", "--cf", "[0;1,1,...]", "--n", "10", "--out", out.string()}) == kExitOk);
  auto rows = data_lines(out / "convergents.csv");
  REQUIRE(rows.size() == 12);
  CHECK(rows[0] == "n,a_n,p_n,q_n");
  CHECK(rows[11] == "10,1,55,89");
  std::int64_t f0 = 1, f1 = 1;
  for (std::size_t i = 2; i < rows.size(); ++i) {
    CHECK(rows[i].substr(rows[i].rfind(',') + 1) == std::to_string(f1));
    std::tie(f0, f1) = std::pair(f1, f0 + f1);
  }
}

TEST_CASE("exit statuses") {
  auto out = scratch("exit");
  std::ostringstream log;
  CHECK(run(config("radius", {{"precision", 32}}), out, log) == kExitValidation);
  CHECK(run(config("radius", {{"bogus", 1}}), out, log) == kExitValidation);
  CHECK(run(config("classify", {{"resolution", 1}}), out, log) == kExitValidation);
  CHECK(run(config("convergents", {{"cf", "[0;1,0]"}}), out, log) == kExitValidation);
  CHECK(run(config("radius", {{"lambda", "stage:x"}}), out, log) == kExitValidation);
  CHECK(cli({"jellouli", "--m", "abc", "--out", out.string()}) == kExitValidation);
  CHECK(cli({"no-such-command"}) == kExitValidation);

  log.str("");
  CHECK(run(config("bn-scaling", {{"a", {0.0, 1.0}}, {"nmax", 4}}), out, log) == kExitDomain);
  CHECK(log.str().find("parabolic") != std::string::npos);
  auto rows = data_lines(out / "bn_scaling.csv");
  CHECK(rows.back().find("2,2,refused") == 0);

  // Rational multiplier: the linearizer meets a zero divisor.
  CHECK(run(config("radius", {{"lambda", "stage:3"}, {"K", 64}}), out, log) == kExitDomain);

  // --assert turns a failed check into 4, and only a failed one.
  CHECK(run(config("bn-scaling", {{"a", {0.3, 0.1}}, {"nmax", 6}, {"assert", true}}), out, log) == kExitAssert);
  CHECK(run(config("bn-scaling", {{"a", {0.3, 0.1}}, {"nmax", 6}}), out, log) == kExitOk);
  CHECK(run(config("jellouli", {{"nmax", 6}, {"assert", true}}), out, log) == kExitOk);
}

TEST_CASE("config files and environment") {
  auto out = scratch("cfg");
  fs::create_directories(out);
  {
    std::ofstream f(out / "c.json");
    f << R"({"command": "bn-scaling", "a": "0.3+0.1i", "nmax": 3, "K": 256})";
  }
  CHECK(cli({"bn-scaling", "--config", (out / "c.json").string(), "--nmax", "4", "--out", out.string()}) == kExitOk);
  auto c = json::parse(read_config_header(out / "bn_scaling.csv"));
  CHECK(c["nmax"] == 4);
  CHECK(c["K"] == 256);
  CHECK(c["a"][0] == 0.3);
  CHECK(data_lines(out / "bn_scaling.csv").size() == 5);

  {
    std::ofstream f(out / "bad.json");
    f << R"({"command": "bn-scaling", "colour": 3})";
  }
  CHECK(cli({"bn-scaling", "--config", (out / "bad.json").string(), "--out", out.string()}) == kExitValidation);

  setenv("CUBICLAB_PRECISION", "256", 1);
  CHECK(default_config("radius")["precision"] == 256);
  unsetenv("CUBICLAB_PRECISION");
  CHECK(default_config("radius")["precision"] == 192);
}

TEST_CASE("outputs rerun byte-identically from their header") {
  const std::vector<std::pair<json, std::vector<std::string>>> runs = {
      {config("classify", {{"resolution", 6}, {"half_width", 0.1}}), {"classify.csv", "classify.pgm"}},
      {config("lyapunov-map", {{"resolution", 5}}), {"lyapunov.csv", "lyapunov.pgm"}},
      {config("current-density", {{"resolution", 6}}), {"density.csv"}},
      {config("fixed-points", {{"nmax", 5}}), {"fixed_points.csv"}},
      {config("jellouli", {{"nmax", 5}, {"seed", 7}}), {"jellouli.csv"}},
      {config("winding", {{"nmin", 4}, {"nmax", 5}}), {"winding.csv", "winding_samples.csv"}},
      {config("radius", {{"a", {0.3, 0.1}}, {"K", 128}}), {"radius.csv"}},
      {config("brjuno"), {"brjuno.csv"}},
      {config("noble-radius", {{"nmin", 9}, {"nmax", 10}, {"K", 256}}), {"noble_radius.csv"}},
  };
  for (const auto& [cfg, files] : runs) {
    CAPTURE(cfg.dump());
    auto a = scratch("first"), b = scratch("second");
    std::ostringstream log;
    REQUIRE(run(cfg, a, log, 2) == kExitOk);
    for (const auto& f : files) {
      REQUIRE(rerun(a / f, b, log, 1) == kExitOk);
      for (const auto& g : files) CHECK(slurp(a / g) == slurp(b / g));
      fs::remove_all(b);
    }
  }
}
