#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cogen/cli.hpp"
#include "cogen/field_io.hpp"
#include "json.hpp"

using namespace cogen;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir = fs::temp_directory_path() / "cogen_cli_test";
  fs::path scene = dir / "scene.json";

  Workspace() {
    fs::remove_all(dir);
    fs::create_directories(dir);
    nlohmann::json j = nlohmann::json::parse(R"({
      "name": "cli",
      "dimension": 2,
      "domains": [
        {"origin": [-0.95, -0.5], "spacing": 0.05, "dims": [20, 20]},
        {"origin": [-0.05, -0.5], "spacing": 0.05, "dims": [20, 20]}
      ],
      "shapes": [
        {"box": {"min": [-0.95, -0.5], "max": [0.05, 0.5]}},
        {"box": {"min": [-0.05, -0.5], "max": [0.95, 0.5]}}
      ],
      "motion": {"builtin": "counter_rotation", "params": {"L": 1, "spacing": 0.9}},
      "timesteps": 40,
      "gammas": [0.5]
    })");
    j["output_dir"] = (dir / "out").string();
    j["cache"] = (dir / "cache" / "cli").string();
    std::ofstream(scene) << j.dump(2);
  }
  ~Workspace() { fs::remove_all(dir); }

  int run(std::vector<std::string> args) const {
    args.insert(args.begin(), "cogen");
    return run_command(args);
  }
};

std::string first_line(const fs::path& p) {
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  return line;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream is(p);
  std::size_t n = 0;
  for (std::string line; std::getline(is, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("optimize writes fields and the convergence log") {
  Workspace w;
  CHECK(w.run({"precompute", "--scene", w.scene.string()}) == kExitOk);
  CHECK(fs::exists(w.dir / "cache" / "cli.w12.cogw"));
  CHECK(fs::exists(w.dir / "cache" / "cli.w21.cogw"));

  CHECK(w.run({"optimize", "--scene", w.scene.string(), "--gamma", "0.5"}) == kExitOk);
  const auto out = w.dir / "out";
  CHECK(fs::exists(out / "rho1.bin"));
  CHECK(fs::exists(out / "rho2.bin"));
  CHECK(first_line(out / "convergence.csv") == "iter,v1,v2,g21,g12,h,delta");
  CHECK(line_count(out / "convergence.csv") >= 2);
  CHECK(read_raw_field(out / "rho1.bin").size() == 400);

  CHECK(w.run({"metrics", "--scene", w.scene.string()}) == kExitOk);
  CHECK(first_line(out / "distance.csv") == "k,t_k,distance");
  CHECK(line_count(out / "distance.csv") == 41);

  CHECK(w.run({"export", "--input", (out / "solid1.bin").string(), "--output", (out / "solid1.pgm").string()}) ==
        kExitOk);
  CHECK(fs::exists(out / "solid1.pgm"));
  CHECK(w.run({"export", "--input", (out / "solid1.bin").string(), "--output", (out / "s.vtk").string()}) ==
        kExitInvalid);
}

TEST_CASE("gamma sweep, one-way operations and the oracle") {
  Workspace w;
  CHECK(w.run({"gamma-sweep", "--scene", w.scene.string(), "--gammas", "0:1:0.5"}) == kExitOk);
  const auto table = w.dir / "out" / "gamma_sweep.csv";
  CHECK(first_line(table) == "gamma,v1,v2,sum");
  CHECK(line_count(table) == 4);

  CHECK(w.run({"unsweep", "--scene", w.scene.string(), "--target", "2"}) == kExitOk);
  CHECK(w.run({"sweep", "--scene", w.scene.string(), "--target", "2"}) == kExitOk);
  const auto u = read_raw_field(w.dir / "out" / "unsweep2.bin");
  const auto s = read_raw_field(w.dir / "out" / "sweep2.bin");
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] + s[i] == 1.0);

  CHECK(w.run({"oracle-check", "--scene", w.scene.string()}) == kExitOk);
  CHECK(w.run({"oracle-check", "--scene", w.scene.string(), "--tolerance", "0"}) == kExitOracleMismatch);
}

TEST_CASE("invalid input exits with 2") {
  Workspace w;
  CHECK(w.run({"optimize", "--scene", w.scene.string(), "--gamma", "1.5"}) == kExitInvalid);
  CHECK(w.run({"optimize", "--scene", (w.dir / "missing.json").string()}) == kExitInvalid);
  CHECK(w.run({"frobnicate"}) == kExitInvalid);
  CHECK(w.run({}) == kExitInvalid);
  CHECK(w.run({"gamma-sweep", "--scene", w.scene.string(), "--gammas", "0:2:0.5"}) == kExitInvalid);
  CHECK(w.run({"unsweep", "--scene", w.scene.string(), "--target", "3"}) == kExitInvalid);
  CHECK(w.run({"metrics", "--scene", w.scene.string()}) == kExitInvalid);  // no saved fields yet
  {
    std::ofstream(w.dir / "broken.json") << "{\"dimension\": 2, \"colour\": 1}";
  }
  CHECK(w.run({"optimize", "--scene", (w.dir / "broken.json").string()}) == kExitInvalid);
  CHECK(w.run({"--help"}) == kExitOk);
}
