#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "nvens/config.hpp"
#include "nvens/error.hpp"

using namespace nvens;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

RunConfig small_config(const fs::path& out) {
  RunConfig c;
  c.output_dir = out;
  c.grid = {5.0, 5.0, 40, 40};
  c.antenna.segments = 90;
  c.penalty.sensors = 2000;
  c.optics.slm_pixels = 64;
  c.optics.synthesis.iterations = 20;
  c.optics.synthesis.beam_waist_px = 16.0;
  c.optics.feedback.iterations = 3;
  c.optics.feedback.mraf_steps = 5;
  c.mc.shots = 2000;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nvens_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const RunConfig& c, const fs::path& path) {
  std::ofstream(path) << dump_config(c);
  return path;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NVENS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config round trip") {
    RunConfig c = small_config("x");
    c.seed = 99;
    c.protocol.protocol = protocols::Protocol::echo;
    c.db = ensemble::DbConvention::twenty_log;
    c.field_import = "map.csv";
    const std::string text = dump_config(c);
    const RunConfig back = parse_config(text);
    CHECK(dump_config(back) == text);
    CHECK(back.seed == 99);
    CHECK(back.grid.nx == 40);
    CHECK(back.protocol.protocol == protocols::Protocol::echo);
    CHECK(back.field_import.value() == "map.csv");
    CHECK(dump_config(parse_config(dump_config(RunConfig{}))) == dump_config(RunConfig{}));
  }

  TEST_CASE("strict keys") {
    json j = json::parse(dump_config(RunConfig{}));
    json missing = j;
    missing["antenna"].erase("segments");
    CHECK(config_error(missing.dump()).find("'antenna.segments'") != std::string::npos);
    json unknown = j;
    unknown["holography"]["feedback"]["gian"] = 0.5;
    CHECK(config_error(unknown.dump()).find("'holography.feedback.gian'") != std::string::npos);
    json top = j;
    top.erase("seed");
    CHECK(config_error(top.dump()).find("'seed'") != std::string::npos);
    json wrong = j;
    wrong["grid"]["nx"] = "many";
    CHECK(config_error(wrong.dump()).find("'grid.nx'") != std::string::npos);
    json bad = j;
    bad["mc"]["shots"] = 10;
    CHECK_FALSE(config_error(bad.dump()).empty());
    json proto = j;
    proto["protocol"] = "rabi";
    CHECK_FALSE(config_error(proto.dump()).empty());
    CHECK_FALSE(config_error("{not json").empty());
  }

  TEST_CASE("exit codes") {
    const fs::path dir = scratch("codes");
    const fs::path cfg = write_config(small_config(dir / "out"), dir / "ok.json");
    CHECK(run_cli("dump-config --config " + cfg.string()) == 0);
    CHECK(run_cli("") == 1);
    CHECK(run_cli("frobnicate") == 1);
    CHECK(run_cli("fieldmap --protocol rabi") == 1);
    CHECK(run_cli("fieldmap --config " + (dir / "absent.json").string()) == 1);
    std::ofstream(dir / "typo.json") << "{\"seed\": 1}";
    CHECK(run_cli("optimize --config " + (dir / "typo.json").string()) == 1);
    std::ofstream(dir / "bad_map.csv") << "# grid nx=2 ny=2 width_mm=1 height_mm=1 unit=rabi\n1,2\n3\n";
    CHECK(run_cli("fieldmap --config " + cfg.string() + " --import " + (dir / "bad_map.csv").string()) == 1);
    // A valid map on which no pixel meets the uniformity targets is a runtime failure.
    std::ofstream(dir / "zero_map.csv") << "# grid nx=2 ny=2 width_mm=1 height_mm=1 unit=rabi\n0,0\n0,0\n";
    CHECK(run_cli("fieldmap --config " + cfg.string() + " --import " + (dir / "zero_map.csv").string()) == 2);
    fs::remove_all(dir);
  }

  TEST_CASE("run-all is deterministic and import reproduces the analytic map") {
    const fs::path dir = scratch("runs");
    const fs::path cfg_a = write_config(small_config(dir / "a"), dir / "a.json");
    const fs::path cfg_b = write_config(small_config(dir / "b"), dir / "b.json");
    REQUIRE(run_cli("run-all --config " + cfg_a.string()) == 0);
    REQUIRE(run_cli("run-all --config " + cfg_b.string()) == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
      const fs::path other = dir / "b" / e.path().filename();
      REQUIRE(fs::exists(other));
      CHECK_MESSAGE(slurp(e.path()) == slurp(other), e.path().filename().string());
      ++files;
    }
    CHECK(files >= 15);
    // Rerunning into the same directory rewrites identical outputs.
    const std::string gains = slurp(dir / "a" / "gains_report.txt");
    REQUIRE(run_cli("optimize --config " + cfg_a.string()) == 0);
    CHECK(slurp(dir / "a" / "gains_report.txt") == gains);

    REQUIRE(run_cli("optimize --config " + cfg_a.string() + " --out " + (dir / "imp").string() + " --import " +
                    (dir / "a" / "omega_map.csv").string()) == 0);
    CHECK(slurp(dir / "imp" / "gains_report.txt") == gains);

    REQUIRE(run_cli("optimize --config " + cfg_a.string() + " --out " + (dir / "echo").string() + " --protocol echo") == 0);
    REQUIRE(run_cli("optimize --config " + cfg_a.string() + " --out " + (dir / "cw").string() + " --protocol cw") == 0);
    CHECK(slurp(dir / "echo" / "gains_report.txt").find("protocol: echo") != std::string::npos);
    CHECK(slurp(dir / "cw" / "gains_report.txt").find("protocol: cw") != std::string::npos);
    CHECK(slurp(dir / "a" / "gains_report.txt").find("eta_th_over_min") != std::string::npos);
    CHECK(slurp(dir / "echo" / "sensitivity_map.csv") != slurp(dir / "a" / "sensitivity_map.csv"));
    fs::remove_all(dir);
  }
}
