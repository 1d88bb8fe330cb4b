#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "alea/cli.hpp"
#include "alea/sim.hpp"

using namespace alea;
namespace fs = std::filesystem;

namespace {

const fs::path kGolden = fs::path(ALEA_SOURCE_DIR) / "tests" / "golden";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("alea_cli_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
  fs::path put(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

// Exit status of the real binary, stdout and stderr discarded.
int spawn(const std::string& args) {
  const std::string cmd = std::string(ALEA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("golden trace replays to the frozen reports byte for byte") {
  TempDir tmp;
  const auto trace = (kGolden / "run.trace").string();
  const auto map = (kGolden / "sim.map").string();

  auto json = run({"replay", trace, "--blockmap", map, "-o", (tmp / "r.json").string()});
  REQUIRE(json.code == cli::ok);
  CHECK(slurp(tmp / "r.json") == slurp(kGolden / "report.json"));

  auto text = run({"replay", trace, "--blockmap", map, "--format", "text"});
  CHECK(text.out == slurp(kGolden / "report.txt"));

  auto csv = run({"replay", trace, "--blockmap", map, "--granularity", "block", "-o", (tmp / "r.csv").string()});
  REQUIRE(csv.code == cli::ok);
  CHECK(slurp(tmp / "r.csv") == slurp(kGolden / "report_block.csv"));

  // Same bytes from a separate process.
  REQUIRE(spawn("replay " + trace + " --blockmap " + map + " -o " + (tmp / "p.json").string()) == 0);
  CHECK(slurp(tmp / "p.json") == slurp(kGolden / "report.json"));
}

TEST_CASE("golden trace agrees with the in-memory pipeline") {
  auto trace = read_trace(kGolden / "run.trace");
  auto maps = load_blockmaps(kGolden / "sim.map");
  auto report = cli::report_from_trace(trace, maps, {});
  CHECK(render_json(report) == slurp(kGolden / "report.json"));
  CHECK(report.total_p() == doctest::Approx(1.0));
  CHECK(report.n == trace.samples.size());
}

TEST_CASE("simulated runs replay to the same estimates") {
  TempDir tmp;
  auto scenario = tmp.put("s.json", R"({"seed": 5, "blocks": [
      {"label": "a", "latency": {"dist": "uniform", "min": 100, "max": 900}, "power": 8, "iterations": 4000},
      {"label": "b", "latency": 20000, "power": {"dist": "gaussian", "mean": 12, "sd": 1}, "iterations": 50}]})");
  auto r = run({"simulate", scenario.string(), "--replications", "2", "--export-trace", (tmp / "t.trace").string(),
                "--export-blockmap", (tmp / "t.map").string()});
  REQUIRE(r.code == cli::ok);
  auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["replications"] == 2);

  auto sc = sim::load_scenario(scenario);
  auto rep = sim::run_replication(sc, 0);
  auto rj = run({"replay", (tmp / "t.trace").string(), "--blockmap", (tmp / "t.map").string(), "--format", "json"});
  REQUIRE(rj.code == cli::ok);
  auto j = nlohmann::json::parse(rj.out);
  for (const auto& row : j["blocks"]) {
    const auto label = row["label"].get<std::string>();
    const std::uint32_t id = label == "a" ? 0 : 1;
    const auto* e = rep.profile.find(CombinationKey::single({0, id}));
    REQUIRE(e);
    CHECK(row["samples"] == e->n_k);
    CHECK(row["energy_j"].get<double>() == doctest::Approx(e->e_hat).epsilon(1e-12));
  }
}

TEST_CASE("exit codes") {
  TempDir tmp;
  const auto trace = (kGolden / "run.trace").string();
  const auto map = (kGolden / "sim.map").string();

  CHECK(run({}).code == cli::usage);
  CHECK(run({"frobnicate"}).code == cli::usage);
  CHECK(run({"replay"}).code == cli::usage);
  CHECK(run({"replay", trace, "--alpha", "1.5"}).code == cli::usage);
  CHECK(run({"replay", trace, "--granularity", "loop"}).code == cli::usage);
  CHECK(run({"replay", trace, "--format", "xml"}).code == cli::usage);
  CHECK(run({"profile"}).code == cli::usage);
  CHECK(run({"profile", "--pid", "1", "--", "true"}).code == cli::usage);
  CHECK(run({"profile", "--period-ms", "0", "--", "true"}).code == cli::usage);
  CHECK(run({"profile", "--jitter", "0.5", "--", "true"}).code == cli::usage);
  CHECK(run({"--help"}).code == cli::ok);

  CHECK(run({"replay", (tmp / "missing.trace").string()}).code == cli::malformed_input);
  CHECK(run({"replay", tmp.put("empty.trace", "").string()}).code == cli::malformed_input);
  CHECK(run({"replay", tmp.put("bad.trace", "0,1,1:zz,PKG=1\n").string()}).code == cli::malformed_input);
  CHECK(run({"simulate", tmp.put("bad.json", "{").string()}).code == cli::malformed_input);
  CHECK(run({"simulate", (tmp / "missing.json").string()}).code == cli::malformed_input);

  CHECK(run({"replay", trace, "--blockmap", (tmp / "missing.map").string()}).code == cli::blockmap_failed);
  CHECK(run({"replay", trace, "--blockmap", tmp.put("o.map", "p\t0x10\t0x30\ta\np\t0x20\t0x40\tb\n").string()}).code ==
        cli::blockmap_failed);
  CHECK(run({"symbols", (tmp / "missing.elf").string()}).code == cli::blockmap_failed);

  CHECK(run({"profile", "--power-source", "powercap:PKG=" + (tmp / "nodir").string(), "--", "true"}).code ==
        cli::sensor_failed);
  CHECK(run({"profile", "--power-source", "meter:PKG=" + (tmp / "nofile").string(), "--", "true"}).code ==
        cli::sensor_failed);

  CHECK(run({"profile", "--", (tmp / "no-such-program").string()}).code == cli::attach_failed);
  CHECK(run({"profile", "--pid", "999999999"}).code == cli::attach_failed);

  CHECK(run({"replay", trace, "--blockmap", map, "-o", (tmp / "no" / "such" / "dir.json").string()}).code ==
        cli::output_failed);
  CHECK(run({"simulate", (kGolden / "scenario.json").string(), "--export-trace", (tmp / "no" / "x").string()}).code ==
        cli::output_failed);

  // Through the real binary as well.
  CHECK(spawn("") == cli::usage);
  CHECK(spawn("replay " + (tmp / "empty.trace").string()) == cli::malformed_input);
  CHECK(spawn("replay " + trace + " --blockmap " + (tmp / "missing.map").string()) == cli::blockmap_failed);
  CHECK(spawn("replay " + trace + " --blockmap " + map + " --format text") == cli::ok);
}

TEST_CASE("errors are reported on stderr") {
  auto r = run({"replay", "/nonexistent/trace"});
  CHECK(r.out.empty());
  CHECK(r.err.find("/nonexistent/trace") != std::string::npos);
}

TEST_CASE("format follows the output extension unless given") {
  TempDir tmp;
  const auto trace = (kGolden / "run.trace").string();
  const auto map = (kGolden / "sim.map").string();
  REQUIRE(run({"replay", trace, "--blockmap", map, "-o", (tmp / "a.csv").string()}).code == 0);
  CHECK(slurp(tmp / "a.csv").starts_with("label,key,"));
  REQUIRE(run({"replay", trace, "--blockmap", map, "-o", (tmp / "a.txt").string()}).code == 0);
  CHECK(slurp(tmp / "a.txt").starts_with("execution time"));
  REQUIRE(run({"replay", trace, "--blockmap", map, "-o", (tmp / "a.out").string()}).code == 0);
  CHECK(slurp(tmp / "a.out").starts_with("{"));
  REQUIRE(run({"replay", trace, "--blockmap", map, "--format", "json", "-o", (tmp / "b.csv").string()}).code == 0);
  CHECK(slurp(tmp / "b.csv").starts_with("{"));
  CHECK(run({"replay", trace, "--blockmap", map}).out.starts_with("execution time"));
  auto hidden = run({"replay", trace, "--blockmap", map, "--format", "text", "--min-samples", "10"});
  CHECK(hidden.out.find("samples hidden") != std::string::npos);
}

TEST_CASE("settings are echoed and change the numbers") {
  const auto trace = (kGolden / "run.trace").string();
  const auto map = (kGolden / "sim.map").string();
  auto narrow = nlohmann::json::parse(run({"replay", trace, "--blockmap", map, "--format", "json", "--alpha", "0.5"}).out);
  auto wide = nlohmann::json::parse(run({"replay", trace, "--blockmap", map, "--format", "json", "--alpha", "0.01"}).out);
  CHECK(narrow["settings"]["alpha"] == 0.5);
  const auto w = [](const nlohmann::json& j) {
    return j["blocks"][0]["proportion_ci"][1].get<double>() - j["blocks"][0]["proportion_ci"][0].get<double>();
  };
  CHECK(w(narrow) < w(wide));
  auto dom = run({"replay", trace, "--blockmap", map, "--format", "json", "--domain", "DRAM"});
  CHECK(dom.code == cli::ok);
  CHECK(nlohmann::json::parse(dom.out)["run"]["power_domain"] == "DRAM");
}

TEST_CASE("replay without a block map labels everything unknown") {
  auto r = run({"replay", (kGolden / "run.trace").string(), "--format", "json"});
  REQUIRE(r.code == cli::ok);
  auto j = nlohmann::json::parse(r.out);
  for (const auto& row : j["blocks"]) CHECK(row["unknown"] == true);
}

TEST_CASE("symbols writes a function map of an ELF file") {
  TempDir tmp;
  auto r = run({"symbols", ALEA_SPIN_PATH, "-o", (tmp / "spin.map").string()});
  REQUIRE(r.code == cli::ok);
  auto maps = load_blockmaps(tmp / "spin.map");
  REQUIRE(maps.size() == 1);
  bool found = false;
  for (const auto& d : maps[0].descriptors()) found = found || d.label == "alea_spin_loop";
  CHECK(found);
  auto j = run({"symbols", ALEA_SPIN_PATH, "--format", "json"});
  REQUIRE(j.code == cli::ok);
  CHECK(nlohmann::json::parse(j.out)["format"] == "alea-blockmap");
}
