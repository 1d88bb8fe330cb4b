#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "alea/error.hpp"
#include "alea/report.hpp"

using namespace alea;

namespace {

const PowerDomain kPkg(PowerDomain::Kind::pkg);

BlockMap test_map() {
  return BlockMap("prog", {{"prog", {0x100, 0x200}, "hot.c:12", MapGranularity::block},
                           {"prog", {0x200, 0x300}, "cold.c:40", MapGranularity::block},
                           {"prog", {0x300, 0x400}, "never, \"quoted\"", MapGranularity::block}});
}

SampleRecord rec(std::uint64_t seq, std::vector<BlockKey> keys, double watts) {
  const std::int64_t t = static_cast<std::int64_t>(seq) * 10'000'000;
  return {seq, t, CombinationKey(std::move(keys)), {t, {{kPkg, watts}}}};
}

// 60 samples in hot at 10 W, 30 in cold at 20 W, 10 unknown at 5 W.
Report sample_report(Granularity g = Granularity::block, std::uint64_t extra_unknown = 10) {
  Symbolizer sym({test_map()});
  std::vector<SampleRecord> rs;
  std::uint64_t seq = 0;
  for (int i = 0; i < 60; ++i) rs.push_back(rec(seq++, {{0, 0}}, 10.0));
  for (int i = 0; i < 30; ++i) rs.push_back(rec(seq++, {{0, 1}}, 20.0 + (i % 2)));
  for (std::uint64_t i = 0; i < extra_unknown; ++i) rs.push_back(rec(seq++, {BlockKey::unknown()}, 5.0));
  ProfileOptions opt;
  opt.granularity = g;
  opt.known_blocks = sym.known_blocks();
  auto profile = build_profile(rs, 1.0, opt);
  TraceMeta meta;
  meta.period_ns = 10'000'000;
  meta.jitter = 0.05;
  meta.power_source = "mock:PKG=10";
  meta.outcome = TargetOutcome::exited;
  meta.stop_ns = 10'000'000;
  ReportSettings settings;
  settings.granularity = g;
  return make_report(profile, sym, meta, true, settings);
}

}  // namespace

TEST_CASE("rows are ordered by energy") {
  auto r = sample_report();
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].label == "cold.c:40");  // 0.3 * 20.5 W beats 0.6 * 10 W
  CHECK(r.rows[1].label == "hot.c:12");
  CHECK(r.rows[2].label == "[unknown]");
  CHECK(r.rows[2].unknown);
  CHECK(r.rows[0].key == std::vector<std::string>{"0:1"});
  CHECK(r.rows[2].key == std::vector<std::string>{"unknown"});
  CHECK(r.rows[1].edp == doctest::Approx(r.rows[1].estimate.e_hat * r.rows[1].estimate.t_hat));
  CHECK(r.rows[1].ed2p == doctest::Approx(r.rows[1].edp * r.rows[1].estimate.t_hat));
  REQUIRE(r.unsampled.size() == 1);
  CHECK(r.unsampled[0].label == "never, \"quoted\"");
  CHECK(r.total_p() == doctest::Approx(1.0));
  CHECK(r.total_t() == doctest::Approx(1.0));
}

TEST_CASE("ties in energy fall back to sample count") {
  Symbolizer sym({test_map()});
  std::vector<SampleRecord> rs;
  for (std::uint64_t i = 0; i < 4; ++i) rs.push_back(rec(i, {{0, 0}}, 0.0));
  for (std::uint64_t i = 4; i < 10; ++i) rs.push_back(rec(i, {{0, 1}}, 0.0));
  auto r = make_report(build_profile(rs, 1.0), sym, {}, true, {});
  CHECK(r.rows[0].label == "cold.c:40");
}

TEST_CASE("json rendering") {
  auto r = sample_report();
  auto j = nlohmann::json::parse(render_json(r));
  CHECK(j["format_version"] == 1);
  CHECK(j["settings"]["granularity"] == "block");
  CHECK(j["run"]["samples"] == 100);
  CHECK(j["run"]["power_domain"] == "PKG");
  CHECK(j["run"]["power_attribution"] == "per-key");
  CHECK(j["run"]["overhead"]["fraction"].get<double>() == doctest::Approx(0.01));
  REQUIRE(j["blocks"].size() == 3);
  CHECK(j["blocks"][1]["label"] == "hot.c:12");
  CHECK(j["blocks"][1]["samples"] == 60);
  CHECK(j["blocks"][1]["proportion"].get<double>() == doctest::Approx(0.6));
  CHECK(j["blocks"][1]["power_w"].get<double>() == doctest::Approx(10.0));
  CHECK(j["blocks"][1]["energy_ci"].size() == 2);
  CHECK(j["unsampled"][0]["key"] == "0:2");
  CHECK(j["totals"]["domains"][0]["domain"] == "PKG");
  CHECK(render_json(r) == render_json(r));
}

TEST_CASE("csv rendering") {
  auto r = sample_report();
  const auto csv = render_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0].starts_with("label,key,samples,proportion,"));
  CHECK(lines[2].starts_with("hot.c:12,0:0,60,0.6,"));
  CHECK(lines[4].starts_with("\"never, \"\"quoted\"\"\",0:2,0,"));
  for (std::size_t i = 1; i < 4; ++i) {
    std::size_t commas = 0;
    for (char c : lines[i]) commas += c == ',';
    CHECK(commas == 19);
  }
}

TEST_CASE("text rendering and the minimum sample filter") {
  auto r = sample_report();
  const auto all = render_text(r);
  CHECK(all.find("hot.c:12") != std::string::npos);
  CHECK(all.find("[unknown]") != std::string::npos);
  CHECK(all.find("never sampled: never, \"quoted\"") != std::string::npos);
  const auto filtered = render_text(r, 20);
  CHECK(filtered.find("[unknown]") == std::string::npos);
  CHECK(filtered.find("1 rows with fewer than 20 samples hidden") != std::string::npos);
  CHECK(render(r, ReportFormat::text, 20) == filtered);
}

TEST_CASE("a single unknown row is still a report") {
  Symbolizer sym;
  std::vector<SampleRecord> rs;
  for (std::uint64_t i = 0; i < 10; ++i) rs.push_back(rec(i, {BlockKey::unknown()}, 3.0));
  auto r = make_report(build_profile(rs, 0.1), sym, {}, false, {});
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].unknown);
  CHECK(r.rows[0].estimate.p_hat == 1.0);
  CHECK(render_text(r).find("(reconstructed)") != std::string::npos);
  CHECK(nlohmann::json::parse(render_json(r))["run"]["t_exec_measured"] == false);
}

TEST_CASE("block granularity with several threads is labeled as shared attribution") {
  Symbolizer sym({test_map()});
  std::vector<SampleRecord> rs;
  for (std::uint64_t i = 0; i < 20; ++i) rs.push_back(rec(i, {{0, 0}, {0, i % 2}}, 10.0));
  ProfileOptions opt;
  opt.granularity = Granularity::block;
  ReportSettings settings;
  settings.granularity = Granularity::block;
  auto r = make_report(build_profile(rs, 1.0, opt), sym, {}, true, settings);
  CHECK(nlohmann::json::parse(render_json(r))["run"]["power_attribution"] == "shared-resource attribution");
  CHECK(render_text(r).find("shared-resource attribution") != std::string::npos);
  CHECK(r.total_p() > 1.0);

  auto c = make_report(build_profile(rs, 1.0), sym, {}, true, {});
  CHECK(c.rows[0].key.size() == 2);
  CHECK(c.rows[0].label.find(" | ") != std::string::npos);
}

TEST_CASE("formats") {
  CHECK(parse_report_format("json") == ReportFormat::json);
  CHECK(parse_report_format("csv") == ReportFormat::csv);
  CHECK(parse_report_format("text") == ReportFormat::text);
  CHECK_THROWS_AS(parse_report_format("xml"), Error);
  CHECK(std::string(to_string(Granularity::combination)) == "combination");
}
