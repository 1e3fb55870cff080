#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "hypergauss/report.hpp"

using namespace hypergauss;

namespace {

const std::string kSource = HYPERGAUSS_SOURCE_DIR;

struct Outcome {
  int code = -1;
  std::string out, err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI from the source tree so sample paths resolve.
Outcome cli(const std::string& args, const std::string& env = "") {
  const std::string err = ::testing::TempDir() + "hg_cli_stderr.txt";
  const std::string cmd = "cd '" + kSource + "' && " + env + " '" + HYPERGAUSS_CLI + "' " + args + " 2>'" + err + "'";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return o;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) o.out.append(buf, n);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.err = slurp(err);
  return o;
}

json payload(const std::string& out) {
  json j = json::parse(out);
  j.erase("timing");
  return j;
}

json shape(const json& v, const std::string& key = "") {
  if (key == "details" || key == "metrics" || key == "values" || key == "skipped" || key == "timing") return "object";
  if (v.is_boolean()) return "boolean";
  if (v.is_number()) return "number";
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    return s == "inf" || s == "-inf" || s == "nan" ? "number" : "string";
  }
  if (v.is_array()) return v.empty() ? json::array() : json::array({shape(v[0])});
  json o = json::object();
  for (const auto& [k, x] : v.items()) o[k] = shape(x, k);
  return o;
}

json golden(const std::string& name) { return json::parse(slurp(kSource + "/tests/golden/" + name + ".shape.json")); }

}  // namespace

TEST(Digest, FnvReferenceVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
  EXPECT_EQ(hex64(0xaf63dc4c8601ec8cull), "af63dc4c8601ec8c");
}

TEST(Digest, KeyOrderAndWhitespaceDoNotMatter) {
  const json a = canonical_config(parse_config_text(R"({"command":"constants","params":{"p":2,"q":3}})"), {});
  const json b = canonical_config(parse_config_text("{ \"params\": {\"q\": 3, \"p\": 2},\n \"command\": \"constants\" }"), {});
  EXPECT_EQ(config_digest(a), config_digest(b));
  const json c = canonical_config(parse_config_text(R"({"command":"constants","params":{"p":2,"q":4}})"), {});
  EXPECT_NE(config_digest(a), config_digest(c));
}

TEST(Digest, OverridesEnterTheDigest) {
  const json base = parse_config_text(R"({"command":"constants","params":{"p":2,"q":3}})");
  Overrides o;
  o.samples = 10;
  const json a = canonical_config(base, {}), b = canonical_config(base, o);
  EXPECT_EQ(b["budget"]["samples"], 10);
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(run(b)["config_digest"], config_digest(b));
}

TEST(Seeds, PrecedenceIsFlagThenConfigThenEnvironment) {
  Overrides env;
  env.env_seed = 5;
  EXPECT_EQ(canonical_config(parse_config_text(R"({"command":"constants"})"), {})["seed"], 1);
  EXPECT_EQ(canonical_config(parse_config_text(R"({"command":"constants"})"), env)["seed"], 5);
  EXPECT_EQ(canonical_config(parse_config_text(R"({"command":"constants","seed":9})"), env)["seed"], 9);
  env.seed = 11;
  EXPECT_EQ(canonical_config(parse_config_text(R"({"command":"constants","seed":9})"), env)["seed"], 11);
}

TEST(Cli, ConstantsPrintBecknerBabenko) {
  const Outcome o = cli("constants --p 1.5 --q 3 --n 1");
  ASSERT_EQ(o.code, 0) << o.err;
  const double want = std::pow(1.5, 1.0 / 3.0) / std::pow(3.0, 1.0 / 6.0) * std::pow(2.0 * M_PI, 1.0 / 6.0 - 1.0 / 3.0);
  const double got = json::parse(o.out)["records"][0]["values"]["beckner_babenko"].get<double>();
  EXPECT_NEAR(got, want, 1e-15);
  EXPECT_NEAR(got, 0.7016926042943222, 1e-15);
}

TEST(Cli, ExitCodeZeroWhenAllHold) {
  const Outcome o = cli("check-local --config samples/check_local_complex.json");
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(json::parse(o.out)["summary"]["verdict"], "holds");
}

TEST(Cli, ExitCodeOneOnViolation) {
  const Outcome o = cli("verify-global --config samples/witness.json");
  EXPECT_EQ(o.code, 1) << o.err;
  const json r = json::parse(o.out)["records"][0];
  EXPECT_TRUE(r["certified"].get<bool>());
  EXPECT_LT(r["local"]["margin"].get<double>(), 0.0);
}

TEST(Cli, ExitCodeTwoWhenInconclusive) {
  const Outcome o = cli("verify-global --config samples/inconclusive_mc.json");
  EXPECT_EQ(o.code, 2) << o.err;
  EXPECT_EQ(json::parse(o.out)["records"][0]["method"], "mc");
}

TEST(Cli, MalformedCovarianceFileIsUsageError) {
  const std::string cov = ::testing::TempDir() + "hg_bad_cov.txt";
  const std::string cfg = ::testing::TempDir() + "hg_bad_cov.json";
  std::ofstream(cov) << "1 0.3\n0.3 oops\n";
  std::ofstream(cfg) << R"({"command":"check-local","check":"complex",)"
                     << R"("covariance":{"kind":"file","blocks":[1,1],"path":")" << cov << R"("},)"
                     << R"("mode":{"kind":"complex","z":[[0,0.5],[0,0.5]],"p":[1.5,1.5]}})";
  const Outcome o = cli("check-local --config '" + cfg + "'");
  EXPECT_EQ(o.code, 64);
  EXPECT_NE(o.err.find("config.covariance.path"), std::string::npos) << o.err;
  EXPECT_TRUE(o.out.empty());
}

TEST(Cli, SchemaErrorsNameTheFieldPath) {
  const std::string cfg = ::testing::TempDir() + "hg_bad_schema.json";
  std::ofstream(cfg) << R"({"command":"check-local","check":"complex",)"
                     << R"("covariance":{"kind":"inline","blocks":[1,1],"matrix":[[1,0.3],[0.2,1]]},)"
                     << R"("mode":{"kind":"complex","z":[[0,0.5],[0,0.5]],"p":[1.5,1.5]}})";
  Outcome o = cli("check-local --config '" + cfg + "'");
  EXPECT_EQ(o.code, 64);
  EXPECT_NE(o.err.find("config.covariance.matrix"), std::string::npos) << o.err;

  std::ofstream(cfg) << R"({"command":"check-local","check":"complex","covariance":{"kind":"identity","blocks":[1]},)"
                     << R"("mode":{"kind":"complex","z":[[0,0.5]],"p":["x"]}})";
  o = cli("check-local --config '" + cfg + "'");
  EXPECT_EQ(o.code, 64);
  EXPECT_NE(o.err.find("config.mode.p[0]"), std::string::npos) << o.err;

  std::ofstream(cfg) << R"({"command":"check-local","check":"complex","colour":1})";
  o = cli("check-local --config '" + cfg + "'");
  EXPECT_EQ(o.code, 64);
  EXPECT_NE(o.err.find("config.colour"), std::string::npos) << o.err;

  std::ofstream(cfg) << "{ not json";
  EXPECT_EQ(cli("check-local --config '" + cfg + "'").code, 64);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli("").code, 64);
  EXPECT_EQ(cli("check-local").code, 64);
  EXPECT_EQ(cli("flow --config samples/check_local_complex.json").code, 64);
  EXPECT_EQ(cli("constants --p 2 --q 2", "HYPERGAUSS_SEED=abc").code, 64);
  EXPECT_EQ(cli("check-local --config samples/does_not_exist.json").code, 64);
  EXPECT_EQ(cli("suite --criterion 11").code, 64);
}

TEST(Cli, NumericPayloadIsByteReproducible) {
  const Outcome a = cli("verify-global --config samples/inconclusive_mc.json");
  const Outcome b = cli("verify-global --config samples/inconclusive_mc.json");
  ASSERT_EQ(a.code, b.code);
  EXPECT_EQ(payload(a.out).dump(), payload(b.out).dump());
  const Outcome c = cli("flow --config samples/flow_complex.json");
  const Outcome d = cli("flow --config samples/flow_complex.json");
  EXPECT_EQ(payload(c.out).dump(), payload(d.out).dump());
}

TEST(Cli, EnvironmentSeedDrivesMonteCarlo) {
  const Outcome a = cli("verify-global --config samples/inconclusive_mc.json", "HYPERGAUSS_SEED=5");
  const Outcome b = cli("verify-global --config samples/inconclusive_mc.json", "HYPERGAUSS_SEED=6");
  const Outcome c = cli("verify-global --config samples/inconclusive_mc.json --seed 5", "HYPERGAUSS_SEED=6");
  const json ja = json::parse(a.out), jb = json::parse(b.out), jc = json::parse(c.out);
  // the sample has no seed of its own, so the environment applies
  EXPECT_EQ(ja["records"][0]["seed"], 5);
  EXPECT_EQ(jb["records"][0]["seed"], 6);
  EXPECT_NE(ja["config_digest"], jb["config_digest"]);
  EXPECT_NE(ja["records"][0]["lhs"], jb["records"][0]["lhs"]);
  EXPECT_EQ(payload(a.out).dump(), payload(c.out).dump());
}

TEST(Cli, SuiteEntriesKeepConfigOrderUnderConcurrency) {
  const Outcome a = cli("suite --config samples/suite_entries.json --jobs 1");
  const Outcome b = cli("suite --config samples/suite_entries.json --jobs 4");
  ASSERT_EQ(a.code, 1) << a.err;
  EXPECT_EQ(payload(a.out).dump(), payload(b.out).dump());
  const json r = json::parse(b.out)["records"];
  ASSERT_EQ(r.size(), 4u);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r[i]["index"], i);
  EXPECT_EQ(r[1]["verdict"], "violated");
  EXPECT_EQ(r[2]["command"], "constants");
}

TEST(Cli, OutFlagWritesTheReport) {
  const std::string path = ::testing::TempDir() + "hg_report.json";
  std::remove(path.c_str());
  const Outcome o = cli("constants --p 2 --q 4 --out '" + path + "'");
  EXPECT_EQ(o.code, 0);
  EXPECT_TRUE(o.out.empty());
  EXPECT_EQ(json::parse(slurp(path))["command"], "constants");
}

TEST(Cli, CovarianceFileDigestTracksContents) {
  const std::string cov = ::testing::TempDir() + "hg_cov.txt";
  const json cfg = parse_config_text(R"({"command":"constants","params":{"p":2},"covariance":{"kind":"file","blocks":[1,1],"path":")" +
                                     cov + R"("}})");
  std::ofstream(cov) << "1 0.3\n0.3 1\n";
  const std::string a = config_digest(canonical_config(cfg, {}));
  std::ofstream(cov) << "1 0.4\n0.4 1\n";
  const std::string b = config_digest(canonical_config(cfg, {}));
  EXPECT_NE(a, b);
}

TEST(Cli, CovarianceEigenvaluesAreReported) {
  const Outcome o = cli("check-local --config samples/check_local_file.json");
  ASSERT_EQ(o.code, 0) << o.err;
  const json j = json::parse(o.out);
  EXPECT_NEAR(j["covariance"]["lambda_min"].get<double>(), 0.7, 1e-12);
  EXPECT_NEAR(j["covariance"]["lambda_max"].get<double>(), 1.3, 1e-12);
}

struct GoldenCase {
  const char* name;
  const char* args;
};

class GoldenSchema : public ::testing::TestWithParam<GoldenCase> {};

TEST_P(GoldenSchema, ReportShapeMatches) {
  const Outcome o = cli(GetParam().args);
  ASSERT_TRUE(o.code == 0 || o.code == 1) << o.err;
  EXPECT_EQ(shape(json::parse(o.out)).dump(2), golden(GetParam().name).dump(2));
}

INSTANTIATE_TEST_SUITE_P(
    Reports, GoldenSchema,
    ::testing::Values(GoldenCase{"condition", "check-local --config samples/check_local_complex.json"},
                      GoldenCase{"comparison", "verify-global --config samples/verify_complex_hc.json"},
                      GoldenCase{"witness", "verify-global --config samples/witness.json"},
                      GoldenCase{"flow", "flow --config samples/flow_complex.json"},
                      GoldenCase{"constants", "constants --config samples/constants.json"},
                      GoldenCase{"entries", "suite --config samples/suite_entries.json"},
                      GoldenCase{"criterion", "suite --config samples/suite_paper.json --criterion 2"}),
    [](const auto& info) { return std::string(info.param.name); });
