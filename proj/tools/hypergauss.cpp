#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hypergauss/report.hpp"

using namespace hypergauss;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("HYPERGAUSS_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0' || s[0] == '-') throw UsageError("HYPERGAUSS_SEED: expected a nonnegative integer, got '" + std::string(s) + "'");
  return v;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypercontractivity checks for Gaussian vectors: local conditions, global verification, flows, constants"};
  app.set_version_flag("--version", kArtifactVersion);

  std::string config_path, out_path;
  Overrides o;
  int jobs = 1;
  std::vector<int> criteria;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_path, "write the JSON report here instead of stdout");
    sub->add_option("--seed", o.seed, "seed (default: config, then HYPERGAUSS_SEED, then 1)");
    sub->add_option("--samples", o.samples, "Monte Carlo sample budget")->check(CLI::PositiveNumber);
    sub->add_option("--nodes", o.nodes, "quadrature nodes per dimension")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", jobs, "concurrent suite entries")->check(CLI::PositiveNumber);
    sub->add_option("--tolerance", o.tolerance, "verdict tolerance")->check(CLI::PositiveNumber);
  };
  std::vector<CLI::App*> subs;
  for (const char* name : {"check-local", "verify-global", "flow", "constants", "suite"}) subs.push_back(app.add_subcommand(name));
  subs[0]->description("check a local condition and print a ConditionReport");
  subs[1]->description("compare both sides of a global inequality on test functions");
  subs[2]->description("evaluate a monotone flow on an s-grid");
  subs[3]->description("print sharp constants");
  subs[4]->description("run a suite: paper-theorems or a list of entries");
  for (auto* s : subs) common(s);
  subs[3]->add_option("--p", o.p, "exponent p");
  subs[3]->add_option("--q", o.q, "exponent q");
  subs[3]->add_option("--n", o.n, "dimension n")->check(CLI::PositiveNumber);
  subs[3]->add_option("--rho", o.rho, "correlation rho");
  subs[4]->add_option("--criterion", criteria, "criterion ids for paper-theorems")->check(CLI::Range(1, kCriteria));
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    o.env_seed = env_seed();
    json cfg = json::object();
    if (!config_path.empty()) cfg = parse_config_text(slurp(config_path));
    else if (command == "suite") cfg["name"] = "paper-theorems";
    else if (command != "constants") throw UsageError("--config is required for " + command);
    if (!cfg.is_object()) throw UsageError("config: expected an object");
    if (!cfg.contains("command")) cfg["command"] = command;
    else if (cfg["command"] != command)
      throw UsageError("config.command: " + cfg["command"].dump() + " does not match the subcommand '" + command + "'");
    if (!criteria.empty()) cfg["criteria"] = criteria;

    const json canon = canonical_config(cfg, o);
    const json report = run(canon, RunOptions{jobs});
    const std::string text = report.dump(2) + "\n";
    if (out_path.empty()) {
      std::fwrite(text.data(), 1, text.size(), stdout);
    } else {
      std::ofstream out(out_path);
      if (!out) throw UsageError("--out: cannot write '" + out_path + "'");
      out << text;
    }
    const json& s = report["summary"];
    std::fprintf(stderr, "%s: %s (%d holds, %d violated, %d inconclusive) digest %s\n", command.c_str(),
                 s["verdict"].get<std::string>().c_str(), s["holds"].get<int>(), s["violated"].get<int>(),
                 s["inconclusive"].get<int>(), report["config_digest"].get<std::string>().c_str());
    return exit_code(report);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}
