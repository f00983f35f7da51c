// Command line front end: each subcommand runs one scenario kind from a JSON
// config and writes <out>/<name>.csv plus <out>/<name>.json; `verify` runs
// the acceptance suite. Exit codes: 0 all checks pass, 1 a check failed,
// 2 configuration problem.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <eqi/acceptance.hpp>
#include <eqi/scenario.hpp>

namespace {

int write_report(const eqi::ScenarioReport& rep, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create output directory '%s': %s\n", out_dir.c_str(),
                 ec.message().c_str());
    return 2;
  }
  auto spill = [&](const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
    return bool(out);
  };
  fs::path csv = dir / (rep.name + ".csv");
  fs::path js = dir / (rep.name + ".json");
  if (!spill(csv, rep.csv()) || !spill(js, rep.summary_json())) {
    std::fprintf(stderr, "error: cannot write reports under '%s'\n", out_dir.c_str());
    return 2;
  }
  for (const auto& c : rep.checks)
    std::printf("%s  %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
  std::printf("%s: %zu rows, %zu checks -> %s\n", rep.name.c_str(), rep.rows.size(),
              rep.checks.size(), csv.string().c_str());
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equivariant index, cocycle, and heat-trace scenario runner"};
  app.require_subcommand(1);

  std::string config, out_dir = ".", precision, filter;
  int threads = 1;

  struct SubSpec {
    const char* cmd;
    const char* kind;
    const char* help;
  };
  const std::vector<SubSpec> specs = {
      {"index", "fixed_point_index", "fixed point evaluation of the equivariant index"},
      {"cm", "cm_cocycle", "cyclic cocycle paired with a group word"},
      {"jlo-limit", "jlo_limit", "short-time limit of the heat cochain pairing"},
      {"heat-trace", "heat_trace", "equivariant heat traces on a spectral model"},
      {"jlo-numeric", "jlo_numeric", "heat cochain on a spectral model over a t-grid"},
      {"volterra-check", "volterra_check", "closed-form vs coordinate fiber integrals"},
  };
  std::string chosen_kind;
  for (const auto& s : specs) {
    CLI::App* c = app.add_subcommand(s.cmd, s.help);
    c->add_option("--config", config, "scenario configuration file")->required();
    c->add_option("--out", out_dir, "directory for the CSV and JSON reports");
    c->add_option("--precision", precision, "override the config arithmetic (exact or f64)")
        ->check(CLI::IsMember({"exact", "f64"}));
    c->add_option("--threads", threads, "worker threads for independent evaluations")
        ->check(CLI::PositiveNumber);
    c->callback([&chosen_kind, kind = s.kind] { chosen_kind = kind; });
  }

  CLI::App* ver = app.add_subcommand("verify", "run the acceptance suite");
  ver->add_option("--filter", filter, "only criteria whose name contains this substring");

  CLI11_PARSE(app, argc, argv);

  if (ver->parsed()) {
    auto results = eqi::run_criteria(filter);
    if (results.empty()) {
      std::fprintf(stderr, "error: no acceptance criterion matches filter '%s'\n",
                   filter.c_str());
      return 2;
    }
    bool all = true;
    for (const auto& r : results) {
      std::printf("%s  %s (%.2fs): %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                  r.detail.c_str());
      all = all && r.pass;
    }
    std::printf("%zu/%zu criteria passed\n",
                (size_t)std::count_if(results.begin(), results.end(),
                                      [](const auto& r) { return r.pass; }),
                results.size());
    return all ? 0 : 1;
  }

  try {
    eqi::ScenarioReport rep = eqi::run_scenario_file(config, precision, threads, chosen_kind);
    return write_report(rep, out_dir);
  } catch (const eqi::ScenarioError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
