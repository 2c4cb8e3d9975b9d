#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "obdet/obdet.h"

namespace {

// Exit codes: 0 success, 2 usage, 3 bad data, 4 internal failure.
int status_to_exit(obdet_status st) {
  switch (st) {
    case OBDET_OK: return 0;
    case OBDET_ERR_INVALID_ARGUMENT: return 2;
    case OBDET_ERR_IO:
    case OBDET_ERR_FORMAT:
    case OBDET_ERR_GEOMETRY: return 3;
    case OBDET_ERR_INTERNAL: return 4;
  }
  return 4;
}

int fail(obdet_status st) {
  std::fprintf(stderr, "error: %s\n", obdet_last_error());
  return status_to_exit(st);
}

struct ParamsHandle {
  obdet_params* p = nullptr;
  ~ParamsHandle() { obdet_params_free(p); }
};

int fail(obdet_status st);

// Builds the parameter set from --params and repeated --set KEY=VALUE flags.
// Returns a process exit code; 0 means out.p is ready.
int build_params(const std::string& params_path, const std::vector<std::string>& sets,
                 ParamsHandle& out) {
  const obdet_status st = params_path.empty() ? obdet_params_create(&out.p)
                                              : obdet_params_load(params_path.c_str(), &out.p);
  if (st != OBDET_OK) return fail(st);
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "error: --set expects KEY=VALUE, got \"%s\"\n", kv.c_str());
      return 2;
    }
    const obdet_status set_st =
        obdet_params_set(out.p, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (set_st != OBDET_OK) return fail(set_st);
  }
  return 0;
}

int print_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "error: cannot read %s\n", path.c_str());
    return 3;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  std::fputs(ss.str().c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo obstacle detection, stop-decision scoring and parameter sweeps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", []() { return std::string(obdet_version()); });

  std::string suite_path, out_dir, manifest, calib, params_path, out_path, format = "csv";
  std::string config_path, dataset_override, report_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool no_cache = false;

  CLI::App* gen = app.add_subcommand("generate", "Render a synthetic dataset from a suite JSON");
  gen->add_option("suite", suite_path, "Suite description (JSON)")->required();
  gen->add_option("out_dir", out_dir, "Output dataset directory")->required();
  CLI::Option* seed_opt = gen->add_option("--seed", seed, "Override the suite seed");
  gen->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  CLI::App* det = app.add_subcommand("detect", "Run obstacle detection over a dataset");
  det->add_option("manifest", manifest, "Dataset manifest (JSON)")->required();
  det->add_option("out", out_path, "Detections output (JSON)")->required();
  det->add_option("--calib", calib, "Calibration override (JSON)");
  det->add_option("--params", params_path, "Pipeline parameters (JSON)");
  det->add_option("--set", sets, "Parameter override KEY=VALUE (repeatable)");
  det->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  CLI::App* eval = app.add_subcommand("evaluate", "Score stop decisions against annotations");
  eval->add_option("manifest", manifest, "Dataset manifest (JSON)")->required();
  eval->add_option("report", out_path, "Report output (CSV)")->required();
  eval->add_option("--calib", calib, "Calibration override (JSON)");
  eval->add_option("--params", params_path, "Pipeline parameters (JSON)");
  eval->add_option("--set", sets, "Parameter override KEY=VALUE (repeatable)");
  eval->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  eval->add_option("--format", format, "Stdout rendering")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI::App* swp = app.add_subcommand("sweep", "Grid-sweep parameters and pick an operating point");
  swp->add_option("config", config_path, "Sweep configuration (JSON)")->required();
  swp->add_option("out_dir", out_dir, "Output directory for sweep.csv/frontier.csv/selected.json")
      ->required();
  swp->add_option("--dataset", dataset_override, "Manifest path overriding the config's dataset");
  swp->add_option("--calib", calib, "Calibration override (JSON)");
  swp->add_option("--set", sets, "Base-parameter override KEY=VALUE (repeatable)");
  swp->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  swp->add_flag("--no-cache", no_cache, "Recompute depth maps for every grid point");

  CLI::App* rep = app.add_subcommand("report", "Render a report CSV as csv or json");
  rep->add_option("report", report_path, "Report (CSV)")->required();
  rep->add_option("--format", format, "Output rendering")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*gen) {
    char* manifest_path = nullptr;
    const obdet_status st = obdet_generate_dataset(
        suite_path.c_str(), out_dir.c_str(), seed_opt->count() > 0 ? 1 : 0, seed, jobs,
        &manifest_path);
    if (st != OBDET_OK) return fail(st);
    std::printf("%s\n", manifest_path);
    obdet_string_free(manifest_path);
    return 0;
  }

  if (*det) {
    ParamsHandle params;
    const int rc = build_params(params_path, sets, params);
    if (rc != 0) return rc;
    const obdet_status st = obdet_run_detect(
        manifest.c_str(), calib.empty() ? nullptr : calib.c_str(), params.p,
        out_path.c_str(), jobs);
    if (st != OBDET_OK) return fail(st);
    std::printf("%s\n", out_path.c_str());
    return 0;
  }

  if (*eval) {
    ParamsHandle params;
    const int rc = build_params(params_path, sets, params);
    if (rc != 0) return rc;
    obdet_status st = obdet_run_evaluate(manifest.c_str(),
                                         calib.empty() ? nullptr : calib.c_str(), params.p,
                                         out_path.c_str(), jobs, nullptr);
    if (st != OBDET_OK) return fail(st);
    char* text = nullptr;
    st = obdet_report_render(out_path.c_str(), format.c_str(), &text);
    if (st != OBDET_OK) return fail(st);
    std::fputs(text, stdout);
    obdet_string_free(text);
    return 0;
  }

  if (*swp) {
    std::vector<const char*> overrides;
    overrides.reserve(sets.size());
    for (const std::string& s : sets) overrides.push_back(s.c_str());
    int frontier_size = 0;
    const obdet_status st = obdet_run_sweep(
        dataset_override.empty() ? nullptr : dataset_override.c_str(),
        calib.empty() ? nullptr : calib.c_str(), config_path.c_str(),
        overrides.empty() ? nullptr : overrides.data(), overrides.size(), out_dir.c_str(), jobs,
        no_cache ? 0 : 1, &frontier_size);
    if (st != OBDET_OK) return fail(st);
    if (frontier_size == 0)
      std::fprintf(stderr, "warning: no grid point had both rates defined; frontier is empty\n");
    return print_file(out_dir + "/selected.json");
  }

  if (*rep) {
    char* text = nullptr;
    const obdet_status st = obdet_report_render(report_path.c_str(), format.c_str(), &text);
    if (st != OBDET_OK) return fail(st);
    std::fputs(text, stdout);
    obdet_string_free(text);
    return 0;
  }

  return 2;
}
