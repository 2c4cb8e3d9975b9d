#include "obdet/obdet.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>

#include "core/csv.hpp"
#include "core/dataset.hpp"
#include "core/sweep.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using namespace obdet;

thread_local std::string g_last_error;

obdet_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return OBDET_ERR_INVALID_ARGUMENT;
    case ErrorCode::IoError: return OBDET_ERR_IO;
    case ErrorCode::FormatError: return OBDET_ERR_FORMAT;
    case ErrorCode::BehindCamera:
    case ErrorCode::UnrepresentablePixel: return OBDET_ERR_GEOMETRY;
    case ErrorCode::Internal: return OBDET_ERR_INTERNAL;
  }
  return OBDET_ERR_INTERNAL;
}

template <typename F>
obdet_status wrap(F&& f) {
  try {
    f();
    g_last_error.clear();
    return OBDET_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OBDET_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require_arg(const void* p, const char* name) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must not be NULL");
}

Dataset load_dataset_with_calib(const char* manifest_path, const char* calib_path) {
  Dataset ds = load_dataset(manifest_path);
  if (calib_path) {
    ds.rig = load_calibration(calib_path);
    ds.rig.validate_optics();
  }
  return ds;
}

PipelineParams effective_params(const obdet_params* params);

}  // namespace

struct obdet_params {
  obdet::PipelineParams v;
};

namespace {
PipelineParams effective_params(const obdet_params* params) {
  return params ? params->v : PipelineParams{};
}
}  // namespace

extern "C" {

const char* obdet_version(void) { return "0.1.0"; }

const char* obdet_last_error(void) { return g_last_error.c_str(); }

void obdet_string_free(char* s) { std::free(s); }

obdet_status obdet_params_create(obdet_params** out) {
  return wrap([&] {
    require_arg(out, "out");
    *out = new obdet_params{};
  });
}

obdet_status obdet_params_load(const char* path, obdet_params** out) {
  return wrap([&] {
    require_arg(path, "path");
    require_arg(out, "out");
    PipelineParams p = load_params(path);
    *out = new obdet_params{std::move(p)};
  });
}

obdet_status obdet_params_set(obdet_params* params, const char* key, const char* value) {
  return wrap([&] {
    require_arg(params, "params");
    require_arg(key, "key");
    require_arg(value, "value");
    set_parameter_text(params->v, key, value);
  });
}

obdet_status obdet_params_to_json(const obdet_params* params, char** out_text) {
  return wrap([&] {
    require_arg(params, "params");
    require_arg(out_text, "out_text");
    *out_text = dup_string(params_to_json_text(params->v));
  });
}

void obdet_params_free(obdet_params* params) { delete params; }

obdet_status obdet_generate_dataset(const char* suite_json_path, const char* out_dir,
                                    int has_seed_override, uint64_t seed_override, int jobs,
                                    char** out_manifest_path) {
  return wrap([&] {
    require_arg(suite_json_path, "suite_json_path");
    require_arg(out_dir, "out_dir");
    const SuiteSpec suite = load_suite(suite_json_path);
    std::optional<std::uint64_t> seed;
    if (has_seed_override) seed = seed_override;
    generate_dataset(suite, out_dir, seed, jobs);
    if (out_manifest_path)
      *out_manifest_path = dup_string((fs::path(out_dir) / "manifest.json").string());
  });
}

obdet_status obdet_run_detect(const char* manifest_path, const char* calib_path,
                              const obdet_params* params, const char* out_detections_path,
                              int jobs) {
  return wrap([&] {
    require_arg(manifest_path, "manifest_path");
    require_arg(out_detections_path, "out_detections_path");
    const Dataset ds = load_dataset_with_calib(manifest_path, calib_path);
    const std::vector<FrameDetections> det = detect_dataset(ds, effective_params(params), jobs);
    write_text_file(detections_file_to_json_text(det), out_detections_path);
  });
}

obdet_status obdet_run_evaluate(const char* manifest_path, const char* calib_path,
                                const obdet_params* params, const char* out_report_path,
                                int jobs, obdet_summary* out_summary) {
  return wrap([&] {
    require_arg(manifest_path, "manifest_path");
    const Dataset ds = load_dataset_with_calib(manifest_path, calib_path);
    const EvaluationRun run = evaluate_dataset(ds, effective_params(params), jobs);
    if (out_report_path) write_text_file(report_to_csv_text(run.results), out_report_path);
    if (out_summary) {
      out_summary->n_tps = run.summary.n_tps;
      out_summary->n_fps = run.summary.n_fps;
      out_summary->n_fns = run.summary.n_fns;
      out_summary->n_tn = run.summary.n_tn;
      out_summary->tpr =
          run.summary.tpr ? *run.summary.tpr : std::numeric_limits<double>::quiet_NaN();
      out_summary->fpr =
          run.summary.fpr ? *run.summary.fpr : std::numeric_limits<double>::quiet_NaN();
    }
  });
}

obdet_status obdet_run_sweep(const char* manifest_path, const char* calib_path,
                             const char* config_path, const char* const* overrides,
                             size_t n_overrides, const char* out_dir, int jobs,
                             int cache_depths, int* out_frontier_size) {
  return wrap([&] {
    require_arg(config_path, "config_path");
    require_arg(out_dir, "out_dir");
    if (n_overrides > 0) require_arg(overrides, "overrides");

    SweepConfig config = load_sweep_config(config_path);
    for (size_t i = 0; i < n_overrides; ++i) {
      require_arg(overrides[i], "overrides[i]");
      const std::string kv = overrides[i];
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos || eq == 0)
        throw Error(ErrorCode::InvalidArgument,
                    "override \"" + kv + "\" is not of the form key=value");
      set_parameter_text(config.base, kv.substr(0, eq), kv.substr(eq + 1));
    }

    std::string manifest = manifest_path ? manifest_path : config.dataset;
    if (manifest.empty())
      throw Error(ErrorCode::InvalidArgument,
                  "no dataset: pass a manifest path or set \"dataset\" in the sweep config");
    if (!manifest_path && !config.dataset.empty() && fs::path(config.dataset).is_relative()) {
      // A relative dataset path in the config counts from the config file.
      manifest = (fs::path(config_path).parent_path() / config.dataset).string();
    }
    const Dataset ds = load_dataset_with_calib(manifest.c_str(), calib_path);

    const std::vector<SweepPoint> points = run_sweep(ds, config, jobs, cache_depths != 0);
    const std::vector<SweepPoint> frontier = pareto_frontier(points);
    const OperatingPoint op = select_operating_point(points, config.max_fpr);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
      throw Error(ErrorCode::IoError, "cannot create " + std::string(out_dir) + ": " + ec.message());
    write_text_file(sweep_to_csv_text(config.axes, points),
                    (fs::path(out_dir) / "sweep.csv").string());
    write_text_file(sweep_to_csv_text(config.axes, frontier),
                    (fs::path(out_dir) / "frontier.csv").string());
    write_text_file(operating_point_to_json_text(op, config.axes, config.max_fpr),
                    (fs::path(out_dir) / "selected.json").string());
    if (out_frontier_size) *out_frontier_size = static_cast<int>(frontier.size());
  });
}

obdet_status obdet_report_render(const char* report_csv_path, const char* format,
                                 char** out_text) {
  return wrap([&] {
    require_arg(report_csv_path, "report_csv_path");
    require_arg(format, "format");
    require_arg(out_text, "out_text");
    const Report report = report_from_csv_text(read_text_file(report_csv_path));
    const std::string fmt = format;
    if (fmt == "csv") {
      *out_text = dup_string(report_to_csv_text(report));
    } else if (fmt == "json") {
      nlohmann::json j;
      j["frames"] = nlohmann::json::array();
      for (const ReportRow& r : report.rows) {
        j["frames"].push_back({{"frame_id", r.frame_id},
                               {"verdict", to_string(r.verdict)},
                               {"n_tp", r.n_tp},
                               {"n_fp", r.n_fp},
                               {"n_fn", r.n_fn}});
      }
      j["summary"] = {{"n_tps", report.summary.n_tps},
                      {"n_fps", report.summary.n_fps},
                      {"n_fns", report.summary.n_fns},
                      {"n_tn", report.summary.n_tn},
                      {"tpr", report.summary.tpr ? nlohmann::json(*report.summary.tpr)
                                                 : nlohmann::json(nullptr)},
                      {"fpr", report.summary.fpr ? nlohmann::json(*report.summary.fpr)
                                                 : nlohmann::json(nullptr)}};
      *out_text = dup_string(j.dump(2) + "\n");
    } else {
      throw Error(ErrorCode::InvalidArgument, "format must be \"csv\" or \"json\"");
    }
  });
}

}  // extern "C"
