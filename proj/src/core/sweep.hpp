#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/dataset.hpp"

namespace obdet {

// One grid axis: a dotted parameter key and the values it takes, in the order
// they appear in the config. The grid is the Cartesian product of all axes;
// points are enumerated with the last axis varying fastest.
struct SweepAxis {
  std::string name;  // canonical ("stereo.max_disparity", ...)
  std::vector<double> values;
};

struct SweepConfig {
  std::vector<SweepAxis> axes;
  double max_fpr = 0.02;     // operating-point constraint
  std::string dataset;       // manifest path; may be overridden by the caller
  PipelineParams base;       // grid points override these defaults

  void validate() const;
};

SweepConfig sweep_config_from_json_text(const std::string& text);
std::string sweep_config_to_json_text(const SweepConfig& config);
SweepConfig load_sweep_config(const std::string& path);

struct SweepPoint {
  std::vector<double> assignment;  // parallel to the axes
  std::optional<double> tpr, fpr;
  int n_tps = 0, n_fps = 0, n_fns = 0, n_tn = 0;
};

// Applies one assignment on top of the base parameters.
PipelineParams apply_assignment(const PipelineParams& base, const std::vector<SweepAxis>& axes,
                                const std::vector<double>& assignment);

// Evaluates the whole grid. Points that share their stereo-parameter values
// reuse the frames' depth maps when `cache_depths` is set; the caching is an
// optimization only and never changes any output. `jobs` parallelizes over
// frames inside a point, so results do not depend on the worker count.
std::vector<SweepPoint> run_sweep(const Dataset& dataset, const SweepConfig& config, int jobs,
                                  bool cache_depths);

// Non-dominated subset under (TPR up, FPR down), sorted by FPR ascending
// (duplicates preserved, ties ordered by TPR then assignment). Points with an
// undefined rate never appear; an empty result means no point had both rates.
std::vector<SweepPoint> pareto_frontier(const std::vector<SweepPoint>& points);

struct OperatingPoint {
  bool feasible = false;
  SweepPoint point;  // meaningful only when feasible
};

// Highest-TPR point subject to FPR <= max_fpr; ties break toward lower FPR,
// then toward the lexicographically smallest assignment. The winner is always
// on the Pareto frontier. Throws on an empty point list.
OperatingPoint select_operating_point(const std::vector<SweepPoint>& points, double max_fpr);

// CSV with one column per axis followed by tpr, fpr, n_tps, n_fps, n_fns,
// n_tn. Undefined rates serialize as "nan".
std::string sweep_to_csv_text(const std::vector<SweepAxis>& axes,
                              const std::vector<SweepPoint>& points);
struct SweepTable {
  std::vector<std::string> axis_names;
  std::vector<SweepPoint> points;
};
SweepTable sweep_from_csv_text(const std::string& text);

std::string operating_point_to_json_text(const OperatingPoint& op,
                                         const std::vector<SweepAxis>& axes, double max_fpr);
OperatingPoint operating_point_from_json_text(const std::string& text,
                                              std::vector<std::string>* axis_names = nullptr,
                                              double* max_fpr = nullptr);

}  // namespace obdet
