#include "core/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "core/csv.hpp"
#include "core/threading.hpp"
#include "json.hpp"

namespace obdet {

namespace {

void check_keys(const nlohmann::ordered_json& j, const std::string& ctx,
                std::initializer_list<const char*> keys) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : keys)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) throw_format_error(ctx + ": unknown field \"" + item.key() + "\"");
  }
}

std::string describe_assignment(const std::vector<SweepAxis>& axes,
                                const std::vector<double>& assignment) {
  std::string s;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (i) s += ", ";
    s += axes[i].name + "=" + format_double(assignment[i]);
  }
  return s.empty() ? "(base)" : s;
}

}  // namespace

void SweepConfig::validate() const {
  require(max_fpr >= 0.0 && max_fpr <= 1.0, "max_fpr must lie in [0, 1]");
  base.validate();
  std::set<std::string> seen;
  for (const SweepAxis& axis : axes) {
    require(canonical_parameter_key(axis.name) == axis.name,
            "axis \"" + axis.name + "\" is not a canonical parameter key");
    require(axis.name != "source", "axis \"source\" is not sweepable");
    require(!axis.values.empty(), "axis \"" + axis.name + "\" has no values");
    require(seen.insert(axis.name).second, "duplicate axis \"" + axis.name + "\"");
  }
}

SweepConfig sweep_config_from_json_text(const std::string& text) {
  // ordered_json keeps the axes in file order; that order defines the CSV
  // columns and the point enumeration.
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::ordered_json::exception& e) {
    throw_format_error(std::string("sweep config: ") + e.what());
  }
  SweepConfig config;
  try {
    check_keys(j, "sweep config", {"axes", "max_fpr", "dataset", "base_params"});
    for (const auto& item : j.at("axes").items()) {
      SweepAxis axis;
      try {
        axis.name = canonical_parameter_key(item.key());
      } catch (const Error& e) {
        throw_format_error(std::string("sweep config axes: ") + e.what());
      }
      if (axis.name == "source")
        throw_format_error("sweep config axes: \"source\" is not sweepable");
      for (const auto& v : item.value()) axis.values.push_back(v.get<double>());
      if (axis.values.empty())
        throw_format_error("sweep config axes." + item.key() + ": empty value list");
      config.axes.push_back(std::move(axis));
    }
    config.max_fpr = j.value("max_fpr", config.max_fpr);
    config.dataset = j.value("dataset", std::string());
    if (j.contains("base_params"))
      config.base = params_from_json_text(j.at("base_params").dump());
  } catch (const nlohmann::ordered_json::exception& e) {
    throw_format_error(std::string("sweep config: ") + e.what());
  }
  try {
    config.validate();
  } catch (const Error& e) {
    throw_format_error(std::string("sweep config: ") + e.what());
  }
  return config;
}

std::string sweep_config_to_json_text(const SweepConfig& config) {
  nlohmann::ordered_json j;
  j["axes"] = nlohmann::ordered_json::object();
  for (const SweepAxis& axis : config.axes) j["axes"][axis.name] = axis.values;
  j["max_fpr"] = config.max_fpr;
  if (!config.dataset.empty()) j["dataset"] = config.dataset;
  j["base_params"] = nlohmann::ordered_json::parse(params_to_json_text(config.base));
  return j.dump(2) + "\n";
}

SweepConfig load_sweep_config(const std::string& path) {
  return sweep_config_from_json_text(read_text_file(path));
}

PipelineParams apply_assignment(const PipelineParams& base, const std::vector<SweepAxis>& axes,
                                const std::vector<double>& assignment) {
  require(assignment.size() == axes.size(), "assignment length does not match axis count");
  PipelineParams params = base;
  for (std::size_t i = 0; i < axes.size(); ++i)
    set_parameter(params, axes[i].name, assignment[i]);
  return params;
}

std::vector<SweepPoint> run_sweep(const Dataset& dataset, const SweepConfig& config, int jobs,
                                  bool cache_depths) {
  config.validate();
  require(jobs >= 1, "jobs must be >= 1");

  std::size_t total = 1;
  for (const SweepAxis& axis : config.axes) {
    require(total <= (std::size_t{1} << 40) / axis.values.size(), "sweep grid is too large");
    total *= axis.values.size();
  }

  // Enumerate assignments with the last axis varying fastest, and reject any
  // invalid parameter combination before doing real work.
  std::vector<std::vector<double>> assignments(total);
  for (std::size_t p = 0; p < total; ++p) {
    std::vector<double> a(config.axes.size());
    std::size_t rest = p;
    for (std::size_t i = config.axes.size(); i-- > 0;) {
      const std::size_t n = config.axes[i].values.size();
      a[i] = config.axes[i].values[rest % n];
      rest /= n;
    }
    try {
      apply_assignment(config.base, config.axes, a).validate();
    } catch (const Error& e) {
      throw_invalid_argument("grid point (" + describe_assignment(config.axes, a) +
                             "): " + e.what());
    }
    assignments[p] = std::move(a);
  }

  std::vector<SweepPoint> points(total);
  auto record = [&](std::size_t p, const EvaluationRun& run) {
    points[p].assignment = assignments[p];
    points[p].tpr = run.summary.tpr;
    points[p].fpr = run.summary.fpr;
    points[p].n_tps = run.summary.n_tps;
    points[p].n_fps = run.summary.n_fps;
    points[p].n_fns = run.summary.n_fns;
    points[p].n_tn = run.summary.n_tn;
  };

  if (!cache_depths) {
    for (std::size_t p = 0; p < total; ++p) {
      const PipelineParams params = apply_assignment(config.base, config.axes, assignments[p]);
      record(p, evaluate_dataset(dataset, params, jobs));
    }
    return points;
  }

  // Group points that produce identical depth maps (same values on every
  // depth-affecting axis) and compute those maps once per group.
  std::vector<std::size_t> depth_axes;
  for (std::size_t i = 0; i < config.axes.size(); ++i)
    if (config.axes[i].name.rfind("stereo.", 0) == 0 || config.axes[i].name == "far_clip_m")
      depth_axes.push_back(i);

  std::map<std::vector<double>, std::vector<std::size_t>> groups;
  for (std::size_t p = 0; p < total; ++p) {
    std::vector<double> key;
    for (std::size_t i : depth_axes) key.push_back(assignments[p][i]);
    groups[key].push_back(p);
  }

  const std::size_t n_frames = dataset.manifest.frames.size();
  for (const auto& [key, members] : groups) {
    const PipelineParams group_params =
        apply_assignment(config.base, config.axes, assignments[members.front()]);
    std::vector<DepthMap> depths(n_frames);
    parallel_for(n_frames, jobs,
                 [&](std::size_t i) { depths[i] = frame_depth(dataset, i, group_params); });
    for (std::size_t p : members) {
      const PipelineParams params = apply_assignment(config.base, config.axes, assignments[p]);
      record(p, evaluate_with_depths(dataset, depths, params, jobs));
    }
  }
  return points;
}

std::vector<SweepPoint> pareto_frontier(const std::vector<SweepPoint>& points) {
  std::vector<const SweepPoint*> defined;
  for (const SweepPoint& p : points)
    if (p.tpr && p.fpr) defined.push_back(&p);

  std::sort(defined.begin(), defined.end(), [](const SweepPoint* a, const SweepPoint* b) {
    if (*a->fpr != *b->fpr) return *a->fpr < *b->fpr;
    if (*a->tpr != *b->tpr) return *a->tpr > *b->tpr;
    return a->assignment < b->assignment;
  });

  std::vector<SweepPoint> frontier;
  double best_tpr = -1.0, best_fpr = 2.0;
  for (const SweepPoint* p : defined) {
    if (*p->tpr > best_tpr) {
      best_tpr = *p->tpr;
      best_fpr = *p->fpr;
      frontier.push_back(*p);
    } else if (*p->tpr == best_tpr && *p->fpr == best_fpr) {
      frontier.push_back(*p);  // exact duplicate in rate space: not dominated
    }
  }
  return frontier;
}

OperatingPoint select_operating_point(const std::vector<SweepPoint>& points, double max_fpr) {
  require(!points.empty(), "cannot select an operating point from zero sweep points");
  OperatingPoint op;
  for (const SweepPoint& p : points) {
    if (!p.tpr || !p.fpr || *p.fpr > max_fpr) continue;
    if (!op.feasible) {
      op.feasible = true;
      op.point = p;
      continue;
    }
    if (*p.tpr != *op.point.tpr) {
      if (*p.tpr > *op.point.tpr) op.point = p;
    } else if (*p.fpr != *op.point.fpr) {
      if (*p.fpr < *op.point.fpr) op.point = p;
    } else if (p.assignment < op.point.assignment) {
      op.point = p;
    }
  }
  return op;
}

std::string sweep_to_csv_text(const std::vector<SweepAxis>& axes,
                              const std::vector<SweepPoint>& points) {
  std::vector<std::string> header;
  for (const SweepAxis& axis : axes) header.push_back(axis.name);
  for (const char* m : {"tpr", "fpr", "n_tps", "n_fps", "n_fns", "n_tn"}) header.push_back(m);
  std::string text = join_csv_row(header) + "\n";
  for (const SweepPoint& p : points) {
    require(p.assignment.size() == axes.size(), "sweep point does not match axis count");
    std::vector<std::string> row;
    for (double v : p.assignment) row.push_back(format_double(v));
    row.push_back(p.tpr ? format_double(*p.tpr) : "nan");
    row.push_back(p.fpr ? format_double(*p.fpr) : "nan");
    row.push_back(std::to_string(p.n_tps));
    row.push_back(std::to_string(p.n_fps));
    row.push_back(std::to_string(p.n_fns));
    row.push_back(std::to_string(p.n_tn));
    text += join_csv_row(row) + "\n";
  }
  return text;
}

SweepTable sweep_from_csv_text(const std::string& text) {
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty()) throw_format_error("sweep CSV is empty");
  const std::vector<std::string> header = split_csv_row(lines[0]);
  static const char* metrics[] = {"tpr", "fpr", "n_tps", "n_fps", "n_fns", "n_tn"};
  if (header.size() < 6)
    throw_format_error("sweep CSV header has too few columns: '" + lines[0] + "'");
  const std::size_t n_axes = header.size() - 6;
  for (std::size_t i = 0; i < 6; ++i)
    if (header[n_axes + i] != metrics[i])
      throw_format_error("sweep CSV header: expected column '" + std::string(metrics[i]) +
                         "', got '" + header[n_axes + i] + "'");
  SweepTable table;
  table.axis_names.assign(header.begin(), header.begin() + n_axes);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> f = split_csv_row(lines[r]);
    if (f.size() != header.size())
      throw_format_error("sweep CSV row has wrong field count: '" + lines[r] + "'");
    SweepPoint p;
    for (std::size_t i = 0; i < n_axes; ++i) p.assignment.push_back(parse_double(f[i]));
    const double tpr = parse_double(f[n_axes]);
    const double fpr = parse_double(f[n_axes + 1]);
    if (!std::isnan(tpr)) p.tpr = tpr;
    if (!std::isnan(fpr)) p.fpr = fpr;
    p.n_tps = static_cast<int>(parse_long(f[n_axes + 2]));
    p.n_fps = static_cast<int>(parse_long(f[n_axes + 3]));
    p.n_fns = static_cast<int>(parse_long(f[n_axes + 4]));
    p.n_tn = static_cast<int>(parse_long(f[n_axes + 5]));
    table.points.push_back(std::move(p));
  }
  return table;
}

std::string operating_point_to_json_text(const OperatingPoint& op,
                                         const std::vector<SweepAxis>& axes, double max_fpr) {
  nlohmann::ordered_json j;
  j["feasible"] = op.feasible;
  j["max_fpr"] = max_fpr;
  if (op.feasible) {
    require(op.point.assignment.size() == axes.size(),
            "operating point does not match axis count");
    j["assignment"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < axes.size(); ++i)
      j["assignment"][axes[i].name] = op.point.assignment[i];
    j["tpr"] = op.point.tpr ? nlohmann::ordered_json(*op.point.tpr)
                            : nlohmann::ordered_json(nullptr);
    j["fpr"] = op.point.fpr ? nlohmann::ordered_json(*op.point.fpr)
                            : nlohmann::ordered_json(nullptr);
    j["counts"] = {{"n_tps", op.point.n_tps},
                   {"n_fps", op.point.n_fps},
                   {"n_fns", op.point.n_fns},
                   {"n_tn", op.point.n_tn}};
  }
  return j.dump(2) + "\n";
}

OperatingPoint operating_point_from_json_text(const std::string& text,
                                              std::vector<std::string>* axis_names,
                                              double* max_fpr) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::ordered_json::exception& e) {
    throw_format_error(std::string("operating point: ") + e.what());
  }
  OperatingPoint op;
  try {
    check_keys(j, "operating point",
               {"feasible", "max_fpr", "assignment", "tpr", "fpr", "counts"});
    op.feasible = j.at("feasible").get<bool>();
    if (max_fpr) *max_fpr = j.at("max_fpr").get<double>();
    if (axis_names) axis_names->clear();
    if (op.feasible) {
      for (const auto& item : j.at("assignment").items()) {
        if (axis_names) axis_names->push_back(item.key());
        op.point.assignment.push_back(item.value().get<double>());
      }
      if (!j.at("tpr").is_null()) op.point.tpr = j.at("tpr").get<double>();
      if (!j.at("fpr").is_null()) op.point.fpr = j.at("fpr").get<double>();
      const nlohmann::ordered_json& c = j.at("counts");
      op.point.n_tps = c.at("n_tps").get<int>();
      op.point.n_fps = c.at("n_fps").get<int>();
      op.point.n_fns = c.at("n_fns").get<int>();
      op.point.n_tn = c.at("n_tn").get<int>();
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    throw_format_error(std::string("operating point: ") + e.what());
  }
  return op;
}

}  // namespace obdet
