#include "core/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "core/csv.hpp"

namespace obdet {

void MarkedObstacle::validate() const {
  require(!rect_px.degenerate(), "marked obstacle rectangle is degenerate");
  require(z_ref_m > 0.0, "z_ref_m must be positive");
}

namespace {

double orient(PixelCoord p, PixelCoord q, PixelCoord r) {
  return (q.u - p.u) * (r.v - p.v) - (q.v - p.v) * (r.u - p.u);
}

bool collinear_on_segment(PixelCoord a, PixelCoord b, PixelCoord p) {
  return std::min(a.u, b.u) <= p.u && p.u <= std::max(a.u, b.u) &&
         std::min(a.v, b.v) <= p.v && p.v <= std::max(a.v, b.v);
}

bool segments_intersect(PixelCoord a, PixelCoord b, PixelCoord c, PixelCoord d) {
  const double d1 = orient(c, d, a);
  const double d2 = orient(c, d, b);
  const double d3 = orient(a, b, c);
  const double d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && collinear_on_segment(c, d, a)) return true;
  if (d2 == 0 && collinear_on_segment(c, d, b)) return true;
  if (d3 == 0 && collinear_on_segment(a, b, c)) return true;
  if (d4 == 0 && collinear_on_segment(a, b, d)) return true;
  return false;
}

bool rect_contains(const RectPx& r, PixelCoord p) {
  return r.u0 <= p.u && p.u <= r.u1 && r.v0 <= p.v && p.v <= r.v1;
}

}  // namespace

void IndifferenceZone::validate() const {
  const std::size_t n = polygon_px.size();
  require(n >= 3, "indifference polygon needs at least 3 vertices");
  for (std::size_t i = 0; i < n; ++i) {
    const PixelCoord& a = polygon_px[i];
    const PixelCoord& b = polygon_px[(i + 1) % n];
    require(a.u != b.u || a.v != b.v, "indifference polygon has duplicate consecutive vertices");
  }
  // simplicity: non-adjacent edges must not touch
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(polygon_px[i], polygon_px[(i + 1) % n], polygon_px[j],
                             polygon_px[(j + 1) % n]))
        throw_invalid_argument("indifference polygon is self-intersecting");
    }
  }
}

void DrivingCorridor::validate() const {
  require(width_m > 0.0, "corridor width_m must be positive");
  require(length_m > 0.0, "corridor length_m must be positive");
}

void MatchConfig::validate() const {
  require(T > 0.0 && T < 1.0, "match threshold T must be in (0, 1)");
}

void AnnotationSet::validate() const {
  corridor.validate();
  match.validate();
  std::set<std::string> ids;
  for (const FrameAnnotation& f : frames) {
    require(!f.frame_id.empty(), "frame_id must be non-empty");
    require(ids.insert(f.frame_id).second, "duplicate frame_id: " + f.frame_id);
    for (const MarkedObstacle& m : f.marked) m.validate();
    for (const IndifferenceZone& z : f.indifference) z.validate();
  }
}

const FrameAnnotation* AnnotationSet::find(const std::string& frame_id) const {
  for (const FrameAnnotation& f : frames)
    if (f.frame_id == frame_id) return &f;
  return nullptr;
}

std::string to_string(StopVerdict verdict) {
  switch (verdict) {
    case StopVerdict::TruePositiveStop: return "true_positive_stop";
    case StopVerdict::FalsePositiveStop: return "false_positive_stop";
    case StopVerdict::FalseNegativeStop: return "false_negative_stop";
    case StopVerdict::TrueNegative: return "true_negative";
  }
  throw_internal("unknown stop verdict");
}

StopVerdict stop_verdict_from_string(const std::string& text) {
  if (text == "true_positive_stop") return StopVerdict::TruePositiveStop;
  if (text == "false_positive_stop") return StopVerdict::FalsePositiveStop;
  if (text == "false_negative_stop") return StopVerdict::FalseNegativeStop;
  if (text == "true_negative") return StopVerdict::TrueNegative;
  throw_format_error("unknown stop verdict: '" + text + "'");
}

bool depth_condition(double z_ref_m, double z_exp_m, const MatchConfig& cfg) {
  require(z_ref_m > 0.0 && z_exp_m > 0.0, "distances must be positive");
  cfg.validate();
  return std::abs(z_ref_m - z_exp_m) / z_ref_m < cfg.T;
}

bool rects_intersect(const RectPx& a, const RectPx& b) {
  return a.u0 <= b.u1 && b.u0 <= a.u1 && a.v0 <= b.v1 && b.v0 <= a.v1;
}

bool point_in_polygon(PixelCoord p, const std::vector<PixelCoord>& polygon) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((polygon[i].v > p.v) != (polygon[j].v > p.v)) {
      const double x_at = polygon[j].u + (polygon[i].u - polygon[j].u) * (p.v - polygon[j].v) /
                                             (polygon[i].v - polygon[j].v);
      if (p.u < x_at) inside = !inside;
    }
  }
  return inside;
}

bool rect_polygon_intersect(const RectPx& rect, const std::vector<PixelCoord>& polygon) {
  for (const PixelCoord& p : polygon)
    if (rect_contains(rect, p)) return true;
  const PixelCoord corners[4] = {
      {rect.u0, rect.v0}, {rect.u1, rect.v0}, {rect.u1, rect.v1}, {rect.u0, rect.v1}};
  for (const PixelCoord& c : corners)
    if (point_in_polygon(c, polygon)) return true;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < 4; ++i) {
    const PixelCoord& a = corners[i];
    const PixelCoord& b = corners[(i + 1) % 4];
    for (std::size_t j = 0; j < n; ++j)
      if (segments_intersect(a, b, polygon[j], polygon[(j + 1) % n])) return true;
  }
  return false;
}

MatchLabels match_frame(const FrameAnnotation& ann, const std::vector<DetectedObstacle>& detections,
                        const MatchConfig& cfg) {
  cfg.validate();
  MatchLabels labels;
  labels.marked.resize(ann.marked.size());
  labels.detections.resize(detections.size());

  for (std::size_t i = 0; i < ann.marked.size(); ++i) {
    for (std::size_t j = 0; j < detections.size(); ++j) {
      if (depth_condition(ann.marked[i].z_ref_m, detections[j].z_exp_m, cfg) &&
          rects_intersect(ann.marked[i].rect_px, detections[j].rect_px)) {
        labels.marked[i].matched = true;
        labels.marked[i].detections.push_back(static_cast<int>(j));
        labels.detections[j].marked.push_back(static_cast<int>(i));
      }
    }
  }
  for (std::size_t j = 0; j < detections.size(); ++j) {
    DetectionLabel& lab = labels.detections[j];
    if (!lab.marked.empty()) {
      lab.kind = DetectionKind::TpSupport;
      continue;
    }
    lab.kind = DetectionKind::FalsePositive;
    for (const IndifferenceZone& zone : ann.indifference) {
      if (rect_polygon_intersect(detections[j].rect_px, zone.polygon_px)) {
        lab.kind = DetectionKind::Absorbed;
        break;
      }
    }
  }
  return labels;
}

GroundSpan marked_ground_span(const MarkedObstacle& marked, const CameraRig& rig) {
  marked.validate();
  // lateral extent of the rectangle's rays at the reference distance
  const double xl = (marked.rect_px.u0 - rig.principal_u) / rig.focal_px * marked.z_ref_m;
  const double xr = (marked.rect_px.u1 - rig.principal_u) / rig.focal_px * marked.z_ref_m;
  return {xl, xr, marked.z_ref_m};
}

GroundSpan detection_ground_span(const DetectedObstacle& detection) {
  return {detection.x_left_m, detection.x_right_m, detection.z_exp_m};
}

bool in_corridor(const GroundSpan& span, const DrivingCorridor& corridor) {
  corridor.validate();
  const double half = corridor.width_m / 2.0;
  const bool lateral = span.x_left_m <= half && span.x_right_m >= -half;
  return lateral && span.z_front_m <= corridor.length_m;
}

StopVerdict classify_stop(int n_tp, int n_fp, int n_fn) {
  require(n_tp >= 0 && n_fp >= 0 && n_fn >= 0, "label counts must be non-negative");
  if (n_tp > 0) return StopVerdict::TruePositiveStop;
  if (n_fn > 0) return StopVerdict::FalseNegativeStop;
  if (n_fp > 0) return StopVerdict::FalsePositiveStop;
  return StopVerdict::TrueNegative;
}

FrameResult evaluate_frame(const FrameAnnotation& ann, const std::vector<DetectedObstacle>& detections,
                           const DrivingCorridor& corridor, const MatchConfig& cfg,
                           const CameraRig& rig) {
  FrameResult result;
  result.frame_id = ann.frame_id;
  result.labels = match_frame(ann, detections, cfg);

  result.marked_in_corridor.resize(ann.marked.size());
  for (std::size_t i = 0; i < ann.marked.size(); ++i) {
    result.marked_in_corridor[i] = in_corridor(marked_ground_span(ann.marked[i], rig), corridor);
    if (!result.marked_in_corridor[i]) continue;
    if (result.labels.marked[i].matched)
      ++result.corridor_tp;
    else
      ++result.corridor_fn;
  }
  result.detection_in_corridor.resize(detections.size());
  for (std::size_t j = 0; j < detections.size(); ++j) {
    result.detection_in_corridor[j] = in_corridor(detection_ground_span(detections[j]), corridor);
    if (result.detection_in_corridor[j] &&
        result.labels.detections[j].kind == DetectionKind::FalsePositive)
      ++result.corridor_fp;
  }
  result.verdict = classify_stop(result.corridor_tp, result.corridor_fp, result.corridor_fn);
  return result;
}

Summary aggregate(const std::vector<FrameResult>& results) {
  require(!results.empty(), "cannot aggregate an empty result list");
  Summary s;
  for (const FrameResult& r : results) {
    switch (r.verdict) {
      case StopVerdict::TruePositiveStop: ++s.n_tps; break;
      case StopVerdict::FalsePositiveStop: ++s.n_fps; break;
      case StopVerdict::FalseNegativeStop: ++s.n_fns; break;
      case StopVerdict::TrueNegative: ++s.n_tn; break;
    }
  }
  if (s.n_tps + s.n_fns > 0) s.tpr = static_cast<double>(s.n_tps) / (s.n_tps + s.n_fns);
  if (s.n_fps + s.n_tn > 0) s.fpr = static_cast<double>(s.n_fps) / (s.n_fps + s.n_tn);
  return s;
}

AnnotationSet annotations_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_format_error(std::string("annotations JSON parse error: ") + e.what());
  }
  AnnotationSet set;
  try {
    set.corridor.width_m = j.at("corridor").at("width_m").get<double>();
    set.corridor.length_m = j.at("corridor").at("length_m").get<double>();
    set.match.T = j.at("match").at("T").get<double>();
    for (const nlohmann::json& jf : j.at("frames")) {
      FrameAnnotation frame;
      frame.frame_id = jf.at("frame_id").get<std::string>();
      for (const nlohmann::json& jm : jf.at("marked")) {
        MarkedObstacle m;
        m.rect_px = {jm.at("rect_px").at(0).get<double>(), jm.at("rect_px").at(1).get<double>(),
                     jm.at("rect_px").at(2).get<double>(), jm.at("rect_px").at(3).get<double>()};
        m.z_ref_m = jm.at("z_ref_m").get<double>();
        frame.marked.push_back(m);
      }
      for (const nlohmann::json& jz : jf.at("indifference")) {
        IndifferenceZone zone;
        for (const nlohmann::json& jp : jz.at("polygon_px"))
          zone.polygon_px.push_back({jp.at(0).get<double>(), jp.at(1).get<double>()});
        frame.indifference.push_back(std::move(zone));
      }
      set.frames.push_back(std::move(frame));
    }
  } catch (const nlohmann::json::exception& e) {
    throw_format_error(std::string("annotations JSON missing/invalid field: ") + e.what());
  }
  try {
    set.validate();
  } catch (const Error& e) {
    throw_format_error(std::string("annotations invalid: ") + e.what());
  }
  return set;
}

std::string annotations_to_json_text(const AnnotationSet& set) {
  set.validate();
  nlohmann::json j;
  j["corridor"] = {{"width_m", set.corridor.width_m}, {"length_m", set.corridor.length_m}};
  j["match"] = {{"T", set.match.T}};
  j["frames"] = nlohmann::json::array();
  for (const FrameAnnotation& f : set.frames) {
    nlohmann::json jf;
    jf["frame_id"] = f.frame_id;
    jf["marked"] = nlohmann::json::array();
    for (const MarkedObstacle& m : f.marked)
      jf["marked"].push_back({{"rect_px", {m.rect_px.u0, m.rect_px.v0, m.rect_px.u1, m.rect_px.v1}},
                              {"z_ref_m", m.z_ref_m}});
    jf["indifference"] = nlohmann::json::array();
    for (const IndifferenceZone& z : f.indifference) {
      nlohmann::json pts = nlohmann::json::array();
      for (const PixelCoord& p : z.polygon_px) pts.push_back({p.u, p.v});
      jf["indifference"].push_back({{"polygon_px", std::move(pts)}});
    }
    j["frames"].push_back(std::move(jf));
  }
  return j.dump(2) + "\n";
}

AnnotationSet load_annotations(const std::string& path) {
  return annotations_from_json_text(read_text_file(path));
}

void save_annotations(const AnnotationSet& set, const std::string& path) {
  write_text_file(annotations_to_json_text(set), path);
}

std::string report_to_csv_text(const std::vector<FrameResult>& results) {
  const Summary s = aggregate(results);
  std::string text = "frame_id,verdict,n_tp,n_fp,n_fn,tpr,fpr\n";
  long total_tp = 0, total_fp = 0, total_fn = 0;
  for (const FrameResult& r : results) {
    require(r.frame_id != kSummaryFrameId, "frame_id 'summary' is reserved");
    text += join_csv_row({r.frame_id, to_string(r.verdict), std::to_string(r.corridor_tp),
                          std::to_string(r.corridor_fp), std::to_string(r.corridor_fn), "", ""});
    text += '\n';
    total_tp += r.corridor_tp;
    total_fp += r.corridor_fp;
    total_fn += r.corridor_fn;
  }
  text += join_csv_row({kSummaryFrameId, "", std::to_string(total_tp), std::to_string(total_fp),
                        std::to_string(total_fn), s.tpr ? format_double(*s.tpr) : "nan",
                        s.fpr ? format_double(*s.fpr) : "nan"});
  text += '\n';
  return text;
}

std::string report_to_csv_text(const Report& report) {
  std::string text = "frame_id,verdict,n_tp,n_fp,n_fn,tpr,fpr\n";
  long total_tp = 0, total_fp = 0, total_fn = 0;
  for (const ReportRow& r : report.rows) {
    require(r.frame_id != kSummaryFrameId, "frame_id 'summary' is reserved");
    text += join_csv_row({r.frame_id, to_string(r.verdict), std::to_string(r.n_tp),
                          std::to_string(r.n_fp), std::to_string(r.n_fn), "", ""});
    text += '\n';
    total_tp += r.n_tp;
    total_fp += r.n_fp;
    total_fn += r.n_fn;
  }
  text += join_csv_row({kSummaryFrameId, "", std::to_string(total_tp), std::to_string(total_fp),
                        std::to_string(total_fn),
                        report.summary.tpr ? format_double(*report.summary.tpr) : "nan",
                        report.summary.fpr ? format_double(*report.summary.fpr) : "nan"});
  text += '\n';
  return text;
}

Report report_from_csv_text(const std::string& text) {
  const std::vector<std::string> lines = split_lines(text);
  require(!lines.empty(), "report CSV is empty");
  if (lines[0] != "frame_id,verdict,n_tp,n_fp,n_fn,tpr,fpr")
    throw_format_error("unexpected report CSV header: '" + lines[0] + "'");
  Report report;
  bool saw_summary = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> f = split_csv_row(lines[i]);
    if (f.size() != 7) throw_format_error("report CSV row has wrong field count: '" + lines[i] + "'");
    if (f[0] == kSummaryFrameId) {
      if (saw_summary) throw_format_error("report CSV has multiple summary rows");
      saw_summary = true;
      const double tpr = parse_double(f[5]);
      const double fpr = parse_double(f[6]);
      if (!std::isnan(tpr)) report.summary.tpr = tpr;
      if (!std::isnan(fpr)) report.summary.fpr = fpr;
      continue;
    }
    if (saw_summary) throw_format_error("report CSV has rows after the summary row");
    ReportRow row;
    row.frame_id = f[0];
    row.verdict = stop_verdict_from_string(f[1]);
    row.n_tp = static_cast<int>(parse_long(f[2]));
    row.n_fp = static_cast<int>(parse_long(f[3]));
    row.n_fn = static_cast<int>(parse_long(f[4]));
    switch (row.verdict) {
      case StopVerdict::TruePositiveStop: ++report.summary.n_tps; break;
      case StopVerdict::FalsePositiveStop: ++report.summary.n_fps; break;
      case StopVerdict::FalseNegativeStop: ++report.summary.n_fns; break;
      case StopVerdict::TrueNegative: ++report.summary.n_tn; break;
    }
    report.rows.push_back(std::move(row));
  }
  if (!saw_summary) throw_format_error("report CSV is missing the summary row");
  return report;
}

}  // namespace obdet
