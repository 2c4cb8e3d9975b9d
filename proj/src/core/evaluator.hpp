#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/detector.hpp"
#include "core/geometry.hpp"

namespace obdet {

// Hand-marked obstacle: bounding rectangle in the level-rectified image plus
// the reference distance estimated from calibration.
struct MarkedObstacle {
  RectPx rect_px;
  double z_ref_m = 0.0;

  void validate() const;
};

// Region where detections are neither rewarded nor punished (fences, bushes).
// Simple polygon in level-rectified pixels; carries no depth.
struct IndifferenceZone {
  std::vector<PixelCoord> polygon_px;

  void validate() const;
};

// Ground rectangle in front of the vehicle, centered on x = 0:
// x in [-width/2, +width/2], z in (0, length].
struct DrivingCorridor {
  double width_m = 2.5;
  double length_m = 7.0;

  void validate() const;
};

struct MatchConfig {
  double T = 0.25;  // relative depth threshold, strict

  void validate() const;
};

struct FrameAnnotation {
  std::string frame_id;
  std::vector<MarkedObstacle> marked;
  std::vector<IndifferenceZone> indifference;
};

// Dataset-level ground truth: one corridor and one match config for all frames.
struct AnnotationSet {
  DrivingCorridor corridor;
  MatchConfig match;
  std::vector<FrameAnnotation> frames;

  void validate() const;  // also enforces unique frame ids
  const FrameAnnotation* find(const std::string& frame_id) const;
};

enum class StopVerdict { TruePositiveStop, FalsePositiveStop, FalseNegativeStop, TrueNegative };
std::string to_string(StopVerdict verdict);
StopVerdict stop_verdict_from_string(const std::string& text);

enum class DetectionKind {
  TpSupport,      // matched at least one marked obstacle
  FalsePositive,  // matched nothing and touches no indifference zone
  Absorbed,       // matched nothing but intersects an indifference zone
};

struct MarkedLabel {
  bool matched = false;         // true = TP, false = FN
  std::vector<int> detections;  // indices of matching detections
};

struct DetectionLabel {
  DetectionKind kind = DetectionKind::FalsePositive;
  std::vector<int> marked;  // indices of matched marked obstacles
};

struct MatchLabels {
  std::vector<MarkedLabel> marked;
  std::vector<DetectionLabel> detections;
};

struct FrameResult {
  std::string frame_id;
  MatchLabels labels;
  std::vector<std::uint8_t> marked_in_corridor;     // per marked obstacle
  std::vector<std::uint8_t> detection_in_corridor;  // per detection
  int corridor_tp = 0, corridor_fp = 0, corridor_fn = 0;
  StopVerdict verdict = StopVerdict::TrueNegative;
};

struct Summary {
  int n_tps = 0, n_fps = 0, n_fns = 0, n_tn = 0;
  std::optional<double> tpr;  // nullopt when no frame required a stop
  std::optional<double> fpr;  // nullopt when every frame required a stop
};

// |z_ref - z_exp| / z_ref < T, strict; asymmetric in its arguments.
bool depth_condition(double z_ref_m, double z_exp_m, const MatchConfig& cfg);

// Closed-set intersection tests in the image plane.
bool rects_intersect(const RectPx& a, const RectPx& b);
bool point_in_polygon(PixelCoord p, const std::vector<PixelCoord>& polygon);
bool rect_polygon_intersect(const RectPx& rect, const std::vector<PixelCoord>& polygon);

// Many-to-many matching: marked m matches detection d iff the depth condition
// holds and their rectangles intersect. Unmatched marked -> FN; unmatched
// detections are absorbed by indifference zones or become FP.
MatchLabels match_frame(const FrameAnnotation& ann, const std::vector<DetectedObstacle>& detections,
                        const MatchConfig& cfg);

// Ground footprint interval used for the corridor test.
struct GroundSpan {
  double x_left_m = 0.0, x_right_m = 0.0;
  double z_front_m = 0.0;
};

GroundSpan marked_ground_span(const MarkedObstacle& marked, const CameraRig& rig);
GroundSpan detection_ground_span(const DetectedObstacle& detection);

bool in_corridor(const GroundSpan& span, const DrivingCorridor& corridor);

// Reduction of the corridor-restricted label counts to one stop decision.
StopVerdict classify_stop(int n_tp, int n_fp, int n_fn);

FrameResult evaluate_frame(const FrameAnnotation& ann, const std::vector<DetectedObstacle>& detections,
                           const DrivingCorridor& corridor, const MatchConfig& cfg,
                           const CameraRig& rig);

// TPR = TPS/(TPS+FNS), FPR = FPS/(FPS+TN); zero denominators surface as
// nullopt, never as silent zeros. Throws on an empty result list.
Summary aggregate(const std::vector<FrameResult>& results);

AnnotationSet annotations_from_json_text(const std::string& text);
std::string annotations_to_json_text(const AnnotationSet& set);
AnnotationSet load_annotations(const std::string& path);
void save_annotations(const AnnotationSet& set, const std::string& path);

// Report CSV: one row per frame (frame_id, verdict, corridor-restricted
// n_tp/n_fp/n_fn, empty tpr/fpr) and a final "summary" row carrying the
// aggregate counts and rates ("nan" when undefined).
inline constexpr const char* kSummaryFrameId = "summary";  // reserved frame id

struct ReportRow {
  std::string frame_id;
  StopVerdict verdict = StopVerdict::TrueNegative;
  int n_tp = 0, n_fp = 0, n_fn = 0;
};

struct Report {
  std::vector<ReportRow> rows;
  Summary summary;
};

std::string report_to_csv_text(const std::vector<FrameResult>& results);
std::string report_to_csv_text(const Report& report);
Report report_from_csv_text(const std::string& text);

}  // namespace obdet
