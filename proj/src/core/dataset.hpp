#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/detector.hpp"
#include "core/evaluator.hpp"
#include "core/geometry.hpp"
#include "core/image.hpp"
#include "core/stereo.hpp"
#include "core/synth.hpp"

namespace obdet {

// ---------------------------------------------------------------------------
// Pipeline parameters: everything the detect/evaluate path needs besides the
// calibration. `source` picks the depth input per frame: "depth" reads the
// depth file, "stereo" matches the image pair, "auto" prefers the depth file
// and falls back to matching.
// ---------------------------------------------------------------------------
struct PipelineParams {
  std::string source = "auto";
  double far_clip_m = 40.0;
  StereoParams stereo;
  DetectorParams detector;

  void validate() const;
};

PipelineParams params_from_json_text(const std::string& text);
std::string params_to_json_text(const PipelineParams& params);
PipelineParams load_params(const std::string& path);
void save_params(const PipelineParams& params, const std::string& path);

// Dotted parameter keys ("stereo.block_size", "detector.max_range_m",
// "source", "far_clip_m"). A bare suffix is accepted when it names exactly
// one parameter. Unknown or ambiguous keys throw InvalidArgument.
std::vector<std::string> parameter_keys();
std::string canonical_parameter_key(const std::string& key);

// Sets a numeric parameter. Integer fields require an integral value, boolean
// fields require 0 or 1. Throws InvalidArgument for "source" (not numeric).
void set_parameter(PipelineParams& params, const std::string& canonical_key, double value);
// Sets any parameter from text; used by --set KEY=VALUE overrides.
void set_parameter_text(PipelineParams& params, const std::string& key, const std::string& value);

// ---------------------------------------------------------------------------
// Dataset manifest: one JSON file tying together calibration, annotations and
// per-frame image/depth files. All paths are relative to the manifest's
// directory. A frame needs a depth file, a left+right pair, or both.
// ---------------------------------------------------------------------------
struct FrameFiles {
  std::string id;
  std::string left;   // empty when absent
  std::string right;  // empty when absent
  std::string depth;  // empty when absent
};

struct DatasetManifest {
  std::string root;  // directory containing the manifest; not serialized
  std::string calibration;
  std::string annotations;
  bool recorded = false;               // provenance: hand-recorded data
  std::uint64_t generator_seed = 0;    // provenance: synthesized with this seed
  std::vector<FrameFiles> frames;
};

DatasetManifest manifest_from_json_text(const std::string& text);
std::string manifest_to_json_text(const DatasetManifest& manifest);
// Loads the manifest and verifies that every referenced file exists and that
// frame ids are unique. Missing files are all listed in one error.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

struct Dataset {
  DatasetManifest manifest;
  CameraRig rig;
  AnnotationSet annotations;
};

// Loads manifest + calibration + annotations and checks that the manifest and
// the annotation set cover exactly the same frame ids.
Dataset load_dataset(const std::string& manifest_path);

// ---------------------------------------------------------------------------
// Synthetic suite: a list of scene+noise specs rendered into a dataset.
// ---------------------------------------------------------------------------
struct FrameSpec {
  std::string id;  // empty: zero-padded frame index
  SceneSpec scene;
  std::optional<std::uint64_t> texture_seed;  // absent: derived from suite seed
  NoiseSpec noise;
  std::optional<std::uint64_t> noise_seed;  // absent: derived from suite seed
};

struct SuiteSpec {
  CameraRig rig;
  DrivingCorridor corridor;
  MatchConfig match;
  std::uint64_t seed = 0;
  bool emit_stereo = false;
  bool emit_depth = true;
  std::vector<FrameSpec> frames;

  void validate() const;
};

SuiteSpec suite_from_json_text(const std::string& text);
SuiteSpec load_suite(const std::string& path);

// Renders every frame of the suite into out_dir and writes manifest.json,
// calibration.json and annotations.json. `seed_override` replaces the suite
// seed. Output bytes depend only on the suite and the effective seed.
// Returns the written manifest (root set to out_dir).
DatasetManifest generate_dataset(const SuiteSpec& suite, const std::string& out_dir,
                                 std::optional<std::uint64_t> seed_override, int jobs);

// Per-frame seed derivation used when a frame spec does not pin its seeds.
std::uint64_t derived_texture_seed(std::uint64_t suite_seed, std::size_t frame_index);
std::uint64_t derived_noise_seed(std::uint64_t suite_seed, std::size_t frame_index);

// ---------------------------------------------------------------------------
// Dataset-level detection and evaluation.
// ---------------------------------------------------------------------------
struct FrameDetections {
  std::string frame_id;
  std::vector<DetectedObstacle> obstacles;
};

// Produces the depth map for one frame according to params.source.
DepthMap frame_depth(const Dataset& dataset, std::size_t frame_index,
                     const PipelineParams& params);

std::vector<FrameDetections> detect_dataset(const Dataset& dataset,
                                            const PipelineParams& params, int jobs);

struct EvaluationRun {
  std::vector<FrameResult> results;  // one per manifest frame, in order
  Summary summary;
};

EvaluationRun evaluate_dataset(const Dataset& dataset, const PipelineParams& params,
                               int jobs);
// Same, but with depth maps already computed (one per frame, in order).
EvaluationRun evaluate_with_depths(const Dataset& dataset, const std::vector<DepthMap>& depths,
                                   const PipelineParams& params, int jobs);

Report report_from_run(const EvaluationRun& run);

// Detection dump for a whole dataset ({"frames":[{"frame_id",...,"obstacles":[...]}]}).
std::string detections_file_to_json_text(const std::vector<FrameDetections>& frames);
std::vector<FrameDetections> detections_file_from_json_text(const std::string& text);

}  // namespace obdet
