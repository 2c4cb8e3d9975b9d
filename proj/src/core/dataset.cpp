#include "core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "core/csv.hpp"
#include "core/image_io.hpp"
#include "core/noise.hpp"
#include "core/threading.hpp"
#include "json.hpp"

namespace obdet {

namespace fs = std::filesystem;

namespace {

// Rejects unknown keys so config typos fail loudly instead of silently
// falling back to defaults.
void check_keys(const nlohmann::json& j, const std::string& ctx,
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

[[noreturn]] void bad_field(const std::string& ctx, const nlohmann::json::exception& e) {
  throw_format_error(ctx + ": " + e.what());
}

}  // namespace

// ---------------------------------------------------------------------------
// Pipeline parameters
// ---------------------------------------------------------------------------

void PipelineParams::validate() const {
  require(source == "auto" || source == "stereo" || source == "depth",
          "source must be one of auto|stereo|depth");
  require(far_clip_m > 0.0, "far_clip_m must be positive");
  stereo.validate();
  detector.validate();
}

namespace {

enum class FieldKind { Int, Double, Bool };

struct ParamField {
  const char* key;
  FieldKind kind;
  void (*set)(PipelineParams&, double);
};

const std::vector<ParamField>& param_fields() {
  static const std::vector<ParamField> fields = {
      {"far_clip_m", FieldKind::Double, [](PipelineParams& p, double v) { p.far_clip_m = v; }},
      {"stereo.block_size", FieldKind::Int,
       [](PipelineParams& p, double v) { p.stereo.block_size = static_cast<int>(v); }},
      {"stereo.max_disparity", FieldKind::Int,
       [](PipelineParams& p, double v) { p.stereo.max_disparity = static_cast<int>(v); }},
      {"stereo.uniqueness_ratio", FieldKind::Double,
       [](PipelineParams& p, double v) { p.stereo.uniqueness_ratio = v; }},
      {"stereo.lr_consistency_tol", FieldKind::Int,
       [](PipelineParams& p, double v) { p.stereo.lr_consistency_tol = static_cast<int>(v); }},
      {"stereo.texture_threshold", FieldKind::Double,
       [](PipelineParams& p, double v) { p.stereo.texture_threshold = v; }},
      {"stereo.subpixel", FieldKind::Bool,
       [](PipelineParams& p, double v) { p.stereo.subpixel = v != 0.0; }},
      {"detector.cutoff_height_m", FieldKind::Double,
       [](PipelineParams& p, double v) { p.detector.cutoff_height_m = v; }},
      {"detector.tilt_allowance_deg", FieldKind::Double,
       [](PipelineParams& p, double v) { p.detector.tilt_allowance_deg = v; }},
      {"detector.cell_size_m", FieldKind::Double,
       [](PipelineParams& p, double v) { p.detector.cell_size_m = v; }},
      {"detector.min_points_per_cell", FieldKind::Int,
       [](PipelineParams& p, double v) { p.detector.min_points_per_cell = static_cast<int>(v); }},
      {"detector.closing_kernel_cells", FieldKind::Int,
       [](PipelineParams& p, double v) { p.detector.closing_kernel_cells = static_cast<int>(v); }},
      {"detector.min_area_cells", FieldKind::Int,
       [](PipelineParams& p, double v) { p.detector.min_area_cells = static_cast<int>(v); }},
      {"detector.max_range_m", FieldKind::Double,
       [](PipelineParams& p, double v) { p.detector.max_range_m = v; }},
      {"detector.grid_half_width_m", FieldKind::Double,
       [](PipelineParams& p, double v) { p.detector.grid_half_width_m = v; }},
  };
  return fields;
}

const ParamField* find_field(const std::string& canonical) {
  for (const ParamField& f : param_fields())
    if (canonical == f.key) return &f;
  return nullptr;
}

}  // namespace

std::vector<std::string> parameter_keys() {
  std::vector<std::string> keys = {"source"};
  for (const ParamField& f : param_fields()) keys.push_back(f.key);
  return keys;
}

std::string canonical_parameter_key(const std::string& key) {
  const std::vector<std::string> keys = parameter_keys();
  for (const std::string& k : keys)
    if (k == key) return k;
  // Accept a bare field name when it identifies exactly one parameter.
  std::vector<std::string> hits;
  for (const std::string& k : keys) {
    const std::size_t dot = k.rfind('.');
    if (dot != std::string::npos && k.substr(dot + 1) == key) hits.push_back(k);
  }
  if (hits.size() == 1) return hits[0];
  if (hits.size() > 1) {
    std::string msg = "ambiguous parameter \"" + key + "\" (candidates:";
    for (const std::string& h : hits) msg += " " + h;
    throw_invalid_argument(msg + ")");
  }
  throw_invalid_argument("unknown parameter \"" + key + "\"");
}

void set_parameter(PipelineParams& params, const std::string& canonical_key, double value) {
  const ParamField* f = find_field(canonical_key);
  if (!f) {
    if (canonical_key == "source")
      throw_invalid_argument("parameter \"source\" is not numeric");
    throw_invalid_argument("unknown parameter \"" + canonical_key + "\"");
  }
  if (!std::isfinite(value))
    throw_invalid_argument("parameter \"" + canonical_key + "\" must be finite");
  switch (f->kind) {
    case FieldKind::Int:
      if (std::abs(value - std::round(value)) > 1e-9)
        throw_invalid_argument("parameter \"" + canonical_key + "\" must be an integer, got " +
                               format_double(value));
      f->set(params, std::round(value));
      break;
    case FieldKind::Bool:
      if (value != 0.0 && value != 1.0)
        throw_invalid_argument("parameter \"" + canonical_key + "\" must be 0 or 1");
      f->set(params, value);
      break;
    case FieldKind::Double:
      f->set(params, value);
      break;
  }
}

void set_parameter_text(PipelineParams& params, const std::string& key,
                        const std::string& value) {
  const std::string canonical = canonical_parameter_key(key);
  if (canonical == "source") {
    params.source = value;
    require(value == "auto" || value == "stereo" || value == "depth",
            "source must be one of auto|stereo|depth, got \"" + value + "\"");
    return;
  }
  const ParamField* f = find_field(canonical);
  if (f->kind == FieldKind::Bool && (value == "true" || value == "false")) {
    set_parameter(params, canonical, value == "true" ? 1.0 : 0.0);
    return;
  }
  double v = 0.0;
  try {
    v = parse_double(value);
  } catch (const Error&) {
    throw_invalid_argument("parameter \"" + key + "\": cannot parse value \"" + value + "\"");
  }
  set_parameter(params, canonical, v);
}

PipelineParams params_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_format_error(std::string("params: ") + e.what());
  }
  PipelineParams p;
  try {
    check_keys(j, "params", {"source", "far_clip_m", "stereo", "detector"});
    p.source = j.value("source", p.source);
    p.far_clip_m = j.value("far_clip_m", p.far_clip_m);
    if (j.contains("stereo")) {
      const nlohmann::json& s = j.at("stereo");
      check_keys(s, "params.stereo",
                 {"block_size", "max_disparity", "uniqueness_ratio", "lr_consistency_tol",
                  "texture_threshold", "subpixel"});
      p.stereo.block_size = s.value("block_size", p.stereo.block_size);
      p.stereo.max_disparity = s.value("max_disparity", p.stereo.max_disparity);
      p.stereo.uniqueness_ratio = s.value("uniqueness_ratio", p.stereo.uniqueness_ratio);
      p.stereo.lr_consistency_tol = s.value("lr_consistency_tol", p.stereo.lr_consistency_tol);
      p.stereo.texture_threshold = s.value("texture_threshold", p.stereo.texture_threshold);
      p.stereo.subpixel = s.value("subpixel", p.stereo.subpixel);
    }
    if (j.contains("detector")) {
      const nlohmann::json& d = j.at("detector");
      check_keys(d, "params.detector",
                 {"cutoff_height_m", "tilt_allowance_deg", "cell_size_m", "min_points_per_cell",
                  "closing_kernel_cells", "min_area_cells", "max_range_m", "grid_half_width_m"});
      p.detector.cutoff_height_m = d.value("cutoff_height_m", p.detector.cutoff_height_m);
      p.detector.tilt_allowance_deg = d.value("tilt_allowance_deg", p.detector.tilt_allowance_deg);
      p.detector.cell_size_m = d.value("cell_size_m", p.detector.cell_size_m);
      p.detector.min_points_per_cell =
          d.value("min_points_per_cell", p.detector.min_points_per_cell);
      p.detector.closing_kernel_cells =
          d.value("closing_kernel_cells", p.detector.closing_kernel_cells);
      p.detector.min_area_cells = d.value("min_area_cells", p.detector.min_area_cells);
      p.detector.max_range_m = d.value("max_range_m", p.detector.max_range_m);
      p.detector.grid_half_width_m = d.value("grid_half_width_m", p.detector.grid_half_width_m);
    }
  } catch (const nlohmann::json::exception& e) {
    bad_field("params", e);
  }
  p.validate();
  return p;
}

std::string params_to_json_text(const PipelineParams& p) {
  nlohmann::json j;
  j["source"] = p.source;
  j["far_clip_m"] = p.far_clip_m;
  j["stereo"] = {{"block_size", p.stereo.block_size},
                 {"max_disparity", p.stereo.max_disparity},
                 {"uniqueness_ratio", p.stereo.uniqueness_ratio},
                 {"lr_consistency_tol", p.stereo.lr_consistency_tol},
                 {"texture_threshold", p.stereo.texture_threshold},
                 {"subpixel", p.stereo.subpixel}};
  j["detector"] = {{"cutoff_height_m", p.detector.cutoff_height_m},
                   {"tilt_allowance_deg", p.detector.tilt_allowance_deg},
                   {"cell_size_m", p.detector.cell_size_m},
                   {"min_points_per_cell", p.detector.min_points_per_cell},
                   {"closing_kernel_cells", p.detector.closing_kernel_cells},
                   {"min_area_cells", p.detector.min_area_cells},
                   {"max_range_m", p.detector.max_range_m},
                   {"grid_half_width_m", p.detector.grid_half_width_m}};
  return j.dump(2) + "\n";
}

PipelineParams load_params(const std::string& path) {
  return params_from_json_text(read_text_file(path));
}

void save_params(const PipelineParams& params, const std::string& path) {
  write_text_file(params_to_json_text(params), path);
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

DatasetManifest manifest_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_format_error(std::string("manifest: ") + e.what());
  }
  DatasetManifest m;
  try {
    check_keys(j, "manifest", {"calibration", "annotations", "provenance", "frames"});
    m.calibration = j.at("calibration").get<std::string>();
    m.annotations = j.at("annotations").get<std::string>();
    const nlohmann::json& prov = j.at("provenance");
    check_keys(prov, "manifest.provenance", {"recorded", "generator_seed"});
    if (prov.contains("recorded") == prov.contains("generator_seed"))
      throw_format_error(
          "manifest.provenance: exactly one of \"recorded\" and \"generator_seed\" expected");
    if (prov.contains("recorded")) {
      m.recorded = prov.at("recorded").get<bool>();
      if (!m.recorded)
        throw_format_error("manifest.provenance.recorded: only true is meaningful");
    } else {
      m.recorded = false;
      m.generator_seed = prov.at("generator_seed").get<std::uint64_t>();
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < j.at("frames").size(); ++i) {
      const nlohmann::json& jf = j.at("frames").at(i);
      const std::string ctx = "manifest.frames[" + std::to_string(i) + "]";
      check_keys(jf, ctx, {"id", "left", "right", "depth"});
      FrameFiles f;
      f.id = jf.at("id").get<std::string>();
      if (f.id.empty()) throw_format_error(ctx + ".id: must not be empty");
      if (f.id == kSummaryFrameId)
        throw_format_error(ctx + ".id: \"" + kSummaryFrameId + "\" is reserved");
      if (!ids.insert(f.id).second)
        throw_format_error(ctx + ".id: duplicate frame id \"" + f.id + "\"");
      f.left = jf.value("left", std::string());
      f.right = jf.value("right", std::string());
      f.depth = jf.value("depth", std::string());
      if (f.left.empty() != f.right.empty())
        throw_format_error(ctx + ": left and right must be given together");
      if (f.depth.empty() && f.left.empty())
        throw_format_error(ctx + ": needs a depth file or a stereo pair");
      m.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    bad_field("manifest", e);
  }
  return m;
}

std::string manifest_to_json_text(const DatasetManifest& m) {
  nlohmann::json j;
  j["calibration"] = m.calibration;
  j["annotations"] = m.annotations;
  if (m.recorded)
    j["provenance"] = {{"recorded", true}};
  else
    j["provenance"] = {{"generator_seed", m.generator_seed}};
  j["frames"] = nlohmann::json::array();
  for (const FrameFiles& f : m.frames) {
    nlohmann::json jf;
    jf["id"] = f.id;
    if (!f.left.empty()) jf["left"] = f.left;
    if (!f.right.empty()) jf["right"] = f.right;
    if (!f.depth.empty()) jf["depth"] = f.depth;
    j["frames"].push_back(std::move(jf));
  }
  return j.dump(2) + "\n";
}

DatasetManifest load_manifest(const std::string& path) {
  DatasetManifest m = manifest_from_json_text(read_text_file(path));
  m.root = fs::path(path).parent_path().string();
  std::vector<std::string> missing;
  auto probe = [&](const std::string& rel) {
    if (rel.empty()) return;
    const fs::path p = fs::path(m.root) / rel;
    if (!fs::exists(p)) missing.push_back(p.string());
  };
  probe(m.calibration);
  probe(m.annotations);
  for (const FrameFiles& f : m.frames) {
    probe(f.left);
    probe(f.right);
    probe(f.depth);
  }
  if (!missing.empty()) {
    std::string msg = "manifest " + path + ": missing files:";
    for (const std::string& p : missing) msg += "\n  " + p;
    throw_io_error(msg);
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  write_text_file(manifest_to_json_text(manifest), path);
}

Dataset load_dataset(const std::string& manifest_path) {
  Dataset ds;
  ds.manifest = load_manifest(manifest_path);
  ds.rig = load_calibration((fs::path(ds.manifest.root) / ds.manifest.calibration).string());
  ds.annotations = load_annotations((fs::path(ds.manifest.root) / ds.manifest.annotations).string());
  ds.annotations.validate();

  std::set<std::string> manifest_ids, annotation_ids;
  for (const FrameFiles& f : ds.manifest.frames) manifest_ids.insert(f.id);
  for (const FrameAnnotation& a : ds.annotations.frames) annotation_ids.insert(a.frame_id);
  std::vector<std::string> unannotated, orphaned;
  std::set_difference(manifest_ids.begin(), manifest_ids.end(), annotation_ids.begin(),
                      annotation_ids.end(), std::back_inserter(unannotated));
  std::set_difference(annotation_ids.begin(), annotation_ids.end(), manifest_ids.begin(),
                      manifest_ids.end(), std::back_inserter(orphaned));
  if (!unannotated.empty() || !orphaned.empty()) {
    std::string msg = "dataset " + manifest_path + ": frame ids out of sync;";
    if (!unannotated.empty()) {
      msg += " missing annotations for:";
      for (const std::string& id : unannotated) msg += " " + id;
      msg += ";";
    }
    if (!orphaned.empty()) {
      msg += " annotations without frames:";
      for (const std::string& id : orphaned) msg += " " + id;
    }
    throw_format_error(msg);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Suite parsing
// ---------------------------------------------------------------------------

void SuiteSpec::validate() const {
  rig.validate();
  corridor.validate();
  match.validate();
  for (const FrameSpec& f : frames) {
    f.scene.validate();
    f.noise.validate();
  }
}

namespace {

BoxSpec box_from_json(const nlohmann::json& jb, const std::string& ctx) {
  check_keys(jb, ctx, {"center_x_m", "center_z_m", "width_m", "depth_m", "height_m"});
  BoxSpec b;
  b.center_x_m = jb.at("center_x_m").get<double>();
  b.center_z_m = jb.at("center_z_m").get<double>();
  b.width_m = jb.at("width_m").get<double>();
  b.depth_m = jb.at("depth_m").get<double>();
  b.height_m = jb.at("height_m").get<double>();
  return b;
}

}  // namespace

SuiteSpec suite_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_format_error(std::string("suite: ") + e.what());
  }
  SuiteSpec suite;
  try {
    check_keys(j, "suite", {"calibration", "corridor", "match", "seed", "image", "frames"});
    suite.rig = calibration_from_json_text(j.at("calibration").dump());
    if (j.contains("corridor")) {
      const nlohmann::json& jc = j.at("corridor");
      check_keys(jc, "suite.corridor", {"width_m", "length_m"});
      suite.corridor.width_m = jc.value("width_m", suite.corridor.width_m);
      suite.corridor.length_m = jc.value("length_m", suite.corridor.length_m);
    }
    if (j.contains("match")) {
      const nlohmann::json& jm = j.at("match");
      check_keys(jm, "suite.match", {"T"});
      suite.match.T = jm.value("T", suite.match.T);
    }
    suite.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("image")) {
      const nlohmann::json& ji = j.at("image");
      check_keys(ji, "suite.image", {"emit_stereo", "emit_depth"});
      suite.emit_stereo = ji.value("emit_stereo", suite.emit_stereo);
      suite.emit_depth = ji.value("emit_depth", suite.emit_depth);
    }
    if (!suite.emit_stereo && !suite.emit_depth)
      throw_format_error("suite.image: emit_stereo and emit_depth cannot both be false");
    for (std::size_t i = 0; i < j.at("frames").size(); ++i) {
      const nlohmann::json& jf = j.at("frames").at(i);
      const std::string ctx = "suite.frames[" + std::to_string(i) + "]";
      check_keys(jf, ctx, {"id", "scene", "noise"});
      FrameSpec f;
      f.id = jf.value("id", std::string());
      const nlohmann::json& js = jf.at("scene");
      check_keys(js, ctx + ".scene",
                 {"boxes", "reflective_floor", "texture_seed", "low_freq_texture"});
      for (std::size_t b = 0; b < js.at("boxes").size(); ++b)
        f.scene.boxes.push_back(box_from_json(
            js.at("boxes").at(b), ctx + ".scene.boxes[" + std::to_string(b) + "]"));
      f.scene.reflective_floor = js.value("reflective_floor", false);
      f.scene.low_freq_texture = js.value("low_freq_texture", false);
      if (js.contains("texture_seed")) f.texture_seed = js.at("texture_seed").get<std::uint64_t>();
      if (jf.contains("noise")) {
        const nlohmann::json& jn = jf.at("noise");
        check_keys(jn, ctx + ".noise",
                   {"dropout_prob", "depth_sigma_m", "reflection_prob", "seed"});
        f.noise.dropout_prob = jn.value("dropout_prob", 0.0);
        f.noise.depth_sigma_m = jn.value("depth_sigma_m", 0.0);
        f.noise.reflection_prob = jn.value("reflection_prob", 0.0);
        if (jn.contains("seed")) f.noise_seed = jn.at("seed").get<std::uint64_t>();
      }
      suite.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    bad_field("suite", e);
  }
  // Seeds are resolved at generation time; validate the rest now.
  suite.validate();
  return suite;
}

SuiteSpec load_suite(const std::string& path) { return suite_from_json_text(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

std::uint64_t derived_texture_seed(std::uint64_t suite_seed, std::size_t frame_index) {
  return hash_mix(suite_seed, 2 * static_cast<std::uint64_t>(frame_index));
}

std::uint64_t derived_noise_seed(std::uint64_t suite_seed, std::size_t frame_index) {
  return hash_mix(suite_seed, 2 * static_cast<std::uint64_t>(frame_index) + 1);
}

DatasetManifest generate_dataset(const SuiteSpec& suite, const std::string& out_dir,
                                 std::optional<std::uint64_t> seed_override, int jobs) {
  suite.validate();
  require(jobs >= 1, "jobs must be >= 1");
  const std::uint64_t seed = seed_override ? *seed_override : suite.seed;

  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "frames", ec);
  if (ec) throw_io_error("cannot create " + out_dir + ": " + ec.message());

  const std::size_t n = suite.frames.size();
  std::vector<FrameFiles> files(n);
  std::vector<FrameAnnotation> annotations(n);

  // Resolve frame ids up front so duplicates fail before any rendering.
  std::set<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    std::string id = suite.frames[i].id;
    if (id.empty()) {
      id = std::to_string(i);
      if (id.size() < 6) id.insert(0, 6 - id.size(), '0');
    }
    if (id == kSummaryFrameId)
      throw_invalid_argument("frame id \"" + id + "\" is reserved");
    if (!ids.insert(id).second) throw_invalid_argument("duplicate frame id \"" + id + "\"");
    files[i].id = std::move(id);
  }

  parallel_for(n, jobs, [&](std::size_t i) {
    const FrameSpec& spec = suite.frames[i];
    SceneSpec scene = spec.scene;
    scene.texture_seed = spec.texture_seed ? *spec.texture_seed : derived_texture_seed(seed, i);
    NoiseSpec noise = spec.noise;
    noise.seed = spec.noise_seed ? *spec.noise_seed : derived_noise_seed(seed, i);

    const std::string stem = "frames/" + files[i].id;
    if (suite.emit_depth) {
      const DepthMap depth = corrupt(render_depth(scene, suite.rig), noise, suite.rig);
      files[i].depth = stem + "_depth.pfm";
      write_depth_pfm(depth, (fs::path(out_dir) / files[i].depth).string());
    }
    if (suite.emit_stereo) {
      const StereoRender sr = render_stereo_pair(scene, suite.rig);
      files[i].left = stem + "_left.pgm";
      files[i].right = stem + "_right.pgm";
      write_pgm8(sr.left, (fs::path(out_dir) / files[i].left).string());
      write_pgm8(sr.right, (fs::path(out_dir) / files[i].right).string());
    }
    annotations[i] = annotate(scene, suite.rig);
    annotations[i].frame_id = files[i].id;
  });

  AnnotationSet ann_set;
  ann_set.corridor = suite.corridor;
  ann_set.match = suite.match;
  ann_set.frames = std::move(annotations);
  save_annotations(ann_set, (fs::path(out_dir) / "annotations.json").string());
  save_calibration(suite.rig, (fs::path(out_dir) / "calibration.json").string());

  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.calibration = "calibration.json";
  manifest.annotations = "annotations.json";
  manifest.recorded = false;
  manifest.generator_seed = seed;
  manifest.frames = std::move(files);
  save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

// ---------------------------------------------------------------------------
// Detection / evaluation over a dataset
// ---------------------------------------------------------------------------

DepthMap frame_depth(const Dataset& dataset, std::size_t frame_index,
                     const PipelineParams& params) {
  params.validate();
  require(frame_index < dataset.manifest.frames.size(), "frame index out of range");
  const FrameFiles& f = dataset.manifest.frames[frame_index];
  const fs::path root(dataset.manifest.root);

  bool use_depth;
  if (params.source == "depth") {
    if (f.depth.empty())
      throw_format_error("frame " + f.id + ": no depth file but source is \"depth\"");
    use_depth = true;
  } else if (params.source == "stereo") {
    if (f.left.empty())
      throw_format_error("frame " + f.id + ": no stereo pair but source is \"stereo\"");
    use_depth = false;
  } else {
    use_depth = !f.depth.empty();
  }

  DepthMap depth;
  if (use_depth) {
    depth = read_depth((root / f.depth).string());
  } else {
    dataset.rig.validate();  // stereo path needs a positive baseline
    const ImageGray left = read_pgm8((root / f.left).string());
    const ImageGray right = read_pgm8((root / f.right).string());
    const DisparityMap disp = match_block(left, right, params.stereo);
    depth = disparity_to_depth(disp, dataset.rig, params.far_clip_m);
  }
  if (depth.width() != dataset.rig.image_width || depth.height() != dataset.rig.image_height)
    throw_format_error("frame " + f.id + ": depth size " + std::to_string(depth.width()) + "x" +
                       std::to_string(depth.height()) + " does not match calibration " +
                       std::to_string(dataset.rig.image_width) + "x" +
                       std::to_string(dataset.rig.image_height));
  return depth;
}

std::vector<FrameDetections> detect_dataset(const Dataset& dataset, const PipelineParams& params,
                                            int jobs) {
  params.validate();
  const std::size_t n = dataset.manifest.frames.size();
  std::vector<FrameDetections> out(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    out[i].frame_id = dataset.manifest.frames[i].id;
    const DepthMap depth = frame_depth(dataset, i, params);
    out[i].obstacles = detect(depth, dataset.rig, params.detector);
  });
  return out;
}

namespace {

FrameResult evaluate_one(const Dataset& dataset, const std::string& frame_id,
                         const std::vector<DetectedObstacle>& detections) {
  const FrameAnnotation* ann = dataset.annotations.find(frame_id);
  if (!ann) throw_internal("no annotation for frame " + frame_id);
  return evaluate_frame(*ann, detections, dataset.annotations.corridor, dataset.annotations.match,
                        dataset.rig);
}

}  // namespace

EvaluationRun evaluate_dataset(const Dataset& dataset, const PipelineParams& params, int jobs) {
  params.validate();
  const std::size_t n = dataset.manifest.frames.size();
  EvaluationRun run;
  run.results.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const DepthMap depth = frame_depth(dataset, i, params);
    const std::vector<DetectedObstacle> det = detect(depth, dataset.rig, params.detector);
    run.results[i] = evaluate_one(dataset, dataset.manifest.frames[i].id, det);
  });
  run.summary = aggregate(run.results);
  return run;
}

EvaluationRun evaluate_with_depths(const Dataset& dataset, const std::vector<DepthMap>& depths,
                                   const PipelineParams& params, int jobs) {
  params.validate();
  const std::size_t n = dataset.manifest.frames.size();
  require(depths.size() == n, "depth count does not match frame count");
  EvaluationRun run;
  run.results.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const std::vector<DetectedObstacle> det = detect(depths[i], dataset.rig, params.detector);
    run.results[i] = evaluate_one(dataset, dataset.manifest.frames[i].id, det);
  });
  run.summary = aggregate(run.results);
  return run;
}

Report report_from_run(const EvaluationRun& run) {
  Report report;
  for (const FrameResult& r : run.results) {
    ReportRow row;
    row.frame_id = r.frame_id;
    row.verdict = r.verdict;
    row.n_tp = r.corridor_tp;
    row.n_fp = r.corridor_fp;
    row.n_fn = r.corridor_fn;
    report.rows.push_back(std::move(row));
  }
  report.summary = run.summary;
  return report;
}

// ---------------------------------------------------------------------------
// Detection dump
// ---------------------------------------------------------------------------

std::string detections_file_to_json_text(const std::vector<FrameDetections>& frames) {
  nlohmann::json j;
  j["frames"] = nlohmann::json::array();
  for (const FrameDetections& f : frames) {
    nlohmann::json jf;
    jf["frame_id"] = f.frame_id;
    jf["obstacles"] = nlohmann::json::parse(detections_to_json_text(f.obstacles));
    j["frames"].push_back(std::move(jf));
  }
  return j.dump(2) + "\n";
}

std::vector<FrameDetections> detections_file_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_format_error(std::string("detections: ") + e.what());
  }
  std::vector<FrameDetections> out;
  try {
    check_keys(j, "detections", {"frames"});
    for (const nlohmann::json& jf : j.at("frames")) {
      FrameDetections f;
      f.frame_id = jf.at("frame_id").get<std::string>();
      f.obstacles = detections_from_json_text(jf.at("obstacles").dump());
      out.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    bad_field("detections", e);
  }
  return out;
}

}  // namespace obdet
