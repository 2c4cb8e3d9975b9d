#include <algorithm>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "core/csv.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/image_io.hpp"
#include "core/noise.hpp"
#include "test_util.hpp"

using namespace obdet;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an obdet::Error");
  return ErrorCode::Internal;
}

bool same_params(const PipelineParams& a, const PipelineParams& b) {
  return a.source == b.source && a.far_clip_m == b.far_clip_m &&
         a.stereo.block_size == b.stereo.block_size &&
         a.stereo.max_disparity == b.stereo.max_disparity &&
         a.stereo.uniqueness_ratio == b.stereo.uniqueness_ratio &&
         a.stereo.lr_consistency_tol == b.stereo.lr_consistency_tol &&
         a.stereo.texture_threshold == b.stereo.texture_threshold &&
         a.stereo.subpixel == b.stereo.subpixel &&
         a.detector.cutoff_height_m == b.detector.cutoff_height_m &&
         a.detector.tilt_allowance_deg == b.detector.tilt_allowance_deg &&
         a.detector.cell_size_m == b.detector.cell_size_m &&
         a.detector.min_points_per_cell == b.detector.min_points_per_cell &&
         a.detector.closing_kernel_cells == b.detector.closing_kernel_cells &&
         a.detector.min_area_cells == b.detector.min_area_cells &&
         a.detector.max_range_m == b.detector.max_range_m &&
         a.detector.grid_half_width_m == b.detector.grid_half_width_m;
}

SuiteSpec demo_suite() {
  SuiteSpec s;
  s.rig = obtest::small_rig();
  s.seed = 4242;
  s.emit_stereo = true;
  s.emit_depth = true;
  FrameSpec f0;
  f0.scene.boxes.push_back({0.0, 3.0, 1.0, 0.8, 1.2});
  FrameSpec f1;
  f1.scene.boxes.push_back({-0.6, 4.0, 0.8, 0.8, 1.0});
  f1.noise.dropout_prob = 0.1;
  f1.noise.depth_sigma_m = 0.05;
  FrameSpec f2;  // empty road
  s.frames = {f0, f1, f2};
  return s;
}

PipelineParams small_params() {
  PipelineParams p;
  p.far_clip_m = 30.0;
  p.stereo.block_size = 5;
  p.stereo.max_disparity = 16;
  return p;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      out[fs::relative(entry.path(), root).generic_string()] = read_text_file(entry.path().string());
  return out;
}

bool same_detections(const std::vector<DetectedObstacle>& a,
                     const std::vector<DetectedObstacle>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].z_exp_m != b[i].z_exp_m || a[i].x_left_m != b[i].x_left_m ||
        a[i].x_right_m != b[i].x_right_m || a[i].y_bottom_m != b[i].y_bottom_m ||
        a[i].y_top_m != b[i].y_top_m || a[i].area_cells != b[i].area_cells)
      return false;
    if (a[i].rect_px.u0 != b[i].rect_px.u0 || a[i].rect_px.v0 != b[i].rect_px.v0 ||
        a[i].rect_px.u1 != b[i].rect_px.u1 || a[i].rect_px.v1 != b[i].rect_px.v1)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("pipeline params JSON round trip and partial parse") {
  PipelineParams p;
  p.source = "stereo";
  p.far_clip_m = 25.0;
  p.stereo.block_size = 11;
  p.stereo.subpixel = false;
  p.detector.min_points_per_cell = 7;
  const PipelineParams q = params_from_json_text(params_to_json_text(p));
  CHECK(same_params(p, q));

  // absent fields keep their defaults
  const PipelineParams partial = params_from_json_text("{\"stereo\":{\"block_size\":7}}");
  PipelineParams expect;
  expect.stereo.block_size = 7;
  CHECK(same_params(partial, expect));
  CHECK(same_params(params_from_json_text("{}"), PipelineParams{}));
}

TEST_CASE("pipeline params parsing rejects unknown fields and bad values") {
  CHECK(code_of([] { params_from_json_text("{\"sterea\":{}}"); }) == ErrorCode::FormatError);
  CHECK(code_of([] { params_from_json_text("{\"stereo\":{\"blocksize\":5}}"); }) ==
        ErrorCode::FormatError);
  CHECK(code_of([] { params_from_json_text("{\"detector\":{\"cutoff\":1}}"); }) ==
        ErrorCode::FormatError);
  CHECK(code_of([] { params_from_json_text("{\"far_clip_m\":\"deep\"}"); }) ==
        ErrorCode::FormatError);
  CHECK(code_of([] { params_from_json_text("not json"); }) == ErrorCode::FormatError);
  // parses fine but fails validation
  CHECK(code_of([] { params_from_json_text("{\"stereo\":{\"block_size\":4}}"); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([] { params_from_json_text("{\"source\":\"lidar\"}"); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("params save/load through files") {
  obtest::TempDir dir;
  PipelineParams p;
  p.detector.cell_size_m = 0.2;
  const std::string path = dir.file("params.json");
  save_params(p, path);
  CHECK(same_params(load_params(path), p));
  CHECK(code_of([&] { load_params(dir.file("nope.json")); }) == ErrorCode::IoError);
}

TEST_CASE("parameter key canonicalization") {
  const std::vector<std::string> keys = parameter_keys();
  CHECK(keys.size() == 16);
  CHECK(std::count(keys.begin(), keys.end(), "source") == 1);
  CHECK(std::count(keys.begin(), keys.end(), "far_clip_m") == 1);
  CHECK(std::count(keys.begin(), keys.end(), "stereo.block_size") == 1);
  CHECK(std::count(keys.begin(), keys.end(), "detector.grid_half_width_m") == 1);

  for (const std::string& k : keys) CHECK(canonical_parameter_key(k) == k);
  CHECK(canonical_parameter_key("block_size") == "stereo.block_size");
  CHECK(canonical_parameter_key("subpixel") == "stereo.subpixel");
  CHECK(canonical_parameter_key("cutoff_height_m") == "detector.cutoff_height_m");
  CHECK(canonical_parameter_key("max_range_m") == "detector.max_range_m");
  CHECK(code_of([] { canonical_parameter_key("bogus"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { canonical_parameter_key(""); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("set_parameter enforces field kinds") {
  PipelineParams p;
  set_parameter(p, "stereo.max_disparity", 48.0);
  CHECK(p.stereo.max_disparity == 48);
  set_parameter(p, "detector.cell_size_m", 0.25);
  CHECK(p.detector.cell_size_m == 0.25);
  set_parameter(p, "stereo.subpixel", 0.0);
  CHECK(!p.stereo.subpixel);

  CHECK(code_of([&] { set_parameter(p, "stereo.max_disparity", 48.5); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] { set_parameter(p, "stereo.subpixel", 0.5); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { set_parameter(p, "source", 1.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { set_parameter(p, "block_size", 7.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] {
          set_parameter(p, "far_clip_m", std::numeric_limits<double>::quiet_NaN());
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("set_parameter_text accepts suffixes, bools and source strings") {
  PipelineParams p;
  set_parameter_text(p, "block_size", "9");
  CHECK(p.stereo.block_size == 9);
  set_parameter_text(p, "subpixel", "false");
  CHECK(!p.stereo.subpixel);
  set_parameter_text(p, "subpixel", "1");
  CHECK(p.stereo.subpixel);
  set_parameter_text(p, "source", "depth");
  CHECK(p.source == "depth");
  set_parameter_text(p, "detector.max_range_m", "12.5");
  CHECK(p.detector.max_range_m == 12.5);

  CHECK(code_of([&] { set_parameter_text(p, "source", "lidar"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { set_parameter_text(p, "cell_size_m", "tiny"); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] { set_parameter_text(p, "nope", "1"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("manifest JSON round trip omits absent files") {
  DatasetManifest m;
  m.calibration = "calibration.json";
  m.annotations = "annotations.json";
  m.generator_seed = 99;
  m.frames.push_back({"a", "", "", "frames/a_depth.pfm"});
  m.frames.push_back({"b", "frames/b_left.pgm", "frames/b_right.pgm", ""});
  const std::string text = manifest_to_json_text(m);
  CHECK(text.find("\"left\"") != std::string::npos);
  // the depth-only frame must not carry empty left/right entries
  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(!j.at("frames").at(0).contains("left"));
  CHECK(!j.at("frames").at(1).contains("depth"));

  const DatasetManifest back = manifest_from_json_text(text);
  CHECK(back.calibration == m.calibration);
  CHECK(back.annotations == m.annotations);
  CHECK(!back.recorded);
  CHECK(back.generator_seed == 99);
  REQUIRE(back.frames.size() == 2);
  CHECK(back.frames[0].id == "a");
  CHECK(back.frames[0].depth == "frames/a_depth.pfm");
  CHECK(back.frames[1].left == "frames/b_left.pgm");

  DatasetManifest rec;
  rec.calibration = "c";
  rec.annotations = "a";
  rec.recorded = true;
  const DatasetManifest rec2 = manifest_from_json_text(manifest_to_json_text(rec));
  CHECK(rec2.recorded);
}

TEST_CASE("manifest parsing rejects inconsistent frames and provenance") {
  const auto tweak = [](const std::function<void(nlohmann::json&)>& fn) {
    nlohmann::json j = {
        {"calibration", "c.json"},
        {"annotations", "a.json"},
        {"provenance", {{"generator_seed", 1}}},
        {"frames", {{{"id", "x"}, {"depth", "d.pfm"}}}},
    };
    fn(j);
    return code_of([&] { manifest_from_json_text(j.dump()); });
  };
  CHECK(tweak([](nlohmann::json& j) { j["frames"][0].erase("depth"); }) == ErrorCode::FormatError);
  CHECK(tweak([](nlohmann::json& j) { j["frames"][0]["left"] = "l.pgm"; }) ==
        ErrorCode::FormatError);  // left without right
  CHECK(tweak([](nlohmann::json& j) { j["frames"][0]["id"] = ""; }) == ErrorCode::FormatError);
  CHECK(tweak([](nlohmann::json& j) { j["frames"][0]["id"] = "summary"; }) ==
        ErrorCode::FormatError);
  CHECK(tweak([](nlohmann::json& j) { j["frames"].push_back(j["frames"][0]); }) ==
        ErrorCode::FormatError);  // duplicate id
  CHECK(tweak([](nlohmann::json& j) { j["frames"][0]["extra"] = 1; }) == ErrorCode::FormatError);
  CHECK(tweak([](nlohmann::json& j) { j["provenance"]["recorded"] = true; }) ==
        ErrorCode::FormatError);  // both provenance kinds
  CHECK(tweak([](nlohmann::json& j) { j["provenance"] = nlohmann::json::object(); }) ==
        ErrorCode::FormatError);  // neither
  CHECK(tweak([](nlohmann::json& j) { j["provenance"] = {{"recorded", false}}; }) ==
        ErrorCode::FormatError);
  CHECK(tweak([](nlohmann::json& j) { j.erase("calibration"); }) == ErrorCode::FormatError);
}

TEST_CASE("load_manifest lists every missing file") {
  obtest::TempDir dir;
  DatasetManifest m;
  m.calibration = "calibration.json";
  m.annotations = "annotations.json";
  m.generator_seed = 1;
  m.frames.push_back({"a", "", "", "frames/a_depth.pfm"});
  save_manifest(m, dir.file("manifest.json"));
  write_text_file("{}", dir.file("calibration.json"));  // present; content not checked here

  try {
    load_manifest(dir.file("manifest.json"));
    FAIL("expected missing-file error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
    const std::string msg = e.what();
    CHECK(msg.find("annotations.json") != std::string::npos);
    CHECK(msg.find("a_depth.pfm") != std::string::npos);
    CHECK(msg.find("calibration.json") == std::string::npos);  // present files are not listed
  }

  write_text_file("{}", dir.file("annotations.json"));
  fs::create_directories(fs::path(dir.path()) / "frames");
  write_text_file("x", dir.file("frames/a_depth.pfm"));
  const DatasetManifest loaded = load_manifest(dir.file("manifest.json"));
  CHECK(loaded.root == dir.path());
  CHECK(loaded.frames.size() == 1);
}

TEST_CASE("suite JSON parsing") {
  const std::string text = R"({
    "calibration": {"focal_px": 40.0, "principal_point": [31.5, 23.5],
                    "image_size": [64, 48], "baseline_m": 0.2,
                    "mount_height_m": 1.2, "pitch_deg": 8.0},
    "corridor": {"width_m": 3.0, "length_m": 9.0},
    "match": {"T": 0.2},
    "seed": 7,
    "image": {"emit_stereo": true, "emit_depth": false},
    "frames": [
      {"id": "f0",
       "scene": {"boxes": [{"center_x_m": 0.0, "center_z_m": 3.0,
                            "width_m": 1.0, "depth_m": 0.5, "height_m": 1.0}],
                 "reflective_floor": true, "texture_seed": 5},
       "noise": {"dropout_prob": 0.1, "seed": 11}},
      {"scene": {"boxes": []}}
    ]
  })";
  const SuiteSpec s = suite_from_json_text(text);
  CHECK(s.rig.image_width == 64);
  CHECK(s.corridor.width_m == 3.0);
  CHECK(s.corridor.length_m == 9.0);
  CHECK(s.match.T == 0.2);
  CHECK(s.seed == 7);
  CHECK(s.emit_stereo);
  CHECK(!s.emit_depth);
  REQUIRE(s.frames.size() == 2);
  CHECK(s.frames[0].id == "f0");
  CHECK(s.frames[0].scene.reflective_floor);
  REQUIRE(s.frames[0].texture_seed.has_value());
  CHECK(*s.frames[0].texture_seed == 5);
  REQUIRE(s.frames[0].noise_seed.has_value());
  CHECK(*s.frames[0].noise_seed == 11);
  CHECK(s.frames[0].noise.dropout_prob == 0.1);
  CHECK(s.frames[1].id.empty());
  CHECK(!s.frames[1].texture_seed.has_value());
  CHECK(!s.frames[1].noise_seed.has_value());

  const auto broken = [&](const std::function<void(nlohmann::json&)>& fn) {
    nlohmann::json j = nlohmann::json::parse(text);
    fn(j);
    return code_of([&] { suite_from_json_text(j.dump()); });
  };
  CHECK(broken([](nlohmann::json& j) { j.erase("calibration"); }) == ErrorCode::FormatError);
  CHECK(broken([](nlohmann::json& j) { j["image"]["emit_stereo"] = false; }) ==
        ErrorCode::FormatError);  // both sources disabled
  CHECK(broken([](nlohmann::json& j) { j["frames"][0]["scene"]["fog"] = 1; }) ==
        ErrorCode::FormatError);
  CHECK(broken([](nlohmann::json& j) { j["frames"][0]["noise"]["snow"] = 1; }) ==
        ErrorCode::FormatError);
  CHECK(broken([](nlohmann::json& j) { j["frames"][0]["scene"]["boxes"][0].erase("width_m"); }) ==
        ErrorCode::FormatError);
  // semantic failures keep their invalid-argument code
  CHECK(broken([](nlohmann::json& j) {
          j["frames"][0]["scene"]["boxes"][0]["width_m"] = -1.0;
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("per-frame seeds derive from the suite seed") {
  CHECK(derived_texture_seed(4242, 0) == hash_mix(4242, 0));
  CHECK(derived_texture_seed(4242, 3) == hash_mix(4242, 6));
  CHECK(derived_noise_seed(4242, 3) == hash_mix(4242, 7));
  CHECK(derived_texture_seed(4242, 3) != derived_noise_seed(4242, 3));
}

TEST_CASE("generate_dataset is reproducible and worker-count independent") {
  const SuiteSpec suite = demo_suite();
  obtest::TempDir dir;
  const std::string out1 = dir.file("run1");
  const std::string out2 = dir.file("run2");
  const std::string out3 = dir.file("run3");
  const std::string out4 = dir.file("run4");

  const DatasetManifest m1 = generate_dataset(suite, out1, std::nullopt, 1);
  generate_dataset(suite, out2, std::nullopt, 3);
  generate_dataset(suite, out3, 4242, 1);  // explicit override equal to the suite seed
  generate_dataset(suite, out4, 999, 1);

  CHECK(m1.generator_seed == 4242);
  REQUIRE(m1.frames.size() == 3);
  CHECK(m1.frames[0].id == "000000");
  CHECK(m1.frames[2].id == "000002");
  CHECK(m1.frames[0].depth == "frames/000000_depth.pfm");
  CHECK(m1.frames[0].left == "frames/000000_left.pgm");
  CHECK(m1.frames[0].right == "frames/000000_right.pgm");

  const auto t1 = read_tree(out1);
  CHECK(t1.size() == 3 + 3 * 3);  // manifest/calibration/annotations + 3 files per frame
  CHECK(t1 == read_tree(out2));
  CHECK(t1 == read_tree(out3));
  const auto t4 = read_tree(out4);
  CHECK(t4 != t1);
  // a different seed reseeds the texture, so the rendered views change
  CHECK(t4.at("frames/000000_left.pgm") != t1.at("frames/000000_left.pgm"));
  // frame 1 carries noise, so its corrupted depth changes too
  CHECK(t4.at("frames/000001_depth.pfm") != t1.at("frames/000001_depth.pfm"));
}

TEST_CASE("generate_dataset honors pinned seeds and rejects bad ids") {
  obtest::TempDir dir;
  SuiteSpec suite = demo_suite();
  suite.frames[0].texture_seed = 77;
  suite.frames[0].noise.dropout_prob = 0.2;  // give the noise seed something to do
  suite.frames[0].noise_seed = 78;
  generate_dataset(suite, dir.file("out"), std::nullopt, 1);

  // the pinned frame renders exactly as a direct call with those seeds
  SceneSpec scene = suite.frames[0].scene;
  scene.texture_seed = 77;
  const StereoRender sr = render_stereo_pair(scene, suite.rig);
  const ImageGray left = read_pgm8(dir.file("out/frames/000000_left.pgm"));
  CHECK(left == sr.left);
  NoiseSpec noise = suite.frames[0].noise;
  noise.seed = 78;
  const DepthMap want = corrupt(render_depth(scene, suite.rig), noise, suite.rig);
  const DepthMap got = read_depth(dir.file("out/frames/000000_depth.pfm"));
  CHECK(got.px == want.px);

  SuiteSpec dup = demo_suite();
  dup.frames[0].id = "same";
  dup.frames[1].id = "same";
  CHECK(code_of([&] { generate_dataset(dup, dir.file("dup"), std::nullopt, 1); }) ==
        ErrorCode::InvalidArgument);
  SuiteSpec reserved = demo_suite();
  reserved.frames[0].id = "summary";
  CHECK(code_of([&] { generate_dataset(reserved, dir.file("res"), std::nullopt, 1); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] { generate_dataset(demo_suite(), dir.file("j0"), std::nullopt, 0); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("load_dataset checks id agreement with the annotations") {
  obtest::TempDir dir;
  const std::string out = dir.file("ds");
  generate_dataset(demo_suite(), out, std::nullopt, 1);
  const Dataset ds = load_dataset(out + "/manifest.json");
  CHECK(ds.rig.image_width == 64);
  REQUIRE(ds.annotations.frames.size() == 3);
  CHECK(ds.annotations.frames[0].frame_id == "000000");
  CHECK(ds.annotations.frames[0].marked.size() == 1);  // the frame-0 box is in view
  CHECK(ds.annotations.frames[2].marked.empty());
  CHECK(ds.annotations.corridor.width_m == 2.5);

  // drop one annotated frame
  nlohmann::json ann = nlohmann::json::parse(read_text_file(out + "/annotations.json"));
  nlohmann::json full = ann;
  ann["frames"].erase(1);
  write_text_file(ann.dump(), out + "/annotations.json");
  try {
    load_dataset(out + "/manifest.json");
    FAIL("expected id mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FormatError);
    CHECK(std::string(e.what()).find("missing annotations for: 000001") != std::string::npos);
  }

  // an annotation with no manifest frame
  full["frames"].push_back(full["frames"][0]);
  full["frames"][3]["frame_id"] = "ghost";
  write_text_file(full.dump(), out + "/annotations.json");
  try {
    load_dataset(out + "/manifest.json");
    FAIL("expected id mismatch");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("annotations without frames: ghost") != std::string::npos);
  }
}

TEST_CASE("frame_depth resolves the configured source") {
  obtest::TempDir dir;
  const std::string out = dir.file("ds");
  generate_dataset(demo_suite(), out, std::nullopt, 1);
  const Dataset ds = load_dataset(out + "/manifest.json");
  PipelineParams p = small_params();

  p.source = "depth";
  const DepthMap from_file = frame_depth(ds, 0, p);
  CHECK(from_file.px == read_depth(out + "/frames/000000_depth.pfm").px);

  p.source = "stereo";
  const DepthMap from_pair = frame_depth(ds, 0, p);
  const DisparityMap disp = match_block(read_pgm8(out + "/frames/000000_left.pgm"),
                                        read_pgm8(out + "/frames/000000_right.pgm"), p.stereo);
  CHECK(from_pair.px == disparity_to_depth(disp, ds.rig, p.far_clip_m).px);
  CHECK(from_pair.px != from_file.px);  // matching is not the ground-truth render

  p.source = "auto";
  CHECK(frame_depth(ds, 0, p).px == from_file.px);  // depth file wins when present

  CHECK(code_of([&] { frame_depth(ds, 17, p); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("frame_depth errors when the requested source is absent") {
  obtest::TempDir dir;
  SuiteSpec stereo_only = demo_suite();
  stereo_only.emit_depth = false;
  const std::string s_out = dir.file("stereo");
  generate_dataset(stereo_only, s_out, std::nullopt, 1);
  const Dataset s_ds = load_dataset(s_out + "/manifest.json");
  PipelineParams p = small_params();
  p.source = "depth";
  CHECK(code_of([&] { frame_depth(s_ds, 0, p); }) == ErrorCode::FormatError);
  p.source = "auto";
  const DepthMap matched = frame_depth(s_ds, 0, p);  // falls back to the pair
  p.source = "stereo";
  CHECK(matched.px == frame_depth(s_ds, 0, p).px);

  SuiteSpec depth_only = demo_suite();
  depth_only.emit_stereo = false;
  const std::string d_out = dir.file("depth");
  generate_dataset(depth_only, d_out, std::nullopt, 1);
  const Dataset d_ds = load_dataset(d_out + "/manifest.json");
  CHECK(code_of([&] { frame_depth(d_ds, 0, p); }) == ErrorCode::FormatError);
}

TEST_CASE("frame_depth rejects sizes that disagree with the calibration") {
  obtest::TempDir dir;
  const std::string out = dir.file("ds");
  generate_dataset(demo_suite(), out, std::nullopt, 1);
  nlohmann::json cal = nlohmann::json::parse(read_text_file(out + "/calibration.json"));
  cal["image_size"] = {32, 24};
  cal["principal_point"] = {15.5, 11.5};
  write_text_file(cal.dump(), out + "/calibration.json");
  const Dataset ds = load_dataset(out + "/manifest.json");
  PipelineParams p = small_params();
  p.source = "depth";
  try {
    frame_depth(ds, 0, p);
    FAIL("expected size mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FormatError);
    CHECK(std::string(e.what()).find("64x48") != std::string::npos);
    CHECK(std::string(e.what()).find("32x24") != std::string::npos);
  }
}

TEST_CASE("dataset evaluation matches per-frame composition and worker counts") {
  obtest::TempDir dir;
  const std::string out = dir.file("ds");
  generate_dataset(demo_suite(), out, std::nullopt, 1);
  const Dataset ds = load_dataset(out + "/manifest.json");
  PipelineParams p = small_params();
  p.source = "depth";

  const std::vector<FrameDetections> dets = detect_dataset(ds, p, 1);
  REQUIRE(dets.size() == 3);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    CHECK(dets[i].frame_id == ds.manifest.frames[i].id);
    const std::vector<DetectedObstacle> direct =
        detect(frame_depth(ds, i, p), ds.rig, p.detector);
    CHECK(same_detections(dets[i].obstacles, direct));
  }

  const EvaluationRun run1 = evaluate_dataset(ds, p, 1);
  const EvaluationRun run4 = evaluate_dataset(ds, p, 4);
  REQUIRE(run1.results.size() == 3);
  CHECK(report_to_csv_text(report_from_run(run1)) == report_to_csv_text(report_from_run(run4)));

  std::vector<DepthMap> depths;
  for (std::size_t i = 0; i < 3; ++i) depths.push_back(frame_depth(ds, i, p));
  const EvaluationRun pre = evaluate_with_depths(ds, depths, p, 2);
  CHECK(report_to_csv_text(report_from_run(pre)) == report_to_csv_text(report_from_run(run1)));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(run1.results[i].frame_id == ds.manifest.frames[i].id);
    CHECK(run1.results[i].verdict == pre.results[i].verdict);
  }
  depths.pop_back();
  CHECK(code_of([&] { evaluate_with_depths(ds, depths, p, 1); }) == ErrorCode::InvalidArgument);

  const Report rep = report_from_run(run1);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].frame_id == "000000");
  CHECK(rep.rows[0].n_tp == run1.results[0].corridor_tp);
  CHECK(rep.summary.n_tps == run1.summary.n_tps);
}

TEST_CASE("detection dump round trips through JSON") {
  std::vector<FrameDetections> frames(2);
  frames[0].frame_id = "empty";
  frames[1].frame_id = "busy";
  DetectedObstacle d;
  d.z_exp_m = 3.25;
  d.x_left_m = -0.5;
  d.x_right_m = 0.75;
  d.y_bottom_m = 0.1;
  d.y_top_m = 1.4;
  d.rect_px = {10.0, 5.0, 20.0, 15.0};
  d.area_cells = 12;
  frames[1].obstacles.push_back(d);
  d.z_exp_m = 5.0;
  frames[1].obstacles.push_back(d);

  const std::string text = detections_file_to_json_text(frames);
  const std::vector<FrameDetections> back = detections_file_from_json_text(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].frame_id == "empty");
  CHECK(back[0].obstacles.empty());
  CHECK(back[1].frame_id == "busy");
  CHECK(same_detections(back[1].obstacles, frames[1].obstacles));

  CHECK(code_of([] { detections_file_from_json_text("{\"frames\":[{}]}"); }) ==
        ErrorCode::FormatError);
  CHECK(code_of([] { detections_file_from_json_text("{\"extra\":1,\"frames\":[]}"); }) ==
        ErrorCode::FormatError);
}
