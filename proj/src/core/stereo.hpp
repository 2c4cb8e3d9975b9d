#pragma once

#include "core/geometry.hpp"
#include "core/image.hpp"

namespace obdet {

// Local block-matching parameters. All validity checks are optional in the
// sense that their neutral settings (ratio 0, threshold 0, tolerance >=
// max_disparity) never reject a pixel.
struct StereoParams {
  int block_size = 9;            // odd, >= 3
  int max_disparity = 64;        // >= 1, inclusive upper bound of the search
  double uniqueness_ratio = 0.0; // reject unless second_best >= best*(1+ratio)
  int lr_consistency_tol = 1;    // max |d_left - d_right| in integer pixels
  double texture_threshold = 0.0;// min mean Sobel magnitude over the block
  bool subpixel = true;          // three-point parabola refinement

  void validate() const;
};

// Dense SAD block matching over a rectified pair. Pixels without a full
// block or a full disparity range (image border, left margin of width
// max_disparity + block_size/2) come out invalid; so do pixels failing the
// texture gate, the uniqueness test (second-best SAD outside a +-1
// neighborhood of the argmin) or left-right consistency. Ties in the argmin
// break toward the smaller disparity.
DisparityMap match_block(const ImageGray& left, const ImageGray& right,
                         const StereoParams& params);

// z = focal_px * baseline_m / d; d <= 0 or z beyond far_clip_m -> invalid.
DepthMap disparity_to_depth(const DisparityMap& disp, const CameraRig& rig, double far_clip_m);

// Exact algebraic inverse of disparity_to_depth on valid pixels.
DisparityMap depth_to_disparity(const DepthMap& depth, const CameraRig& rig);

// 3x3 Sobel gradient magnitude, sqrt(gx^2 + gy^2); border pixels get 0.
Image<float> sobel_magnitude(const ImageGray& img);

}  // namespace obdet
