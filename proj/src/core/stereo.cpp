#include "core/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

namespace obdet {

void StereoParams::validate() const {
  require(block_size >= 3 && block_size % 2 == 1, "block_size must be odd and >= 3");
  require(max_disparity >= 1, "max_disparity must be >= 1");
  require(uniqueness_ratio >= 0.0, "uniqueness_ratio must be >= 0");
  require(lr_consistency_tol >= 0, "lr_consistency_tol must be >= 0");
  require(texture_threshold >= 0.0, "texture_threshold must be >= 0");
}

Image<float> sobel_magnitude(const ImageGray& img) {
  Image<float> mag(img.width(), img.height(), 0.0f);
  for (int y = 1; y + 1 < img.height(); ++y) {
    const std::uint8_t* a = img.row(y - 1);
    const std::uint8_t* b = img.row(y);
    const std::uint8_t* c = img.row(y + 1);
    float* out = mag.row(y);
    for (int x = 1; x + 1 < img.width(); ++x) {
      const int gx = (a[x + 1] + 2 * b[x + 1] + c[x + 1]) - (a[x - 1] + 2 * b[x - 1] + c[x - 1]);
      const int gy = (c[x - 1] + 2 * c[x] + c[x + 1]) - (a[x - 1] + 2 * a[x] + a[x + 1]);
      out[x] = std::sqrt(static_cast<float>(gx * gx + gy * gy));
    }
  }
  return mag;
}

namespace {

// Summed-area table of the Sobel magnitude, for O(1) block-texture queries.
class BlockTexture {
public:
  BlockTexture(const ImageGray& img, int radius) : w_(img.width()), r_(radius) {
    const Image<float> mag = sobel_magnitude(img);
    ii_.assign(static_cast<std::size_t>(img.height() + 1) * (w_ + 1), 0.0);
    for (int y = 0; y < img.height(); ++y) {
      const float* row = mag.row(y);
      double acc = 0.0;
      for (int x = 0; x < w_; ++x) {
        acc += row[x];
        ii_[idx(y + 1, x + 1)] = ii_[idx(y, x + 1)] + acc;
      }
    }
    const int side = 2 * radius + 1;
    inv_area_ = 1.0 / (static_cast<double>(side) * side);
  }

  double mean(int u, int v) const {
    const double s = ii_[idx(v + r_ + 1, u + r_ + 1)] - ii_[idx(v - r_, u + r_ + 1)] -
                     ii_[idx(v + r_ + 1, u - r_)] + ii_[idx(v - r_, u - r_)];
    return s * inv_area_;
  }

private:
  std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * (w_ + 1) + x; }

  int w_, r_;
  double inv_area_;
  std::vector<double> ii_;
};

// One SAD matching pass. Cost is the per-block sum of absolute differences;
// uint16 suffices up to block 15 (15*15*255 < 65535), larger blocks take the
// uint32 instantiation.
template <typename Cost>
DisparityMap match_impl(const ImageGray& left, const ImageGray& right, const StereoParams& p) {
  const int W = left.width(), H = left.height();
  const int r = p.block_size / 2;
  const int D = p.max_disparity;
  constexpr Cost kNoCost = std::numeric_limits<Cost>::max();

  DisparityMap disp(W, H);
  const int u_begin = D + r, u_end = W - r;
  const int v_begin = r, v_end = H - r;
  if (u_begin >= u_end || v_begin >= v_end) return disp;  // no pixel has full margins

  std::unique_ptr<BlockTexture> texture;
  if (p.texture_threshold > 0.0) texture = std::make_unique<BlockTexture>(left, r);

  // colsum[d][u]: vertical SAD over the current block rows for left column u
  // against right column u-d, maintained incrementally as v advances.
  std::vector<Cost> colsum(static_cast<std::size_t>(D + 1) * W, 0);
  std::vector<Cost> cost(static_cast<std::size_t>(D + 1) * W, kNoCost);
  std::vector<Cost> rbest(W);
  std::vector<int> rbestd(W);

  for (int d = 0; d <= D; ++d) {
    Cost* col = colsum.data() + static_cast<std::size_t>(d) * W;
    for (int y = 0; y < p.block_size; ++y) {
      const std::uint8_t* lrow = left.row(y);
      const std::uint8_t* rrow = right.row(y);
      for (int u = d; u < W; ++u)
        col[u] += static_cast<Cost>(std::abs(int(lrow[u]) - int(rrow[u - d])));
    }
  }

  std::vector<Cost> best(W), second(W);
  std::vector<int> bestd(W);

  for (int v = v_begin;; ++v) {
    // horizontal rolling sum: cost[d][u] = sum of colsum[d][u-r .. u+r]
    for (int d = 0; d <= D; ++d) {
      const Cost* col = colsum.data() + static_cast<std::size_t>(d) * W;
      Cost* crow = cost.data() + static_cast<std::size_t>(d) * W;
      Cost acc = 0;
      for (int u = d; u < d + p.block_size && u < W; ++u) acc += col[u];
      for (int u = d + r; u < W - r; ++u) {
        crow[u] = acc;
        if (u + r + 1 < W) acc = static_cast<Cost>(acc + col[u + r + 1] - col[u - r]);
      }
    }

    // left-image argmin per pixel; ascending d with strict < keeps the
    // smallest disparity on ties
    std::fill(best.begin() + u_begin, best.begin() + u_end, kNoCost);
    for (int d = 0; d <= D; ++d) {
      const Cost* crow = cost.data() + static_cast<std::size_t>(d) * W;
      for (int u = u_begin; u < u_end; ++u) {
        if (crow[u] < best[u]) {
          best[u] = crow[u];
          bestd[u] = d;
        }
      }
    }

    if (p.uniqueness_ratio > 0.0) {
      std::fill(second.begin() + u_begin, second.begin() + u_end, kNoCost);
      for (int d = 0; d <= D; ++d) {
        const Cost* crow = cost.data() + static_cast<std::size_t>(d) * W;
        for (int u = u_begin; u < u_end; ++u)
          if (std::abs(d - bestd[u]) > 1 && crow[u] < second[u]) second[u] = crow[u];
      }
    }

    // right-image argmin: d_right(ur) minimizes cost[d][ur + d]
    std::fill(rbest.begin(), rbest.end(), kNoCost);
    std::fill(rbestd.begin(), rbestd.end(), -1);
    for (int d = 0; d <= D; ++d) {
      const Cost* crow = cost.data() + static_cast<std::size_t>(d) * W;
      for (int ur = r; ur + d < W - r; ++ur) {
        if (crow[ur + d] < rbest[ur]) {
          rbest[ur] = crow[ur + d];
          rbestd[ur] = d;
        }
      }
    }

    float* drow = disp.px.row(v);
    for (int u = u_begin; u < u_end; ++u) {
      const int d0 = bestd[u];
      if (texture && texture->mean(u, v) < p.texture_threshold) continue;
      if (p.uniqueness_ratio > 0.0 && second[u] != kNoCost &&
          static_cast<double>(second[u]) < static_cast<double>(best[u]) * (1.0 + p.uniqueness_ratio))
        continue;
      if (std::abs(d0 - rbestd[u - d0]) > p.lr_consistency_tol) continue;

      double d_out = d0;
      if (p.subpixel && d0 > 0 && d0 < D) {
        const double cm = cost[static_cast<std::size_t>(d0 - 1) * W + u];
        const double c0 = best[u];
        const double cp = cost[static_cast<std::size_t>(d0 + 1) * W + u];
        const double denom = cm - 2.0 * c0 + cp;
        if (denom > 0.0) d_out = d0 + (cm - cp) / (2.0 * denom);
      }
      drow[u] = static_cast<float>(d_out);
    }

    if (v + 1 >= v_end) break;

    // slide the block window one row down
    const std::uint8_t* add_l = left.row(v + 1 + r);
    const std::uint8_t* sub_l = left.row(v - r);
    const std::uint8_t* add_r = right.row(v + 1 + r);
    const std::uint8_t* sub_r = right.row(v - r);
    for (int d = 0; d <= D; ++d) {
      Cost* col = colsum.data() + static_cast<std::size_t>(d) * W;
      for (int u = d; u < W; ++u) {
        col[u] = static_cast<Cost>(col[u] +
                                   static_cast<Cost>(std::abs(int(add_l[u]) - int(add_r[u - d]))) -
                                   static_cast<Cost>(std::abs(int(sub_l[u]) - int(sub_r[u - d]))));
      }
    }
  }
  return disp;
}

}  // namespace

DisparityMap match_block(const ImageGray& left, const ImageGray& right,
                         const StereoParams& params) {
  params.validate();
  require(!left.empty() && !right.empty(), "images must be non-empty");
  require(left.same_size(right), "left/right image dimensions differ");
  require(params.block_size <= std::min(left.width(), left.height()),
          "block larger than image");
  if (params.block_size <= 15) return match_impl<std::uint16_t>(left, right, params);
  return match_impl<std::uint32_t>(left, right, params);
}

DepthMap disparity_to_depth(const DisparityMap& disp, const CameraRig& rig, double far_clip_m) {
  require(far_clip_m > 0.0, "far_clip_m must be positive");
  const double fb = rig.focal_px * rig.baseline_m;
  DepthMap depth(disp.width(), disp.height(), far_clip_m);
  for (int v = 0; v < disp.height(); ++v) {
    const float* in = disp.px.row(v);
    float* out = depth.px.row(v);
    for (int u = 0; u < disp.width(); ++u) {
      if (in[u] <= 0.0f) continue;  // invalid or infinite range
      const double z = fb / in[u];
      if (z <= far_clip_m) out[u] = static_cast<float>(z);
    }
  }
  return depth;
}

DisparityMap depth_to_disparity(const DepthMap& depth, const CameraRig& rig) {
  const double fb = rig.focal_px * rig.baseline_m;
  DisparityMap disp(depth.width(), depth.height());
  for (int v = 0; v < depth.height(); ++v) {
    const float* in = depth.px.row(v);
    float* out = disp.px.row(v);
    for (int u = 0; u < depth.width(); ++u)
      if (in[u] > 0.0f) out[u] = static_cast<float>(fb / in[u]);
  }
  return disp;
}

}  // namespace obdet
