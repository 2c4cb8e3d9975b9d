#pragma once

#include <string>

#include "core/image.hpp"

namespace obdet {

// File conventions:
//  - grayscale images: 8-bit binary PGM (P5)
//  - depth maps: single-channel PFM, little-endian float32 meters (scale
//    header -1.0), invalid = 0; or 16-bit PGM in millimeters, invalid = 0
//  - disparity maps: single-channel PFM in pixels, invalid = -1
// PFM rows are stored bottom-to-top, as the format prescribes.

ImageGray read_pgm8(const std::string& path);
void write_pgm8(const ImageGray& img, const std::string& path);

DepthMap read_depth_pfm(const std::string& path);
void write_depth_pfm(const DepthMap& depth, const std::string& path);

DepthMap read_depth_pgm16(const std::string& path);
void write_depth_pgm16(const DepthMap& depth, const std::string& path);

// dispatch on extension: .pfm or .pgm
DepthMap read_depth(const std::string& path);

DisparityMap read_disparity_pfm(const std::string& path);
void write_disparity_pfm(const DisparityMap& disp, const std::string& path);

}  // namespace obdet
