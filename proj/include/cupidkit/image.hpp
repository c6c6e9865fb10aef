// Copyright 2026 The cupidkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not
// use this file except in compliance with the License.  You may obtain a copy
// of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.  See the
// License for the specific language governing permissions and limitations
// under the License.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace cupidkit {

// Dense H x W x C image, row-major (y, x, c). Also used for per-patch
// feature grids and pointmaps.
struct ImageF {
  int h = 0;
  int w = 0;
  int c = 0;
  Eigen::ArrayXd data;  // h * w * c entries

  ImageF() = default;
  ImageF(int height, int width, int channels)
      : h(height), w(width), c(channels),
        data(Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(height) * width *
                                  channels)) {}

  double& at(int y, int x, int ch) {
    return data[(static_cast<Eigen::Index>(y) * w + x) * c + ch];
  }
  double at(int y, int x, int ch) const {
    return data[(static_cast<Eigen::Index>(y) * w + x) * c + ch];
  }
  Eigen::Index size() const { return data.size(); }
};

// Binary H x W mask, values 0/1.
struct Mask {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int height, int width, std::uint8_t fill = 0)
      : h(height), w(width),
        data(static_cast<std::size_t>(height) * width, fill) {}

  std::uint8_t& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * w + x];
  }
  std::uint8_t at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * w + x];
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : data) n += v ? 1 : 0;
    return n;
  }
};

// RGB image in [0,1] plus a binary foreground mask.
struct ConditionImage {
  ImageF rgb;   // H x W x 3
  Mask alpha;   // H x W
};

// Per-pixel 3D points in the camera frame; valid marks foreground pixels.
struct PointMap {
  ImageF xyz;  // H x W x 3
  Mask valid;  // H x W
};

}  // namespace cupidkit
