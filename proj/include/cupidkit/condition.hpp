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
#include <utility>
#include <vector>

#include "cupidkit/cube.hpp"
#include "cupidkit/geometry.hpp"
#include "cupidkit/image.hpp"

namespace cupidkit::cond {

using cube::VoxelObject;
using geom::PixelCoord;
using geom::ProjectionMatrix;

// FeatureImage is an ImageF; OcclusionMask is a Mask with 1 = occluded
// (all-zero when no occlusion is present).
using FeatureImage = ImageF;
using OcclusionMask = Mask;

// Bilinear interpolation over the four surrounding texel centers. uv (u,v)
// in [0,1]^2 maps texel (ix, iy) centers to ((ix+0.5)/W, (iy+0.5)/H);
// samples are clamped at the image edge.
Eigen::VectorXd bilinear_sample(const FeatureImage& img, PixelCoord uv);

// Row i = bilinear_sample(img, project(P, center_i)). Propagates
// DegenerateDepth.
Eigen::MatrixXd backproject_features(const VoxelObject& obj,
                                     const ProjectionMatrix& P,
                                     const FeatureImage& img);

// Stand-in for the frozen image backbone plus the low-level convolutional
// head. Occluded pixels are zeroed in the inputs before extraction, and the
// occlusion mask rides along as an extra input channel of the conv.
struct ToyFeatureExtractor {
  int c_low = 4;
  int c_high = 8;  // fixed stat channels: mean rgb, std rgb, mean alpha, mean occ
  int patch = 14;
  Eigen::MatrixXd conv_w;  // c_low x (5 * 3 * 3), inputs rgb+alpha+mask
  Eigen::VectorXd conv_b;  // zero by default

  static ToyFeatureExtractor seeded(std::uint64_t seed, int c_low = 4);

  // Returns (high, low): high is the patch-grid descriptor image
  // (ceil(H/patch) x ceil(W/patch) x c_high), low is H x W x c_low.
  std::pair<FeatureImage, FeatureImage> extract(const ConditionImage& img,
                                                const OcclusionMask& occ) const;
};

// Per-patch attention bias: log of the unmasked-pixel ratio, clamped to
// -1e9 for fully masked patches. Images not divisible by `patch` are padded
// with masked pixels.
FeatureImage attention_mask_bias(const OcclusionMask& mask, int patch);

struct VoxelConditioning {
  Eigen::MatrixXd rows;                // L x (C_noise + C_high + C_low)
  std::vector<PixelCoord> provenance;  // uv each voxel sampled, if known
};

// Per-voxel concatenation [noisy_i | high_i | low_i]. The downstream linear
// projection lives inside the flow field. Throws ShapeMismatch on row-count
// disagreement.
VoxelConditioning assemble_conditioning(const Eigen::MatrixXd& noisy_rows,
                                        const Eigen::MatrixXd& high_rows,
                                        const Eigen::MatrixXd& low_rows);

}  // namespace cupidkit::cond
