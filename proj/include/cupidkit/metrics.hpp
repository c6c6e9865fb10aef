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
#include <map>
#include <span>

#include "cupidkit/cube.hpp"
#include "cupidkit/geometry.hpp"
#include "cupidkit/image.hpp"

namespace cupidkit::metrics {

struct GeometryReport {
  double mask_iou = 0.0;
  double chamfer = 0.0;  // sum of the two directed mean distances, unsquared
  std::map<double, double> fscore_at;  // threshold -> score
};

struct ImageReport {
  double psnr = 0.0;  // dB, capped at 100
  double ssim = 0.0;
};

struct PoseReport {
  double rotation_error_deg = 0.0;
  double translation_error = 0.0;
  double focal_rel_error = 0.0;
};

// Symmetric Chamfer distance: mean nearest distance a->b plus b->a.
// Throws EmptySet.
double chamfer(std::span<const Eigen::Vector3d> a,
               std::span<const Eigen::Vector3d> b);

// Harmonic mean of precision (fraction of a within thresh of b) and recall;
// zero when both vanish. Throws EmptySet.
double fscore(std::span<const Eigen::Vector3d> a,
              std::span<const Eigen::Vector3d> b, double thresh);

// |a and b| / |a or b|; 1 when both masks are empty. Throws ShapeMismatch.
double mask_iou(const Mask& a, const Mask& b);

// 10 log10(1 / MSE) for images in [0,1]; identical images return the
// 100 dB cap. Throws ShapeMismatch.
double psnr(const ImageF& a, const ImageF& b);

// Single-scale SSIM, Gaussian window (default 11, sigma 1.5), constants
// C1 = 0.01^2 and C2 = 0.03^2, averaged over channels and valid window
// positions. Throws ShapeMismatch and TooSmall.
double ssim(const ImageF& a, const ImageF& b, int window = 11,
            double sigma = 1.5);

// Rotation geodesic (degrees), translation distance, and relative focal
// error averaged over fx and fy.
PoseReport pose_error(const geom::CameraIntrinsics& est_K,
                      const geom::CameraExtrinsics& est_E,
                      const geom::CameraIntrinsics& gt_K,
                      const geom::CameraExtrinsics& gt_E);

// Visible-geometry protocol: render the reconstruction at the solved pose,
// unproject its depth, scale-shift align the points to the ground-truth
// pointmap, then score Chamfer / F-score; the mask IoU compares the render
// silhouette against the ground-truth mask. Thresholds follow the report
// convention (0.01 and 0.05 canonical units).
GeometryReport eval_monocular_geometry(const cube::VoxelObject& object,
                                       const geom::CameraIntrinsics& K,
                                       const geom::CameraExtrinsics& E,
                                       const PointMap& gt_pointmap,
                                       const Mask& gt_mask);

}  // namespace cupidkit::metrics
