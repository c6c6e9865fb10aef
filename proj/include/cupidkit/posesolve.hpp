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
#include <optional>
#include <span>
#include <vector>

#include "cupidkit/cube.hpp"
#include "cupidkit/geometry.hpp"
#include "cupidkit/image.hpp"

namespace cupidkit::pose {

using cube::CorrespondenceSet;
using cube::VoxelObject;
using geom::CameraExtrinsics;
using geom::CameraIntrinsics;
using geom::ProjectionMatrix;

struct PnPSolution {
  ProjectionMatrix P;
  CameraIntrinsics K;
  CameraExtrinsics E;
  double reprojection_rmse = 0.0;  // sqrt(mean_i ||pi(P,x_i) - u_i||^2)
  int inlier_count = 0;
  bool refinement_diverged = false;
};

struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const {
    return scale * (rotation * x) + translation;
  }
};

// Least-squares camera recovery from dense 3D-2D correspondences:
// Hartley-normalized DLT followed by Gauss-Newton on the geometric
// reprojection residual (skew fixed at zero) until the relative RMSE change
// drops below 1e-12 or 50 iterations. If refinement cannot improve on the
// DLT RMSE, the DLT solution is returned with refinement_diverged set.
//
// Throws InsufficientCorrespondences (< 6 pairs) and
// DegenerateConfiguration (coplanar or collinear points).
PnPSolution solve_pnp(const CorrespondenceSet& corr);

// RANSAC wrapper over solve_pnp: minimal 6-point DLT hypotheses, consensus
// by reprojection error <= inlier_thresh, final refit on the best inlier
// set. Deterministic given seed; iterations use counter-derived streams so
// parallel evaluation cannot change the result. Throws NoConsensus when the
// best inlier set has fewer than 6 pairs.
PnPSolution solve_pnp_ransac(const CorrespondenceSet& corr,
                             double inlier_thresh, int iters,
                             std::uint64_t seed);

// Closed-form similarity (s, R, t) minimizing sum ||s R src_i + t - dst_i||^2,
// via SVD of the cross-covariance with determinant-sign correction. Throws
// DegenerateConfiguration for collinear or zero-variance sources.
SimilarityTransform umeyama(std::span<const Eigen::Vector3d> src,
                            std::span<const Eigen::Vector3d> dst);

// Least squares over a scalar scale and 3-vector shift with rotation fixed
// to identity. Throws DegenerateConfiguration when pred has zero variance.
std::pair<double, Eigen::Vector3d> scale_shift_align(
    std::span<const Eigen::Vector3d> pred,
    std::span<const Eigen::Vector3d> gt);

struct SceneObject {
  VoxelObject object;
  CorrespondenceSet correspondences;
  Mask segment;  // pixels belonging to this object
};

struct SceneComposition {
  // One entry per input object; nullopt marks a composition failure
  // (fewer than 3 valid pointmap pairs).
  std::vector<std::optional<SimilarityTransform>> transforms;
  std::vector<std::size_t> failures;  // indices with nullopt
};

// Nearest pointmap entry for a normalized pixel coordinate, or nullopt when
// the pixel is invalid / outside the map.
std::optional<Eigen::Vector3d> query_pointmap(const PointMap& pm,
                                              geom::PixelCoord uv);

// Per-object similarity estimation against a global pointmap: pairs each
// object's canonical points with the pointmap entries at its projected
// pixels (restricted to its segment mask) and runs umeyama. Throws
// EmptyScene when no objects are given.
SceneComposition compose_scene(std::span<const SceneObject> objects,
                               const PointMap& pointmap);

}  // namespace cupidkit::pose
