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
#include <utility>

namespace cupidkit::geom {

// Image coordinates are normalized: (0,0) top-left, (1,1) bottom-right,
// u rightward, v downward. The canonical object cube is [-0.5, 0.5]^3 with
// the ground plane at z = 0.

// Pinhole intrinsics in normalized-image units. Matrix form is
// [[fx, skew, cx], [0, fy, cy], [0, 0, 1]].
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;

  Eigen::Matrix3d matrix() const;
  bool valid() const { return fx > 0.0 && fy > 0.0; }
};

// World-to-camera rigid transform: x_cam = rotation * x_world + translation.
struct CameraExtrinsics {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  bool valid(double tol = 1e-9) const;
};

struct ProjectionMatrix {
  Eigen::Matrix<double, 3, 4> entries = Eigen::Matrix<double, 3, 4>::Zero();
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;

  bool inside() const { return u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0; }
};

// P = K [R | t].
ProjectionMatrix compose_projection(const CameraIntrinsics& K,
                                    const CameraExtrinsics& E);

// Perspective division. Throws DegenerateDepth when |p3^T x~| < 1e-12.
PixelCoord project(const ProjectionMatrix& P, const Eigen::Vector3d& x);

// Depth of x under P (third homogeneous coordinate). No degeneracy check.
double projection_depth(const ProjectionMatrix& P, const Eigen::Vector3d& x);

// RQ factorization of the left 3x3 block. The returned K has positive
// diagonal and K(2,2) = 1; R has det +1. Throws SingularCamera when the
// block is rank-deficient.
std::pair<CameraIntrinsics, CameraExtrinsics> decompose_projection(
    const ProjectionMatrix& P);

// Rodrigues exponential map, axis-angle -> rotation matrix.
Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& omega);

// Geodesic angle between two rotations, radians in [0, pi].
double rotation_geodesic(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

}  // namespace cupidkit::geom
