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

#include "cupidkit/geometry.hpp"

#include <cmath>

#include "cupidkit/errors.hpp"

namespace cupidkit::geom {

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d K;
  K << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

bool CameraExtrinsics::valid(double tol) const {
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  if (((rotation.transpose() * rotation) - I).cwiseAbs().maxCoeff() > tol)
    return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

ProjectionMatrix compose_projection(const CameraIntrinsics& K,
                                    const CameraExtrinsics& E) {
  Eigen::Matrix<double, 3, 4> Rt;
  Rt.leftCols<3>() = E.rotation;
  Rt.col(3) = E.translation;
  return ProjectionMatrix{K.matrix() * Rt};
}

PixelCoord project(const ProjectionMatrix& P, const Eigen::Vector3d& x) {
  const Eigen::Vector4d xh(x.x(), x.y(), x.z(), 1.0);
  const Eigen::Vector3d p = P.entries * xh;
  if (std::abs(p.z()) < 1e-12)
    throw DegenerateDepth("projected point has near-zero depth");
  return PixelCoord{p.x() / p.z(), p.y() / p.z()};
}

double projection_depth(const ProjectionMatrix& P, const Eigen::Vector3d& x) {
  return P.entries.row(2).head<3>().dot(x) + P.entries(2, 3);
}

std::pair<CameraIntrinsics, CameraExtrinsics> decompose_projection(
    const ProjectionMatrix& P) {
  const Eigen::Matrix3d M = P.entries.leftCols<3>();

  {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(M);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(2) < 1e-12 * sv(0))
      throw SingularCamera("projection matrix 3x3 block is rank-deficient");
  }

  // RQ via QR of the row-reversed transpose: with J the exchange matrix,
  // (J M)^T = Q~ R~ gives M = (J R~^T J)(J Q~^T) with the first factor
  // upper-triangular and the second orthogonal.
  Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
  J(0, 2) = J(1, 1) = J(2, 0) = 1.0;

  const Eigen::Matrix3d A = (J * M).transpose();
  const Eigen::HouseholderQR<Eigen::Matrix3d> qr(A);
  const Eigen::Matrix3d Qt = qr.householderQ().transpose();
  const Eigen::Matrix3d Rt = qr.matrixQR().triangularView<Eigen::Upper>();

  Eigen::Matrix3d K = J * Rt.transpose() * J;
  Eigen::Matrix3d R = J * Qt;

  // Flip signs so K's diagonal is positive.
  Eigen::Vector3d s;
  for (int i = 0; i < 3; ++i) s(i) = K(i, i) < 0.0 ? -1.0 : 1.0;
  K = K * s.asDiagonal();
  R = s.asDiagonal() * R;

  // Absorb a det(R) = -1 into the projective scale.
  double lambda = K(2, 2);
  if (R.determinant() < 0.0) {
    R = -R;
    lambda = -lambda;
  }
  K /= K(2, 2);

  const Eigen::Vector3d t =
      K.triangularView<Eigen::Upper>().solve(P.entries.col(3) / lambda);

  CameraIntrinsics intr;
  intr.fx = K(0, 0);
  intr.fy = K(1, 1);
  intr.cx = K(0, 2);
  intr.cy = K(1, 2);
  intr.skew = K(0, 1);
  return {intr, CameraExtrinsics{R, t}};
}

Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) {
    Eigen::Matrix3d W;
    W << 0, -omega.z(), omega.y(), omega.z(), 0, -omega.x(), -omega.y(),
        omega.x(), 0;
    return Eigen::Matrix3d::Identity() + W + 0.5 * W * W;
  }
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

double rotation_geodesic(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = ((a * b.transpose()).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace cupidkit::geom
