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

#include "cupidkit/posesolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cupidkit/errors.hpp"
#include "cupidkit/rng.hpp"

namespace cupidkit::pose {

namespace {

using cube::CorrespondencePair;
using geom::PixelCoord;

double reprojection_rmse(const ProjectionMatrix& P,
                         const CorrespondenceSet& corr) {
  double sum = 0.0;
  for (const auto& pair : corr.pairs) {
    const Eigen::Vector4d xh(pair.x.x(), pair.x.y(), pair.x.z(), 1.0);
    const Eigen::Vector3d p = P.entries * xh;
    if (std::abs(p.z()) < 1e-15) return std::numeric_limits<double>::infinity();
    const double du = p.x() / p.z() - pair.uv.u;
    const double dv = p.y() / p.z() - pair.uv.v;
    sum += du * du + dv * dv;
  }
  return std::sqrt(sum / static_cast<double>(corr.size()));
}

void check_not_coplanar(const CorrespondenceSet& corr) {
  const Eigen::Index n = static_cast<Eigen::Index>(corr.size());
  Eigen::MatrixXd X(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = corr.pairs[i].x.transpose();
  X.rowwise() -= X.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(2) <= 1e-8 * sv(0))
    throw DegenerateConfiguration(
        "solve_pnp: 3D points are coplanar or collinear");
}

// Direct linear transform on Hartley-normalized data.
ProjectionMatrix solve_dlt(const CorrespondenceSet& corr) {
  const Eigen::Index n = static_cast<Eigen::Index>(corr.size());

  Eigen::Vector2d c2 = Eigen::Vector2d::Zero();
  Eigen::Vector3d c3 = Eigen::Vector3d::Zero();
  for (const auto& pair : corr.pairs) {
    c2 += Eigen::Vector2d(pair.uv.u, pair.uv.v);
    c3 += pair.x;
  }
  c2 /= static_cast<double>(n);
  c3 /= static_cast<double>(n);

  double d2 = 0.0, d3 = 0.0;
  for (const auto& pair : corr.pairs) {
    d2 += (Eigen::Vector2d(pair.uv.u, pair.uv.v) - c2).norm();
    d3 += (pair.x - c3).norm();
  }
  d2 /= static_cast<double>(n);
  d3 /= static_cast<double>(n);
  if (d2 < 1e-15 || d3 < 1e-15)
    throw DegenerateConfiguration("solve_pnp: zero-spread correspondences");
  const double s2 = std::numbers::sqrt2 / d2;
  const double s3 = std::sqrt(3.0) / d3;

  Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
  T(0, 0) = T(1, 1) = s2;
  T.block<2, 1>(0, 2) = -s2 * c2;
  Eigen::Matrix4d U = Eigen::Matrix4d::Identity();
  U(0, 0) = U(1, 1) = U(2, 2) = s3;
  U.block<3, 1>(0, 3) = -s3 * c3;

  Eigen::MatrixXd A(2 * n, 12);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d xn = s3 * (corr.pairs[i].x - c3);
    const double un = s2 * (corr.pairs[i].uv.u - c2.x());
    const double vn = s2 * (corr.pairs[i].uv.v - c2.y());
    const Eigen::RowVector4d xh(xn.x(), xn.y(), xn.z(), 1.0);
    A.row(2 * i).setZero();
    A.row(2 * i).segment<4>(0) = xh;
    A.row(2 * i).segment<4>(8) = -un * xh;
    A.row(2 * i + 1).setZero();
    A.row(2 * i + 1).segment<4>(4) = xh;
    A.row(2 * i + 1).segment<4>(8) = -vn * xh;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
  const Eigen::VectorXd p = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> Pn;
  for (int r = 0; r < 3; ++r) Pn.row(r) = p.segment<4>(4 * r).transpose();

  return ProjectionMatrix{T.inverse() * Pn * U};
}

struct RefineState {
  CameraIntrinsics K;
  Eigen::Matrix3d R;
  Eigen::Vector3d t;

  ProjectionMatrix projection() const {
    return geom::compose_projection(K, CameraExtrinsics{R, t});
  }
};

// Gauss-Newton on the reprojection residual. Parameters are
// (fx, fy, cx, cy, left-multiplicative rotation increment, t); skew is
// held at zero. Returns the reached RMSE.
double refine_gauss_newton(RefineState& state, const CorrespondenceSet& corr,
                           int max_iters, double rel_tol) {
  const Eigen::Index n = static_cast<Eigen::Index>(corr.size());
  Eigen::MatrixXd J(2 * n, 10);
  Eigen::VectorXd r(2 * n);

  auto residuals = [&](const RefineState& s, Eigen::VectorXd& out) -> bool {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector3d y = s.R * corr.pairs[i].x + s.t;
      if (std::abs(y.z()) < 1e-15) return false;
      out(2 * i) = s.K.fx * y.x() / y.z() + s.K.cx - corr.pairs[i].uv.u;
      out(2 * i + 1) = s.K.fy * y.y() / y.z() + s.K.cy - corr.pairs[i].uv.v;
    }
    return true;
  };

  auto rmse_of = [&](const Eigen::VectorXd& res) {
    return std::sqrt(res.squaredNorm() / static_cast<double>(n));
  };

  if (!residuals(state, r)) return std::numeric_limits<double>::infinity();
  double rmse = rmse_of(r);

  for (int iter = 0; iter < max_iters; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector3d m = state.R * corr.pairs[i].x;
      const Eigen::Vector3d y = m + state.t;
      const double iz = 1.0 / y.z();

      Eigen::RowVector3d du_dy(state.K.fx * iz, 0.0,
                               -state.K.fx * y.x() * iz * iz);
      Eigen::RowVector3d dv_dy(0.0, state.K.fy * iz,
                               -state.K.fy * y.y() * iz * iz);

      Eigen::Matrix3d dy_dw;  // d(exp(w) m)/dw at w=0 is -[m]x
      dy_dw << 0, m.z(), -m.y(), -m.z(), 0, m.x(), m.y(), -m.x(), 0;

      J(2 * i, 0) = y.x() * iz;  // du/dfx
      J(2 * i, 1) = 0.0;
      J(2 * i, 2) = 1.0;  // du/dcx
      J(2 * i, 3) = 0.0;
      J(2 * i).segment<3>(4) = du_dy * dy_dw;
      J(2 * i).segment<3>(7) = du_dy;

      J(2 * i + 1, 0) = 0.0;
      J(2 * i + 1, 1) = y.y() * iz;  // dv/dfy
      J(2 * i + 1, 2) = 0.0;
      J(2 * i + 1, 3) = 1.0;  // dv/dcy
      J(2 * i + 1).segment<3>(4) = dv_dy * dy_dw;
      J(2 * i + 1).segment<3>(7) = dv_dy;
    }

    const Eigen::Matrix<double, 10, 10> H = J.transpose() * J;
    const Eigen::Matrix<double, 10, 1> g = J.transpose() * r;
    Eigen::Matrix<double, 10, 1> step = -H.ldlt().solve(g);
    if (!step.allFinite()) break;

    // Backtrack until the step reduces the RMSE.
    RefineState trial = state;
    Eigen::VectorXd r_trial(2 * n);
    double rmse_trial = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int half = 0; half < 12; ++half) {
      trial = state;
      trial.K.fx += step(0);
      trial.K.fy += step(1);
      trial.K.cx += step(2);
      trial.K.cy += step(3);
      trial.R = geom::rotation_exp(step.segment<3>(4)) * state.R;
      trial.t += step.segment<3>(7);
      if (trial.K.fx > 0.0 && trial.K.fy > 0.0 && residuals(trial, r_trial)) {
        rmse_trial = rmse_of(r_trial);
        if (rmse_trial <= rmse) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;

    state = trial;
    r = r_trial;
    const double change = rmse - rmse_trial;
    rmse = rmse_trial;
    if (change <= rel_tol * std::max(rmse, 1e-300)) break;
  }
  return rmse;
}

}  // namespace

PnPSolution solve_pnp(const CorrespondenceSet& corr) {
  if (corr.size() < 6)
    throw InsufficientCorrespondences(
        "solve_pnp: need at least 6 correspondences, got " +
        std::to_string(corr.size()));
  check_not_coplanar(corr);

  const ProjectionMatrix P_dlt = solve_dlt(corr);
  const double rmse_dlt = reprojection_rmse(P_dlt, corr);

  auto [K0, E0] = geom::decompose_projection(P_dlt);
  RefineState state{K0, E0.rotation, E0.translation};
  state.K.skew = 0.0;
  const double rmse_refined = refine_gauss_newton(state, corr, 50, 1e-12);

  PnPSolution sol;
  sol.inlier_count = static_cast<int>(corr.size());
  if (rmse_refined <= rmse_dlt) {
    sol.K = state.K;
    sol.E = CameraExtrinsics{state.R, state.t};
    sol.P = geom::compose_projection(sol.K, sol.E);
    sol.reprojection_rmse = rmse_refined;
  } else {
    sol.P = P_dlt;
    auto [K, E] = geom::decompose_projection(P_dlt);
    sol.K = K;
    sol.E = E;
    sol.reprojection_rmse = rmse_dlt;
    sol.refinement_diverged = true;
  }
  return sol;
}

PnPSolution solve_pnp_ransac(const CorrespondenceSet& corr,
                             double inlier_thresh, int iters,
                             std::uint64_t seed) {
  if (corr.size() < 6)
    throw InsufficientCorrespondences(
        "solve_pnp_ransac: need at least 6 correspondences");
  if (inlier_thresh <= 0.0)
    throw InvalidSpec("solve_pnp_ransac: inlier_thresh must be positive");

  const std::size_t n = corr.size();
  if (n == 6) return solve_pnp(corr);  // nothing to reject

  // A hypothesis must gather support beyond its own minimal sample; a
  // 6-point DLT fits those 6 pairs exactly even on pure noise.
  std::size_t best_count = 0;
  int best_iter = -1;
  std::vector<std::uint8_t> best_inliers;

  for (int it = 0; it < iters; ++it) {
    RngStream rng(seed, "pnp.ransac", static_cast<std::uint64_t>(it));
    std::array<std::size_t, 6> sample{};
    for (int k = 0; k < 6;) {
      const std::size_t idx = rng.uniform_int(n);
      bool dup = false;
      for (int j = 0; j < k; ++j) dup |= sample[j] == idx;
      if (!dup) sample[k++] = idx;
    }

    CorrespondenceSet minimal;
    for (auto idx : sample) minimal.pairs.push_back(corr.pairs[idx]);

    ProjectionMatrix hyp;
    try {
      check_not_coplanar(minimal);
      hyp = solve_dlt(minimal);
    } catch (const DegenerateConfiguration&) {
      continue;
    }

    std::vector<std::uint8_t> inliers(n, 0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pair = corr.pairs[i];
      const Eigen::Vector4d xh(pair.x.x(), pair.x.y(), pair.x.z(), 1.0);
      const Eigen::Vector3d p = hyp.entries * xh;
      if (std::abs(p.z()) < 1e-15) continue;
      const double du = p.x() / p.z() - pair.uv.u;
      const double dv = p.y() / p.z() - pair.uv.v;
      if (std::sqrt(du * du + dv * dv) <= inlier_thresh) {
        inliers[i] = 1;
        ++count;
      }
    }
    if (count > best_count) {
      best_count = count;
      best_iter = it;
      best_inliers = std::move(inliers);
    }
  }

  if (best_iter < 0 || best_count <= 6)
    throw NoConsensus("solve_pnp_ransac: no hypothesis with support beyond "
                      "its minimal sample");

  CorrespondenceSet consensus;
  for (std::size_t i = 0; i < n; ++i)
    if (best_inliers[i]) consensus.pairs.push_back(corr.pairs[i]);

  PnPSolution sol = solve_pnp(consensus);
  sol.inlier_count = static_cast<int>(best_count);
  return sol;
}

SimilarityTransform umeyama(std::span<const Eigen::Vector3d> src,
                            std::span<const Eigen::Vector3d> dst) {
  if (src.size() != dst.size())
    throw ShapeMismatch("umeyama: point counts differ");
  if (src.size() < 3)
    throw DegenerateConfiguration("umeyama: need at least 3 points");
  const double n = static_cast<double>(src.size());

  Eigen::Vector3d mu_s = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_d = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= n;
  mu_d /= n;

  double var_s = 0.0;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Eigen::Vector3d ps = src[i] - mu_s;
    var_s += ps.squaredNorm();
    cov += (dst[i] - mu_d) * ps.transpose();
  }
  var_s /= n;
  cov /= n;

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (var_s < 1e-24 || sv(1) <= 1e-12 * std::max(sv(0), 1e-300))
    throw DegenerateConfiguration("umeyama: source points are collinear");

  Eigen::Vector3d d = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0)
    d(2) = -1.0;

  SimilarityTransform out;
  out.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  out.scale = sv.dot(d) / var_s;
  out.translation = mu_d - out.scale * (out.rotation * mu_s);
  return out;
}

std::pair<double, Eigen::Vector3d> scale_shift_align(
    std::span<const Eigen::Vector3d> pred,
    std::span<const Eigen::Vector3d> gt) {
  if (pred.size() != gt.size())
    throw ShapeMismatch("scale_shift_align: point counts differ");
  if (pred.size() < 2)
    throw DegenerateConfiguration("scale_shift_align: need at least 2 points");
  const double n = static_cast<double>(pred.size());

  Eigen::Vector3d mu_p = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_g = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mu_p += pred[i];
    mu_g += gt[i];
  }
  mu_p /= n;
  mu_g /= n;

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Eigen::Vector3d pc = pred[i] - mu_p;
    num += pc.dot(gt[i] - mu_g);
    den += pc.squaredNorm();
  }
  if (den < 1e-24)
    throw DegenerateConfiguration("scale_shift_align: pred has zero variance");

  const double s = num / den;
  return {s, mu_g - s * mu_p};
}

std::optional<Eigen::Vector3d> query_pointmap(const PointMap& pm,
                                              geom::PixelCoord uv) {
  if (!(uv.u >= 0.0 && uv.u <= 1.0 && uv.v >= 0.0 && uv.v <= 1.0))
    return std::nullopt;
  const int x = std::min(static_cast<int>(std::floor(uv.u * pm.valid.w)),
                         pm.valid.w - 1);
  const int y = std::min(static_cast<int>(std::floor(uv.v * pm.valid.h)),
                         pm.valid.h - 1);
  if (x < 0 || y < 0 || !pm.valid.at(y, x)) return std::nullopt;
  return Eigen::Vector3d(pm.xyz.at(y, x, 0), pm.xyz.at(y, x, 1),
                         pm.xyz.at(y, x, 2));
}

SceneComposition compose_scene(std::span<const SceneObject> objects,
                               const PointMap& pointmap) {
  if (objects.empty()) throw EmptyScene("compose_scene: no objects");

  SceneComposition out;
  out.transforms.resize(objects.size());
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const auto& obj = objects[k];
    std::vector<Eigen::Vector3d> src, dst;
    for (const auto& pair : obj.correspondences.pairs) {
      if (!(pair.uv.u >= 0.0 && pair.uv.u <= 1.0 && pair.uv.v >= 0.0 &&
            pair.uv.v <= 1.0))
        continue;
      const int x =
          std::min(static_cast<int>(std::floor(pair.uv.u * obj.segment.w)),
                   obj.segment.w - 1);
      const int y =
          std::min(static_cast<int>(std::floor(pair.uv.v * obj.segment.h)),
                   obj.segment.h - 1);
      if (!obj.segment.at(y, x)) continue;
      const auto p = query_pointmap(pointmap, pair.uv);
      if (!p) continue;
      src.push_back(pair.x);
      dst.push_back(*p);
    }
    if (src.size() < 3) {
      out.failures.push_back(k);
      continue;
    }
    try {
      out.transforms[k] = umeyama(src, dst);
    } catch (const DegenerateConfiguration&) {
      out.failures.push_back(k);
    }
  }
  return out;
}

}  // namespace cupidkit::pose
