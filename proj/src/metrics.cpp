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

#include "cupidkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cupidkit/errors.hpp"
#include "cupidkit/posesolve.hpp"
#include "cupidkit/synth.hpp"

namespace cupidkit::metrics {

namespace {

double nearest_sq(const Eigen::Vector3d& p,
                  std::span<const Eigen::Vector3d> set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : set) best = std::min(best, (p - q).squaredNorm());
  return best;
}

void check_same_shape(const ImageF& a, const ImageF& b, const char* what) {
  if (a.h != b.h || a.w != b.w || a.c != b.c)
    throw ShapeMismatch(std::string(what) + ": image shapes differ");
}

}  // namespace

double chamfer(std::span<const Eigen::Vector3d> a,
               std::span<const Eigen::Vector3d> b) {
  if (a.empty() || b.empty()) throw EmptySet("chamfer: empty point set");
  double ab = 0.0, ba = 0.0;
  for (const auto& p : a) ab += std::sqrt(nearest_sq(p, b));
  for (const auto& q : b) ba += std::sqrt(nearest_sq(q, a));
  return ab / static_cast<double>(a.size()) + ba / static_cast<double>(b.size());
}

double fscore(std::span<const Eigen::Vector3d> a,
              std::span<const Eigen::Vector3d> b, double thresh) {
  if (a.empty() || b.empty()) throw EmptySet("fscore: empty point set");
  if (thresh <= 0.0) throw InvalidSpec("fscore: threshold must be positive");
  const double t2 = thresh * thresh;
  std::size_t hits_a = 0, hits_b = 0;
  for (const auto& p : a) hits_a += nearest_sq(p, b) <= t2 ? 1 : 0;
  for (const auto& q : b) hits_b += nearest_sq(q, a) <= t2 ? 1 : 0;
  const double precision = static_cast<double>(hits_a) / a.size();
  const double recall = static_cast<double>(hits_b) / b.size();
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.h != b.h || a.w != b.w)
    throw ShapeMismatch("mask_iou: mask shapes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool pa = a.data[i] != 0, pb = b.data[i] != 0;
    inter += pa && pb ? 1 : 0;
    uni += pa || pb ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double psnr(const ImageF& a, const ImageF& b) {
  check_same_shape(a, b, "psnr");
  const double mse = (a.data - b.data).square().mean();
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageF& a, const ImageF& b, int window, double sigma) {
  check_same_shape(a, b, "ssim");
  if (window < 1 || window % 2 == 0)
    throw InvalidSpec("ssim: window must be odd and positive");
  if (a.h < window || a.w < window)
    throw TooSmall("ssim: image smaller than the window");

  // Normalized Gaussian taps.
  Eigen::VectorXd g(window);
  const int half = window / 2;
  for (int i = 0; i < window; ++i)
    g(i) = std::exp(-0.5 * (i - half) * (i - half) / (sigma * sigma));
  g /= g.sum();

  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;

  const int oh = a.h - window + 1;
  const int ow = a.w - window + 1;

  // Separable weighted filtering of the five local moment images.
  auto filter = [&](auto&& value) {
    // value(y, x) -> double; returns oh x ow filtered grid.
    Eigen::MatrixXd rows(a.h, ow);
    for (int y = 0; y < a.h; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0.0;
        for (int k = 0; k < window; ++k) s += g(k) * value(y, x + k);
        rows(y, x) = s;
      }
    Eigen::MatrixXd out(oh, ow);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0.0;
        for (int k = 0; k < window; ++k) s += g(k) * rows(y + k, x);
        out(y, x) = s;
      }
    return out;
  };

  double total = 0.0;
  for (int ch = 0; ch < a.c; ++ch) {
    const Eigen::MatrixXd mu_a =
        filter([&](int y, int x) { return a.at(y, x, ch); });
    const Eigen::MatrixXd mu_b =
        filter([&](int y, int x) { return b.at(y, x, ch); });
    const Eigen::MatrixXd aa =
        filter([&](int y, int x) { return a.at(y, x, ch) * a.at(y, x, ch); });
    const Eigen::MatrixXd bb =
        filter([&](int y, int x) { return b.at(y, x, ch) * b.at(y, x, ch); });
    const Eigen::MatrixXd ab =
        filter([&](int y, int x) { return a.at(y, x, ch) * b.at(y, x, ch); });

    const Eigen::ArrayXXd var_a = (aa - mu_a.cwiseProduct(mu_a)).array();
    const Eigen::ArrayXXd var_b = (bb - mu_b.cwiseProduct(mu_b)).array();
    const Eigen::ArrayXXd cov = (ab - mu_a.cwiseProduct(mu_b)).array();

    const Eigen::ArrayXXd num =
        (2.0 * mu_a.array() * mu_b.array() + kC1) * (2.0 * cov + kC2);
    const Eigen::ArrayXXd den =
        (mu_a.array().square() + mu_b.array().square() + kC1) *
        (var_a + var_b + kC2);
    total += (num / den).mean();
  }
  return total / a.c;
}

PoseReport pose_error(const geom::CameraIntrinsics& est_K,
                      const geom::CameraExtrinsics& est_E,
                      const geom::CameraIntrinsics& gt_K,
                      const geom::CameraExtrinsics& gt_E) {
  PoseReport r;
  r.rotation_error_deg =
      geom::rotation_geodesic(est_E.rotation, gt_E.rotation) * 180.0 /
      std::numbers::pi;
  r.translation_error = (est_E.translation - gt_E.translation).norm();
  r.focal_rel_error = 0.5 * (std::abs(est_K.fx - gt_K.fx) / gt_K.fx +
                             std::abs(est_K.fy - gt_K.fy) / gt_K.fy);
  return r;
}

GeometryReport eval_monocular_geometry(const cube::VoxelObject& object,
                                       const geom::CameraIntrinsics& K,
                                       const geom::CameraExtrinsics& E,
                                       const PointMap& gt_pointmap,
                                       const Mask& gt_mask) {
  const synth::RenderOutput render =
      synth::rasterize(object, K, E, gt_mask.h, gt_mask.w);

  GeometryReport report;
  report.mask_iou = mask_iou(render.mask, gt_mask);

  std::vector<Eigen::Vector3d> pred, gt;
  for (int y = 0; y < render.pointmap.valid.h; ++y)
    for (int x = 0; x < render.pointmap.valid.w; ++x) {
      if (render.pointmap.valid.at(y, x))
        pred.emplace_back(render.pointmap.xyz.at(y, x, 0),
                          render.pointmap.xyz.at(y, x, 1),
                          render.pointmap.xyz.at(y, x, 2));
      if (gt_pointmap.valid.at(y, x))
        gt.emplace_back(gt_pointmap.xyz.at(y, x, 0),
                        gt_pointmap.xyz.at(y, x, 1),
                        gt_pointmap.xyz.at(y, x, 2));
    }
  if (pred.empty() || gt.empty())
    throw EmptySet("eval_monocular_geometry: no visible geometry");

  // Scale-shift alignment uses matched pixels (visible in both); the
  // aligned full prediction is then scored against the full ground truth.
  std::vector<Eigen::Vector3d> pred_matched, gt_matched;
  for (int y = 0; y < gt_mask.h; ++y)
    for (int x = 0; x < gt_mask.w; ++x)
      if (render.pointmap.valid.at(y, x) && gt_pointmap.valid.at(y, x)) {
        pred_matched.emplace_back(render.pointmap.xyz.at(y, x, 0),
                                  render.pointmap.xyz.at(y, x, 1),
                                  render.pointmap.xyz.at(y, x, 2));
        gt_matched.emplace_back(gt_pointmap.xyz.at(y, x, 0),
                                gt_pointmap.xyz.at(y, x, 1),
                                gt_pointmap.xyz.at(y, x, 2));
      }
  if (pred_matched.size() >= 2) {
    const auto [s, shift] = pose::scale_shift_align(pred_matched, gt_matched);
    for (auto& p : pred) p = s * p + shift;
  }

  report.chamfer = chamfer(pred, gt);
  report.fscore_at[0.01] = fscore(pred, gt, 0.01);
  report.fscore_at[0.05] = fscore(pred, gt, 0.05);
  return report;
}

}  // namespace cupidkit::metrics
