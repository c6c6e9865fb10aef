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

#include "cupidkit/condition.hpp"

#include <algorithm>
#include <cmath>

#include "cupidkit/errors.hpp"
#include "cupidkit/rng.hpp"

namespace cupidkit::cond {

Eigen::VectorXd bilinear_sample(const FeatureImage& img, PixelCoord uv) {
  const double x = uv.u * img.w - 0.5;
  const double y = uv.v * img.h - 0.5;
  const double xf = std::floor(x);
  const double yf = std::floor(y);
  const double ax = x - xf;
  const double ay = y - yf;

  const int x0 = std::clamp(static_cast<int>(xf), 0, img.w - 1);
  const int x1 = std::clamp(static_cast<int>(xf) + 1, 0, img.w - 1);
  const int y0 = std::clamp(static_cast<int>(yf), 0, img.h - 1);
  const int y1 = std::clamp(static_cast<int>(yf) + 1, 0, img.h - 1);

  Eigen::VectorXd out(img.c);
  for (int ch = 0; ch < img.c; ++ch) {
    const double top =
        (1.0 - ax) * img.at(y0, x0, ch) + ax * img.at(y0, x1, ch);
    const double bot =
        (1.0 - ax) * img.at(y1, x0, ch) + ax * img.at(y1, x1, ch);
    out(ch) = (1.0 - ay) * top + ay * bot;
  }
  return out;
}

Eigen::MatrixXd backproject_features(const VoxelObject& obj,
                                     const ProjectionMatrix& P,
                                     const FeatureImage& img) {
  const Eigen::Index n = static_cast<Eigen::Index>(obj.size());
  Eigen::MatrixXd rows(n, img.c);
  for (Eigen::Index i = 0; i < n; ++i) {
    const PixelCoord uv = geom::project(P, obj.centers[i]);
    rows.row(i) = bilinear_sample(img, uv).transpose();
  }
  return rows;
}

ToyFeatureExtractor ToyFeatureExtractor::seeded(std::uint64_t seed,
                                                int c_low) {
  ToyFeatureExtractor ex;
  ex.c_low = c_low;
  ex.conv_w.resize(c_low, 5 * 3 * 3);
  RngStream rng(seed, "extractor.init");
  const double scale = 1.0 / std::sqrt(45.0);
  for (Eigen::Index i = 0; i < ex.conv_w.size(); ++i)
    ex.conv_w.data()[i] = scale * rng.normal();
  ex.conv_b = Eigen::VectorXd::Zero(c_low);
  return ex;
}

std::pair<FeatureImage, FeatureImage> ToyFeatureExtractor::extract(
    const ConditionImage& img, const OcclusionMask& occ) const {
  const int h = img.rgb.h, w = img.rgb.w;
  if (img.rgb.c != 3 || img.alpha.h != h || img.alpha.w != w ||
      occ.h != h || occ.w != w)
    throw ShapeMismatch("toy_feature_extract: input shapes disagree");

  // Zero out occluded content so nothing hidden under the mask can leak
  // into the features; the mask itself stays visible as a channel.
  ImageF in(h, w, 5);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool hidden = occ.at(y, x) != 0;
      for (int ch = 0; ch < 3; ++ch)
        in.at(y, x, ch) = hidden ? 0.0 : img.rgb.at(y, x, ch);
      in.at(y, x, 3) = hidden ? 0.0 : static_cast<double>(img.alpha.at(y, x));
      in.at(y, x, 4) = hidden ? 1.0 : 0.0;
    }

  // Low path: 3x3 convolution, zero padding.
  FeatureImage low(h, w, c_low);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Eigen::VectorXd patch_vec = Eigen::VectorXd::Zero(45);
      int idx = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          for (int ch = 0; ch < 5; ++ch, ++idx) {
            const int yy = y + dy, xx = x + dx;
            if (yy >= 0 && yy < h && xx >= 0 && xx < w)
              patch_vec(idx) = in.at(yy, xx, ch);
          }
      const Eigen::VectorXd f = conv_w * patch_vec + conv_b;
      for (int ch = 0; ch < c_low; ++ch) low.at(y, x, ch) = f(ch);
    }

  // High path: per-patch statistics of the zeroed inputs. Partial border
  // patches pool over the pixels present.
  const int gh = (h + patch - 1) / patch;
  const int gw = (w + patch - 1) / patch;
  FeatureImage high(gh, gw, c_high);
  for (int py = 0; py < gh; ++py)
    for (int px = 0; px < gw; ++px) {
      const int y0 = py * patch, x0 = px * patch;
      const int y1 = std::min(y0 + patch, h), x1 = std::min(x0 + patch, w);
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      Eigen::Vector3d sq = Eigen::Vector3d::Zero();
      double alpha_mean = 0.0, occ_mean = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          for (int ch = 0; ch < 3; ++ch) {
            const double v = in.at(y, x, ch);
            mean(ch) += v;
            sq(ch) += v * v;
          }
          alpha_mean += in.at(y, x, 3);
          occ_mean += in.at(y, x, 4);
        }
      mean /= n;
      sq /= n;
      alpha_mean /= n;
      occ_mean /= n;
      for (int ch = 0; ch < 3; ++ch) {
        high.at(py, px, ch) = mean(ch);
        high.at(py, px, 3 + ch) =
            std::sqrt(std::max(0.0, sq(ch) - mean(ch) * mean(ch)));
      }
      high.at(py, px, 6) = alpha_mean;
      high.at(py, px, 7) = occ_mean;
    }

  return {std::move(high), std::move(low)};
}

FeatureImage attention_mask_bias(const OcclusionMask& mask, int patch) {
  if (patch < 1) throw InvalidSpec("attention_mask_bias: patch must be >= 1");
  const int gh = (mask.h + patch - 1) / patch;
  const int gw = (mask.w + patch - 1) / patch;
  const double total = static_cast<double>(patch) * patch;

  FeatureImage bias(gh, gw, 1);
  for (int py = 0; py < gh; ++py)
    for (int px = 0; px < gw; ++px) {
      int unmasked = 0;
      for (int y = py * patch; y < (py + 1) * patch; ++y)
        for (int x = px * patch; x < (px + 1) * patch; ++x) {
          // Padding beyond the image counts as masked.
          if (y < mask.h && x < mask.w && mask.at(y, x) == 0) ++unmasked;
        }
      const double ratio = unmasked / total;
      bias.at(py, px, 0) = ratio > 0.0 ? std::log(ratio) : -1e9;
    }
  return bias;
}

VoxelConditioning assemble_conditioning(const Eigen::MatrixXd& noisy_rows,
                                        const Eigen::MatrixXd& high_rows,
                                        const Eigen::MatrixXd& low_rows) {
  const Eigen::Index n = noisy_rows.rows();
  if ((high_rows.size() > 0 && high_rows.rows() != n) ||
      (low_rows.size() > 0 && low_rows.rows() != n))
    throw ShapeMismatch("assemble_conditioning: row counts differ");

  VoxelConditioning out;
  out.rows.resize(n, noisy_rows.cols() + high_rows.cols() + low_rows.cols());
  out.rows.leftCols(noisy_rows.cols()) = noisy_rows;
  if (high_rows.cols() > 0)
    out.rows.middleCols(noisy_rows.cols(), high_rows.cols()) = high_rows;
  if (low_rows.cols() > 0) out.rows.rightCols(low_rows.cols()) = low_rows;
  return out;
}

}  // namespace cupidkit::cond
