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

#include "cupidkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cupidkit/errors.hpp"
#include "cupidkit/rng.hpp"

namespace cupidkit::synth {

namespace {

constexpr double kPi = std::numbers::pi;

struct PlacedPart {
  const PrimitivePart* part;
  double z_base;
  double area;
};

double part_height(const PrimitivePart& p) {
  return p.kind == "sphere" ? 2.0 * p.rx : p.height;
}

double part_area(const PrimitivePart& p) {
  if (p.kind == "sphere") return 4.0 * kPi * p.rx * p.rx;
  if (p.kind == "box")
    return 8.0 * p.rx * p.ry + 4.0 * p.height * (p.rx + p.ry);
  if (p.kind == "cylinder")
    return 2.0 * kPi * p.rx * p.height + 2.0 * kPi * p.rx * p.rx;
  throw InvalidSpec("make_primitive: unknown part kind '" + p.kind + "'");
}

Eigen::Vector3d position_color(const PrimitivePart& part,
                               const Eigen::Vector3d& p) {
  Eigen::Vector3d c;
  for (int a = 0; a < 3; ++a)
    c(a) = std::clamp(part.tint(a) * (0.25 + 0.75 * (p(a) + 0.5)), 0.0, 1.0);
  return c;
}

Eigen::Vector3d sample_part_point(const PrimitivePart& p, double cx, double cy,
                                  double z_base, RngStream& rng) {
  if (p.kind == "sphere") {
    Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
    while (dir.norm() < 1e-12)
      dir = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    dir.normalize();
    return Eigen::Vector3d(cx, cy, z_base + p.rx) + p.rx * dir;
  }
  if (p.kind == "box") {
    const double ax = p.rx, ay = p.ry, h = p.height;
    const double a_xy = 4.0 * ax * ay;   // top or bottom
    const double a_xz = 2.0 * ax * h;    // front or back
    const double a_yz = 2.0 * ay * h;    // left or right
    const double total = 2.0 * (a_xy + a_xz + a_yz);
    double pick = rng.uniform() * total;
    // Keep in-face coordinates a hair away from the edges so every sample
    // lies on exactly one face.
    const double margin = 1e-6;
    const double u = margin + (1.0 - 2.0 * margin) * rng.uniform();
    const double v = margin + (1.0 - 2.0 * margin) * rng.uniform();
    const double x = cx + (2.0 * u - 1.0) * ax;
    const double y = cy + (2.0 * v - 1.0) * ay;
    const double z = z_base + u * h;
    if ((pick -= a_xy) < 0.0)
      return {x, cy + (2.0 * v - 1.0) * ay, z_base + h};  // top
    if ((pick -= a_xy) < 0.0) return {x, cy + (2.0 * v - 1.0) * ay, z_base};
    if ((pick -= a_xz) < 0.0) return {cx + (2.0 * v - 1.0) * ax, cy + ay, z};
    if ((pick -= a_xz) < 0.0) return {cx + (2.0 * v - 1.0) * ax, cy - ay, z};
    if ((pick -= a_yz) < 0.0) return {cx + ax, y, z};
    return {cx - ax, y, z};
  }
  if (p.kind == "cylinder") {
    const double a_side = 2.0 * kPi * p.rx * p.height;
    const double a_cap = kPi * p.rx * p.rx;
    double pick = rng.uniform() * (a_side + 2.0 * a_cap);
    if (pick < a_side) {
      const double phi = rng.uniform(0.0, 2.0 * kPi);
      return {cx + p.rx * std::cos(phi), cy + p.rx * std::sin(phi),
              z_base + rng.uniform() * p.height};
    }
    const bool top = pick < a_side + a_cap;
    const double rad = p.rx * std::sqrt(rng.uniform());
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    return {cx + rad * std::cos(phi), cy + rad * std::sin(phi),
            z_base + (top ? p.height : 0.0)};
  }
  throw InvalidSpec("make_primitive: unknown part kind '" + p.kind + "'");
}

}  // namespace

PrimitiveSpec PrimitiveSpec::random(std::uint64_t seed,
                                    const std::string& kind) {
  RngStream rng(seed, "primitive.spec");
  auto random_part = [&](const std::string& part_kind, double max_h) {
    PrimitivePart p;
    p.kind = part_kind;
    p.rx = rng.uniform(0.12, 0.26);
    p.ry = part_kind == "box" ? rng.uniform(0.12, 0.26) : p.rx;
    if (part_kind == "sphere")
      p.rx = std::min(p.rx, max_h / 2.0);
    else
      p.height = rng.uniform(0.15, max_h);
    p.tint = Eigen::Vector3d(rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0),
                             rng.uniform(0.4, 1.0));
    return p;
  };

  PrimitiveSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  if (kind == "composite") {
    static const char* bases[] = {"box", "cylinder"};
    static const char* tops[] = {"sphere", "box", "cylinder"};
    PrimitivePart base = random_part(bases[rng.uniform_int(2)], 0.28);
    PrimitivePart top = random_part(tops[rng.uniform_int(3)],
                                    0.48 - part_height(base));
    // Keep the top part no wider than its support.
    top.rx = std::min(top.rx, base.rx);
    top.ry = std::min(top.ry, base.kind == "box" ? base.ry : base.rx);
    spec.parts = {base, top};
  } else {
    spec.parts = {random_part(kind, 0.42)};
  }
  double max_r = 0.0;
  for (const auto& p : spec.parts) max_r = std::max({max_r, p.rx, p.ry});
  const double margin = 0.5 - max_r - 1e-3;
  spec.cx = rng.uniform(-1.0, 1.0) * std::min(0.12, margin);
  spec.cy = rng.uniform(-1.0, 1.0) * std::min(0.12, margin);
  return spec;
}

SurfaceSamples make_primitive(const PrimitiveSpec& spec, int samples) {
  if (samples < 1) throw InvalidSpec("make_primitive: samples must be >= 1");
  if (spec.parts.empty() ||
      (spec.kind == "composite" ? spec.parts.size() != 2
                                : spec.parts.size() != 1))
    throw InvalidSpec("make_primitive: part count does not match kind");

  std::vector<PlacedPart> placed;
  double z = 0.0;
  double total_area = 0.0;
  for (const auto& p : spec.parts) {
    if (p.rx <= 0.0 || p.ry <= 0.0 || part_height(p) <= 0.0)
      throw InvalidSpec("make_primitive: non-positive part size");
    placed.push_back({&p, z, part_area(p)});
    total_area += placed.back().area;
    z += part_height(p);
  }
  if (z > 0.5 + 1e-12)
    throw InvalidSpec("make_primitive: primitive exceeds the cube top");
  for (const auto& p : spec.parts)
    if (std::abs(spec.cx) + std::max(p.rx, p.ry) > 0.5 ||
        std::abs(spec.cy) + std::max(p.rx, p.ry) > 0.5)
      throw InvalidSpec("make_primitive: primitive exceeds the cube side");

  SurfaceSamples out;
  out.points.reserve(samples);
  out.colors.reserve(samples);
  RngStream rng(spec.seed, "primitive.surface");
  for (int i = 0; i < samples; ++i) {
    double pick = rng.uniform() * total_area;
    const PlacedPart* sel = &placed.back();
    for (const auto& pp : placed) {
      if (pick < pp.area) {
        sel = &pp;
        break;
      }
      pick -= pp.area;
    }
    const Eigen::Vector3d p =
        sample_part_point(*sel->part, spec.cx, spec.cy, sel->z_base, rng);
    out.points.push_back(p);
    out.colors.push_back(position_color(*sel->part, p));
  }
  return out;
}

std::pair<CameraIntrinsics, CameraExtrinsics> sample_camera(
    std::uint64_t seed, const CameraSampleParams& params) {
  RngStream rng(seed, "camera");
  const double azimuth = rng.uniform(0.0, 2.0 * kPi);
  const double elevation =
      rng.uniform(params.elevation_deg.first, params.elevation_deg.second) *
      kPi / 180.0;
  const double f_mm =
      rng.uniform(params.focal_range_mm.first, params.focal_range_mm.second);
  const double extent_target =
      rng.uniform(params.extent_range.first, params.extent_range.second);

  CameraIntrinsics K;
  K.fx = K.fy = f_mm / 36.0;
  K.cx = K.cy = 0.5;

  auto camera_at = [&](double dist) {
    const Eigen::Vector3d center(dist * std::cos(elevation) * std::cos(azimuth),
                                 dist * std::cos(elevation) * std::sin(azimuth),
                                 dist * std::sin(elevation));
    const Eigen::Vector3d fwd = -center.normalized();
    const Eigen::Vector3d up(0.0, 0.0, 1.0);
    const Eigen::Vector3d right = fwd.cross(up).normalized();
    const Eigen::Vector3d down = fwd.cross(right);
    Eigen::Matrix3d R;
    R.row(0) = right.transpose();
    R.row(1) = down.transpose();
    R.row(2) = fwd.transpose();
    return CameraExtrinsics{R, -R * center};
  };

  auto extent_at = [&](double dist) {
    const auto E = camera_at(dist);
    const auto P = geom::compose_projection(K, E);
    double ulo = 1e30, uhi = -1e30, vlo = 1e30, vhi = -1e30;
    for (int i = 0; i < 8; ++i) {
      const Eigen::Vector3d corner(i & 1 ? 0.5 : -0.5, i & 2 ? 0.5 : -0.5,
                                   i & 4 ? 0.5 : -0.5);
      const auto uv = geom::project(P, corner);
      ulo = std::min(ulo, uv.u);
      uhi = std::max(uhi, uv.u);
      vlo = std::min(vlo, uv.v);
      vhi = std::max(vhi, uv.v);
    }
    return std::max(uhi - ulo, vhi - vlo);
  };

  // Extent shrinks monotonically with distance; bisect to the target.
  double lo = params.distance_range.first;
  double hi = params.distance_range.second;
  double dist = hi;
  if (extent_at(lo) <= extent_target) {
    dist = lo;
  } else if (extent_at(hi) >= extent_target) {
    dist = hi;
  } else {
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (extent_at(mid) > extent_target)
        lo = mid;
      else
        hi = mid;
      dist = 0.5 * (lo + hi);
    }
  }
  return {K, camera_at(dist)};
}

RenderOutput rasterize(const VoxelObject& obj, const CameraIntrinsics& K,
                       const CameraExtrinsics& E, int height, int width) {
  RenderOutput out;
  out.rgb = ImageF(height, width, 3);
  out.depth = ImageF(height, width, 1);
  out.mask = Mask(height, width);
  out.pointmap.xyz = ImageF(height, width, 3);
  out.pointmap.valid = Mask(height, width);

  const double cell = obj.res > 0 ? 1.0 / obj.res : 0.0;
  const double footprint = 1.2;  // splat side in cell units

  for (std::size_t i = 0; i < obj.size(); ++i) {
    const Eigen::Vector3d y = E.rotation * obj.centers[i] + E.translation;
    const double z = y.z();
    if (z <= 1e-9) continue;

    const double u = K.fx * y.x() / z + K.skew * y.y() / z + K.cx;
    const double v = K.fy * y.y() / z + K.cy;
    const double px = u * width;
    const double py = v * height;
    const double hx = 0.5 * footprint * cell * K.fx / z * width;
    const double hy = 0.5 * footprint * cell * K.fy / z * height;

    const int x0 = std::max(0, static_cast<int>(std::ceil(px - hx - 0.5)));
    const int x1 =
        std::min(width - 1, static_cast<int>(std::floor(px + hx - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(py - hy - 0.5)));
    const int y1 =
        std::min(height - 1, static_cast<int>(std::floor(py + hy - 0.5)));

    Eigen::Vector3d color = Eigen::Vector3d::Ones();
    if (obj.features.cols() >= 3)
      color = obj.features.row(i).head<3>().transpose();

    for (int yy = y0; yy <= y1; ++yy)
      for (int xx = x0; xx <= x1; ++xx) {
        double& d = out.depth.at(yy, xx, 0);
        if (d == 0.0 || z < d) {
          d = z;
          for (int ch = 0; ch < 3; ++ch) out.rgb.at(yy, xx, ch) = color(ch);
        }
      }
  }

  // Back-project stored depths at pixel centers into the camera frame.
  const Eigen::Matrix3d Kinv = K.matrix().inverse();
  for (int yy = 0; yy < height; ++yy)
    for (int xx = 0; xx < width; ++xx) {
      const double z = out.depth.at(yy, xx, 0);
      if (z <= 0.0) continue;
      out.mask.at(yy, xx) = 1;
      out.pointmap.valid.at(yy, xx) = 1;
      const Eigen::Vector3d dir =
          Kinv * Eigen::Vector3d((xx + 0.5) / width, (yy + 0.5) / height, 1.0);
      for (int ch = 0; ch < 3; ++ch)
        out.pointmap.xyz.at(yy, xx, ch) = dir(ch) * z;
    }
  return out;
}

VoxelObject paint_voxels(std::span<const Eigen::Vector3d> points,
                         std::span<const Eigen::Vector3d> colors, int r) {
  if (points.size() != colors.size())
    throw ShapeMismatch("paint_voxels: point/color counts differ");
  const cube::OccupancyCube occ = cube::voxelize(points, r);
  VoxelObject obj = cube::active_voxels(occ, 3);

  std::vector<std::int64_t> lookup(static_cast<std::size_t>(r) * r * r, -1);
  for (std::size_t i = 0; i < obj.size(); ++i)
    lookup[occ.index(obj.coords[i].x(), obj.coords[i].y(),
                     obj.coords[i].z())] = static_cast<std::int64_t>(i);

  Eigen::VectorXd counts = Eigen::VectorXd::Zero(obj.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    Eigen::Vector3i idx;
    for (int a = 0; a < 3; ++a) {
      const double c = std::clamp(points[p][a], -0.5, 0.5);
      idx[a] = std::min(static_cast<int>(std::floor((c + 0.5) * r)), r - 1);
    }
    const std::int64_t row = lookup[occ.index(idx.x(), idx.y(), idx.z())];
    obj.features.row(row) += colors[p].transpose();
    counts(row) += 1.0;
  }
  for (Eigen::Index i = 0; i < counts.size(); ++i)
    obj.features.row(i) /= counts(i);
  return obj;
}

}  // namespace cupidkit::synth
