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

#include "cupidkit/cube.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cupidkit/errors.hpp"

namespace cupidkit::cube {

namespace {
constexpr double kCubeTol = 1e-9;
}

std::size_t OccupancyCube::active_count() const {
  std::size_t n = 0;
  for (auto v : data) n += v ? 1 : 0;
  return n;
}

OccupancyCube voxelize(std::span<const Eigen::Vector3d> points, int r) {
  if (r < 2) throw InvalidSpec("voxelize: resolution must be >= 2");

  std::vector<std::size_t> offenders;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (int a = 0; a < 3; ++a) {
      const double c = points[p][a];
      if (c < -0.5 - kCubeTol || c > 0.5 + kCubeTol) {
        offenders.push_back(p);
        break;
      }
    }
  }
  if (!offenders.empty()) {
    std::ostringstream msg;
    msg << "voxelize: " << offenders.size()
        << " point(s) outside the canonical cube, first indices:";
    for (std::size_t i = 0; i < std::min<std::size_t>(8, offenders.size()); ++i)
      msg << " " << offenders[i];
    throw OutOfBounds(msg.str());
  }

  OccupancyCube occ(r);
  for (const auto& p : points) {
    Vec3i idx;
    for (int a = 0; a < 3; ++a) {
      const double c = std::clamp(p[a], -0.5, 0.5);
      idx[a] = std::min(static_cast<int>(std::floor((c + 0.5) * r)), r - 1);
    }
    occ.at(idx.x(), idx.y(), idx.z()) = 1;
  }
  return occ;
}

UVCube build_uv_cube(const OccupancyCube& occ, const ProjectionMatrix& P) {
  UVCube uv(occ.res);
  const int r = occ.res;
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      for (int k = 0; k < r; ++k) {
        if (!occ.at(i, j, k)) continue;
        const Eigen::Vector3d center = voxel_center({i, j, k}, r);
        const PixelCoord p = geom::project(P, center);
        const std::size_t f = uv.index(i, j, k);
        uv.validity[f] = 1;
        double u = p.u, v = p.v;
        if (!p.inside()) {
          u = std::clamp(u, 0.0, 1.0);
          v = std::clamp(v, 0.0, 1.0);
          uv.clamped.push_back(f);
        }
        uv.data[2 * f] = u;
        uv.data[2 * f + 1] = v;
      }
    }
  }
  return uv;
}

VoxelObject active_voxels(const OccupancyCube& occ, int channels) {
  VoxelObject obj;
  obj.res = occ.res;
  const int r = occ.res;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        if (occ.at(i, j, k)) {
          obj.coords.push_back({i, j, k});
          obj.centers.push_back(voxel_center({i, j, k}, r));
        }
  obj.features = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(obj.coords.size()), channels);
  return obj;
}

CorrespondenceSet correspondences_from(const OccupancyCube& occ,
                                       const UVCube& uv) {
  if (occ.res != uv.res)
    throw MaskMismatch("correspondences_from: resolution mismatch");
  const int r = occ.res;
  CorrespondenceSet set;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) {
        const bool o = occ.at(i, j, k) != 0;
        const bool m = uv.validity[uv.index(i, j, k)] != 0;
        if (o != m)
          throw MaskMismatch(
              "correspondences_from: UV validity differs from occupancy");
        if (o)
          set.pairs.push_back(
              {voxel_center({i, j, k}, r), uv.uv_at(i, j, k)});
      }
  return set;
}

}  // namespace cupidkit::cube
