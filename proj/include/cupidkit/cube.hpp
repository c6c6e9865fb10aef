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
#include <span>
#include <vector>

#include "cupidkit/geometry.hpp"

namespace cupidkit::cube {

using geom::PixelCoord;
using geom::ProjectionMatrix;
using Vec3i = Eigen::Vector3i;

// Binary r^3 occupancy grid, row-major (i, j, k).
struct OccupancyCube {
  int res = 0;
  std::vector<std::uint8_t> data;

  OccupancyCube() = default;
  explicit OccupancyCube(int r)
      : res(r), data(static_cast<std::size_t>(r) * r * r, 0) {}

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * res + j) * res + k;
  }
  std::uint8_t& at(int i, int j, int k) { return data[index(i, j, k)]; }
  std::uint8_t at(int i, int j, int k) const { return data[index(i, j, k)]; }
  std::size_t active_count() const;
};

// r^3 x 2 grid of normalized pixel coordinates, defined only where the
// validity mask is set; undefined entries are exactly zero. Projections
// that fell outside [0,1]^2 are clamped into range and their flat voxel
// indices recorded in `clamped`.
struct UVCube {
  int res = 0;
  std::vector<double> data;            // r*r*r*2, row-major (i, j, k, c)
  std::vector<std::uint8_t> validity;  // r*r*r
  std::vector<std::size_t> clamped;    // flat indices, ascending

  UVCube() = default;
  explicit UVCube(int r)
      : res(r), data(static_cast<std::size_t>(r) * r * r * 2, 0.0),
        validity(static_cast<std::size_t>(r) * r * r, 0) {}

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * res + j) * res + k;
  }
  PixelCoord uv_at(int i, int j, int k) const {
    const std::size_t f = index(i, j, k);
    return PixelCoord{data[2 * f], data[2 * f + 1]};
  }
};

// Canonical object: active voxel indices, their cell centers in canonical
// units, and per-voxel features (C = 3 RGB in the toy pipeline).
struct VoxelObject {
  int res = 0;
  std::vector<Vec3i> coords;                 // unique, lexicographic
  std::vector<Eigen::Vector3d> centers;      // (index + 0.5)/r - 0.5
  Eigen::MatrixXd features;                  // L x C

  std::size_t size() const { return coords.size(); }
};

struct CorrespondencePair {
  Eigen::Vector3d x;  // canonical 3D point
  PixelCoord uv;      // normalized pixel coordinate
};

struct CorrespondenceSet {
  std::vector<CorrespondencePair> pairs;

  std::size_t size() const { return pairs.size(); }
};

// Cell center of voxel index v at resolution r.
inline Eigen::Vector3d voxel_center(const Vec3i& v, int r) {
  return (v.cast<double>() + Eigen::Vector3d::Constant(0.5)) / r -
         Eigen::Vector3d::Constant(0.5);
}

// Bin points into an r^3 grid over the canonical cube. Cells are half-open
// with the final cell closed; points may exceed the cube by up to 1e-9.
// Throws OutOfBounds listing offending points.
OccupancyCube voxelize(std::span<const Eigen::Vector3d> points, int r);

// Project every active voxel center through P. Throws DegenerateDepth when
// an active center has near-zero depth; out-of-image projections are
// clamped and recorded.
UVCube build_uv_cube(const OccupancyCube& occ, const ProjectionMatrix& P);

// Extract active voxels in lexicographic (i, j, k) order; features are
// zero-initialized with `channels` columns.
VoxelObject active_voxels(const OccupancyCube& occ, int channels = 3);

// One (center, uv) pair per active voxel. Throws MaskMismatch when the UV
// validity mask differs from the occupancy.
CorrespondenceSet correspondences_from(const OccupancyCube& occ,
                                       const UVCube& uv);

}  // namespace cupidkit::cube
