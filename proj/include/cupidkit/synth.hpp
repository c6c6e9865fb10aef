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
#include <string>
#include <utility>
#include <vector>

#include "cupidkit/cube.hpp"
#include "cupidkit/geometry.hpp"
#include "cupidkit/image.hpp"

namespace cupidkit::synth {

using cube::VoxelObject;
using geom::CameraExtrinsics;
using geom::CameraIntrinsics;

// One solid of a (possibly stacked) primitive. rx/ry are lateral radii or
// half-extents, height the vertical extent; spheres use rx as the radius.
// Surface colors are the part tint modulated by a canonical-position
// gradient, which keeps every viewpoint visually distinct.
struct PrimitivePart {
  std::string kind;  // "sphere" | "box" | "cylinder"
  double rx = 0.2;
  double ry = 0.2;
  double height = 0.25;
  Eigen::Vector3d tint{0.8, 0.8, 0.8};
};

// A primitive rests on the ground plane z = 0 and must fit inside the
// canonical cube. Composites stack part 1 on top of part 0.
struct PrimitiveSpec {
  std::string kind;  // "sphere" | "box" | "cylinder" | "composite"
  std::vector<PrimitivePart> parts;
  double cx = 0.0;  // lateral placement of the stack axis
  double cy = 0.0;
  std::uint64_t seed = 0;

  // Uniformly sampled spec of the given kind.
  static PrimitiveSpec random(std::uint64_t seed, const std::string& kind);
};

struct SurfaceSamples {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> colors;  // rgb in [0,1]
};

// Area-weighted uniform surface sampling, deterministic given spec.seed.
// Throws InvalidSpec when the primitive violates its invariants.
SurfaceSamples make_primitive(const PrimitiveSpec& spec, int samples);

struct CameraSampleParams {
  std::pair<double, double> focal_range_mm{24.0, 200.0};
  std::pair<double, double> distance_range{1.0, 100.0};
  std::pair<double, double> extent_range{0.6, 0.9};  // projected cube extent
  std::pair<double, double> elevation_deg{-10.0, 60.0};
};

// Random look-at-origin camera: uniform azimuth, elevation in range, focal
// uniform in mm on a 36 mm-equivalent sensor (fx = fy = f_mm / 36), and the
// distance solved by bisection so the canonical cube subtends the sampled
// extent fraction of the image.
std::pair<CameraIntrinsics, CameraExtrinsics> sample_camera(
    std::uint64_t seed, const CameraSampleParams& params = {});

struct RenderOutput {
  ImageF rgb;    // H x W x 3, background black
  ImageF depth;  // H x W x 1, camera-frame z, 0 = background
  Mask mask;     // depth > 0
  PointMap pointmap;
};

// Z-buffer point splatting: each voxel becomes a screen-space square of its
// projected footprint; the nearest depth wins per pixel. The pointmap holds
// back-projected depths at pixel centers.
RenderOutput rasterize(const VoxelObject& obj, const CameraIntrinsics& K,
                       const CameraExtrinsics& E, int height, int width);

// Voxelize sampled surface points and average point colors per cell.
VoxelObject paint_voxels(std::span<const Eigen::Vector3d> points,
                         std::span<const Eigen::Vector3d> colors, int r);

}  // namespace cupidkit::synth
