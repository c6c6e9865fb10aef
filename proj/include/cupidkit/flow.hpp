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
#include <string>
#include <vector>

namespace cupidkit::flow {

// Cube-shaped or flattened latent, stored row-major over `shape`.
struct LatentGrid {
  std::vector<std::int64_t> shape;
  Eigen::ArrayXd data;

  static LatentGrid zeros(std::vector<std::int64_t> shape);
  std::int64_t size() const { return data.size(); }
};

// Velocity-network architecture: an MLP over the flattened latent
// concatenated with a sinusoidal time embedding and a condition embedding.
// Weight matrices are stored column-major (fan_in x fan_out) back to back,
// each followed by its bias, in layer order.
struct Descriptor {
  std::vector<std::int64_t> latent_shape;
  int cond_dim = 0;
  int time_freqs = 8;
  std::vector<int> hidden{128, 128};
  std::string activation = "tanh";

  std::int64_t latent_size() const;
  int time_dim() const { return 2 * time_freqs; }
  std::int64_t input_dim() const;
  std::int64_t param_count() const;
  bool operator==(const Descriptor&) const = default;
};

struct FlowField {
  Descriptor desc;
  Eigen::VectorXd params;  // f32-representable values, see round_f32 below

  // Seeded normal init scaled by 1/sqrt(fan_in); zero biases.
  static FlowField init(const Descriptor& desc, std::uint64_t seed);

  // v_phi(z_t, cond, t). cond = nullptr selects the null (zero) embedding.
  Eigen::ArrayXd velocity(const Eigen::ArrayXd& z_flat,
                          const Eigen::VectorXd* cond, double t) const;

  // Mutable view of the final layer's bias (handy for constant fields).
  Eigen::VectorBlock<Eigen::VectorXd> output_bias();
};

// All trained parameters are kept exactly representable in f32 so that
// checkpoints (CUBE1 f32) round-trip losslessly and resumed runs match
// uninterrupted ones bit for bit.
double round_f32(double v);

struct TrainConfig {
  int steps = 1000;
  int batch = 32;
  double learning_rate = 1e-4;
  double drop = 0.1;  // condition drop probability (classifier-free guidance)
  std::uint64_t seed = 0;
  std::string timestep_dist = "uniform";
  int start_step = 0;  // resume point; streams are keyed by absolute step
};

struct SampleConfig {
  int num_steps = 25;
  double guidance = 1.0;
  std::uint64_t seed = 0;
};

struct TrainSample {
  LatentGrid z0;
  std::optional<Eigen::VectorXd> cond;
  // Spatial supervision mask: 1 = supervised. Length must divide the
  // latent size; each mask entry covers a contiguous channel block.
  std::optional<std::vector<std::uint8_t>> mask;
};

// (1 - t) z0 + t eps, elementwise. Throws ShapeMismatch.
LatentGrid interpolate(const LatentGrid& z0, const LatentGrid& eps, double t);

struct CfmResult {
  double loss = 0.0;
  Eigen::VectorXd grad;  // d loss / d params, exact
};

// Eq.-style CFM objective on one sample: mean over supervised entries of
// ||v_phi(z_t, cond, t) - (eps - z0)||^2, with the exact analytic gradient.
CfmResult cfm_loss(const FlowField& field, const LatentGrid& z0,
                   const Eigen::VectorXd* cond, double t,
                   const LatentGrid& eps,
                   const std::vector<std::uint8_t>* mask = nullptr);

// Plain SGD over the CFM objective; fully deterministic given cfg.seed.
// Conditions drop to the null embedding with probability cfg.drop. Appends
// the per-step mean batch loss to loss_curve when given.
FlowField train(FlowField field, std::span<const TrainSample> dataset,
                const TrainConfig& cfg,
                std::vector<double>* loss_curve = nullptr);

// Euler integration of the learned ODE from t=1 (standard-normal noise) to
// t=0, in x0-prediction form: z <- (z - t v) + t_next v, which telescopes
// exactly for constant fields. Classifier-free guidance applies
// v_u + w (v_c - v_u); w = 1 uses the conditional velocity directly.
// init_noise (for tests) overrides the seeded starting noise.
LatentGrid sample(const FlowField& field, const Eigen::VectorXd* cond,
                  const SampleConfig& cfg, std::vector<std::int64_t> shape,
                  const Eigen::ArrayXd* init_noise = nullptr);

// Elementwise mean of per-view guided velocities. Throws ShapeMismatch.
LatentGrid fuse_multiview(std::span<const LatentGrid> velocities);

// Multi-view sampling: at every step the per-condition guided velocities at
// the shared latent are fused (averaged) and used in place of the
// single-view velocity.
LatentGrid sample_multiview(const FlowField& field,
                            std::span<const Eigen::VectorXd> conds,
                            const SampleConfig& cfg,
                            std::vector<std::int64_t> shape,
                            const Eigen::ArrayXd* init_noise = nullptr);

}  // namespace cupidkit::flow
