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

#include "cupidkit/flow.hpp"

#include <cmath>
#include <numbers>

#include "cupidkit/errors.hpp"
#include "cupidkit/rng.hpp"

namespace cupidkit::flow {

namespace {

std::int64_t product(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

// [in_dim, h0, h1, ..., latent_size]
std::vector<std::int64_t> layer_dims(const Descriptor& d) {
  std::vector<std::int64_t> dims;
  dims.push_back(d.input_dim());
  for (int h : d.hidden) dims.push_back(h);
  dims.push_back(d.latent_size());
  return dims;
}

void write_time_embedding(double t, int freqs, double* out) {
  double f = std::numbers::pi;
  for (int k = 0; k < freqs; ++k) {
    out[2 * k] = std::sin(f * t);
    out[2 * k + 1] = std::cos(f * t);
    f *= 2.0;
  }
}

struct ParamView {
  std::vector<Eigen::Map<const Eigen::MatrixXd>> W;
  std::vector<Eigen::Map<const Eigen::VectorXd>> b;
};

ParamView view_params(const Descriptor& desc, const Eigen::VectorXd& params) {
  ParamView v;
  const auto dims = layer_dims(desc);
  const double* p = params.data();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    v.W.emplace_back(p, dims[l], dims[l + 1]);
    p += dims[l] * dims[l + 1];
    v.b.emplace_back(p, dims[l + 1]);
    p += dims[l + 1];
  }
  return v;
}

// Forward pass over a batch; returns per-layer post-activation outputs
// (final entry is the linear network output).
std::vector<Eigen::MatrixXd> forward(const ParamView& pv,
                                     const Eigen::MatrixXd& X) {
  std::vector<Eigen::MatrixXd> acts;
  const Eigen::MatrixXd* prev = &X;
  for (std::size_t l = 0; l < pv.W.size(); ++l) {
    Eigen::MatrixXd a =
        ((*prev) * pv.W[l]).rowwise() + pv.b[l].transpose();
    if (l + 1 < pv.W.size()) a = a.array().tanh();
    acts.push_back(std::move(a));
    prev = &acts.back();
  }
  return acts;
}

// Backward pass: dL/dparams given dL/d(output). Gradient layout matches the
// parameter layout.
void backward(const ParamView& pv, const Eigen::MatrixXd& X,
              const std::vector<Eigen::MatrixXd>& acts,
              Eigen::MatrixXd dOut, Eigen::VectorXd& grad) {
  grad.setZero();
  double* g = grad.data();
  std::vector<std::pair<double*, double*>> slots;  // (Wgrad, bgrad) per layer
  for (std::size_t l = 0; l < pv.W.size(); ++l) {
    double* wg = g;
    g += pv.W[l].size();
    double* bg = g;
    g += pv.b[l].size();
    slots.emplace_back(wg, bg);
  }

  for (int l = static_cast<int>(pv.W.size()) - 1; l >= 0; --l) {
    const Eigen::MatrixXd& input = l == 0 ? X : acts[l - 1];
    Eigen::Map<Eigen::MatrixXd> gW(slots[l].first, pv.W[l].rows(),
                                   pv.W[l].cols());
    Eigen::Map<Eigen::VectorXd> gb(slots[l].second, pv.b[l].size());
    gW = input.transpose() * dOut;
    gb = dOut.colwise().sum();
    if (l > 0) {
      dOut = ((dOut * pv.W[l].transpose()).array() *
              (1.0 - acts[l - 1].array().square()))
                 .matrix();
    }
  }
}

// Assemble the network input row [z | time embedding | cond].
void fill_input_row(const Descriptor& desc, const Eigen::ArrayXd& z, double t,
                    const Eigen::VectorXd* cond, double* row) {
  const std::int64_t nz = desc.latent_size();
  std::copy(z.data(), z.data() + nz, row);
  write_time_embedding(t, desc.time_freqs, row + nz);
  double* c = row + nz + desc.time_dim();
  if (cond) {
    if (cond->size() != desc.cond_dim)
      throw ShapeMismatch("flow: condition embedding size mismatch");
    std::copy(cond->data(), cond->data() + desc.cond_dim, c);
  } else {
    std::fill(c, c + desc.cond_dim, 0.0);
  }
}

void check_latent(const Descriptor& desc, const LatentGrid& g,
                  const char* what) {
  if (g.size() != desc.latent_size())
    throw ShapeMismatch(std::string("flow: ") + what + " size mismatch");
}

// Per-entry supervision weights for one sample: 1/M on supervised entries
// (M = supervised entry count), 0 elsewhere. Returns M.
std::int64_t mask_weights(const Descriptor& desc,
                          const std::vector<std::uint8_t>* mask,
                          Eigen::ArrayXd& w) {
  const std::int64_t n = desc.latent_size();
  if (!mask) {
    w = Eigen::ArrayXd::Constant(n, 1.0 / static_cast<double>(n));
    return n;
  }
  const std::int64_t m = static_cast<std::int64_t>(mask->size());
  if (m == 0 || n % m != 0)
    throw ShapeMismatch("flow: mask length must divide the latent size");
  const std::int64_t block = n / m;
  std::int64_t count = 0;
  for (auto v : *mask) count += v ? 1 : 0;
  count *= block;
  w.setZero(n);
  if (count == 0) return 0;
  const double inv = 1.0 / static_cast<double>(count);
  for (std::int64_t i = 0; i < m; ++i)
    if ((*mask)[i]) w.segment(i * block, block).setConstant(inv);
  return count;
}

}  // namespace

LatentGrid LatentGrid::zeros(std::vector<std::int64_t> shape) {
  LatentGrid g;
  g.data = Eigen::ArrayXd::Zero(product(shape));
  g.shape = std::move(shape);
  return g;
}

std::int64_t Descriptor::latent_size() const { return product(latent_shape); }

std::int64_t Descriptor::input_dim() const {
  return latent_size() + time_dim() + cond_dim;
}

std::int64_t Descriptor::param_count() const {
  const auto dims = layer_dims(*this);
  std::int64_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    n += dims[l] * dims[l + 1] + dims[l + 1];
  return n;
}

double round_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

FlowField FlowField::init(const Descriptor& desc, std::uint64_t seed) {
  if (desc.activation != "tanh")
    throw InvalidSpec("flow: unsupported activation '" + desc.activation + "'");
  FlowField f;
  f.desc = desc;
  f.params.resize(desc.param_count());
  RngStream rng(seed, "flow.init");
  const auto dims = layer_dims(desc);
  double* p = f.params.data();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (std::int64_t i = 0; i < dims[l] * dims[l + 1]; ++i)
      *p++ = round_f32(scale * rng.normal());
    for (std::int64_t i = 0; i < dims[l + 1]; ++i) *p++ = 0.0;
  }
  return f;
}

Eigen::VectorBlock<Eigen::VectorXd> FlowField::output_bias() {
  const std::int64_t nb = desc.latent_size();
  return params.segment(params.size() - nb, nb);
}

Eigen::ArrayXd FlowField::velocity(const Eigen::ArrayXd& z_flat,
                                   const Eigen::VectorXd* cond,
                                   double t) const {
  if (z_flat.size() != desc.latent_size())
    throw ShapeMismatch("flow: latent size mismatch");
  Eigen::MatrixXd X(1, desc.input_dim());
  fill_input_row(desc, z_flat, t, cond, X.data());
  // Row vector times column-major weights works directly because a 1-row
  // matrix is layout-agnostic.
  const ParamView pv = view_params(desc, params);
  const auto acts = forward(pv, X);
  return acts.back().row(0).transpose().array();
}

LatentGrid interpolate(const LatentGrid& z0, const LatentGrid& eps, double t) {
  if (z0.shape != eps.shape)
    throw ShapeMismatch("interpolate: latent shapes differ");
  LatentGrid out;
  out.shape = z0.shape;
  out.data = (1.0 - t) * z0.data + t * eps.data;
  return out;
}

CfmResult cfm_loss(const FlowField& field, const LatentGrid& z0,
                   const Eigen::VectorXd* cond, double t,
                   const LatentGrid& eps,
                   const std::vector<std::uint8_t>* mask) {
  const Descriptor& desc = field.desc;
  check_latent(desc, z0, "z0");
  check_latent(desc, eps, "eps");

  Eigen::ArrayXd w;
  mask_weights(desc, mask, w);

  const LatentGrid zt = interpolate(z0, eps, t);
  Eigen::MatrixXd X(1, desc.input_dim());
  fill_input_row(desc, zt.data, t, cond, X.data());

  const ParamView pv = view_params(desc, field.params);
  const auto acts = forward(pv, X);

  const Eigen::ArrayXd target = eps.data - z0.data;
  const Eigen::ArrayXd diff = acts.back().row(0).transpose().array() - target;

  CfmResult res;
  res.loss = (w * diff.square()).sum();
  Eigen::MatrixXd dOut = (2.0 * w * diff).matrix().transpose();
  res.grad.resize(field.params.size());
  backward(pv, X, acts, std::move(dOut), res.grad);
  return res;
}

FlowField train(FlowField field, std::span<const TrainSample> dataset,
                const TrainConfig& cfg, std::vector<double>* loss_curve) {
  if (dataset.empty()) throw EmptyDataset("train: dataset is empty");
  if (cfg.timestep_dist != "uniform")
    throw InvalidSpec("train: unknown timestep distribution '" +
                      cfg.timestep_dist + "'");
  if (cfg.batch < 1 || cfg.learning_rate <= 0.0 || cfg.drop < 0.0 ||
      cfg.drop > 1.0)
    throw InvalidSpec("train: invalid config");

  const Descriptor& desc = field.desc;
  const std::int64_t nz = desc.latent_size();
  const int B = cfg.batch;

  Eigen::MatrixXd X(B, desc.input_dim());
  Eigen::MatrixXd targets(B, nz);
  Eigen::MatrixXd weights(B, nz);
  Eigen::VectorXd grad(field.params.size());
  Eigen::ArrayXd eps(nz), w(nz);

  for (int step = cfg.start_step; step < cfg.steps; ++step) {
    RngStream pick(cfg.seed, "train.batch", static_cast<std::uint64_t>(step));
    RngStream tdraw(cfg.seed, "train.t", static_cast<std::uint64_t>(step));
    RngStream dropdraw(cfg.seed, "train.drop",
                       static_cast<std::uint64_t>(step));

    for (int bi = 0; bi < B; ++bi) {
      const auto& s = dataset[pick.uniform_int(dataset.size())];
      check_latent(desc, s.z0, "z0");

      RngStream noise(cfg.seed, "train.eps",
                      static_cast<std::uint64_t>(step) * B + bi);
      for (std::int64_t i = 0; i < nz; ++i) eps[i] = noise.normal();

      const double t = tdraw.uniform();
      const bool dropped = dropdraw.uniform() < cfg.drop;
      const Eigen::VectorXd* cond =
          (!dropped && s.cond.has_value()) ? &*s.cond : nullptr;

      const Eigen::ArrayXd zt = (1.0 - t) * s.z0.data + t * eps;
      // X is column-major; assemble the row contiguously first.
      Eigen::VectorXd row(desc.input_dim());
      fill_input_row(desc, zt, t, cond, row.data());
      X.row(bi) = row.transpose();

      targets.row(bi) = (eps - s.z0.data).matrix().transpose();
      mask_weights(desc, s.mask ? &*s.mask : nullptr, w);
      weights.row(bi) = w.matrix().transpose();
    }

    const ParamView pv = view_params(desc, field.params);
    const auto acts = forward(pv, X);
    const Eigen::MatrixXd diff = acts.back() - targets;

    const double loss =
        (weights.array() * diff.array().square()).sum() / B;
    if (loss_curve) loss_curve->push_back(loss);

    Eigen::MatrixXd dOut =
        (2.0 / B) * (weights.array() * diff.array()).matrix();
    backward(pv, X, acts, std::move(dOut), grad);

    field.params -= cfg.learning_rate * grad;
    for (Eigen::Index i = 0; i < field.params.size(); ++i)
      field.params[i] = round_f32(field.params[i]);
  }
  return field;
}

namespace {

Eigen::ArrayXd guided_velocity(const FlowField& field, const Eigen::ArrayXd& z,
                               const Eigen::VectorXd* cond, double t,
                               double w) {
  if (!cond) return field.velocity(z, nullptr, t);
  if (w == 1.0) return field.velocity(z, cond, t);
  const Eigen::ArrayXd vu = field.velocity(z, nullptr, t);
  const Eigen::ArrayXd vc = field.velocity(z, cond, t);
  return vu + w * (vc - vu);
}

}  // namespace

LatentGrid sample(const FlowField& field, const Eigen::VectorXd* cond,
                  const SampleConfig& cfg, std::vector<std::int64_t> shape,
                  const Eigen::ArrayXd* init_noise) {
  std::span<const Eigen::VectorXd> conds;
  if (cond) conds = std::span<const Eigen::VectorXd>(cond, 1);
  return sample_multiview(field, conds, cfg, std::move(shape), init_noise);
}

LatentGrid fuse_multiview(std::span<const LatentGrid> velocities) {
  if (velocities.empty())
    throw ShapeMismatch("fuse_multiview: need at least one view");
  LatentGrid out;
  out.shape = velocities.front().shape;
  out.data = velocities.front().data;
  for (std::size_t i = 1; i < velocities.size(); ++i) {
    if (velocities[i].shape != out.shape)
      throw ShapeMismatch("fuse_multiview: velocity shapes differ");
    out.data += velocities[i].data;
  }
  out.data /= static_cast<double>(velocities.size());
  return out;
}

LatentGrid sample_multiview(const FlowField& field,
                            std::span<const Eigen::VectorXd> conds,
                            const SampleConfig& cfg,
                            std::vector<std::int64_t> shape,
                            const Eigen::ArrayXd* init_noise) {
  if (cfg.num_steps < 1) throw InvalidSpec("sample: num_steps must be >= 1");
  const std::int64_t nz = field.desc.latent_size();
  if (product(shape) != nz)
    throw ShapeMismatch("sample: requested shape does not match the field");

  LatentGrid z;
  z.shape = std::move(shape);
  if (init_noise) {
    if (init_noise->size() != nz)
      throw ShapeMismatch("sample: init noise size mismatch");
    z.data = *init_noise;
  } else {
    z.data.resize(nz);
    RngStream rng(cfg.seed, "sample.noise");
    for (std::int64_t i = 0; i < nz; ++i) z.data[i] = rng.normal();
  }

  const int n = cfg.num_steps;
  for (int k = 0; k < n; ++k) {
    const double t = static_cast<double>(n - k) / n;
    const double t_next = static_cast<double>(n - k - 1) / n;

    Eigen::ArrayXd v;
    if (conds.empty()) {
      v = guided_velocity(field, z.data, nullptr, t, cfg.guidance);
    } else if (conds.size() == 1) {
      v = guided_velocity(field, z.data, &conds[0], t, cfg.guidance);
    } else {
      std::vector<LatentGrid> per_view;
      per_view.reserve(conds.size());
      for (const auto& c : conds) {
        LatentGrid g;
        g.shape = z.shape;
        g.data = guided_velocity(field, z.data, &c, t, cfg.guidance);
        per_view.push_back(std::move(g));
      }
      v = fuse_multiview(per_view).data;
    }

    // x0-prediction form of the Euler step; telescopes exactly when the
    // velocity is constant, which keeps Dirac transport exact for any
    // step count.
    z.data = (z.data - t * v) + t_next * v;
  }
  return z;
}

}  // namespace cupidkit::flow
