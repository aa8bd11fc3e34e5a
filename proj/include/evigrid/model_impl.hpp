/*
 * Copyright 2026 The evigrid Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Template bodies for the network; training-only entry points live in
// model.cpp.

#pragma once

#include <cmath>
#include <stdexcept>

namespace evigrid {

namespace model_detail {

// Channel-major activation planes [channels][rows][cols].
template <typename T>
struct Planes {
  int channels = 0, rows = 0, cols = 0;
  std::vector<T> data;

  Planes() = default;
  Planes(int ch, int r, int c)
      : channels(ch), rows(r), cols(c),
        data(static_cast<std::size_t>(ch) * static_cast<std::size_t>(r) *
                 static_cast<std::size_t>(c),
             T(0)) {}

  T* plane(int ch) {
    return data.data() + static_cast<std::size_t>(ch) *
                             static_cast<std::size_t>(rows) *
                             static_cast<std::size_t>(cols);
  }
  const T* plane(int ch) const {
    return data.data() + static_cast<std::size_t>(ch) *
                             static_cast<std::size_t>(rows) *
                             static_cast<std::size_t>(cols);
  }
  std::size_t at(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(c);
  }
};

template <typename T>
void check_shapes(const ModelParams<T>& params, const PillarSet& pillars) {
  if (!(pillars.spec == params.cfg.grid)) {
    throw std::invalid_argument("model: pillar grid does not match config grid");
  }
  if (pillars.limits.feature_dim != 9) {
    throw std::invalid_argument("model: pillar feature_dim must be 9");
  }
  if (params.values.size() != params.layout.total) {
    throw std::invalid_argument("model: parameter vector size mismatch");
  }
}

// Point encoder + masked max pool for one pillar. Returns the pooled vector;
// argmax / pre-activation bookkeeping is optional for the backward pass.
template <typename T>
void encode_pillar(const ModelParams<T>& params, const PillarSet& pillars,
                   int pillar, std::vector<T>& pooled, std::vector<int>* argmax) {
  const int c_out = params.cfg.pillar_feature_dim;
  const int n_points = pillars.limits.max_points;
  const T* enc_w = params.values.data() + params.layout.encoder_w.offset;
  const T* enc_b = params.values.data() + params.layout.encoder_b.offset;

  pooled.assign(static_cast<std::size_t>(c_out), T(0));
  if (argmax) argmax->assign(static_cast<std::size_t>(c_out), -1);
  bool first = true;
  for (int j = 0; j < n_points; ++j) {
    if (!pillars.mask[pillars.mask_offset(pillar, j)]) continue;
    const float* f = pillars.features.data() + pillars.feature_offset(pillar, j);
    for (int c = 0; c < c_out; ++c) {
      T z = enc_b[c];
      const T* w = enc_w + static_cast<std::size_t>(c) * 9;
      for (int k = 0; k < 9; ++k) z += w[k] * static_cast<T>(f[k]);
      const T h = z > T(0) ? z : T(0);
      if (first || h > pooled[static_cast<std::size_t>(c)]) {
        pooled[static_cast<std::size_t>(c)] = h;
        if (argmax) (*argmax)[static_cast<std::size_t>(c)] = j;
      }
    }
    first = false;
  }
}

template <typename T>
void conv_forward(const T* w, const T* b, int in_ch, int out_ch, int kernel,
                  const Planes<T>& in, Planes<T>& out) {
  const int rows = in.rows, cols = in.cols;
  const int half = kernel / 2;
  for (int oc = 0; oc < out_ch; ++oc) {
    T* dst = out.plane(oc);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        T acc = b[oc];
        for (int ic = 0; ic < in_ch; ++ic) {
          const T* src = in.plane(ic);
          const T* wk = w + ((static_cast<std::size_t>(oc) * in_ch + ic) *
                             kernel) * kernel;
          for (int kr = 0; kr < kernel; ++kr) {
            const int rr = r + kr - half;
            if (rr < 0 || rr >= rows) continue;
            for (int kc = 0; kc < kernel; ++kc) {
              const int cc = c + kc - half;
              if (cc < 0 || cc >= cols) continue;
              acc += wk[kr * kernel + kc] * src[in.at(rr, cc)];
            }
          }
        }
        dst[out.at(r, c)] = acc > T(0) ? acc : T(0);
      }
    }
  }
}

// Gradient through a conv + ReLU given post-activation values.
template <typename T>
void conv_backward(const T* w, int in_ch, int out_ch, int kernel,
                   const Planes<T>& in, const Planes<T>& out,
                   const Planes<T>& d_out_post, T* dw, T* db, Planes<T>& d_in) {
  const int rows = in.rows, cols = in.cols;
  const int half = kernel / 2;
  for (int oc = 0; oc < out_ch; ++oc) {
    const T* out_p = out.plane(oc);
    const T* dpost = d_out_post.plane(oc);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const std::size_t idx = out.at(r, c);
        if (!(out_p[idx] > T(0))) continue;  // ReLU gate
        const T dz = dpost[idx];
        if (dz == T(0)) continue;
        db[oc] += dz;
        for (int ic = 0; ic < in_ch; ++ic) {
          const T* src = in.plane(ic);
          T* dsrc = d_in.plane(ic);
          T* wgrad = dw + ((static_cast<std::size_t>(oc) * in_ch + ic) *
                           kernel) * kernel;
          const T* wk = w + ((static_cast<std::size_t>(oc) * in_ch + ic) *
                             kernel) * kernel;
          for (int kr = 0; kr < kernel; ++kr) {
            const int rr = r + kr - half;
            if (rr < 0 || rr >= rows) continue;
            for (int kc = 0; kc < kernel; ++kc) {
              const int cc = c + kc - half;
              if (cc < 0 || cc >= cols) continue;
              const std::size_t sidx = in.at(rr, cc);
              wgrad[kr * kernel + kc] += dz * src[sidx];
              dsrc[sidx] += wk[kr * kernel + kc] * dz;
            }
          }
        }
      }
    }
  }
}

// Full forward pass with retained activations (for the reverse sweep).
template <typename T>
struct ForwardState {
  std::vector<std::vector<T>> pillar_vecs;  // [num_pillars][C]
  std::vector<Planes<T>> activations;       // canvas, conv outputs...
  Planes<T> evidence;                       // [2][rows][cols], post ReLU
};

template <typename T>
void run_forward(const ModelParams<T>& params, const PillarSet& pillars,
                 ForwardState<T>& state) {
  check_shapes(params, pillars);
  const ModelConfig& cfg = params.cfg;
  const int rows = cfg.grid.rows, cols = cfg.grid.cols;
  const int c0 = cfg.pillar_feature_dim;

  state.pillar_vecs.assign(static_cast<std::size_t>(pillars.num_pillars), {});
  Planes<T> canvas(c0, rows, cols);
  for (int p = 0; p < pillars.num_pillars; ++p) {
    auto& vec = state.pillar_vecs[static_cast<std::size_t>(p)];
    encode_pillar(params, pillars, p, vec, nullptr);
    const CellIndex cell = pillars.pillar_cells[static_cast<std::size_t>(p)];
    for (int c = 0; c < c0; ++c) {
      canvas.plane(c)[canvas.at(cell.row, cell.col)] = vec[static_cast<std::size_t>(c)];
    }
  }

  state.activations.clear();
  state.activations.push_back(std::move(canvas));
  for (std::size_t l = 0; l < params.layout.convs.size(); ++l) {
    const auto& conv = params.layout.convs[l];
    Planes<T> out(conv.out_ch, rows, cols);
    conv_forward(params.values.data() + conv.w.offset,
                 params.values.data() + conv.b.offset, conv.in_ch, conv.out_ch,
                 conv.kernel, state.activations.back(), out);
    state.activations.push_back(std::move(out));
  }

  // 1x1 head with ReLU.
  const T* head_w = params.values.data() + params.layout.head_w.offset;
  const T* head_b = params.values.data() + params.layout.head_b.offset;
  const Planes<T>& last = state.activations.back();
  state.evidence = Planes<T>(2, rows, cols);
  for (int a = 0; a < 2; ++a) {
    T* dst = state.evidence.plane(a);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        T acc = head_b[a];
        for (int ic = 0; ic < params.layout.head_in; ++ic) {
          acc += head_w[static_cast<std::size_t>(a) * params.layout.head_in + ic] *
                 last.plane(ic)[last.at(r, c)];
        }
        dst[state.evidence.at(r, c)] = acc > T(0) ? acc : T(0);
      }
    }
  }
}

}  // namespace model_detail

template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams<T> params;
  params.cfg = cfg;
  params.layout = make_layout(cfg);
  params.values.assign(params.layout.total, T(0));

  const auto he_uniform = [&](const ParamLayout::Block& block, int fan_in,
                              std::uint64_t stream) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    Rng rng = Rng::stream(cfg.seed, 0x1417ull, stream);
    for (std::size_t i = 0; i < block.count; ++i) {
      params.values[block.offset + i] = static_cast<T>(rng.uniform(-limit, limit));
    }
  };
  he_uniform(params.layout.encoder_w, 9, 0);
  std::uint64_t stream = 1;
  for (const auto& conv : params.layout.convs) {
    he_uniform(conv.w, conv.in_ch * conv.kernel * conv.kernel, stream++);
  }
  he_uniform(params.layout.head_w, params.layout.head_in, stream);
  // Head biases start at 1 instead of 0: with the heavy occupied-cell
  // weighting, a zero-initialized evidence head lets the free channel get
  // pushed negative in the first updates and the ReLU never recovers.
  for (std::size_t i = 0; i < params.layout.head_b.count; ++i) {
    params.values[params.layout.head_b.offset + i] = T(1);
  }
  return params;
}

template <typename T>
EvidentialGrid forward(const ModelParams<T>& params, const PillarSet& pillars) {
  model_detail::ForwardState<T> state;
  model_detail::run_forward(params, pillars, state);
  EvidentialGrid grid(params.cfg.grid);
  for (int r = 0; r < params.cfg.grid.rows; ++r) {
    for (int c = 0; c < params.cfg.grid.cols; ++c) {
      const std::size_t i = state.evidence.at(r, c);
      grid.at(r, c) = EvidencePair{
          static_cast<double>(state.evidence.plane(0)[i]),
          static_cast<double>(state.evidence.plane(1)[i])};
    }
  }
  return grid;
}

template <typename T>
BackwardResult<T> backward(const ModelParams<T>& params, const PillarSet& pillars,
                           const GroundTruthGrid& truth, int epoch,
                           const LossConfig& loss_cfg) {
  using model_detail::Planes;
  model_detail::ForwardState<T> state;
  model_detail::run_forward(params, pillars, state);
  const ModelConfig& cfg = params.cfg;
  const int rows = cfg.grid.rows, cols = cfg.grid.cols;

  EvidentialGrid pred(cfg.grid);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = state.evidence.at(r, c);
      pred.at(r, c) = EvidencePair{
          static_cast<double>(state.evidence.plane(0)[i]),
          static_cast<double>(state.evidence.plane(1)[i])};
    }
  }
  const LossGradient lg = loss_gradient(pred, truth, epoch, loss_cfg);

  BackwardResult<T> result;
  result.loss = lg.loss;
  result.weighted_kl = lg.weighted_kl;
  result.grads.assign(params.layout.total, T(0));

  // Evidence gradient through the head ReLU.
  Planes<T> d_evidence(2, rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = state.evidence.at(r, c);
      const std::size_t flat = cfg.grid.flat(r, c);
      for (int a = 0; a < 2; ++a) {
        d_evidence.plane(a)[i] =
            static_cast<T>(lg.d_evidence[flat][static_cast<std::size_t>(a)]);
      }
    }
  }

  const T* head_w = params.values.data() + params.layout.head_w.offset;
  T* d_head_w = result.grads.data() + params.layout.head_w.offset;
  T* d_head_b = result.grads.data() + params.layout.head_b.offset;
  const Planes<T>& last = state.activations.back();
  Planes<T> d_last(params.layout.head_in, rows, cols);
  for (int a = 0; a < 2; ++a) {
    const T* ev = state.evidence.plane(a);
    const T* dev = d_evidence.plane(a);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const std::size_t i = state.evidence.at(r, c);
        if (!(ev[i] > T(0))) continue;
        const T dz = dev[i];
        if (dz == T(0)) continue;
        d_head_b[a] += dz;
        for (int ic = 0; ic < params.layout.head_in; ++ic) {
          d_head_w[static_cast<std::size_t>(a) * params.layout.head_in + ic] +=
              dz * last.plane(ic)[last.at(r, c)];
          d_last.plane(ic)[d_last.at(r, c)] +=
              head_w[static_cast<std::size_t>(a) * params.layout.head_in + ic] * dz;
        }
      }
    }
  }

  // Conv stack in reverse.
  Planes<T> d_out = std::move(d_last);
  for (std::size_t l = params.layout.convs.size(); l-- > 0;) {
    const auto& conv = params.layout.convs[l];
    const Planes<T>& in = state.activations[l];
    const Planes<T>& out = state.activations[l + 1];
    Planes<T> d_in(conv.in_ch, rows, cols);
    model_detail::conv_backward(params.values.data() + conv.w.offset, conv.in_ch,
                                conv.out_ch, conv.kernel, in, out, d_out,
                                result.grads.data() + conv.w.offset,
                                result.grads.data() + conv.b.offset, d_in);
    d_out = std::move(d_in);
  }

  // Gather canvas gradients per pillar and push through max pool + encoder.
  const int c0 = cfg.pillar_feature_dim;
  const T* enc_w = params.values.data() + params.layout.encoder_w.offset;
  const T* enc_b = params.values.data() + params.layout.encoder_b.offset;
  T* d_enc_w = result.grads.data() + params.layout.encoder_w.offset;
  T* d_enc_b = result.grads.data() + params.layout.encoder_b.offset;
  std::vector<T> pooled;
  std::vector<int> argmax;
  for (int p = 0; p < pillars.num_pillars; ++p) {
    const CellIndex cell = pillars.pillar_cells[static_cast<std::size_t>(p)];
    bool any = false;
    for (int c = 0; c < c0 && !any; ++c) {
      any = d_out.plane(c)[d_out.at(cell.row, cell.col)] != T(0);
    }
    if (!any) continue;
    model_detail::encode_pillar(params, pillars, p, pooled, &argmax);
    for (int c = 0; c < c0; ++c) {
      const T dg = d_out.plane(c)[d_out.at(cell.row, cell.col)];
      if (dg == T(0)) continue;
      const int j = argmax[static_cast<std::size_t>(c)];
      if (j < 0) continue;
      // Recompute the winning pre-activation for the ReLU gate.
      const float* f = pillars.features.data() + pillars.feature_offset(p, j);
      T z = enc_b[c];
      const T* w = enc_w + static_cast<std::size_t>(c) * 9;
      for (int k = 0; k < 9; ++k) z += w[k] * static_cast<T>(f[k]);
      if (!(z > T(0))) continue;
      d_enc_b[c] += dg;
      T* wg = d_enc_w + static_cast<std::size_t>(c) * 9;
      for (int k = 0; k < 9; ++k) wg[k] += dg * static_cast<T>(f[k]);
    }
  }
  return result;
}

template <typename T>
AdamState<T> make_adam_state(const ModelParams<T>& params, const AdamConfig& cfg) {
  AdamState<T> state;
  state.cfg = cfg;
  state.m.assign(params.values.size(), T(0));
  state.v.assign(params.values.size(), T(0));
  return state;
}

template <typename T>
void adam_step(ModelParams<T>& params, AdamState<T>& state,
               const std::vector<T>& grads) {
  if (grads.size() != params.values.size()) {
    throw std::invalid_argument("adam_step: gradient size mismatch");
  }
  ++state.step;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    const double m = b1 * static_cast<double>(state.m[i]) + (1.0 - b1) * g;
    const double v = b2 * static_cast<double>(state.v[i]) + (1.0 - b2) * g * g;
    state.m[i] = static_cast<T>(m);
    state.v[i] = static_cast<T>(v);
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    params.values[i] -= static_cast<T>(
        state.cfg.learning_rate * m_hat / (std::sqrt(v_hat) + state.cfg.epsilon));
  }
}

}  // namespace evigrid
