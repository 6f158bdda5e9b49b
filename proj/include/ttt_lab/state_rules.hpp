// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

// Recurrent state Update/Read kernels viewed as test-time training: the
// growing KV cache of full attention, the softmax cross-attention RNN write,
// linear-attention (Hebbian) and delta-rule fast weights, and the
// confidence-gated token-state update.
//
// Every function is pure: inputs are taken by const reference (or by value
// when the result reuses the storage) and never mutated.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ttt_lab/errors.hpp"
#include "ttt_lab/rng.hpp"

namespace ttt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// m observation tokens (rows) by c channels.
struct ObservationTokens {
  Matrix tokens;
  std::size_t frame_index = 0;
};

/// Fixed-length token state, n tokens by c channels.
struct TokenState {
  Matrix tokens;
};

/// Fast-weight associative memory mapping c_k keys to c_v values.
struct FastWeightMatrix {
  Matrix s;

  static FastWeightMatrix zero(Index value_dim, Index key_dim) {
    return {Matrix::Zero(value_dim, key_dim)};
  }
};

struct KvEntry {
  Matrix keys;
  Matrix values;
};

/// Append-only list of per-frame key/value blocks.
struct KvCache {
  std::vector<KvEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

/// KV cache flattened into two row-stacked matrices, ready for attention.
struct StackedKv {
  Matrix keys;
  Matrix values;
};

/// Frozen linear maps standing in for slow weights. Matrices act on row
/// tokens from the right: q = x * w_q.
struct ProjectionSet {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
  Vector gate_map;
  std::uint64_t seed = 0;

  Index channels() const noexcept { return w_q.rows(); }

  /// Entries i.i.d. uniform on [-1/sqrt(c), 1/sqrt(c)], filled in the order
  /// w_q, w_k, w_v (row-major) then gate_map.
  static ProjectionSet random(Index c, std::uint64_t seed) {
    if (c < 1) throw InvalidArgument("projection channel count must be >= 1");
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(c));
    auto fill = [&](Matrix& m) {
      m.resize(c, c);
      for (Index r = 0; r < c; ++r)
        for (Index col = 0; col < c; ++col) m(r, col) = rng.uniform(-bound, bound);
    };
    ProjectionSet p;
    p.seed = seed;
    fill(p.w_q);
    fill(p.w_k);
    fill(p.w_v);
    p.gate_map.resize(c);
    for (Index i = 0; i < c; ++i) p.gate_map(i) = rng.uniform(-bound, bound);
    return p;
  }

  static ProjectionSet identity(Index c) {
    if (c < 1) throw InvalidArgument("projection channel count must be >= 1");
    ProjectionSet p;
    p.w_q = Matrix::Identity(c, c);
    p.w_k = Matrix::Identity(c, c);
    p.w_v = Matrix::Identity(c, c);
    p.gate_map = Vector::Zero(c);
    return p;
  }

  /// Block selectors for tokens laid out as [key | value | zero padding]:
  /// queries and keys read the key block, values read the value block. The
  /// gate map is random as in random().
  static ProjectionSet pair_selector(Index c, Index key_dim, Index value_dim,
                                     std::uint64_t seed) {
    if (key_dim < 1 || value_dim < 1 || key_dim + value_dim > c) {
      throw DimensionError("pair layout needs key_dim + value_dim <= c (c=" +
                           std::to_string(c) + ", key_dim=" +
                           std::to_string(key_dim) + ", value_dim=" +
                           std::to_string(value_dim) + ")");
    }
    ProjectionSet p;
    p.seed = seed;
    p.w_q = Matrix::Zero(c, c);
    p.w_q.topLeftCorner(key_dim, key_dim).setIdentity();
    p.w_k = p.w_q;
    p.w_v = Matrix::Zero(c, c);
    p.w_v.block(key_dim, key_dim, value_dim, value_dim).setIdentity();
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(c));
    p.gate_map.resize(c);
    for (Index i = 0; i < c; ++i) p.gate_map(i) = rng.uniform(-bound, bound);
    return p;
  }
};

/// Per-state-token learning rates.
struct GateVector {
  Vector beta;
};

// Learning-rate parameterisations.
struct ConstantScalar {
  double value = 1.0;
};
struct InputScalarSigmoid {};
struct PerTokenInputSigmoid {};
struct ConfidenceGate {};

using BetaMode =
    std::variant<ConstantScalar, InputScalarSigmoid, PerTokenInputSigmoid, ConfidenceGate>;

// Sequence-modelling layers.
struct FullAttentionAppend {};
struct VanillaSoftmaxRnn {};
struct LinearAttentionHebbian {};
struct DeltaRule {
  BetaMode beta = ConstantScalar{1.0};
};
struct Ttt3r {
  BetaMode beta = ConfidenceGate{};
};

using RuleKind = std::variant<FullAttentionAppend, VanillaSoftmaxRnn,
                              LinearAttentionHebbian, DeltaRule, Ttt3r>;

enum class GateReduce { Sum, Mean };

struct AttentionOptions {
  /// Multiplier applied to logits inside softmax and the gate; unset means
  /// 1/sqrt(c) for c channels.
  std::optional<double> scale;
  GateReduce gate_reduce = GateReduce::Sum;

  double resolved_scale(Index channels) const {
    if (scale) return *scale;
    return 1.0 / std::sqrt(static_cast<double>(channels));
  }
};

struct Projected {
  Matrix q;
  Matrix k;
  Matrix v;
};

struct GatedUpdate {
  TokenState state;
  GateVector gate;
};

namespace detail {

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + " has non-finite entries");
}

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + " has non-finite entries");
}

inline void require_cols(const Matrix& m, Index want, const char* what) {
  if (m.cols() != want) {
    throw DimensionError(std::string(what) + " has " + std::to_string(m.cols()) +
                         " channels, expected " + std::to_string(want));
  }
}

inline void require_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw InvalidArgument("attention scale must be finite and > 0");
}

inline void require_projection_shape(const ProjectionSet& p) {
  const Index c = p.w_q.rows();
  if (c < 1 || p.w_q.cols() != c || p.w_k.rows() != c || p.w_k.cols() != c ||
      p.w_v.rows() != c || p.w_v.cols() != c || p.gate_map.size() != c) {
    throw DimensionError("projection set matrices must all be c x c with a c-vector gate map");
  }
}

inline void require_observation(const ObservationTokens& x, const ProjectionSet& p) {
  require_projection_shape(p);
  if (x.tokens.rows() < 1) throw InvalidArgument("observation must hold at least one token");
  require_cols(x.tokens, p.channels(), "observation");
  require_finite(x.tokens, "observation");
}

inline void require_state(const TokenState& s, const ProjectionSet& p) {
  if (s.tokens.rows() < 1) throw InvalidArgument("token state must hold at least one token");
  require_cols(s.tokens, p.channels(), "token state");
  require_finite(s.tokens, "token state");
}

}  // namespace detail

/// Logistic function clamped to the open interval (0, 1): saturated inputs
/// (e.g. +40, where 1/(1+e^-40) rounds to 1.0) return the nearest
/// representable interior value instead of an endpoint.
inline double gate_sigmoid(double z) {
  double s = 0.0;
  if (z >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(s, lo, hi);
}

inline Projected project(const ObservationTokens& x, const ProjectionSet& p) {
  detail::require_observation(x, p);
  return {x.tokens * p.w_q, x.tokens * p.w_k, x.tokens * p.w_v};
}

/// Row-wise softmax of scale * logits, stabilised by subtracting the row max.
inline Matrix softmax_rows(const Matrix& logits, double scale) {
  detail::require_scale(scale);
  detail::require_finite(logits, "logits");
  Matrix out(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    if (logits.cols() == 0) continue;
    const double row_max = scale * logits.row(r).maxCoeff();
    double total = 0.0;
    for (Index c = 0; c < logits.cols(); ++c) {
      const double e = std::exp(scale * logits(r, c) - row_max);
      out(r, c) = e;
      total += e;
    }
    out.row(r) /= total;
  }
  return out;
}

/// Appends already-projected keys and values as one frame entry.
inline KvCache append_kv(KvCache cache, Matrix keys, Matrix values) {
  if (keys.rows() != values.rows() || keys.rows() < 1)
    throw DimensionError("kv entry needs matching, nonzero row counts");
  if (!cache.empty() && (cache.entries.front().keys.cols() != keys.cols() ||
                         cache.entries.front().values.cols() != values.cols())) {
    throw DimensionError("kv entry width differs from cached entries");
  }
  cache.entries.push_back({std::move(keys), std::move(values)});
  return cache;
}

/// State concatenation: S.append(K_X, V_X). Takes the cache by value so a
/// streaming caller can move it through without copying history.
inline KvCache update_full_attention(KvCache cache, const ObservationTokens& x,
                                     const ProjectionSet& p) {
  Projected proj = project(x, p);
  if (!cache.empty() && cache.entries.front().keys.cols() != p.channels())
    throw DimensionError("cache channel count differs from projection set");
  return append_kv(std::move(cache), std::move(proj.k), std::move(proj.v));
}

inline StackedKv stack(const KvCache& cache) {
  if (cache.empty()) return {};
  Index rows = 0;
  for (const auto& e : cache.entries) rows += e.keys.rows();
  const Index kdim = cache.entries.front().keys.cols();
  const Index vdim = cache.entries.front().values.cols();
  StackedKv out{Matrix(rows, kdim), Matrix(rows, vdim)};
  Index at = 0;
  for (const auto& e : cache.entries) {
    out.keys.middleRows(at, e.keys.rows()) = e.keys;
    out.values.middleRows(at, e.values.rows()) = e.values;
    at += e.keys.rows();
  }
  return out;
}

/// softmax(scale * Q K^T) V over a stacked cache.
inline Matrix attend(const StackedKv& kv, const Matrix& queries, double scale) {
  if (kv.keys.rows() == 0) throw InvalidArgument("cannot attend over an empty cache");
  detail::require_cols(queries, kv.keys.cols(), "attention queries");
  return softmax_rows(queries * kv.keys.transpose(), scale) * kv.values;
}

/// Y = X + softmax(Q_X K_S^T) V_S.
inline Matrix read_full_attention(const KvCache& cache, const ObservationTokens& x,
                                  const ProjectionSet& p,
                                  const AttentionOptions& opts = {}) {
  if (cache.empty()) throw InvalidArgument("cannot read from an empty cache");
  detail::require_observation(x, p);
  const Matrix q = x.tokens * p.w_q;
  return x.tokens + attend(stack(cache), q, opts.resolved_scale(p.channels()));
}

namespace detail {

struct CrossAttentionWrite {
  Matrix q_s;     // n x c
  Matrix k_x;     // m x c
  Matrix update;  // softmax(Q_S K_X^T) V_X, n x c
};

inline CrossAttentionWrite cross_attention_write(const TokenState& s,
                                                 const ObservationTokens& x,
                                                 const ProjectionSet& p, double scale) {
  require_observation(x, p);
  require_state(s, p);
  CrossAttentionWrite w;
  w.q_s = s.tokens * p.w_q;
  w.k_x = x.tokens * p.w_k;
  const Matrix v_x = x.tokens * p.w_v;
  w.update = softmax_rows(w.q_s * w.k_x.transpose(), scale) * v_x;
  return w;
}

}  // namespace detail

/// S' = S + softmax(Q_S K_X^T) V_X: one-to-one cross-attention write where
/// every state token fully absorbs its attended observation values.
inline TokenState update_vanilla_rnn(const TokenState& s, const ObservationTokens& x,
                                     const ProjectionSet& p,
                                     const AttentionOptions& opts = {}) {
  const auto w = detail::cross_attention_write(s, x, p, opts.resolved_scale(p.channels()));
  return {s.tokens + w.update};
}

/// Squared Frobenius norm of S K - V. Keys and values are stored as columns.
inline double recon_loss(const FastWeightMatrix& s, const Matrix& keys, const Matrix& values) {
  if (s.s.cols() != keys.rows() || s.s.rows() != values.rows() ||
      keys.cols() != values.cols()) {
    throw DimensionError("recon_loss: S is c_v x c_k, keys c_k x m, values c_v x m");
  }
  return (s.s * keys - values).squaredNorm();
}

/// (S K - V) K^T. This is half the true gradient of recon_loss; it is the
/// exact gradient of recon_loss / 2.
inline Matrix recon_loss_grad(const FastWeightMatrix& s, const Matrix& keys,
                              const Matrix& values) {
  if (s.s.cols() != keys.rows() || s.s.rows() != values.rows() ||
      keys.cols() != values.cols()) {
    throw DimensionError("recon_loss_grad: S is c_v x c_k, keys c_k x m, values c_v x m");
  }
  return (s.s * keys - values) * keys.transpose();
}

namespace detail {

inline void require_unit_rate(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("learning rate must lie in [0, 1]");
}

inline void require_pair(const FastWeightMatrix& s, const Vector& key, const Vector& value) {
  if (key.size() != s.s.cols() || value.size() != s.s.rows())
    throw DimensionError("fast weight is c_v x c_k; key/value sizes do not match");
}

}  // namespace detail

/// One gradient step on the reconstruction objective over a batch of
/// columns: S - beta (S K - V) K^T.
inline FastWeightMatrix ttt_gradient_update(const FastWeightMatrix& s, const Matrix& keys,
                                            const Matrix& values, double beta) {
  detail::require_unit_rate(beta);
  return {s.s - beta * recon_loss_grad(s, keys, values)};
}

/// Delta rule: erase the old association along `key`, then write `value`.
/// `key` must already be unit norm.
inline FastWeightMatrix delta_rule_update(const FastWeightMatrix& s, const Vector& key,
                                          const Vector& value, double beta) {
  detail::require_pair(s, key, value);
  detail::require_unit_rate(beta);
  if (std::abs(key.norm() - 1.0) > 1e-9)
    throw InvalidArgument("delta rule key must have unit norm (|k| = " +
                          std::to_string(key.norm()) + ")");
  const Vector residual = s.s * key - value;
  return {s.s - beta * residual * key.transpose()};
}

/// Erase-free outer-product write of linear attention.
inline FastWeightMatrix hebbian_update(const FastWeightMatrix& s, const Vector& key,
                                       const Vector& value) {
  detail::require_pair(s, key, value);
  return {s.s + value * key.transpose()};
}

inline FastWeightMatrix hebbian_batch_update(const FastWeightMatrix& s, const Matrix& keys,
                                             const Matrix& values) {
  if (s.s.cols() != keys.rows() || s.s.rows() != values.rows() ||
      keys.cols() != values.cols()) {
    throw DimensionError("hebbian_batch_update: keys c_k x m, values c_v x m");
  }
  return {s.s + values * keys.transpose()};
}

inline Vector read_fast_weight(const FastWeightMatrix& s, const Vector& query) {
  if (query.size() != s.s.cols()) throw DimensionError("query size must equal c_k");
  return s.s * query;
}

/// beta_i = sigmoid(reduce_m (scale * Q_S K_X^T)_{i,m}).
inline GateVector confidence_gate(const Matrix& q_s, const Matrix& k_x, GateReduce reduce,
                                  double scale) {
  detail::require_scale(scale);
  if (q_s.cols() != k_x.cols())
    throw DimensionError("confidence_gate: state queries and observation keys differ in width");
  if (k_x.rows() < 1) throw InvalidArgument("confidence_gate needs at least one observation key");
  detail::require_finite(q_s, "state queries");
  detail::require_finite(k_x, "observation keys");
  const Matrix logits = scale * (q_s * k_x.transpose());
  GateVector gate{Vector(q_s.rows())};
  for (Index i = 0; i < logits.rows(); ++i) {
    double reduced = logits.row(i).sum();
    if (reduce == GateReduce::Mean) reduced /= static_cast<double>(logits.cols());
    gate.beta(i) = gate_sigmoid(reduced);
  }
  return gate;
}

namespace detail {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace detail

/// S' = S + diag(beta) softmax(Q_S K_X^T) V_X with beta chosen by `mode`.
/// With ConstantScalar{1} this is exactly update_vanilla_rnn.
inline GatedUpdate ttt3r_update(const TokenState& s, const ObservationTokens& x,
                                const ProjectionSet& p, const BetaMode& mode,
                                const AttentionOptions& opts = {}) {
  const double scale = opts.resolved_scale(p.channels());
  const auto w = detail::cross_attention_write(s, x, p, scale);
  const Index n = s.tokens.rows();
  GateVector gate = std::visit(
      detail::Overloaded{
          [&](const ConstantScalar& c) {
            if (!(c.value > 0.0 && c.value <= 1.0))
              throw InvalidArgument("constant learning rate must lie in (0, 1]");
            return GateVector{Vector::Constant(n, c.value)};
          },
          [&](const InputScalarSigmoid&) {
            const double z = (x.tokens * p.gate_map).mean();
            return GateVector{Vector::Constant(n, gate_sigmoid(z))};
          },
          [&](const PerTokenInputSigmoid&) {
            const Vector z = s.tokens * p.gate_map;
            return GateVector{z.unaryExpr([](double v) { return gate_sigmoid(v); })};
          },
          [&](const ConfidenceGate&) {
            return confidence_gate(w.q_s, w.k_x, opts.gate_reduce, scale);
          }},
      mode);
  return {TokenState{s.tokens + gate.beta.asDiagonal() * w.update}, std::move(gate)};
}

/// Y = softmax(Q_query K_S^T) V_S with K_S = S w_k and V_S = S w_v.
inline Matrix read_token_state(const TokenState& s, const Matrix& query,
                               const ProjectionSet& p, const AttentionOptions& opts = {}) {
  detail::require_projection_shape(p);
  detail::require_state(s, p);
  detail::require_cols(query, p.channels(), "query");
  detail::require_finite(query, "query");
  const Matrix k_s = s.tokens * p.w_k;
  const Matrix v_s = s.tokens * p.w_v;
  return softmax_rows((query * p.w_q) * k_s.transpose(), opts.resolved_scale(p.channels())) *
         v_s;
}

}  // namespace ttt
