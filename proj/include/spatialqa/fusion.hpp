#pragma once

// Reference kernel for fusing per-frame 3D tokens into visual tokens:
//
//   Z      = [F ; z]                                  (geometry rows, then the view token)
//   A      = softmax_rows((Hv Wq)(Z Wk)^T / sqrt(dk))
//   H'     = Hv + A (Z Wv)
//   out    = act(H' W1 + b1) W2 + b2
//
// Everything is plain loops over row-major storage; scalar type is a template
// parameter so the gradient check can run in long double.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spatialqa/error.hpp"
#include "spatialqa/rng.hpp"

namespace spatialqa {

template <typename T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  T* row(std::size_t r) { return data.data() + r * cols; }
  const T* row(std::size_t r) const { return data.data() + r * cols; }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

using TokenMatrix = Matrix<double>;

enum class Activation { Silu, Identity };

template <typename T>
struct FusionWeights {
  Matrix<T> wq;  // dim_v x dk
  Matrix<T> wk;  // dim_3d x dk
  Matrix<T> wv;  // dim_3d x dim_v
  Matrix<T> w1;  // dim_v x p1
  std::vector<T> b1;
  Matrix<T> w2;  // p1 x p2
  std::vector<T> b2;
  Activation activation = Activation::Silu;

  std::size_t dk() const { return wq.cols; }

  template <typename U>
  FusionWeights<U> cast() const {
    return {wq.template cast<U>(), wk.template cast<U>(), wv.template cast<U>(), w1.template cast<U>(),
            std::vector<U>(b1.begin(), b1.end()), w2.template cast<U>(), std::vector<U>(b2.begin(), b2.end()),
            activation};
  }
};

struct FusionDims {
  std::size_t dim_v = 0;
  std::size_t dim_3d = 0;
  std::size_t dk = 64;
  std::size_t p1 = 0;
  std::size_t p2 = 0;
};

namespace fusion_detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::DimMismatch, what);
}

// C = A B, i-k-j order so the inner loop streams both B and C rows.
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  require(a.cols == b.rows, "matmul inner dimensions differ");
  Matrix<T> c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    T* ci = c.row(i);
    const T* ai = a.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const T aik = ai[k];
      if (aik == T(0)) continue;
      const T* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

// A^T B
template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
  require(a.rows == b.rows, "matmul_tn row counts differ");
  Matrix<T> c(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const T* ak = a.row(k);
    const T* bk = b.row(k);
    for (std::size_t i = 0; i < a.cols; ++i) {
      const T aki = ak[i];
      T* ci = c.row(i);
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

// A B^T
template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b) {
  require(a.cols == b.cols, "matmul_nt column counts differ");
  Matrix<T> c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const T* ai = a.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const T* bj = b.row(j);
      T s = T(0);
      for (std::size_t k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

template <typename T>
void add_bias(Matrix<T>& m, const std::vector<T>& b) {
  require(b.size() == m.cols, "bias length differs from layer width");
  for (std::size_t i = 0; i < m.rows; ++i) {
    T* r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) r[j] += b[j];
  }
}

template <typename T>
T sigmoid(T x) {
  using std::exp;
  return x >= T(0) ? T(1) / (T(1) + exp(-x)) : exp(x) / (T(1) + exp(x));
}

template <typename T>
T activate(Activation a, T x) {
  return a == Activation::Silu ? x * sigmoid(x) : x;
}

template <typename T>
T activate_grad(Activation a, T x) {
  if (a == Activation::Identity) return T(1);
  const T s = sigmoid(x);
  return s * (T(1) + x * (T(1) - s));
}

template <typename T>
void check_weights(const FusionWeights<T>& w, std::size_t dim_v, std::size_t dim_3d) {
  require(w.wq.rows == dim_v, "W_Q rows must equal the visual token width");
  require(w.wq.cols > 0, "d_k must be positive");
  require(w.wk.rows == dim_3d && w.wk.cols == w.wq.cols, "W_K must be dim_3d x d_k");
  require(w.wv.rows == dim_3d && w.wv.cols == dim_v, "W_V must be dim_3d x dim_v");
  require(w.w1.rows == dim_v && w.b1.size() == w.w1.cols, "first projector layer shape");
  require(w.w2.rows == w.w1.cols && w.b2.size() == w.w2.cols, "second projector layer shape");
}

}  // namespace fusion_detail

// Z = [F ; z]; F may be empty. Throws DimMismatch.
template <typename T>
Matrix<T> build_unified_3d(const Matrix<T>& f, const Matrix<T>& z) {
  if (f.cols != z.cols || z.rows != 1 || f.cols == 0) {
    throw Error(ErrorCode::DimMismatch, "geometry tokens and view token need equal widths, view token one row");
  }
  Matrix<T> out(f.rows + 1, f.cols);
  std::copy(f.data.begin(), f.data.end(), out.data.begin());
  std::copy(z.data.begin(), z.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(f.data.size()));
  return out;
}

// Row-stochastic attention weights, N x M (queries x keys).
template <typename T>
Matrix<T> attention_weights(const Matrix<T>& hv, const Matrix<T>& z3d, const FusionWeights<T>& w) {
  using std::exp;
  using std::sqrt;
  fusion_detail::require(hv.cols == w.wq.rows && z3d.cols == w.wk.rows && w.wq.cols == w.wk.cols && w.wq.cols > 0,
                         "attention projection shapes");
  const Matrix<T> q = fusion_detail::matmul(hv, w.wq);
  const Matrix<T> k = fusion_detail::matmul(z3d, w.wk);
  Matrix<T> a = fusion_detail::matmul_nt(q, k);
  const T scale = T(1) / sqrt(static_cast<T>(w.dk()));
  for (std::size_t i = 0; i < a.rows; ++i) {
    T* r = a.row(i);
    T top = r[0] * scale;
    for (std::size_t j = 0; j < a.cols; ++j) {
      r[j] *= scale;
      top = std::max(top, r[j]);
    }
    T sum = T(0);
    for (std::size_t j = 0; j < a.cols; ++j) {
      r[j] = exp(r[j] - top);
      sum += r[j];
    }
    for (std::size_t j = 0; j < a.cols; ++j) r[j] /= sum;
  }
  return a;
}

// A (Z Wv); same shape as hv.
template <typename T>
Matrix<T> cross_attention(const Matrix<T>& hv, const Matrix<T>& z3d, const FusionWeights<T>& w) {
  fusion_detail::require(z3d.cols == w.wv.rows && w.wv.cols == hv.cols, "W_V shape");
  return fusion_detail::matmul(attention_weights(hv, z3d, w), fusion_detail::matmul(z3d, w.wv));
}

template <typename T>
struct FusionTrace {
  Matrix<T> q, k, v;   // projections
  Matrix<T> attn;      // softmax weights
  Matrix<T> fused;     // Hv + A V
  Matrix<T> pre_act;   // H' W1 + b1
  Matrix<T> hidden;    // act(pre_act)
  Matrix<T> out;
};

template <typename T>
FusionTrace<T> fuse_forward_trace(const Matrix<T>& hv, const Matrix<T>& z3d, const FusionWeights<T>& w) {
  using namespace fusion_detail;
  check_weights(w, hv.cols, z3d.cols);
  FusionTrace<T> t;
  t.q = matmul(hv, w.wq);
  t.k = matmul(z3d, w.wk);
  t.v = matmul(z3d, w.wv);
  t.attn = attention_weights(hv, z3d, w);
  t.fused = matmul(t.attn, t.v);
  for (std::size_t i = 0; i < t.fused.data.size(); ++i) t.fused.data[i] += hv.data[i];
  t.pre_act = matmul(t.fused, w.w1);
  add_bias(t.pre_act, w.b1);
  t.hidden = t.pre_act;
  for (T& x : t.hidden.data) x = activate(w.activation, x);
  t.out = matmul(t.hidden, w.w2);
  add_bias(t.out, w.b2);
  return t;
}

// Projected tokens, hv.rows x p2. Throws DimMismatch.
template <typename T>
Matrix<T> fuse_forward(const Matrix<T>& hv, const Matrix<T>& f, const Matrix<T>& z, const FusionWeights<T>& w) {
  return fuse_forward_trace(hv, build_unified_3d(f, z), w).out;
}

// Gradient of sum(out) with respect to every weight entry.
template <typename T>
FusionWeights<T> fuse_backward(const Matrix<T>& hv, const Matrix<T>& z3d, const FusionWeights<T>& w,
                               const FusionTrace<T>& t) {
  using namespace fusion_detail;
  using std::sqrt;
  FusionWeights<T> g;
  g.activation = w.activation;
  const Matrix<T> d_out(t.out.rows, t.out.cols, T(1));

  g.w2 = matmul_tn(t.hidden, d_out);
  g.b2.assign(d_out.cols, T(0));
  for (std::size_t i = 0; i < d_out.rows; ++i)
    for (std::size_t j = 0; j < d_out.cols; ++j) g.b2[j] += d_out(i, j);

  Matrix<T> d_pre = matmul_nt(d_out, w.w2);
  for (std::size_t i = 0; i < d_pre.data.size(); ++i) d_pre.data[i] *= activate_grad(w.activation, t.pre_act.data[i]);
  g.w1 = matmul_tn(t.fused, d_pre);
  g.b1.assign(d_pre.cols, T(0));
  for (std::size_t i = 0; i < d_pre.rows; ++i)
    for (std::size_t j = 0; j < d_pre.cols; ++j) g.b1[j] += d_pre(i, j);

  // residual passes d_fused straight to the attention output
  const Matrix<T> d_fused = matmul_nt(d_pre, w.w1);
  const Matrix<T> d_attn = matmul_nt(d_fused, t.v);
  const Matrix<T> d_v = matmul_tn(t.attn, d_fused);
  g.wv = matmul_tn(z3d, d_v);

  Matrix<T> d_scores(t.attn.rows, t.attn.cols);
  const T scale = T(1) / sqrt(static_cast<T>(w.dk()));
  for (std::size_t i = 0; i < t.attn.rows; ++i) {
    T dot = T(0);
    for (std::size_t j = 0; j < t.attn.cols; ++j) dot += t.attn(i, j) * d_attn(i, j);
    for (std::size_t j = 0; j < t.attn.cols; ++j) d_scores(i, j) = t.attn(i, j) * (d_attn(i, j) - dot) * scale;
  }
  g.wq = matmul_tn(hv, matmul(d_scores, t.k));
  g.wk = matmul_tn(z3d, matmul_tn(d_scores, t.q));
  return g;
}

// Random weights with 1/sqrt(fan_in) scaling; the stream is keyed by `seed`.
template <typename T>
FusionWeights<T> random_weights(const FusionDims& d, std::string_view seed, Activation act = Activation::Silu) {
  Rng rng = Rng::named(seed);
  auto fill = [&](std::size_t r, std::size_t c) {
    Matrix<T> m(r, c);
    const double s = 1.0 / std::sqrt(static_cast<double>(r));
    for (T& x : m.data) x = static_cast<T>(rng.uniform(-s, s));
    return m;
  };
  auto bias = [&](std::size_t n) {
    std::vector<T> b(n);
    for (T& x : b) x = static_cast<T>(rng.uniform(-0.1, 0.1));
    return b;
  };
  FusionWeights<T> w;
  w.wq = fill(d.dim_v, d.dk);
  w.wk = fill(d.dim_3d, d.dk);
  w.wv = fill(d.dim_3d, d.dim_v);
  w.w1 = fill(d.dim_v, d.p1);
  w.b1 = bias(d.p1);
  w.w2 = fill(d.p1, d.p2);
  w.b2 = bias(d.p2);
  w.activation = act;
  return w;
}

template <typename T>
Matrix<T> random_matrix(std::size_t rows, std::size_t cols, std::string_view seed, double lo = -1.0, double hi = 1.0) {
  Rng rng = Rng::named(seed);
  Matrix<T> m(rows, cols);
  for (T& x : m.data) x = static_cast<T>(rng.uniform(lo, hi));
  return m;
}

// Projector set up as an exact identity map (square, unit diagonal, zero
// bias, no activation); with zero W_V the whole chain returns Hv unchanged.
template <typename T>
void make_identity_projector(FusionWeights<T>& w, std::size_t dim_v) {
  w.w1 = Matrix<T>(dim_v, dim_v);
  w.w2 = Matrix<T>(dim_v, dim_v);
  for (std::size_t i = 0; i < dim_v; ++i) w.w1(i, i) = w.w2(i, i) = T(1);
  w.b1.assign(dim_v, T(0));
  w.b2.assign(dim_v, T(0));
  w.activation = Activation::Identity;
}

struct GradCheckInputs {
  Matrix<long double> hv;
  Matrix<long double> geometry;  // F
  Matrix<long double> view;      // z, one row
};

struct GradCheckResult {
  long double max_rel_error = 0;
  std::size_t entries = 0;
  std::string worst_param;  // e.g. "W_K[3,1]"
};

// Compares analytic gradients of sum(out) against central differences for
// every weight entry. Relative error is |a - n| / max(1, |a|, |n|).
GradCheckResult grad_check(const FusionWeights<long double>& w, const GradCheckInputs& in, long double step = 1e-4L);

// Desk-scale grad-check fixture: `tokens` visual and geometry rows,
// all widths `width`, full chain (SiLU) unless `linear` is set, in which case
// Z has a single row (softmax is constant) and the projector is linear.
struct GradCheckFixture {
  FusionWeights<long double> weights;
  GradCheckInputs inputs;
};
GradCheckFixture grad_check_fixture(std::uint64_t seed, std::size_t tokens = 8, std::size_t width = 8,
                                    bool linear = false);

// Binary layout, little-endian: "TMAT", uint32 rows, uint32 cols, then
// rows*cols float64 values in row-major order.
void write_token_matrix(const std::filesystem::path& path, const TokenMatrix& m);
TokenMatrix read_token_matrix(const std::filesystem::path& path);
std::string encode_token_matrix(const TokenMatrix& m);
TokenMatrix decode_token_matrix(std::string_view bytes);

}  // namespace spatialqa
