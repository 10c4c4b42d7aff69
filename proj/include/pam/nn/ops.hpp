// Copyright 2026 The pamkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <span>
#include <vector>

#include "pam/nn/tensor.hpp"

// Differentiable operations on NCHW tensors. Every op computes its value
// eagerly and, when the tape is recording and an input requires gradients,
// registers a closure that accumulates into the inputs' grad buffers.

namespace pam::nn {

template <typename Scalar>
using MatRef = Eigen::Map<RowMatrix<Scalar>>;
template <typename Scalar>
using ConstMatRef = Eigen::Map<const RowMatrix<Scalar>>;

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace detail

struct Padding {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;
};

inline Padding same_padding(int kh, int kw) { return {(kh - 1) / 2, kh / 2, (kw - 1) / 2, kw / 2}; }

/// Left padding of kh - 1 along the time (height) axis: output row t only
/// sees input rows t - kh + 1 .. t.
inline Padding causal_padding(int kh) { return {kh - 1, 0, 0, 0}; }

namespace detail {

struct ConvDims {
  int n, c, h, w, o, kh, kw, ho, wo;
  Padding pad;
  int k() const { return c * kh * kw; }
  int p() const { return ho * wo; }
};

// Unfolds one sample (c, h, w) into a (c*kh*kw) x (ho*wo) row-major matrix.
template <typename Scalar>
void im2col(const Scalar* x, const ConvDims& d, Scalar* cols) {
  for (int c = 0; c < d.c; ++c) {
    for (int ky = 0; ky < d.kh; ++ky) {
      for (int kx = 0; kx < d.kw; ++kx) {
        Scalar* dst = cols + static_cast<std::ptrdiff_t>((c * d.kh + ky) * d.kw + kx) * d.p();
        const int lo = std::max(0, d.pad.left - kx);
        const int hi = std::min(d.wo, d.w + d.pad.left - kx);
        for (int oy = 0; oy < d.ho; ++oy) {
          Scalar* row = dst + static_cast<std::ptrdiff_t>(oy) * d.wo;
          const int iy = oy + ky - d.pad.top;
          if (iy < 0 || iy >= d.h || lo >= hi) {
            std::fill(row, row + d.wo, Scalar(0));
            continue;
          }
          const Scalar* src = x + static_cast<std::ptrdiff_t>(c * d.h + iy) * d.w + (kx - d.pad.left);
          std::fill(row, row + lo, Scalar(0));
          std::copy(src + lo, src + hi, row + lo);
          std::fill(row + hi, row + d.wo, Scalar(0));
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column gradients back into one sample.
template <typename Scalar>
void col2im(const Scalar* cols, const ConvDims& d, Scalar* dx) {
  for (int c = 0; c < d.c; ++c) {
    for (int ky = 0; ky < d.kh; ++ky) {
      for (int kx = 0; kx < d.kw; ++kx) {
        const Scalar* src = cols + static_cast<std::ptrdiff_t>((c * d.kh + ky) * d.kw + kx) * d.p();
        const int lo = std::max(0, d.pad.left - kx);
        const int hi = std::min(d.wo, d.w + d.pad.left - kx);
        for (int oy = 0; oy < d.ho; ++oy) {
          const int iy = oy + ky - d.pad.top;
          if (iy < 0 || iy >= d.h || lo >= hi) continue;
          const Scalar* row = src + static_cast<std::ptrdiff_t>(oy) * d.wo;
          Scalar* dst = dx + static_cast<std::ptrdiff_t>(c * d.h + iy) * d.w + (kx - d.pad.left);
          for (int ox = lo; ox < hi; ++ox) dst[ox] += row[ox];
        }
      }
    }
  }
}

}  // namespace detail

/// 2-D cross-correlation. x: [N, C, H, W], w: [O, C, KH, KW], b: [O].
template <typename Scalar>
Var<Scalar> conv2d(Tape<Scalar>& tape, const Var<Scalar>& x, const Var<Scalar>& w,
                   const Var<Scalar>& b, Padding pad) {
  detail::require(x->shape.size() == 4 && w->shape.size() == 4, "conv2d: expects 4-d input and weight");
  detail::require(x->shape[1] == w->shape[1], "conv2d: channel mismatch");
  detail::require(b->value.size() == w->shape[0], "conv2d: bias length mismatch");
  detail::ConvDims d{x->shape[0], x->shape[1], x->shape[2], x->shape[3], w->shape[0], w->shape[2],
                     w->shape[3], 0, 0, pad};
  d.ho = d.h + pad.top + pad.bottom - d.kh + 1;
  d.wo = d.w + pad.left + pad.right - d.kw + 1;
  detail::require(d.ho > 0 && d.wo > 0, "conv2d: empty output");

  const int K = d.k();
  const int P = d.p();
  const std::ptrdiff_t in_stride = static_cast<std::ptrdiff_t>(d.c) * d.h * d.w;
  const std::ptrdiff_t out_stride = static_cast<std::ptrdiff_t>(d.o) * P;

  Vec<Scalar> out(static_cast<Eigen::Index>(d.n) * out_stride);
  RowMatrix<Scalar> cols(K, P);
  ConstMatRef<Scalar> wm(w->data(), d.o, K);
  Eigen::Map<const Vec<Scalar>> bias(b->data(), d.o);
  for (int n = 0; n < d.n; ++n) {
    detail::im2col(x->data() + n * in_stride, d, cols.data());
    MatRef<Scalar> y(out.data() + n * out_stride, d.o, P);
    y.noalias() = wm * cols;
    y.colwise() += bias;
  }

  const bool rg = x->requires_grad || w->requires_grad || b->requires_grad;
  return tape.record({d.n, d.o, d.ho, d.wo}, std::move(out), rg, [x, w, b, d](Node<Scalar>& o) {
    const int K = d.k();
    const int P = d.p();
    const std::ptrdiff_t in_stride = static_cast<std::ptrdiff_t>(d.c) * d.h * d.w;
    const std::ptrdiff_t out_stride = static_cast<std::ptrdiff_t>(d.o) * P;
    RowMatrix<Scalar> cols(K, P);
    RowMatrix<Scalar> dcols;
    ConstMatRef<Scalar> wm(w->data(), d.o, K);
    Scalar* dw = w->requires_grad ? w->grad_buffer().data() : nullptr;
    Scalar* db = b->requires_grad ? b->grad_buffer().data() : nullptr;
    Scalar* dx = x->requires_grad ? x->grad_buffer().data() : nullptr;
    for (int n = 0; n < d.n; ++n) {
      ConstMatRef<Scalar> dy(o.grad.data() + n * out_stride, d.o, P);
      if (db) Eigen::Map<Vec<Scalar>>(db, d.o) += dy.rowwise().sum();
      if (dw) {
        detail::im2col(x->data() + n * in_stride, d, cols.data());
        MatRef<Scalar>(dw, d.o, K).noalias() += dy * cols.transpose();
      }
      if (dx) {
        dcols.noalias() = wm.transpose() * dy;
        detail::col2im(dcols.data(), d, dx + n * in_stride);
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> relu(Tape<Scalar>& tape, const Var<Scalar>& x) {
  Vec<Scalar> out = x->value.cwiseMax(Scalar(0));
  return tape.record(x->shape, std::move(out), x->requires_grad, [x](Node<Scalar>& o) {
    x->grad_buffer().array() += (x->value.array() > Scalar(0)).select(o.grad.array(), Scalar(0));
  });
}

/// Concatenates [N, Ci, H, W] tensors along the channel axis.
template <typename Scalar>
Var<Scalar> concat_channels(Tape<Scalar>& tape, const std::vector<Var<Scalar>>& xs) {
  detail::require(!xs.empty(), "concat: no inputs");
  const Shape& s0 = xs.front()->shape;
  detail::require(s0.size() == 4, "concat: expects 4-d inputs");
  int channels = 0;
  bool rg = false;
  for (const auto& x : xs) {
    detail::require(x->shape.size() == 4 && x->shape[0] == s0[0] && x->shape[2] == s0[2] &&
                        x->shape[3] == s0[3],
                    "concat: shape mismatch");
    channels += x->shape[1];
    rg = rg || x->requires_grad;
  }
  const int n = s0[0];
  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(s0[2]) * s0[3];
  Vec<Scalar> out(static_cast<Eigen::Index>(n) * channels * plane);
  for (int i = 0; i < n; ++i) {
    Scalar* dst = out.data() + i * channels * plane;
    for (const auto& x : xs) {
      const std::ptrdiff_t len = x->shape[1] * plane;
      std::copy(x->data() + i * len, x->data() + (i + 1) * len, dst);
      dst += len;
    }
  }
  return tape.record({n, channels, s0[2], s0[3]}, std::move(out), rg,
                     [xs, n, channels, plane](Node<Scalar>& o) {
                       for (int i = 0; i < n; ++i) {
                         const Scalar* src = o.grad.data() + i * channels * plane;
                         for (const auto& x : xs) {
                           const std::ptrdiff_t len = x->shape[1] * plane;
                           if (x->requires_grad) {
                             Eigen::Map<Vec<Scalar>>(x->grad_buffer().data() + i * len, len) +=
                                 Eigen::Map<const Vec<Scalar>>(src, len);
                           }
                           src += len;
                         }
                       }
                     });
}

/// 2x2 average pooling with stride 2; odd trailing rows/columns are dropped.
template <typename Scalar>
Var<Scalar> avg_pool2(Tape<Scalar>& tape, const Var<Scalar>& x) {
  detail::require(x->shape.size() == 4, "avg_pool2: expects 4-d input");
  const int nc = x->shape[0] * x->shape[1];
  const int h = x->shape[2], w = x->shape[3];
  const int ho = h / 2, wo = w / 2;
  detail::require(ho > 0 && wo > 0, "avg_pool2: input too small");
  Vec<Scalar> out(static_cast<Eigen::Index>(nc) * ho * wo);
  for (int p = 0; p < nc; ++p) {
    const Scalar* src = x->data() + static_cast<std::ptrdiff_t>(p) * h * w;
    Scalar* dst = out.data() + static_cast<std::ptrdiff_t>(p) * ho * wo;
    for (int i = 0; i < ho; ++i) {
      for (int j = 0; j < wo; ++j) {
        const Scalar* a = src + (2 * i) * w + 2 * j;
        dst[i * wo + j] = Scalar(0.25) * (a[0] + a[1] + a[w] + a[w + 1]);
      }
    }
  }
  return tape.record({x->shape[0], x->shape[1], ho, wo}, std::move(out), x->requires_grad,
                     [x, nc, h, w, ho, wo](Node<Scalar>& o) {
                       Scalar* dx = x->grad_buffer().data();
                       for (int p = 0; p < nc; ++p) {
                         const Scalar* g = o.grad.data() + static_cast<std::ptrdiff_t>(p) * ho * wo;
                         Scalar* d = dx + static_cast<std::ptrdiff_t>(p) * h * w;
                         for (int i = 0; i < ho; ++i) {
                           for (int j = 0; j < wo; ++j) {
                             const Scalar v = Scalar(0.25) * g[i * wo + j];
                             Scalar* a = d + (2 * i) * w + 2 * j;
                             a[0] += v;
                             a[1] += v;
                             a[w] += v;
                             a[w + 1] += v;
                           }
                         }
                       }
                     });
}

/// [N, C, H, W] -> [N, C]
template <typename Scalar>
Var<Scalar> global_avg_pool(Tape<Scalar>& tape, const Var<Scalar>& x) {
  detail::require(x->shape.size() == 4, "global_avg_pool: expects 4-d input");
  const int n = x->shape[0], c = x->shape[1];
  const int plane = x->shape[2] * x->shape[3];
  ConstMatRef<Scalar> xm(x->data(), n * c, plane);
  Vec<Scalar> out = xm.rowwise().mean();
  return tape.record({n, c}, std::move(out), x->requires_grad, [x, n, c, plane](Node<Scalar>& o) {
    MatRef<Scalar> dx(x->grad_buffer().data(), n * c, plane);
    dx.colwise() += o.grad / static_cast<Scalar>(plane);
  });
}

/// x: [N, D], w: [O, D], b: [O] -> [N, O]
template <typename Scalar>
Var<Scalar> linear(Tape<Scalar>& tape, const Var<Scalar>& x, const Var<Scalar>& w,
                   const Var<Scalar>& b) {
  detail::require(x->shape.size() == 2 && w->shape.size() == 2, "linear: expects 2-d input and weight");
  detail::require(x->shape[1] == w->shape[1], "linear: feature mismatch");
  detail::require(b->value.size() == w->shape[0], "linear: bias length mismatch");
  const int n = x->shape[0], dim = x->shape[1], o = w->shape[0];
  Vec<Scalar> out(static_cast<Eigen::Index>(n) * o);
  MatRef<Scalar> y(out.data(), n, o);
  y.noalias() = ConstMatRef<Scalar>(x->data(), n, dim) * ConstMatRef<Scalar>(w->data(), o, dim).transpose();
  y.rowwise() += b->value.transpose();
  const bool rg = x->requires_grad || w->requires_grad || b->requires_grad;
  return tape.record({n, o}, std::move(out), rg, [x, w, b, n, dim, o](Node<Scalar>& node) {
    ConstMatRef<Scalar> dy(node.grad.data(), n, o);
    if (x->requires_grad) {
      MatRef<Scalar>(x->grad_buffer().data(), n, dim).noalias() +=
          dy * ConstMatRef<Scalar>(w->data(), o, dim);
    }
    if (w->requires_grad) {
      MatRef<Scalar>(w->grad_buffer().data(), o, dim).noalias() +=
          dy.transpose() * ConstMatRef<Scalar>(x->data(), n, dim);
    }
    if (b->requires_grad) b->grad_buffer() += dy.colwise().sum().transpose();
  });
}

/// [N, 1, T, F] -> [N, F, T, 1]: every frequency band becomes a channel.
template <typename Scalar>
Var<Scalar> bands_to_channels(Tape<Scalar>& tape, const Var<Scalar>& x) {
  detail::require(x->shape.size() == 4 && x->shape[1] == 1, "bands_to_channels: expects [N,1,T,F]");
  const int n = x->shape[0], t = x->shape[2], f = x->shape[3];
  Vec<Scalar> out(x->value.size());
  for (int i = 0; i < n; ++i) {
    ConstMatRef<Scalar> src(x->data() + static_cast<std::ptrdiff_t>(i) * t * f, t, f);
    MatRef<Scalar>(out.data() + static_cast<std::ptrdiff_t>(i) * t * f, f, t) = src.transpose();
  }
  return tape.record({n, f, t, 1}, std::move(out), x->requires_grad, [x, n, t, f](Node<Scalar>& o) {
    Scalar* dx = x->grad_buffer().data();
    for (int i = 0; i < n; ++i) {
      ConstMatRef<Scalar> g(o.grad.data() + static_cast<std::ptrdiff_t>(i) * t * f, f, t);
      MatRef<Scalar>(dx + static_cast<std::ptrdiff_t>(i) * t * f, t, f) += g.transpose();
    }
  });
}

/// x + exp(-max(lambda, lambda_floor)) (.) beta with lambda broadcast over
/// the last axis. beta is a constant of the same size as x. Below the floor
/// the noise scale saturates and the gradient w.r.t. that lambda is zero.
template <typename Scalar>
Var<Scalar> noise_channel(Tape<Scalar>& tape, const Var<Scalar>& x, const Var<Scalar>& lambda,
                          const Vec<Scalar>& beta,
                          Scalar lambda_floor = -std::numeric_limits<Scalar>::infinity()) {
  detail::require(!x->shape.empty(), "noise_channel: scalar input");
  const int f = x->shape.back();
  detail::require(lambda->value.size() == f, "noise_channel: lambda length must equal band count");
  detail::require(beta.size() == x->value.size(), "noise_channel: beta size mismatch");
  const Eigen::Index rows = x->value.size() / f;
  const Vec<Scalar> sigma = (-lambda->value.array().max(lambda_floor)).exp().matrix();
  // d sigma / d lambda = -sigma above the floor, 0 below it.
  const Vec<Scalar> dsigma = (lambda->value.array() >= lambda_floor).select(-sigma.array(), Scalar(0)).matrix();
  Vec<Scalar> out(x->value.size());
  ConstMatRef<Scalar> xm(x->data(), rows, f);
  ConstMatRef<Scalar> bm(beta.data(), rows, f);
  MatRef<Scalar>(out.data(), rows, f) = xm + bm * sigma.asDiagonal();
  const bool rg = x->requires_grad || lambda->requires_grad;
  return tape.record(x->shape, std::move(out), rg, [x, lambda, beta, dsigma, rows, f](Node<Scalar>& o) {
    ConstMatRef<Scalar> g(o.grad.data(), rows, f);
    if (x->requires_grad) MatRef<Scalar>(x->grad_buffer().data(), rows, f) += g;
    if (lambda->requires_grad) {
      ConstMatRef<Scalar> bm(beta.data(), rows, f);
      lambda->grad_buffer() += dsigma.cwiseProduct(g.cwiseProduct(bm).colwise().sum().transpose());
    }
  });
}

template <typename Scalar>
Var<Scalar> sum(Tape<Scalar>& tape, const Var<Scalar>& x) {
  Vec<Scalar> out(1);
  out[0] = x->value.sum();
  return tape.record({1}, std::move(out), x->requires_grad,
                     [x](Node<Scalar>& o) { x->grad_buffer().array() += o.grad[0]; });
}

template <typename Scalar>
Var<Scalar> scale(Tape<Scalar>& tape, const Var<Scalar>& x, Scalar a) {
  Vec<Scalar> out = a * x->value;
  return tape.record(x->shape, std::move(out), x->requires_grad,
                     [x, a](Node<Scalar>& o) { x->grad_buffer() += a * o.grad; });
}

template <typename Scalar>
Var<Scalar> add(Tape<Scalar>& tape, const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a->value.size() == b->value.size(), "add: size mismatch");
  Vec<Scalar> out = a->value + b->value;
  return tape.record(a->shape, std::move(out), a->requires_grad || b->requires_grad,
                     [a, b](Node<Scalar>& o) {
                       if (a->requires_grad) a->grad_buffer() += o.grad;
                       if (b->requires_grad) b->grad_buffer() += o.grad;
                     });
}

/// Row-wise softmax of logits laid out as [N, K, P] (P positions per sample,
/// P = 1 for [N, K]). Returns an (N * P) x K matrix ordered by (n, p).
template <typename Scalar>
RowMatrix<Scalar> softmax_rows(const Node<Scalar>& logits) {
  const int n = logits.shape[0];
  const int k = logits.shape[1];
  const int p = logits.value.size() / (static_cast<Eigen::Index>(n) * k);
  RowMatrix<Scalar> probs(static_cast<Eigen::Index>(n) * p, k);
  for (int i = 0; i < n; ++i) {
    ConstMatRef<Scalar> z(logits.data() + static_cast<std::ptrdiff_t>(i) * k * p, k, p);
    for (int j = 0; j < p; ++j) {
      const Scalar m = z.col(j).maxCoeff();
      Scalar total = 0;
      for (int c = 0; c < k; ++c) {
        const Scalar e = std::exp(z(c, j) - m);
        probs(i * p + j, c) = e;
        total += e;
      }
      probs.row(i * p + j) /= total;
    }
  }
  return probs;
}

/// Mean cross-entropy over all N * P positions. `labels[n * P + p]` is the
/// class index at position p of sample n.
template <typename Scalar>
Var<Scalar> softmax_cross_entropy(Tape<Scalar>& tape, const Var<Scalar>& logits,
                                  std::span<const int> labels) {
  detail::require(logits->shape.size() >= 2, "cross_entropy: logits need [N, K, ...]");
  const int n = logits->shape[0];
  const int k = logits->shape[1];
  const auto p = static_cast<int>(logits->value.size() / (static_cast<Eigen::Index>(n) * k));
  detail::require(static_cast<std::size_t>(n) * p == labels.size(), "cross_entropy: label count mismatch");
  RowMatrix<Scalar> probs = softmax_rows(*logits);
  Scalar loss = 0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    detail::require(y >= 0 && y < k, "cross_entropy: label out of range");
    const int i = static_cast<int>(r / p), j = static_cast<int>(r % p);
    // log-sum-exp form keeps the loss finite for saturated logits.
    ConstMatRef<Scalar> z(logits->data() + static_cast<std::ptrdiff_t>(i) * k * p, k, p);
    const Scalar m = z.col(j).maxCoeff();
    const Scalar lse = m + std::log((z.col(j).array() - m).exp().sum());
    loss += lse - z(y, j);
  }
  const Scalar count = static_cast<Scalar>(probs.rows());
  Vec<Scalar> out(1);
  out[0] = loss / count;
  std::vector<int> y(labels.begin(), labels.end());
  return tape.record({1}, std::move(out), logits->requires_grad,
                     [logits, probs = std::move(probs), y = std::move(y), n, k, p, count](Node<Scalar>& o) {
                       Scalar* dz = logits->grad_buffer().data();
                       const Scalar g = o.grad[0] / count;
                       for (int i = 0; i < n; ++i) {
                         MatRef<Scalar> d(dz + static_cast<std::ptrdiff_t>(i) * k * p, k, p);
                         for (int j = 0; j < p; ++j) {
                           const auto r = static_cast<std::size_t>(i) * p + j;
                           for (int c = 0; c < k; ++c) {
                             d(c, j) += g * (probs(static_cast<Eigen::Index>(r), c) -
                                             (c == y[r] ? Scalar(1) : Scalar(0)));
                           }
                         }
                       }
                     });
}

}  // namespace pam::nn
