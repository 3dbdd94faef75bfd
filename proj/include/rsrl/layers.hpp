/* Copyright 2026 The RSRL Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef RSRL_LAYERS_HPP
#define RSRL_LAYERS_HPP

// Forward and backward kernels for the layer types a network may contain.
// Feature maps are H x W x C; convolution kernels are kh x kw x Cin x Cout.
// All convolutions and poolings are "valid" (no padding).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rsrl/error.hpp"
#include "rsrl/tensor.hpp"

namespace rsrl {

inline std::size_t valid_extent(std::size_t in, std::size_t window,
                                std::size_t stride) {
  return (in - window) / stride + 1;
}

namespace detail {

inline void require_rank3(const Tensor& t, const char* what) {
  if (t.rank() != 3) {
    raise(ErrorKind::kShapeMismatch, std::string(what) + " must be H x W x C, got " +
                                         shape_string(t.shape()));
  }
}

inline void require_stride(std::size_t stride) {
  if (stride == 0) raise(ErrorKind::kShapeMismatch, "stride must be positive");
}

}  // namespace detail

inline Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride) {
  detail::require_rank3(input, "conv2d input");
  detail::require_stride(stride);
  if (kernel.rank() != 4) {
    raise(ErrorKind::kShapeMismatch,
          "conv2d kernel must be kh x kw x Cin x Cout, got " + shape_string(kernel.shape()));
  }
  const std::size_t ih = input.dim(0), iw = input.dim(1), ic = input.dim(2);
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), oc = kernel.dim(3);
  if (kernel.dim(2) != ic) {
    raise(ErrorKind::kShapeMismatch, "conv2d kernel channels " + std::to_string(kernel.dim(2)) +
                                         " != input channels " + std::to_string(ic));
  }
  if (kh > ih || kw > iw) {
    raise(ErrorKind::kShapeMismatch, "conv2d kernel " + shape_string(kernel.shape()) +
                                         " larger than input " + shape_string(input.shape()));
  }
  const std::size_t oh = valid_extent(ih, kh, stride), ow = valid_extent(iw, kw, stride);
  Tensor out({oh, ow, oc});
  const double* in = input.data();
  const double* k = kernel.data();
  double* o = out.data();
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double* acc = o + (y * ow + x) * oc;
      for (std::size_t dy = 0; dy < kh; ++dy) {
        for (std::size_t dx = 0; dx < kw; ++dx) {
          const double* px = in + ((y * stride + dy) * iw + (x * stride + dx)) * ic;
          const double* kp = k + (dy * kw + dx) * ic * oc;
          for (std::size_t c = 0; c < ic; ++c) {
            const double v = px[c];
            const double* kc = kp + c * oc;
            for (std::size_t f = 0; f < oc; ++f) acc[f] += v * kc[f];
          }
        }
      }
    }
  }
  return out;
}

struct ConvGrads {
  Tensor input;
  Tensor kernel;
};

/// Gradients of a valid convolution given dL/d(output). Set `need_input` to
/// false for the first layer, whose input gradient is never used.
inline ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernel,
                                 std::size_t stride, const Tensor& grad_out,
                                 bool need_input = true) {
  const std::size_t iw = input.dim(1), ic = input.dim(2);
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), oc = kernel.dim(3);
  const std::size_t oh = valid_extent(input.dim(0), kh, stride);
  const std::size_t ow = valid_extent(iw, kw, stride);
  if (grad_out.shape() != Shape{oh, ow, oc}) {
    raise(ErrorKind::kShapeMismatch, "conv2d_backward gradient shape " +
                                         shape_string(grad_out.shape()));
  }
  ConvGrads g{need_input ? Tensor(input.shape()) : Tensor(), Tensor(kernel.shape())};
  const double* in = input.data();
  const double* k = kernel.data();
  const double* go = grad_out.data();
  double* gk = g.kernel.data();
  double* gi = need_input ? g.input.data() : nullptr;
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      const double* d = go + (y * ow + x) * oc;
      for (std::size_t dy = 0; dy < kh; ++dy) {
        for (std::size_t dx = 0; dx < kw; ++dx) {
          const std::size_t pix = ((y * stride + dy) * iw + (x * stride + dx)) * ic;
          const std::size_t kb = (dy * kw + dx) * ic * oc;
          for (std::size_t c = 0; c < ic; ++c) {
            const double v = in[pix + c];
            double* gkc = gk + kb + c * oc;
            const double* kc = k + kb + c * oc;
            double s = 0.0;
            for (std::size_t f = 0; f < oc; ++f) {
              gkc[f] += v * d[f];
              s += kc[f] * d[f];
            }
            if (gi) gi[pix + c] += s;
          }
        }
      }
    }
  }
  return g;
}

inline Tensor maxpool(const Tensor& input, std::size_t window, std::size_t stride) {
  detail::require_rank3(input, "maxpool input");
  detail::require_stride(stride);
  const std::size_t ih = input.dim(0), iw = input.dim(1), c = input.dim(2);
  if (window == 0 || window > ih || window > iw) {
    raise(ErrorKind::kShapeMismatch, "maxpool window " + std::to_string(window) +
                                         " does not fit input " + shape_string(input.shape()));
  }
  const std::size_t oh = valid_extent(ih, window, stride), ow = valid_extent(iw, window, stride);
  Tensor out({oh, ow, c}, -std::numeric_limits<double>::infinity());
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x)
      for (std::size_t dy = 0; dy < window; ++dy)
        for (std::size_t dx = 0; dx < window; ++dx)
          for (std::size_t ch = 0; ch < c; ++ch)
            out.at(y, x, ch) = std::max(out.at(y, x, ch),
                                        input.at(y * stride + dy, x * stride + dx, ch));
  return out;
}

/// Routes each output gradient to the first (row-major) maximal input of its
/// window.
inline Tensor maxpool_backward(const Tensor& input, std::size_t window, std::size_t stride,
                               const Tensor& grad_out) {
  const std::size_t oh = grad_out.dim(0), ow = grad_out.dim(1), c = grad_out.dim(2);
  Tensor g(input.shape());
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t by = y * stride, bx = x * stride;
        double best = input.at(by, bx, ch);
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            const double v = input.at(y * stride + dy, x * stride + dx, ch);
            if (v > best) {
              best = v;
              by = y * stride + dy;
              bx = x * stride + dx;
            }
          }
        }
        g.at(by, bx, ch) += grad_out.at(y, x, ch);
      }
    }
  }
  return g;
}

inline Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

inline Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(input[i] > 0.0)) g[i] = 0.0;
  return g;
}

/// y = W x + b over the flattened input. W is row-major (outputs x inputs).
inline Tensor dense(const Tensor& input, std::span<const double> weights,
                    std::span<const double> bias) {
  const std::size_t n_in = input.size(), n_out = bias.size();
  if (weights.size() != n_in * n_out) {
    raise(ErrorKind::kShapeMismatch, "dense weights " + std::to_string(weights.size()) +
                                         " != " + std::to_string(n_out) + " x " +
                                         std::to_string(n_in));
  }
  Tensor out({n_out});
  const double* x = input.data();
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* w = weights.data() + o * n_in;
    double s = 0.0;
    for (std::size_t i = 0; i < n_in; ++i) s += w[i] * x[i];
    out[o] = s + bias[o];
  }
  return out;
}

struct DenseGrads {
  Tensor input;
  std::vector<double> weights;
  std::vector<double> bias;
};

inline DenseGrads dense_backward(const Tensor& input, std::span<const double> weights,
                                 const Tensor& grad_out) {
  const std::size_t n_in = input.size(), n_out = grad_out.size();
  DenseGrads g{Tensor(input.shape()), std::vector<double>(n_in * n_out),
               std::vector<double>(grad_out.values().begin(), grad_out.values().end())};
  const double* x = input.data();
  double* gx = g.input.data();
  for (std::size_t o = 0; o < n_out; ++o) {
    const double d = grad_out[o];
    const double* w = weights.data() + o * n_in;
    double* gw = g.weights.data() + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) {
      gw[i] = d * x[i];
      gx[i] += d * w[i];
    }
  }
  return g;
}

inline Tensor softmax(const Tensor& logits) {
  const double top = *std::max_element(logits.values().begin(), logits.values().end());
  Tensor out(logits.shape());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (double& v : out.values()) v /= sum;
  return out;
}

inline double sigmoid(double x) {
  // Branches keep exp() from overflowing for large |x|.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace rsrl

#endif  // RSRL_LAYERS_HPP
