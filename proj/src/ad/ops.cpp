// Copyright 2026 The pmqa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pmqa/ad/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "pmqa/error.hpp"

namespace pmqa::ad {

namespace {

using Index = std::int64_t;

template <typename T>
bool wants(const Node<T>& n, std::size_t i) {
  const auto& p = n.parents[i];
  return p != nullptr && p->requires_grad;
}

template <typename T>
std::vector<T>& pgrad(Node<T>& n, std::size_t i) {
  return n.parents[i]->ensure_grad();
}

template <typename T>
const std::vector<T>& pval(const Node<T>& n, std::size_t i) {
  return n.parents[i]->value;
}

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// C[m, n] (+)= op(A) * op(B); op(A) is [m, k], op(B) is [k, n]. Row-major.
template <typename T>
void gemm(bool trans_a, bool trans_b, Index m, Index n, Index k, const T* a, const T* b, T* c,
          bool accumulate) {
  Eigen::Map<const RowMajor<T>> A(a, trans_a ? k : m, trans_a ? m : k);
  Eigen::Map<const RowMajor<T>> B(b, trans_b ? n : k, trans_b ? k : n);
  Eigen::Map<RowMajor<T>> C(c, m, n);
  if (!trans_a && !trans_b) {
    if (accumulate) C.noalias() += A * B; else C.noalias() = A * B;
  } else if (trans_a && !trans_b) {
    if (accumulate) C.noalias() += A.transpose() * B; else C.noalias() = A.transpose() * B;
  } else if (!trans_a && trans_b) {
    if (accumulate) C.noalias() += A * B.transpose(); else C.noalias() = A * B.transpose();
  } else {
    if (accumulate) C.noalias() += A.transpose() * B.transpose();
    else C.noalias() = A.transpose() * B.transpose();
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.defined() && b.defined() && a.shape() == b.shape(),
          std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
              shape_string(b.shape()));
}

template <typename T>
void require_rank(const Tensor<T>& a, std::size_t rank, const char* op) {
  require(a.defined() && a.rank() == rank,
          std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
              (a.defined() ? shape_string(a.shape()) : std::string("undefined")));
}

// Geometry of a 2-D convolution between an "image" [C, H, W] and its
// output grid [Ho, Wo].
struct ConvGeometry {
  Index channels, height, width;
  Index kh, kw;
  Index out_h, out_w;
  int stride, padding;

  Index patch() const { return channels * kh * kw; }
  Index out_area() const { return out_h * out_w; }
  bool is_pointwise() const { return kh == 1 && kw == 1 && stride == 1 && padding == 0; }
};

// cols[(c * kh + i) * kw + j][oh * Wo + ow] = img[c][oh * s - p + i][ow * s - p + j].
template <typename T>
void im2col(const T* img, const ConvGeometry& g, T* cols) {
  for (Index c = 0; c < g.channels; ++c) {
    for (Index i = 0; i < g.kh; ++i) {
      for (Index j = 0; j < g.kw; ++j) {
        T* row = cols + ((c * g.kh + i) * g.kw + j) * g.out_area();
        for (Index oh = 0; oh < g.out_h; ++oh) {
          const Index y = oh * g.stride - g.padding + i;
          T* dst = row + oh * g.out_w;
          if (y < 0 || y >= g.height) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = img + (c * g.height + y) * g.width;
          for (Index ow = 0; ow < g.out_w; ++ow) {
            const Index x = ow * g.stride - g.padding + j;
            dst[ow] = (x >= 0 && x < g.width) ? src[x] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates columns back into the image.
template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* img) {
  for (Index c = 0; c < g.channels; ++c) {
    for (Index i = 0; i < g.kh; ++i) {
      for (Index j = 0; j < g.kw; ++j) {
        const T* row = cols + ((c * g.kh + i) * g.kw + j) * g.out_area();
        for (Index oh = 0; oh < g.out_h; ++oh) {
          const Index y = oh * g.stride - g.padding + i;
          if (y < 0 || y >= g.height) continue;
          T* dst = img + (c * g.height + y) * g.width;
          const T* src = row + oh * g.out_w;
          for (Index ow = 0; ow < g.out_w; ++ow) {
            const Index x = ow * g.stride - g.padding + j;
            if (x >= 0 && x < g.width) dst[x] += src[ow];
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> unary(const Tensor<T>& a, std::vector<T> values,
                std::function<void(Node<T>&)> backward_fn) {
  return make_result<T>(a.shape(), std::move(values), {a}, std::move(backward_fn));
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& n) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!wants(n, p)) continue;
      auto& g = pgrad(n, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& n) {
    if (wants(n, 0)) {
      auto& g = pgrad(n, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
    if (wants(n, 1)) {
      auto& g = pgrad(n, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& n) {
    if (wants(n, 0)) {
      auto& g = pgrad(n, 0);
      const auto& other = pval(n, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * other[i];
    }
    if (wants(n, 1)) {
      auto& g = pgrad(n, 1);
      const auto& other = pval(n, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * other[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& v : out) v *= factor;
  return unary<T>(a, std::move(out), [factor](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T offset) {
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& v : out) v += offset;
  return unary<T>(a, std::move(out), [](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  });
}

template <typename T>
Tensor<T> scale_by(const Tensor<T>& a, const Tensor<T>& s) {
  require(s.defined() && s.numel() == 1, "scale_by: factor must hold one value");
  const T factor = s.item();
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& v : out) v *= factor;
  return make_result<T>(a.shape(), std::move(out), {a, s}, [](Node<T>& n) {
    const T f = pval(n, 1)[0];
    if (wants(n, 0)) {
      auto& g = pgrad(n, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * f;
    }
    if (wants(n, 1)) {
      const auto& av = pval(n, 0);
      T acc = 0;
      for (std::size_t i = 0; i < av.size(); ++i) acc += n.grad[i] * av[i];
      pgrad(n, 1)[0] += acc;
    }
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& v : out) v = v > T(0) ? v : T(0);
  return unary<T>(a, std::move(out), [](Node<T>& n) {
    auto& g = pgrad(n, 0);
    const auto& x = pval(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > T(0)) g[i] += n.grad[i];
    }
  });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& v : out) v = std::tanh(v);
  return unary<T>(a, std::move(out), [](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += n.grad[i] * (T(1) - n.value[i] * n.value[i]);
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = 0;
  for (T v : a.values()) acc += v;
  return make_result<T>(Shape{1}, {acc}, {a}, [](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (auto& v : g) v += n.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  require(a.defined() && a.numel() > 0, "mean of an empty tensor");
  T acc = 0;
  for (T v : a.values()) acc += v;
  const T inv = T(1) / static_cast<T>(a.numel());
  return make_result<T>(Shape{1}, {acc * inv}, {a}, [inv](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (auto& v : g) v += n.grad[0] * inv;
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  require(shape_numel(shape) == a.numel(),
          "reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  std::vector<T> out(a.values().begin(), a.values().end());
  return make_result<T>(std::move(shape), std::move(out), {a}, [](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  });
}

template <typename T>
Tensor<T> narrow(const Tensor<T>& a, std::int64_t begin, std::int64_t length) {
  require(a.defined() && a.rank() >= 1, "narrow: needs at least one dimension");
  require(begin >= 0 && length >= 0 && begin + length <= a.dim(0),
          "narrow: rows [" + std::to_string(begin) + ", " + std::to_string(begin + length) +
              ") outside " + shape_string(a.shape()));
  const Index row = a.dim(0) == 0 ? 0 : a.numel() / a.dim(0);
  Shape shape = a.shape();
  shape[0] = length;
  const auto first = a.values().begin() + begin * row;
  std::vector<T> out(first, first + length * row);
  return make_result<T>(std::move(shape), std::move(out), {a}, [begin, row](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (std::size_t i = 0; i < n.grad.size(); ++i) g[static_cast<std::size_t>(begin * row) + i] += n.grad[i];
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                             shape_string(b.shape()));
  std::vector<T> out(static_cast<std::size_t>(m * n));
  gemm<T>(false, false, m, n, k, a.values().data(), b.values().data(), out.data(), false);
  return make_result<T>(Shape{m, n}, std::move(out), {a, b}, [m, n, k](Node<T>& node) {
    if (wants(node, 0)) {
      gemm<T>(false, true, m, k, n, node.grad.data(), pval(node, 1).data(),
              pgrad(node, 0).data(), true);
    }
    if (wants(node, 1)) {
      gemm<T>(true, false, k, n, m, pval(node, 0).data(), node.grad.data(),
              pgrad(node, 1).data(), true);
    }
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  const Index batch = x.dim(0), in = x.dim(1), out_features = weight.dim(0);
  require(weight.dim(1) == in, "linear: weight " + shape_string(weight.shape()) +
                                   " does not accept input " + shape_string(x.shape()));
  if (bias.defined()) require(bias.numel() == out_features, "linear: bias size mismatch");
  std::vector<T> out(static_cast<std::size_t>(batch * out_features));
  gemm<T>(false, true, batch, out_features, in, x.values().data(), weight.values().data(),
          out.data(), false);
  if (bias.defined()) {
    const auto b = bias.values();
    for (Index r = 0; r < batch; ++r) {
      for (Index o = 0; o < out_features; ++o) out[static_cast<std::size_t>(r * out_features + o)] += b[o];
    }
  }
  return make_result<T>(Shape{batch, out_features}, std::move(out), {x, weight, bias},
                        [batch, in, out_features](Node<T>& n) {
    if (wants(n, 0)) {
      gemm<T>(false, false, batch, in, out_features, n.grad.data(), pval(n, 1).data(),
              pgrad(n, 0).data(), true);
    }
    if (wants(n, 1)) {
      gemm<T>(true, false, out_features, in, batch, n.grad.data(), pval(n, 0).data(),
              pgrad(n, 1).data(), true);
    }
    if (wants(n, 2)) {
      auto& gb = pgrad(n, 2);
      for (Index r = 0; r < batch; ++r) {
        for (Index o = 0; o < out_features; ++o) gb[o] += n.grad[static_cast<std::size_t>(r * out_features + o)];
      }
    }
  });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 ConvOptions options) {
  require_rank(x, 4, "conv2d");
  require_rank(weight, 4, "conv2d weight");
  require(options.stride >= 1 && options.padding >= 0, "conv2d: invalid stride or padding");
  const Index batch = x.dim(0), out_ch = weight.dim(0);
  ConvGeometry g{x.dim(1), x.dim(2), x.dim(3), weight.dim(2), weight.dim(3), 0, 0,
                 options.stride, options.padding};
  require(weight.dim(1) == g.channels, "conv2d: weight " + shape_string(weight.shape()) +
                                           " does not match input " + shape_string(x.shape()));
  require(g.height + 2 * g.padding >= g.kh && g.width + 2 * g.padding >= g.kw,
          "conv2d: kernel larger than padded input");
  g.out_h = (g.height + 2 * g.padding - g.kh) / g.stride + 1;
  g.out_w = (g.width + 2 * g.padding - g.kw) / g.stride + 1;
  if (bias.defined()) require(bias.numel() == out_ch, "conv2d: bias size mismatch");

  const Index in_size = g.channels * g.height * g.width;
  const Index out_size = out_ch * g.out_area();
  std::vector<T> out(static_cast<std::size_t>(batch * out_size));
  std::vector<T> cols(g.is_pointwise() ? 0 : static_cast<std::size_t>(g.patch() * g.out_area()));
  for (Index n = 0; n < batch; ++n) {
    const T* img = x.values().data() + n * in_size;
    const T* c = img;
    if (!g.is_pointwise()) {
      im2col(img, g, cols.data());
      c = cols.data();
    }
    gemm<T>(false, false, out_ch, g.out_area(), g.patch(), weight.values().data(), c,
            out.data() + n * out_size, false);
    if (bias.defined()) {
      const auto b = bias.values();
      for (Index o = 0; o < out_ch; ++o) {
        T* row = out.data() + n * out_size + o * g.out_area();
        for (Index i = 0; i < g.out_area(); ++i) row[i] += b[o];
      }
    }
  }
  return make_result<T>(Shape{batch, out_ch, g.out_h, g.out_w}, std::move(out), {x, weight, bias},
                        [g, batch, out_ch, in_size, out_size](Node<T>& node) {
    const auto& xv = pval(node, 0);
    const auto& wv = pval(node, 1);
    std::vector<T> cols(g.is_pointwise() ? 0 : static_cast<std::size_t>(g.patch() * g.out_area()));
    std::vector<T> gcols(cols.size());
    for (Index n = 0; n < batch; ++n) {
      const T* gy = node.grad.data() + n * out_size;
      if (wants(node, 1)) {
        const T* c = xv.data() + n * in_size;
        if (!g.is_pointwise()) {
          im2col(xv.data() + n * in_size, g, cols.data());
          c = cols.data();
        }
        gemm<T>(false, true, out_ch, g.patch(), g.out_area(), gy, c, pgrad(node, 1).data(), true);
      }
      if (wants(node, 0)) {
        T* gx = pgrad(node, 0).data() + n * in_size;
        if (g.is_pointwise()) {
          gemm<T>(true, false, g.patch(), g.out_area(), out_ch, wv.data(), gy, gx, true);
        } else {
          gemm<T>(true, false, g.patch(), g.out_area(), out_ch, wv.data(), gy, gcols.data(), false);
          col2im(gcols.data(), g, gx);
        }
      }
      if (wants(node, 2)) {
        auto& gb = pgrad(node, 2);
        for (Index o = 0; o < out_ch; ++o) {
          const T* row = gy + o * g.out_area();
          T acc = 0;
          for (Index i = 0; i < g.out_area(); ++i) acc += row[i];
          gb[static_cast<std::size_t>(o)] += acc;
        }
      }
    }
  });
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           ConvOptions options) {
  require_rank(x, 4, "conv_transpose2d");
  require_rank(weight, 4, "conv_transpose2d weight");
  require(options.stride >= 1 && options.padding >= 0,
          "conv_transpose2d: invalid stride or padding");
  const Index batch = x.dim(0), in_ch = x.dim(1);
  require(weight.dim(0) == in_ch, "conv_transpose2d: weight " + shape_string(weight.shape()) +
                                      " does not match input " + shape_string(x.shape()));
  // Geometry of the forward convolution this op is the adjoint of: the output
  // image is the convolution's input, x lives on its output grid.
  ConvGeometry g{weight.dim(1), 0, 0, weight.dim(2), weight.dim(3), x.dim(2), x.dim(3),
                 options.stride, options.padding};
  g.height = (g.out_h - 1) * g.stride - 2 * g.padding + g.kh;
  g.width = (g.out_w - 1) * g.stride - 2 * g.padding + g.kw;
  require(g.height > 0 && g.width > 0, "conv_transpose2d: empty output");
  if (bias.defined()) require(bias.numel() == g.channels, "conv_transpose2d: bias size mismatch");

  const Index in_size = in_ch * g.out_area();
  const Index out_size = g.channels * g.height * g.width;
  std::vector<T> out(static_cast<std::size_t>(batch * out_size), T(0));
  std::vector<T> cols(static_cast<std::size_t>(g.patch() * g.out_area()));
  for (Index n = 0; n < batch; ++n) {
    gemm<T>(true, false, g.patch(), g.out_area(), in_ch, weight.values().data(),
            x.values().data() + n * in_size, cols.data(), false);
    col2im(cols.data(), g, out.data() + n * out_size);
    if (bias.defined()) {
      const auto b = bias.values();
      for (Index c = 0; c < g.channels; ++c) {
        T* plane = out.data() + n * out_size + c * g.height * g.width;
        for (Index i = 0; i < g.height * g.width; ++i) plane[i] += b[c];
      }
    }
  }
  return make_result<T>(Shape{batch, g.channels, g.height, g.width}, std::move(out),
                        {x, weight, bias}, [g, batch, in_ch, in_size, out_size](Node<T>& node) {
    std::vector<T> gcols(static_cast<std::size_t>(g.patch() * g.out_area()));
    for (Index n = 0; n < batch; ++n) {
      const T* gy = node.grad.data() + n * out_size;
      if (wants(node, 0) || wants(node, 1)) im2col(gy, g, gcols.data());
      if (wants(node, 0)) {
        gemm<T>(false, false, in_ch, g.out_area(), g.patch(), pval(node, 1).data(), gcols.data(),
                pgrad(node, 0).data() + n * in_size, true);
      }
      if (wants(node, 1)) {
        gemm<T>(false, true, in_ch, g.patch(), g.out_area(), pval(node, 0).data() + n * in_size,
                gcols.data(), pgrad(node, 1).data(), true);
      }
      if (wants(node, 2)) {
        auto& gb = pgrad(node, 2);
        const Index area = g.height * g.width;
        for (Index c = 0; c < g.channels; ++c) {
          T acc = 0;
          for (Index i = 0; i < area; ++i) acc += gy[c * area + i];
          gb[static_cast<std::size_t>(c)] += acc;
        }
      }
    }
  });
}

template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, int factor) {
  require_rank(x, 4, "avg_pool2d");
  require(factor >= 1 && x.dim(2) % factor == 0 && x.dim(3) % factor == 0,
          "avg_pool2d: spatial size " + shape_string(x.shape()) + " not divisible by factor");
  const Index planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const Index oh = h / factor, ow = w / factor;
  const T inv = T(1) / static_cast<T>(factor * factor);
  std::vector<T> out(static_cast<std::size_t>(planes * oh * ow), T(0));
  const auto xv = x.values();
  for (Index p = 0; p < planes; ++p) {
    for (Index y = 0; y < h; ++y) {
      for (Index z = 0; z < w; ++z) {
        out[static_cast<std::size_t>((p * oh + y / factor) * ow + z / factor)] +=
            xv[static_cast<std::size_t>((p * h + y) * w + z)] * inv;
      }
    }
  }
  return make_result<T>(Shape{x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                        [planes, h, w, oh, ow, factor, inv](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (Index p = 0; p < planes; ++p) {
      for (Index y = 0; y < h; ++y) {
        for (Index z = 0; z < w; ++z) {
          g[static_cast<std::size_t>((p * h + y) * w + z)] +=
              n.grad[static_cast<std::size_t>((p * oh + y / factor) * ow + z / factor)] * inv;
        }
      }
    }
  });
}

template <typename T>
Tensor<T> upsample_nearest2d(const Tensor<T>& x, int factor) {
  require_rank(x, 4, "upsample_nearest2d");
  require(factor >= 1, "upsample_nearest2d: factor must be positive");
  const Index planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const Index oh = h * factor, ow = w * factor;
  std::vector<T> out(static_cast<std::size_t>(planes * oh * ow));
  const auto xv = x.values();
  for (Index p = 0; p < planes; ++p) {
    for (Index y = 0; y < oh; ++y) {
      for (Index z = 0; z < ow; ++z) {
        out[static_cast<std::size_t>((p * oh + y) * ow + z)] =
            xv[static_cast<std::size_t>((p * h + y / factor) * w + z / factor)];
      }
    }
  }
  return make_result<T>(Shape{x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                        [planes, h, w, oh, ow, factor](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (Index p = 0; p < planes; ++p) {
      for (Index y = 0; y < oh; ++y) {
        for (Index z = 0; z < ow; ++z) {
          g[static_cast<std::size_t>((p * h + y / factor) * w + z / factor)] +=
              n.grad[static_cast<std::size_t>((p * oh + y) * ow + z)];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, BatchNormState<T>& state, bool training) {
  require_rank(x, 4, "batch_norm");
  const Index batch = x.dim(0), channels = x.dim(1), area = x.dim(2) * x.dim(3);
  const Index count = batch * area;
  if (state.running_mean.empty()) {
    state.running_mean.assign(static_cast<std::size_t>(channels), T(0));
    state.running_var.assign(static_cast<std::size_t>(channels), T(1));
  }
  require(static_cast<Index>(state.running_mean.size()) == channels,
          "batch_norm: running statistics have the wrong channel count");
  require(!training || count > 1, "batch_norm: training needs more than one value per channel");

  const auto xv = x.values();
  std::vector<T> mean(static_cast<std::size_t>(channels)), inv_std(static_cast<std::size_t>(channels));
  for (Index c = 0; c < channels; ++c) {
    T mu, var;
    if (training) {
      double acc = 0.0;
      for (Index n = 0; n < batch; ++n) {
        const T* p = xv.data() + (n * channels + c) * area;
        for (Index i = 0; i < area; ++i) acc += p[i];
      }
      mu = static_cast<T>(acc / count);
      double sq = 0.0;
      for (Index n = 0; n < batch; ++n) {
        const T* p = xv.data() + (n * channels + c) * area;
        for (Index i = 0; i < area; ++i) sq += double(p[i] - mu) * double(p[i] - mu);
      }
      var = static_cast<T>(sq / count);
      const auto ci = static_cast<std::size_t>(c);
      state.running_mean[ci] = (T(1) - state.momentum) * state.running_mean[ci] + state.momentum * mu;
      const T unbiased = static_cast<T>(sq / (count - 1));
      state.running_var[ci] = (T(1) - state.momentum) * state.running_var[ci] + state.momentum * unbiased;
    } else {
      mu = state.running_mean[static_cast<std::size_t>(c)];
      var = state.running_var[static_cast<std::size_t>(c)];
    }
    mean[static_cast<std::size_t>(c)] = mu;
    inv_std[static_cast<std::size_t>(c)] = T(1) / std::sqrt(var + state.eps);
  }

  std::vector<T> out(xv.size());
  for (Index n = 0; n < batch; ++n) {
    for (Index c = 0; c < channels; ++c) {
      const Index off = (n * channels + c) * area;
      const T mu = mean[static_cast<std::size_t>(c)], is = inv_std[static_cast<std::size_t>(c)];
      for (Index i = 0; i < area; ++i) out[static_cast<std::size_t>(off + i)] = (xv[static_cast<std::size_t>(off + i)] - mu) * is;
    }
  }
  return make_result<T>(x.shape(), std::move(out), {x},
                        [batch, channels, area, count, training, inv_std](Node<T>& node) {
    auto& gx = pgrad(node, 0);
    for (Index c = 0; c < channels; ++c) {
      const T is = inv_std[static_cast<std::size_t>(c)];
      if (!training) {
        for (Index n = 0; n < batch; ++n) {
          const Index off = (n * channels + c) * area;
          for (Index i = 0; i < area; ++i) gx[static_cast<std::size_t>(off + i)] += node.grad[static_cast<std::size_t>(off + i)] * is;
        }
        continue;
      }
      // xhat is this node's output.
      double sum_g = 0.0, sum_gx = 0.0;
      for (Index n = 0; n < batch; ++n) {
        const Index off = (n * channels + c) * area;
        for (Index i = 0; i < area; ++i) {
          const auto k = static_cast<std::size_t>(off + i);
          sum_g += node.grad[k];
          sum_gx += double(node.grad[k]) * node.value[k];
        }
      }
      const T mg = static_cast<T>(sum_g / count), mgx = static_cast<T>(sum_gx / count);
      for (Index n = 0; n < batch; ++n) {
        const Index off = (n * channels + c) * area;
        for (Index i = 0; i < area; ++i) {
          const auto k = static_cast<std::size_t>(off + i);
          gx[k] += is * (node.grad[k] - mg - node.value[k] * mgx);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> channel_affine(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias) {
  require_rank(x, 4, "channel_affine");
  const Index batch = x.dim(0), channels = x.dim(1), area = x.dim(2) * x.dim(3);
  require(gain.defined() && bias.defined() && gain.shape() == Shape({batch, channels}) &&
              bias.shape() == gain.shape(),
          "channel_affine: gain and bias must be [N, C]");
  const auto xv = x.values(), gv = gain.values(), bv = bias.values();
  std::vector<T> out(xv.size());
  for (Index p = 0; p < batch * channels; ++p) {
    for (Index i = 0; i < area; ++i) {
      const auto k = static_cast<std::size_t>(p * area + i);
      out[k] = xv[k] * gv[static_cast<std::size_t>(p)] + bv[static_cast<std::size_t>(p)];
    }
  }
  return make_result<T>(x.shape(), std::move(out), {x, gain, bias},
                        [batch, channels, area](Node<T>& n) {
    const auto& xv = pval(n, 0);
    const auto& gv = pval(n, 1);
    for (Index p = 0; p < batch * channels; ++p) {
      T sg = 0, sgx = 0;
      for (Index i = 0; i < area; ++i) {
        const auto k = static_cast<std::size_t>(p * area + i);
        sg += n.grad[k];
        sgx += n.grad[k] * xv[k];
      }
      if (wants(n, 0)) {
        auto& gx = pgrad(n, 0);
        for (Index i = 0; i < area; ++i) {
          const auto k = static_cast<std::size_t>(p * area + i);
          gx[k] += n.grad[k] * gv[static_cast<std::size_t>(p)];
        }
      }
      if (wants(n, 1)) pgrad(n, 1)[static_cast<std::size_t>(p)] += sgx;
      if (wants(n, 2)) pgrad(n, 2)[static_cast<std::size_t>(p)] += sg;
    }
  });
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const int> ids) {
  require_rank(table, 2, "embedding");
  const Index rows = table.dim(0), width = table.dim(1);
  const auto count = static_cast<Index>(ids.size());
  std::vector<int> idx(ids.begin(), ids.end());
  for (int id : idx) {
    if (id < 0 || id >= rows) {
      throw InvalidArgument("embedding: id " + std::to_string(id) + " outside [0, " +
                            std::to_string(rows) + ")");
    }
  }
  std::vector<T> out(static_cast<std::size_t>(count * width));
  const auto tv = table.values();
  for (Index r = 0; r < count; ++r) {
    std::copy_n(tv.begin() + idx[static_cast<std::size_t>(r)] * width, width,
                out.begin() + r * width);
  }
  return make_result<T>(Shape{count, width}, std::move(out), {table},
                        [idx = std::move(idx), width](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (Index j = 0; j < width; ++j) {
        g[static_cast<std::size_t>(idx[r] * width + j)] += n.grad[r * static_cast<std::size_t>(width) + static_cast<std::size_t>(j)];
      }
    }
  });
}

template <typename T>
Tensor<T> spatial_sum(const Tensor<T>& x) {
  require_rank(x, 4, "spatial_sum");
  const Index planes = x.dim(0) * x.dim(1), area = x.dim(2) * x.dim(3);
  std::vector<T> out(static_cast<std::size_t>(planes), T(0));
  const auto xv = x.values();
  for (Index p = 0; p < planes; ++p) {
    T acc = 0;
    for (Index i = 0; i < area; ++i) acc += xv[static_cast<std::size_t>(p * area + i)];
    out[static_cast<std::size_t>(p)] = acc;
  }
  return make_result<T>(Shape{x.dim(0), x.dim(1)}, std::move(out), {x}, [planes, area](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (Index p = 0; p < planes; ++p) {
      for (Index i = 0; i < area; ++i) g[static_cast<std::size_t>(p * area + i)] += n.grad[static_cast<std::size_t>(p)];
    }
  });
}

template <typename T>
Tensor<T> row_dot(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "row_dot");
  require_same_shape(a, b, "row_dot");
  const Index rows = a.dim(0), cols = a.dim(1);
  std::vector<T> out(static_cast<std::size_t>(rows), T(0));
  const auto av = a.values(), bv = b.values();
  for (Index r = 0; r < rows; ++r) {
    T acc = 0;
    for (Index c = 0; c < cols; ++c) acc += av[static_cast<std::size_t>(r * cols + c)] * bv[static_cast<std::size_t>(r * cols + c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
  return make_result<T>(Shape{rows}, std::move(out), {a, b}, [rows, cols](Node<T>& n) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!wants(n, p)) continue;
      auto& g = pgrad(n, p);
      const auto& other = pval(n, 1 - p);
      for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
          const auto k = static_cast<std::size_t>(r * cols + c);
          g[k] += n.grad[static_cast<std::size_t>(r)] * other[k];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 3, "bmm");
  require_rank(b, 3, "bmm");
  const Index batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  require(b.dim(0) == batch && b.dim(1) == k,
          "bmm: incompatible shapes " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  std::vector<T> out(static_cast<std::size_t>(batch * m * n));
  for (Index i = 0; i < batch; ++i) {
    gemm<T>(false, false, m, n, k, a.values().data() + i * m * k, b.values().data() + i * k * n,
            out.data() + i * m * n, false);
  }
  return make_result<T>(Shape{batch, m, n}, std::move(out), {a, b}, [batch, m, n, k](Node<T>& node) {
    for (Index i = 0; i < batch; ++i) {
      const T* gy = node.grad.data() + i * m * n;
      if (wants(node, 0)) {
        gemm<T>(false, true, m, k, n, gy, pval(node, 1).data() + i * k * n,
                pgrad(node, 0).data() + i * m * k, true);
      }
      if (wants(node, 1)) {
        gemm<T>(true, false, k, n, m, pval(node, 0).data() + i * m * k, gy,
                pgrad(node, 1).data() + i * k * n, true);
      }
    }
  });
}

template <typename T>
Tensor<T> transpose_last2(const Tensor<T>& a) {
  require_rank(a, 3, "transpose_last2");
  const Index batch = a.dim(0), m = a.dim(1), n = a.dim(2);
  std::vector<T> out(static_cast<std::size_t>(batch * m * n));
  const auto av = a.values();
  for (Index b = 0; b < batch; ++b) {
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) {
        out[static_cast<std::size_t>((b * n + j) * m + i)] = av[static_cast<std::size_t>((b * m + i) * n + j)];
      }
    }
  }
  return make_result<T>(Shape{batch, n, m}, std::move(out), {a}, [batch, m, n](Node<T>& node) {
    auto& g = pgrad(node, 0);
    for (Index b = 0; b < batch; ++b) {
      for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
          g[static_cast<std::size_t>((b * m + i) * n + j)] += node.grad[static_cast<std::size_t>((b * n + j) * m + i)];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> softmax_last(const Tensor<T>& a) {
  require(a.defined() && a.rank() >= 1, "softmax_last: needs at least one dimension");
  const Index width = a.shape().back();
  require(width > 0, "softmax_last: empty last dimension");
  const Index rows = a.numel() / width;
  std::vector<T> out(a.values().begin(), a.values().end());
  for (Index r = 0; r < rows; ++r) {
    T* row = out.data() + r * width;
    const T mx = *std::max_element(row, row + width);
    T total = 0;
    for (Index j = 0; j < width; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (Index j = 0; j < width; ++j) row[j] /= total;
  }
  return make_result<T>(a.shape(), std::move(out), {a}, [rows, width](Node<T>& n) {
    auto& g = pgrad(n, 0);
    for (Index r = 0; r < rows; ++r) {
      const T* y = n.value.data() + r * width;
      const T* gy = n.grad.data() + r * width;
      T dot = 0;
      for (Index j = 0; j < width; ++j) dot += gy[j] * y[j];
      for (Index j = 0; j < width; ++j) g[static_cast<std::size_t>(r * width + j)] += y[j] * (gy[j] - dot);
    }
  });
}

template <typename T>
Tensor<T> hinge_d_loss(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
  if (!d_real.defined() || !d_fake.defined() || d_real.numel() == 0 || d_fake.numel() == 0) {
    throw InvalidArgument("hinge_d_loss: empty batch");
  }
  const auto rv = d_real.values(), fv = d_fake.values();
  const T inv_r = T(1) / static_cast<T>(rv.size()), inv_f = T(1) / static_cast<T>(fv.size());
  T loss = 0;
  for (T v : rv) loss += std::max(T(0), T(1) - v) * inv_r;
  for (T v : fv) loss += std::max(T(0), T(1) + v) * inv_f;
  return make_result<T>(Shape{1}, {loss}, {d_real, d_fake}, [inv_r, inv_f](Node<T>& n) {
    const T g = n.grad[0];
    if (wants(n, 0)) {
      auto& gr = pgrad(n, 0);
      const auto& r = pval(n, 0);
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (T(1) - r[i] > T(0)) gr[i] -= g * inv_r;
      }
    }
    if (wants(n, 1)) {
      auto& gf = pgrad(n, 1);
      const auto& f = pval(n, 1);
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (T(1) + f[i] > T(0)) gf[i] += g * inv_f;
      }
    }
  });
}

template <typename T>
Tensor<T> hinge_g_loss(const Tensor<T>& d_fake) {
  if (!d_fake.defined() || d_fake.numel() == 0) throw InvalidArgument("hinge_g_loss: empty batch");
  return scale(mean(d_fake), T(-1));
}

namespace {

// Normalizes in place; leaves `v` untouched when its norm is below 1e-12.
template <typename T>
void normalize_into(std::vector<T>& target, const std::vector<T>& v) {
  T norm = 0;
  for (T x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > T(1e-12))) return;
  target.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) target[i] = v[i] / norm;
}

template <typename T>
void init_vectors(SpectralNormState<T>& state, Index rows, Index cols) {
  // Deterministic starting point; any vector with a component along the top
  // singular direction works.
  if (static_cast<Index>(state.u.size()) != rows) {
    state.u.assign(static_cast<std::size_t>(rows), T(1) / std::sqrt(static_cast<T>(rows)));
  }
  if (static_cast<Index>(state.v.size()) != cols) {
    state.v.assign(static_cast<std::size_t>(cols), T(1) / std::sqrt(static_cast<T>(cols)));
  }
}

template <typename T>
void power_step(std::span<const T> w, Index rows, Index cols, SpectralNormState<T>& state) {
  std::vector<T> v(static_cast<std::size_t>(cols), T(0));
  gemm<T>(true, false, cols, 1, rows, w.data(), state.u.data(), v.data(), false);
  normalize_into(state.v, v);
  std::vector<T> u(static_cast<std::size_t>(rows), T(0));
  gemm<T>(false, false, rows, 1, cols, w.data(), state.v.data(), u.data(), false);
  normalize_into(state.u, u);
}

template <typename T>
T rayleigh_sigma(std::span<const T> w, Index rows, Index cols, const SpectralNormState<T>& state) {
  std::vector<T> wv(static_cast<std::size_t>(rows), T(0));
  gemm<T>(false, false, rows, 1, cols, w.data(), state.v.data(), wv.data(), false);
  T sigma = 0;
  for (Index i = 0; i < rows; ++i) sigma += state.u[static_cast<std::size_t>(i)] * wv[static_cast<std::size_t>(i)];
  return sigma;
}

}  // namespace

template <typename T>
T power_iteration(std::span<const T> weight, std::int64_t rows, std::int64_t cols,
                  SpectralNormState<T>& state, int iterations) {
  require(rows > 0 && cols > 0 && static_cast<Index>(weight.size()) == rows * cols,
          "power_iteration: weight size mismatch");
  init_vectors(state, rows, cols);
  for (int i = 0; i < iterations; ++i) power_step(weight, rows, cols, state);
  return rayleigh_sigma(weight, rows, cols, state);
}

template <typename T>
Tensor<T> spectral_normalize(const Tensor<T>& weight, SpectralNormState<T>& state, bool update) {
  require(weight.defined() && weight.rank() >= 1, "spectral_normalize: undefined weight");
  const Index rows = weight.dim(0);
  require(rows > 0, "spectral_normalize: empty weight");
  const Index cols = weight.numel() / rows;
  const T sigma_raw = power_iteration(weight.values(), rows, cols, state, update ? 1 : 0);
  const T sigma = std::max(sigma_raw, T(1e-12));
  std::vector<T> out(weight.values().begin(), weight.values().end());
  for (auto& v : out) v /= sigma;
  std::vector<T> u = state.u, v = state.v;
  return make_result<T>(weight.shape(), std::move(out), {weight},
                        [sigma, rows, cols, u = std::move(u), v = std::move(v)](Node<T>& n) {
    auto& g = pgrad(n, 0);
    // dL/dW = G / sigma - <G, W> / sigma^2 * u v^T, and <G, W> / sigma = <G, W_sn>.
    T inner = 0;
    for (std::size_t i = 0; i < n.grad.size(); ++i) inner += n.grad[i] * n.value[i];
    const T coef = inner / sigma;
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        const auto k = static_cast<std::size_t>(r * cols + c);
        g[k] += n.grad[k] / sigma - coef * u[static_cast<std::size_t>(r)] * v[static_cast<std::size_t>(c)];
      }
    }
  });
}

#define PMQA_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> scale(const Tensor<T>&, T);                                             \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                        \
  template Tensor<T> scale_by(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> relu(const Tensor<T>&);                                                 \
  template Tensor<T> tanh(const Tensor<T>&);                                                 \
  template Tensor<T> sum(const Tensor<T>&);                                                  \
  template Tensor<T> mean(const Tensor<T>&);                                                 \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                       \
  template Tensor<T> narrow(const Tensor<T>&, std::int64_t, std::int64_t);                   \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, ConvOptions); \
  template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                      ConvOptions);                                          \
  template Tensor<T> avg_pool2d(const Tensor<T>&, int);                                      \
  template Tensor<T> upsample_nearest2d(const Tensor<T>&, int);                              \
  template Tensor<T> batch_norm(const Tensor<T>&, BatchNormState<T>&, bool);                 \
  template Tensor<T> channel_affine(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> embedding(const Tensor<T>&, std::span<const int>);                      \
  template Tensor<T> spatial_sum(const Tensor<T>&);                                          \
  template Tensor<T> row_dot(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> bmm(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> transpose_last2(const Tensor<T>&);                                      \
  template Tensor<T> softmax_last(const Tensor<T>&);                                         \
  template Tensor<T> hinge_d_loss(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> hinge_g_loss(const Tensor<T>&);                                         \
  template T power_iteration(std::span<const T>, std::int64_t, std::int64_t,                 \
                             SpectralNormState<T>&, int);                                    \
  template Tensor<T> spectral_normalize(const Tensor<T>&, SpectralNormState<T>&, bool);

PMQA_INSTANTIATE_OPS(float)
PMQA_INSTANTIATE_OPS(double)

#undef PMQA_INSTANTIATE_OPS

}  // namespace pmqa::ad
