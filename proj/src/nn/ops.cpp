/* Copyright 2026 The tacmap Authors. All Rights Reserved.

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

#include "tacmap/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <cstring>

namespace tacmap::nn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

void RequireRank(const Shape& shape, std::size_t rank, const char* op) {
  if (shape.size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + ShapeToString(shape));
  }
}

// Lowers one CHW image to a (C*K*K, H*W) matrix of zero-padded patches.
template <typename T>
void Im2Col(const T* image, std::size_t channels, std::size_t height, std::size_t width, std::size_t k, T* cols) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(height);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(width);
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = image + c * height * width;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = cols + ((c * k + ky) * k + kx) * height * width;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::ptrdiff_t x_begin = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x_end = std::min<std::ptrdiff_t>(w, w - dx);
        for (std::ptrdiff_t y = 0; y < h; ++y) {
          T* out = row + y * w;
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= h || x_begin >= x_end) {
            std::fill(out, out + w, T(0));
            continue;
          }
          std::fill(out, out + x_begin, T(0));
          std::memcpy(out + x_begin, plane + sy * w + x_begin + dx, sizeof(T) * (x_end - x_begin));
          std::fill(out + x_end, out + w, T(0));
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatters patch gradients back onto the image.
template <typename T>
void Col2ImAdd(const T* cols, std::size_t channels, std::size_t height, std::size_t width, std::size_t k, T* image) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(height);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(width);
  for (std::size_t c = 0; c < channels; ++c) {
    T* plane = image + c * height * width;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = cols + ((c * k + ky) * k + kx) * height * width;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::ptrdiff_t x_begin = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x_end = std::min<std::ptrdiff_t>(w, w - dx);
        for (std::ptrdiff_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          const T* in = row + y * w;
          T* out = plane + sy * w;
          for (std::ptrdiff_t x = x_begin; x < x_end; ++x) out[x + dx] += in[x];
        }
      }
    }
  }
}

struct ConvGeometry {
  std::size_t batch, in_channels, height, width, out_channels, kernel;
  std::size_t pixels() const { return height * width; }
  std::size_t patch() const { return in_channels * kernel * kernel; }
};

template <typename T>
ConvGeometry CheckConv(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
  RequireRank(input.shape(), 4, "conv2d input");
  RequireRank(weight.shape(), 4, "conv2d weight");
  RequireRank(bias.shape(), 1, "conv2d bias");
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3), weight.dim(0), weight.dim(2)};
  if (weight.dim(1) != g.in_channels) {
    throw ShapeError("conv2d: input has " + std::to_string(g.in_channels) + " channels, weight expects " +
                     std::to_string(weight.dim(1)));
  }
  if (weight.dim(2) != weight.dim(3) || weight.dim(2) % 2 == 0) {
    throw ShapeError("conv2d: kernel must be square with odd extent, got " + ShapeToString(weight.shape()));
  }
  if (bias.dim(0) != g.out_channels) throw ShapeError("conv2d: bias length does not match output channels");
  return g;
}

}  // namespace

template <typename T>
Var<T> Conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias) {
  const ConvGeometry g = CheckConv(input.value(), weight.value(), bias.value());
  BasicTensor<T> out({g.batch, g.out_channels, g.height, g.width});

  const bool pointwise = g.kernel == 1;
  AlignedVector<T> cols(pointwise ? 0 : g.patch() * g.pixels());
  ConstMatMap<T> w(weight.value().ptr(), g.out_channels, g.patch());
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias.value().ptr(), g.out_channels);
  for (std::size_t n = 0; n < g.batch; ++n) {
    const T* image = input.value().ptr() + n * g.in_channels * g.pixels();
    const T* col_data = image;
    if (!pointwise) {
      Im2Col(image, g.in_channels, g.height, g.width, g.kernel, cols.data());
      col_data = cols.data();
    }
    MatMap<T> y(out.ptr() + n * g.out_channels * g.pixels(), g.out_channels, g.pixels());
    y.noalias() = w * ConstMatMap<T>(col_data, g.patch(), g.pixels());
    y.colwise() += b;
  }

  return Var<T>::FromOp(std::move(out), {input, weight, bias}, [g, pointwise](Node<T>& node) {
    Node<T>& in = *node.parents[0];
    Node<T>& wt = *node.parents[1];
    Node<T>& bs = *node.parents[2];
    AlignedVector<T> cols(pointwise ? 0 : g.patch() * g.pixels());
    AlignedVector<T> dcols(in.requires_grad && !pointwise ? g.patch() * g.pixels() : 0);
    ConstMatMap<T> w(wt.value.ptr(), g.out_channels, g.patch());
    for (std::size_t n = 0; n < g.batch; ++n) {
      ConstMatMap<T> dy(node.grad.ptr() + n * g.out_channels * g.pixels(), g.out_channels, g.pixels());
      const T* image = in.value.ptr() + n * g.in_channels * g.pixels();
      if (bs.requires_grad) {
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(bs.grad.ptr(), g.out_channels);
        db += dy.rowwise().sum();
      }
      if (wt.requires_grad) {
        const T* col_data = image;
        if (!pointwise) {
          Im2Col(image, g.in_channels, g.height, g.width, g.kernel, cols.data());
          col_data = cols.data();
        }
        MatMap<T> dw(wt.grad.ptr(), g.out_channels, g.patch());
        dw.noalias() += dy * ConstMatMap<T>(col_data, g.patch(), g.pixels()).transpose();
      }
      if (in.requires_grad) {
        T* dimage = in.grad.ptr() + n * g.in_channels * g.pixels();
        if (pointwise) {
          MatMap<T>(dimage, g.patch(), g.pixels()).noalias() += w.transpose() * dy;
        } else {
          MatMap<T> dc(dcols.data(), g.patch(), g.pixels());
          dc.noalias() = w.transpose() * dy;
          Col2ImAdd(dcols.data(), g.in_channels, g.height, g.width, g.kernel, dimage);
        }
      }
    }
  });
}

template <typename T>
BasicTensor<T> Conv2dReference(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
  const ConvGeometry g = CheckConv(input, weight, bias);
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(g.kernel / 2);
  BasicTensor<T> out({g.batch, g.out_channels, g.height, g.width});
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      for (std::size_t y = 0; y < g.height; ++y) {
        for (std::size_t x = 0; x < g.width; ++x) {
          T acc = bias[o];
          for (std::size_t i = 0; i < g.in_channels; ++i) {
            for (std::size_t ky = 0; ky < g.kernel; ++ky) {
              for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
                const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - pad;
                if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(g.height) ||
                    sx >= static_cast<std::ptrdiff_t>(g.width)) {
                  continue;
                }
                acc += input.at(n, i, sy, sx) * weight.at(o, i, ky, kx);
              }
            }
          }
          out.at(n, o, y, x) = acc;
        }
      }
    }
  }
  return out;
}

template <typename T>
Var<T> MaxPool2d(const Var<T>& input) {
  const Shape& s = input.shape();
  RequireRank(s, 4, "maxpool2d");
  if (s[2] % 2 != 0 || s[3] % 2 != 0) throw ShapeError("maxpool2d: spatial dims must be even, got " + ShapeToString(s));
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3], oh = h / 2, ow = w / 2;
  BasicTensor<T> out({s[0], s[1], oh, ow});
  // Flat input index of each window's winner.
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  const T* in = input.value().ptr();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t base = p * h * w + 2 * y * w + 2 * x;
        const std::size_t window[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = window[0];
        for (int i = 1; i < 4; ++i) {
          if (in[window[i]] > in[best]) best = window[i];
        }
        const std::size_t o = (p * oh + y) * ow + x;
        out[o] = in[best];
        (*argmax)[o] = best;
      }
    }
  }
  return Var<T>::FromOp(std::move(out), {input}, [argmax](Node<T>& node) {
    T* dx = node.parents[0]->grad.ptr();
    for (std::size_t o = 0; o < argmax->size(); ++o) dx[(*argmax)[o]] += node.grad[o];
  });
}

template <typename T>
Var<T> UpsampleNearest2x(const Var<T>& input) {
  const Shape& s = input.shape();
  RequireRank(s, 4, "upsample_nearest2x");
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
  BasicTensor<T> out({s[0], s[1], 2 * h, 2 * w});
  const T* in = input.value().ptr();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < 2 * h; ++y) {
      const T* src = in + p * h * w + (y / 2) * w;
      T* dst = out.ptr() + (p * 2 * h + y) * 2 * w;
      for (std::size_t x = 0; x < 2 * w; ++x) dst[x] = src[x / 2];
    }
  }
  return Var<T>::FromOp(std::move(out), {input}, [planes, h, w](Node<T>& node) {
    T* dx = node.parents[0]->grad.ptr();
    const T* dy = node.grad.ptr();
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t y = 0; y < 2 * h; ++y) {
        const T* src = dy + (p * 2 * h + y) * 2 * w;
        T* dst = dx + p * h * w + (y / 2) * w;
        for (std::size_t x = 0; x < 2 * w; ++x) dst[x / 2] += src[x];
      }
    }
  });
}

template <typename T>
Var<T> ConcatChannels(const Var<T>& a, const Var<T>& b) {
  if (!a.defined()) return b;
  if (!b.defined()) return a;
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  RequireRank(sa, 4, "concat_channels");
  RequireRank(sb, 4, "concat_channels");
  if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3]) {
    throw ShapeError("concat_channels: mismatched operands " + ShapeToString(sa) + " and " + ShapeToString(sb));
  }
  const std::size_t batch = sa[0], plane = sa[2] * sa[3];
  const std::size_t block_a = sa[1] * plane, block_b = sb[1] * plane;
  BasicTensor<T> out({batch, sa[1] + sb[1], sa[2], sa[3]});
  for (std::size_t n = 0; n < batch; ++n) {
    T* dst = out.ptr() + n * (block_a + block_b);
    std::copy_n(a.value().ptr() + n * block_a, block_a, dst);
    std::copy_n(b.value().ptr() + n * block_b, block_b, dst + block_a);
  }
  return Var<T>::FromOp(std::move(out), {a, b}, [batch, block_a, block_b](Node<T>& node) {
    Node<T>& pa = *node.parents[0];
    Node<T>& pb = *node.parents[1];
    for (std::size_t n = 0; n < batch; ++n) {
      const T* src = node.grad.ptr() + n * (block_a + block_b);
      if (pa.requires_grad) {
        T* da = pa.grad.ptr() + n * block_a;
        for (std::size_t i = 0; i < block_a; ++i) da[i] += src[i];
      }
      if (pb.requires_grad) {
        T* db = pb.grad.ptr() + n * block_b;
        for (std::size_t i = 0; i < block_b; ++i) db[i] += src[block_a + i];
      }
    }
  });
}

template <typename T>
Var<T> SliceChannels(const Var<T>& input, std::size_t begin, std::size_t count) {
  const Shape& s = input.shape();
  RequireRank(s, 4, "slice_channels");
  if (count == 0 || begin + count > s[1]) throw ShapeError("slice_channels: range out of bounds for " + ShapeToString(s));
  const std::size_t batch = s[0], plane = s[2] * s[3], channels = s[1];
  BasicTensor<T> out({batch, count, s[2], s[3]});
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy_n(input.value().ptr() + (n * channels + begin) * plane, count * plane, out.ptr() + n * count * plane);
  }
  return Var<T>::FromOp(std::move(out), {input}, [=](Node<T>& node) {
    for (std::size_t n = 0; n < batch; ++n) {
      T* dx = node.parents[0]->grad.ptr() + (n * channels + begin) * plane;
      const T* dy = node.grad.ptr() + n * count * plane;
      for (std::size_t i = 0; i < count * plane; ++i) dx[i] += dy[i];
    }
  });
}

template <typename T>
Var<T> Relu(const Var<T>& x) {
  BasicTensor<T> out = x.value();
  for (T& v : out.data()) v = v > T(0) ? v : T(0);
  return Var<T>::FromOp(std::move(out), {x}, [](Node<T>& node) {
    T* dx = node.parents[0]->grad.ptr();
    const T* in = node.parents[0]->value.ptr();
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      if (in[i] > T(0)) dx[i] += node.grad[i];
    }
  });
}

template <typename T>
Var<T> Sigmoid(const Var<T>& x) {
  BasicTensor<T> out = x.value();
  // Keep the result strictly inside (0, 1) where the floating-point value
  // would saturate.
  const T lo = std::numeric_limits<T>::min();
  const T hi = std::nextafter(T(1), T(0));
  for (T& v : out.data()) v = std::clamp(T(1) / (T(1) + std::exp(-v)), lo, hi);
  return Var<T>::FromOp(std::move(out), {x}, [](Node<T>& node) {
    T* dx = node.parents[0]->grad.ptr();
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      const T s = node.value[i];
      dx[i] += node.grad[i] * s * (T(1) - s);
    }
  });
}

template <typename T>
Var<T> Flatten(const Var<T>& x) {
  const Shape& s = x.shape();
  if (s.empty()) throw ShapeError("flatten: rank-0 input");
  const std::size_t batch = s[0];
  BasicTensor<T> out = x.value().Reshaped({batch, x.value().size() / batch});
  return Var<T>::FromOp(std::move(out), {x}, [](Node<T>& node) {
    T* dx = node.parents[0]->grad.ptr();
    for (std::size_t i = 0; i < node.grad.size(); ++i) dx[i] += node.grad[i];
  });
}

template <typename T>
Var<T> Linear(const Var<T>& input, const Var<T>& weight, const Var<T>& bias) {
  RequireRank(input.shape(), 2, "linear input");
  RequireRank(weight.shape(), 2, "linear weight");
  RequireRank(bias.shape(), 1, "linear bias");
  const std::size_t batch = input.shape()[0], features = input.shape()[1], outputs = weight.shape()[0];
  if (weight.shape()[1] != features) {
    throw ShapeError("linear: input features " + std::to_string(features) + " vs weight " +
                     ShapeToString(weight.shape()));
  }
  if (bias.shape()[0] != outputs) throw ShapeError("linear: bias length does not match outputs");
  BasicTensor<T> out({batch, outputs});
  MatMap<T> y(out.ptr(), batch, outputs);
  y.noalias() = ConstMatMap<T>(input.value().ptr(), batch, features) *
                ConstMatMap<T>(weight.value().ptr(), outputs, features).transpose();
  y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.value().ptr(), outputs);
  return Var<T>::FromOp(std::move(out), {input, weight, bias}, [batch, features, outputs](Node<T>& node) {
    Node<T>& in = *node.parents[0];
    Node<T>& wt = *node.parents[1];
    Node<T>& bs = *node.parents[2];
    ConstMatMap<T> dy(node.grad.ptr(), batch, outputs);
    if (in.requires_grad) {
      MatMap<T>(in.grad.ptr(), batch, features).noalias() += dy * ConstMatMap<T>(wt.value.ptr(), outputs, features);
    }
    if (wt.requires_grad) {
      MatMap<T>(wt.grad.ptr(), outputs, features).noalias() +=
          dy.transpose() * ConstMatMap<T>(in.value.ptr(), batch, features);
    }
    if (bs.requires_grad) {
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bs.grad.ptr(), outputs) += dy.colwise().sum();
    }
  });
}

template <typename T>
Var<T> BceLoss(const Var<T>& pred, const Var<T>& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("bce_loss: shapes differ " + ShapeToString(pred.shape()) + " vs " +
                     ShapeToString(target.shape()));
  }
  const T eps = static_cast<T>(kBceEpsilon);
  const std::size_t n = pred.value().size();
  const T* p = pred.value().ptr();
  const T* t = target.value().ptr();
  // Accumulate in double so the float loss does not depend on summation drift.
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pc = std::clamp<double>(p[i], eps, T(1) - eps);
    total += t[i] * std::log(pc) + (1.0 - t[i]) * std::log(1.0 - pc);
  }
  BasicTensor<T> out({1}, static_cast<T>(-total / static_cast<double>(n)));
  return Var<T>::FromOp(std::move(out), {pred, target}, [eps, n](Node<T>& node) {
    Node<T>& pn = *node.parents[0];
    Node<T>& tn = *node.parents[1];
    const T scale = node.grad[0] / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T pv = pn.value[i];
      const bool clamped = pv < eps || pv > T(1) - eps;
      const T pc = std::clamp(pv, eps, T(1) - eps);
      if (pn.requires_grad && !clamped) {
        const T tv = tn.value[i];
        pn.grad[i] += scale * ((T(1) - tv) / (T(1) - pc) - tv / pc);
      }
      if (tn.requires_grad) tn.grad[i] += scale * (std::log(T(1) - pc) - std::log(pc));
    }
  });
}

template <typename T>
Var<T> MseLoss(const Var<T>& pred, const Var<T>& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("mse_loss: shapes differ " + ShapeToString(pred.shape()) + " vs " +
                     ShapeToString(target.shape()));
  }
  const std::size_t n = pred.value().size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pred.value()[i]) - target.value()[i];
    total += d * d;
  }
  BasicTensor<T> out({1}, static_cast<T>(total / static_cast<double>(n)));
  return Var<T>::FromOp(std::move(out), {pred, target}, [n](Node<T>& node) {
    Node<T>& pn = *node.parents[0];
    Node<T>& tn = *node.parents[1];
    const T scale = T(2) * node.grad[0] / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T d = pn.value[i] - tn.value[i];
      if (pn.requires_grad) pn.grad[i] += scale * d;
      if (tn.requires_grad) tn.grad[i] -= scale * d;
    }
  });
}

#define TACMAP_INSTANTIATE_OPS(T)                                                                    \
  template Var<T> Conv2d(const Var<T>&, const Var<T>&, const Var<T>&);                              \
  template BasicTensor<T> Conv2dReference(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                          const BasicTensor<T>&);                                   \
  template Var<T> MaxPool2d(const Var<T>&);                                                         \
  template Var<T> UpsampleNearest2x(const Var<T>&);                                                 \
  template Var<T> ConcatChannels(const Var<T>&, const Var<T>&);                                     \
  template Var<T> SliceChannels(const Var<T>&, std::size_t, std::size_t);                           \
  template Var<T> Relu(const Var<T>&);                                                              \
  template Var<T> Sigmoid(const Var<T>&);                                                           \
  template Var<T> Flatten(const Var<T>&);                                                           \
  template Var<T> Linear(const Var<T>&, const Var<T>&, const Var<T>&);                              \
  template Var<T> BceLoss(const Var<T>&, const Var<T>&);                                            \
  template Var<T> MseLoss(const Var<T>&, const Var<T>&);

TACMAP_INSTANTIATE_OPS(float)
TACMAP_INSTANTIATE_OPS(double)

#undef TACMAP_INSTANTIATE_OPS

}  // namespace tacmap::nn
