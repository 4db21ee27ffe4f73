// Copyright 2026 The HieraEdge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hieraedge/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "hieraedge/kernels/dft.hpp"
#include "hieraedge/kernels/kernels.hpp"

namespace hieraedge {

using autodiff::grad_sink;
using autodiff::make_result;

namespace {

void require_rank(const Tensor& x, int rank, const char* op) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         " input, got shape " + shape_str(x.shape()));
  }
}

template <typename F, typename G>
Tensor unary(const Tensor& x, const char* name, F forward, G derivative) {
  std::vector<double> out(x.numel());
  const auto in = x.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = forward(in[i]);
  return make_result(x.shape(), std::move(out), name, {x}, [x, derivative](const TensorImpl& o) {
    auto g = grad_sink(x);
    const auto xv = x.data();
    for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * derivative(xv[i], o.data[i]);
  });
}

inline double sigmoid_scalar(double v) {
  return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

// Offsets of a and b for each output index under broadcasting.
struct Broadcast {
  Shape out;
  std::vector<int64_t> a_index, b_index;
};

Broadcast broadcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rank() != b.rank()) {
    throw DimensionError(std::string(op) + ": rank mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const int r = a.rank();
  Broadcast bc;
  bc.out.resize(r);
  for (int i = 0; i < r; ++i) {
    const int64_t ea = a.shape()[i], eb = b.shape()[i];
    if (ea != eb && ea != 1 && eb != 1) {
      throw DimensionError(std::string(op) + ": axis " + std::to_string(i) + " mismatch " +
                           shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    bc.out[i] = std::max(ea, eb);
  }
  std::vector<int64_t> sa(r), sb(r);
  int64_t ka = 1, kb = 1;
  for (int i = r - 1; i >= 0; --i) {
    sa[i] = a.shape()[i] == 1 ? 0 : ka;
    sb[i] = b.shape()[i] == 1 ? 0 : kb;
    ka *= a.shape()[i];
    kb *= b.shape()[i];
  }
  const int64_t n = shape_numel(bc.out);
  bc.a_index.resize(n);
  bc.b_index.resize(n);
  std::vector<int64_t> idx(r, 0);
  int64_t oa = 0, ob = 0;
  for (int64_t i = 0; i < n; ++i) {
    bc.a_index[i] = oa;
    bc.b_index[i] = ob;
    for (int d = r - 1; d >= 0; --d) {
      if (++idx[d] < bc.out[d]) {
        oa += sa[d];
        ob += sb[d];
        break;
      }
      oa -= sa[d] * (bc.out[d] - 1);
      ob -= sb[d] * (bc.out[d] - 1);
      idx[d] = 0;
    }
  }
  return bc;
}

enum class BinaryKind { kAdd, kSub, kMul };

Tensor binary(const Tensor& a, const Tensor& b, BinaryKind kind, const char* name) {
  if (a.shape() == b.shape()) {
    const auto av = a.data(), bv = b.data();
    std::vector<double> out(av.size());
    for (size_t i = 0; i < out.size(); ++i) {
      out[i] = kind == BinaryKind::kAdd   ? av[i] + bv[i]
               : kind == BinaryKind::kSub ? av[i] - bv[i]
                                          : av[i] * bv[i];
    }
    return make_result(a.shape(), std::move(out), name, {a, b}, [a, b, kind](const TensorImpl& o) {
      auto ga = grad_sink(a);
      auto gb = grad_sink(b);
      const auto av = a.data(), bv = b.data();
      for (size_t i = 0; i < o.grad.size(); ++i) {
        const double g = o.grad[i];
        switch (kind) {
          case BinaryKind::kAdd:
            if (!ga.empty()) ga[i] += g;
            if (!gb.empty()) gb[i] += g;
            break;
          case BinaryKind::kSub:
            if (!ga.empty()) ga[i] += g;
            if (!gb.empty()) gb[i] -= g;
            break;
          case BinaryKind::kMul:
            if (!ga.empty()) ga[i] += g * bv[i];
            if (!gb.empty()) gb[i] += g * av[i];
            break;
        }
      }
    });
  }
  auto bc = std::make_shared<Broadcast>(broadcast(a, b, name));
  const auto av = a.data(), bv = b.data();
  std::vector<double> out(bc->a_index.size());
  for (size_t i = 0; i < out.size(); ++i) {
    const double x = av[bc->a_index[i]], y = bv[bc->b_index[i]];
    out[i] = kind == BinaryKind::kAdd ? x + y : kind == BinaryKind::kSub ? x - y : x * y;
  }
  return make_result(bc->out, std::move(out), name, {a, b}, [a, b, kind, bc](const TensorImpl& o) {
    auto ga = grad_sink(a);
    auto gb = grad_sink(b);
    const auto av = a.data(), bv = b.data();
    for (size_t i = 0; i < o.grad.size(); ++i) {
      const double g = o.grad[i];
      const int64_t ia = bc->a_index[i], ib = bc->b_index[i];
      switch (kind) {
        case BinaryKind::kAdd:
          if (!ga.empty()) ga[ia] += g;
          if (!gb.empty()) gb[ib] += g;
          break;
        case BinaryKind::kSub:
          if (!ga.empty()) ga[ia] += g;
          if (!gb.empty()) gb[ib] -= g;
          break;
        case BinaryKind::kMul:
          if (!ga.empty()) ga[ia] += g * bv[ib];
          if (!gb.empty()) gb[ib] += g * av[ia];
          break;
      }
    }
  });
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv2dOptions& opts) {
  require_rank(x, 4, "conv2d");
  require_rank(weight, 4, "conv2d weight");
  kernels::ConvGeometry g;
  g.batch = x.dim(0);
  g.in_channels = x.dim(1);
  g.in_h = x.dim(2);
  g.in_w = x.dim(3);
  g.out_channels = weight.dim(0);
  g.kernel_h = weight.dim(2);
  g.kernel_w = weight.dim(3);
  g.stride = opts.stride;
  g.pad_h = opts.pad_h;
  g.pad_w = opts.pad_w;
  g.groups = opts.groups;
  if (g.stride < 1 || g.pad_h < 0 || g.pad_w < 0 || g.groups < 1) {
    throw UsageError("conv2d: stride must be >= 1, padding >= 0, groups >= 1");
  }
  if (g.in_channels % g.groups != 0 || g.out_channels % g.groups != 0) {
    throw DimensionError("conv2d: channels (C=" + std::to_string(g.in_channels) +
                         ", O=" + std::to_string(g.out_channels) +
                         ") not divisible by groups=" + std::to_string(g.groups));
  }
  if (weight.dim(1) != g.in_channels / g.groups) {
    throw DimensionError("conv2d: weight axis 1 is " + std::to_string(weight.dim(1)) +
                         ", expected C/groups = " + std::to_string(g.in_channels / g.groups) +
                         " (input " + shape_str(x.shape()) + ", weight " +
                         shape_str(weight.shape()) + ")");
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.out_channels)) {
    throw DimensionError("conv2d: bias shape " + shape_str(bias.shape()) + " vs O=" +
                         std::to_string(g.out_channels));
  }
  const int64_t eh = g.in_h + 2 * g.pad_h - g.kernel_h;
  const int64_t ew = g.in_w + 2 * g.pad_w - g.kernel_w;
  if (eh < 0 || ew < 0) {
    throw DimensionError("conv2d: kernel " + shape_str(weight.shape()) +
                         " larger than padded input " + shape_str(x.shape()) + " on axes H/W");
  }
  g.out_h = eh / g.stride + 1;
  g.out_w = ew / g.stride + 1;

  std::vector<double> out(g.batch * g.out_channels * g.out_h * g.out_w);
  kernels::conv2d_forward(g, x.data().data(), weight.data().data(),
                          bias.defined() ? bias.data().data() : nullptr, out.data());
  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result({g.batch, g.out_channels, g.out_h, g.out_w}, std::move(out), "conv2d",
                     std::move(inputs), [x, weight, bias, g](const TensorImpl& o) {
                       auto gx = grad_sink(x);
                       auto gw = grad_sink(weight);
                       auto gb = bias.defined() ? grad_sink(bias) : std::span<double>{};
                       kernels::conv2d_backward(g, x.data().data(), weight.data().data(),
                                                o.grad.data(), gx.empty() ? nullptr : gx.data(),
                                                gw.empty() ? nullptr : gw.data(),
                                                gb.empty() ? nullptr : gb.data());
                     });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int64_t stride,
              int64_t padding, int64_t groups) {
  return conv2d(x, weight, bias, Conv2dOptions{stride, padding, padding, groups});
}

Tensor maxpool2d(const Tensor& x, int64_t kernel, int64_t stride, int64_t padding) {
  require_rank(x, 4, "maxpool2d");
  if (kernel < 1 || stride < 1 || padding < 0) {
    throw UsageError("maxpool2d: kernel and stride must be >= 1, padding >= 0");
  }
  kernels::PoolGeometry g;
  g.planes = x.dim(0) * x.dim(1);
  g.in_h = x.dim(2);
  g.in_w = x.dim(3);
  g.kernel = kernel;
  g.stride = stride;
  g.pad = padding;
  if (kernel > g.in_h + 2 * padding || kernel > g.in_w + 2 * padding) {
    throw DimensionError("maxpool2d: window " + std::to_string(kernel) +
                         " larger than padded input " + shape_str(x.shape()) + " on axes H/W");
  }
  if (padding > kernel / 2) {
    throw UsageError("maxpool2d: padding must be at most half the window");
  }
  g.out_h = (g.in_h + 2 * padding - kernel) / stride + 1;
  g.out_w = (g.in_w + 2 * padding - kernel) / stride + 1;
  std::vector<double> out(g.planes * g.out_h * g.out_w);
  auto argmax = std::make_shared<std::vector<int64_t>>(out.size());
  kernels::maxpool2d_forward(g, x.data().data(), out.data(), argmax->data());
  return make_result({x.dim(0), x.dim(1), g.out_h, g.out_w}, std::move(out), "maxpool2d", {x},
                     [x, g, argmax](const TensorImpl& o) {
                       auto gx = grad_sink(x);
                       kernels::maxpool2d_backward(g, o.grad.data(), argmax->data(), gx.data());
                     });
}

Tensor upsample_nearest2x(const Tensor& x) {
  require_rank(x, 4, "upsample_nearest2x");
  const int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  std::vector<double> out(planes * 4 * h * w);
  const auto in = x.data();
  for (int64_t p = 0; p < planes; ++p) {
    for (int64_t r = 0; r < 2 * h; ++r) {
      for (int64_t c = 0; c < 2 * w; ++c) {
        out[(p * 2 * h + r) * 2 * w + c] = in[(p * h + r / 2) * w + c / 2];
      }
    }
  }
  return make_result({x.dim(0), x.dim(1), 2 * h, 2 * w}, std::move(out), "upsample", {x},
                     [x, planes, h, w](const TensorImpl& o) {
                       auto gx = grad_sink(x);
                       for (int64_t p = 0; p < planes; ++p) {
                         for (int64_t r = 0; r < 2 * h; ++r) {
                           for (int64_t c = 0; c < 2 * w; ++c) {
                             gx[(p * h + r / 2) * w + c / 2] += o.grad[(p * 2 * h + r) * 2 * w + c];
                           }
                         }
                       }
                     });
}

Tensor pad_replicate(const Tensor& x, int64_t pad) {
  require_rank(x, 4, "pad_replicate");
  if (pad < 0) throw UsageError("pad_replicate: padding must be >= 0");
  const int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t oh = h + 2 * pad, ow = w + 2 * pad;
  // Source offset of every padded cell; border cells repeat the nearest edge.
  auto source = [=](int64_t r, int64_t c) {
    return std::clamp<int64_t>(r - pad, 0, h - 1) * w + std::clamp<int64_t>(c - pad, 0, w - 1);
  };
  std::vector<double> out(planes * oh * ow);
  const auto in = x.data();
  for (int64_t p = 0; p < planes; ++p) {
    for (int64_t r = 0; r < oh; ++r) {
      for (int64_t c = 0; c < ow; ++c) out[(p * oh + r) * ow + c] = in[p * h * w + source(r, c)];
    }
  }
  return make_result({x.dim(0), x.dim(1), oh, ow}, std::move(out), "pad_replicate", {x},
                     [x, planes, h, w, oh, ow, source](const TensorImpl& o) {
                       auto gx = grad_sink(x);
                       for (int64_t p = 0; p < planes; ++p) {
                         for (int64_t r = 0; r < oh; ++r) {
                           for (int64_t c = 0; c < ow; ++c) {
                             gx[p * h * w + source(r, c)] += o.grad[(p * oh + r) * ow + c];
                           }
                         }
                       }
                     });
}

Tensor batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, bool training, double momentum, double eps) {
  require_rank(x, 4, "batchnorm2d");
  const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (gamma.numel() != c || beta.numel() != c || state.running_mean.numel() != c ||
      state.running_var.numel() != c) {
    throw DimensionError("batchnorm2d: parameter extent does not match C=" + std::to_string(c));
  }
  const int64_t count = n * hw;
  if (training && count < 2) {
    throw UsageError("batchnorm2d: training mode needs N*H*W >= 2, got " +
                     std::to_string(count));
  }
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(c);
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  const auto gv = gamma.data(), bv = beta.data();
  auto rm = state.running_mean.data(), rv = state.running_var.data();
  for (int64_t ch = 0; ch < c; ++ch) {
    double mu, var;
    if (training) {
      double s = 0.0;
      for (int64_t b = 0; b < n; ++b) {
        const double* p = xv.data() + (b * c + ch) * hw;
        for (int64_t q = 0; q < hw; ++q) s += p[q];
      }
      mu = s / count;
      double ss = 0.0;
      for (int64_t b = 0; b < n; ++b) {
        const double* p = xv.data() + (b * c + ch) * hw;
        for (int64_t q = 0; q < hw; ++q) ss += (p[q] - mu) * (p[q] - mu);
      }
      var = ss / count;
      rm[ch] = (1.0 - momentum) * rm[ch] + momentum * mu;
      rv[ch] = (1.0 - momentum) * rv[ch] + momentum * ss / (count - 1);
    } else {
      mu = rm[ch];
      var = rv[ch];
    }
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[ch] = is;
    for (int64_t b = 0; b < n; ++b) {
      const int64_t off = (b * c + ch) * hw;
      for (int64_t q = 0; q < hw; ++q) {
        const double h = (xv[off + q] - mu) * is;
        (*xhat)[off + q] = h;
        out[off + q] = gv[ch] * h + bv[ch];
      }
    }
  }
  return make_result(
      x.shape(), std::move(out), "batchnorm2d", {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, training, n, c, hw, count](const TensorImpl& o) {
        auto gx = grad_sink(x);
        auto gg = grad_sink(gamma);
        auto gb = grad_sink(beta);
        const auto gv = gamma.data();
        for (int64_t ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int64_t b = 0; b < n; ++b) {
            const int64_t off = (b * c + ch) * hw;
            for (int64_t q = 0; q < hw; ++q) {
              sum_dy += o.grad[off + q];
              sum_dy_xhat += o.grad[off + q] * (*xhat)[off + q];
            }
          }
          if (!gg.empty()) gg[ch] += sum_dy_xhat;
          if (!gb.empty()) gb[ch] += sum_dy;
          if (gx.empty()) continue;
          const double k = gv[ch] * (*inv_std)[ch];
          for (int64_t b = 0; b < n; ++b) {
            const int64_t off = (b * c + ch) * hw;
            for (int64_t q = 0; q < hw; ++q) {
              if (training) {
                gx[off + q] += k * (o.grad[off + q] - sum_dy / count -
                                    (*xhat)[off + q] * sum_dy_xhat / count);
              } else {
                gx[off + q] += k * o.grad[off + q];
              }
            }
          }
        }
      });
}

Tensor silu(const Tensor& x) {
  return unary(
      x, "silu", [](double v) { return v * sigmoid_scalar(v); },
      [](double v, double) {
        const double s = sigmoid_scalar(v);
        return s * (1.0 + v * (1.0 - s));
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, "sigmoid", [](double v) { return sigmoid_scalar(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, "relu", [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor abs(const Tensor& x) {
  return unary(
      x, "abs", [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kAdd, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kSub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kMul, "mul"); }

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, "scale", [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw UsageError("concat_channels: no inputs");
  const Tensor& first = parts.front();
  require_rank(first, 4, "concat_channels");
  const int64_t n = first.dim(0), h = first.dim(2), w = first.dim(3);
  int64_t total = 0;
  for (const Tensor& p : parts) {
    require_rank(p, 4, "concat_channels");
    if (p.dim(0) != n || p.dim(2) != h || p.dim(3) != w) {
      throw DimensionError("concat_channels: N/H/W mismatch " + shape_str(first.shape()) +
                           " vs " + shape_str(p.shape()));
    }
    total += p.dim(1);
  }
  const int64_t hw = h * w;
  std::vector<double> out(n * total * hw);
  int64_t offset = 0;
  for (const Tensor& p : parts) {
    const int64_t c = p.dim(1);
    const auto pv = p.data();
    for (int64_t b = 0; b < n; ++b) {
      std::copy(pv.begin() + b * c * hw, pv.begin() + (b + 1) * c * hw,
                out.begin() + (b * total + offset) * hw);
    }
    offset += c;
  }
  return make_result({n, total, h, w}, std::move(out), "concat", parts,
                     [parts, n, total, hw](const TensorImpl& o) {
                       int64_t offset = 0;
                       for (const Tensor& p : parts) {
                         const int64_t c = p.dim(1);
                         auto g = grad_sink(p);
                         if (!g.empty()) {
                           for (int64_t b = 0; b < n; ++b) {
                             const double* src = o.grad.data() + (b * total + offset) * hw;
                             double* dst = g.data() + b * c * hw;
                             for (int64_t q = 0; q < c * hw; ++q) dst[q] += src[q];
                           }
                         }
                         offset += c;
                       }
                     });
}

std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int64_t>& sizes) {
  require_rank(x, 4, "split_channels");
  const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  int64_t total = 0;
  for (int64_t s : sizes) {
    if (s < 0) throw DimensionError("split_channels: negative size");
    total += s;
  }
  if (total != c) {
    throw DimensionError("split_channels: sizes sum to " + std::to_string(total) +
                         " but axis 1 (C) is " + std::to_string(c));
  }
  std::vector<Tensor> result;
  int64_t offset = 0;
  const auto xv = x.data();
  for (int64_t s : sizes) {
    std::vector<double> out(n * s * hw);
    for (int64_t b = 0; b < n; ++b) {
      std::copy(xv.begin() + (b * c + offset) * hw, xv.begin() + (b * c + offset + s) * hw,
                out.begin() + b * s * hw);
    }
    result.push_back(make_result({n, s, x.dim(2), x.dim(3)}, std::move(out), "split", {x},
                                 [x, n, c, s, hw, offset](const TensorImpl& o) {
                                   auto g = grad_sink(x);
                                   for (int64_t b = 0; b < n; ++b) {
                                     double* dst = g.data() + (b * c + offset) * hw;
                                     const double* src = o.grad.data() + b * s * hw;
                                     for (int64_t q = 0; q < s * hw; ++q) dst[q] += src[q];
                                   }
                                 }));
    offset += s;
  }
  return result;
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 4, "global_avg_pool");
  const int64_t planes = x.dim(0) * x.dim(1), hw = x.dim(2) * x.dim(3);
  std::vector<double> out(planes);
  const auto xv = x.data();
  for (int64_t p = 0; p < planes; ++p) {
    double s = 0.0;
    for (int64_t q = 0; q < hw; ++q) s += xv[p * hw + q];
    out[p] = s / static_cast<double>(hw);
  }
  return make_result({x.dim(0), x.dim(1), 1, 1}, std::move(out), "global_avg_pool", {x},
                     [x, planes, hw](const TensorImpl& o) {
                       auto g = grad_sink(x);
                       for (int64_t p = 0; p < planes; ++p) {
                         const double v = o.grad[p] / static_cast<double>(hw);
                         for (int64_t q = 0; q < hw; ++q) g[p * hw + q] += v;
                       }
                     });
}

Tensor softmax_lastdim(const Tensor& x) {
  const int64_t d = x.dim(-1);
  const int64_t rows = x.numel() / d;
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (int64_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * d;
    double* y = out.data() + r * d;
    const double m = *std::max_element(in, in + d);
    double s = 0.0;
    for (int64_t i = 0; i < d; ++i) {
      y[i] = std::exp(in[i] - m);
      s += y[i];
    }
    for (int64_t i = 0; i < d; ++i) y[i] /= s;
  }
  return make_result(x.shape(), std::move(out), "softmax", {x}, [x, rows, d](const TensorImpl& o) {
    auto g = grad_sink(x);
    for (int64_t r = 0; r < rows; ++r) {
      const double* y = o.data.data() + r * d;
      const double* dy = o.grad.data() + r * d;
      double dot = 0.0;
      for (int64_t i = 0; i < d; ++i) dot += dy[i] * y[i];
      for (int64_t i = 0; i < d; ++i) g[r * d + i] += y[i] * (dy[i] - dot);
    }
  });
}

Tensor bmm(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  require_rank(a, 3, "bmm");
  require_rank(b, 3, "bmm");
  const int64_t batch = a.dim(0);
  const int64_t m = trans_a ? a.dim(2) : a.dim(1);
  const int64_t k = trans_a ? a.dim(1) : a.dim(2);
  const int64_t kb = trans_b ? b.dim(2) : b.dim(1);
  const int64_t n = trans_b ? b.dim(1) : b.dim(2);
  if (b.dim(0) != batch || kb != k) {
    throw DimensionError("bmm: operands " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " disagree on batch (axis 0) or inner extent");
  }
  const int64_t lda = a.dim(2), ldb = b.dim(2);
  std::vector<double> out(batch * m * n);
  for (int64_t i = 0; i < batch; ++i) {
    kernels::gemm(trans_a, trans_b, m, n, k, a.data().data() + i * a.dim(1) * lda, lda,
                  b.data().data() + i * b.dim(1) * ldb, ldb, out.data() + i * m * n, n, false);
  }
  return make_result({batch, m, n}, std::move(out), "bmm", {a, b},
                     [a, b, trans_a, trans_b, batch, m, n, k, lda, ldb](const TensorImpl& o) {
                       auto ga = grad_sink(a);
                       auto gb = grad_sink(b);
                       const int64_t sa = a.dim(1) * lda, sb = b.dim(1) * ldb;
                       for (int64_t i = 0; i < batch; ++i) {
                         const double* dc = o.grad.data() + i * m * n;
                         const double* av = a.data().data() + i * sa;
                         const double* bv = b.data().data() + i * sb;
                         if (!ga.empty()) {
                           if (!trans_a) {
                             kernels::gemm(false, !trans_b, m, k, n, dc, n, bv, ldb,
                                           ga.data() + i * sa, k, true);
                           } else {
                             kernels::gemm(trans_b, true, k, m, n, bv, ldb, dc, n,
                                           ga.data() + i * sa, m, true);
                           }
                         }
                         if (!gb.empty()) {
                           if (!trans_b) {
                             kernels::gemm(!trans_a, false, k, n, m, av, lda, dc, n,
                                           gb.data() + i * sb, n, true);
                           } else {
                             kernels::gemm(true, trans_a, n, k, m, dc, n, av, lda,
                                           gb.data() + i * sb, k, true);
                           }
                         }
                       }
                     });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  Tensor out = bmm(reshape(a, {1, a.dim(0), a.dim(1)}), reshape(b, {1, b.dim(0), b.dim(1)}));
  return reshape(out, {a.dim(0), b.dim(1)});
}

Tensor permute(const Tensor& x, const std::vector<int>& order) {
  const int r = x.rank();
  if (static_cast<int>(order.size()) != r) {
    throw DimensionError("permute: order has " + std::to_string(order.size()) +
                         " axes, tensor has " + std::to_string(r));
  }
  std::vector<bool> used(r, false);
  Shape out_shape(r);
  for (int i = 0; i < r; ++i) {
    if (order[i] < 0 || order[i] >= r || used[order[i]]) {
      throw UsageError("permute: invalid axis order");
    }
    used[order[i]] = true;
    out_shape[i] = x.shape()[order[i]];
  }
  std::vector<int64_t> in_strides(r);
  int64_t s = 1;
  for (int i = r - 1; i >= 0; --i) {
    in_strides[i] = s;
    s *= x.shape()[i];
  }
  // Source offset for every destination index.
  auto src = std::make_shared<std::vector<int64_t>>(x.numel());
  std::vector<int64_t> idx(r, 0);
  int64_t off = 0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    (*src)[i] = off;
    for (int d = r - 1; d >= 0; --d) {
      const int64_t st = in_strides[order[d]];
      if (++idx[d] < out_shape[d]) {
        off += st;
        break;
      }
      off -= st * (out_shape[d] - 1);
      idx[d] = 0;
    }
  }
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = xv[(*src)[i]];
  return make_result(out_shape, std::move(out), "permute", {x}, [x, src](const TensorImpl& o) {
    auto g = grad_sink(x);
    for (size_t i = 0; i < o.grad.size(); ++i) g[(*src)[i]] += o.grad[i];
  });
}

Tensor transpose(const Tensor& x, int axis0, int axis1) {
  std::vector<int> order(x.rank());
  std::iota(order.begin(), order.end(), 0);
  if (axis0 < 0) axis0 += x.rank();
  if (axis1 < 0) axis1 += x.rank();
  std::swap(order.at(axis0), order.at(axis1));
  return permute(x, order);
}

Tensor reshape(const Tensor& x, const Shape& shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " cannot become " +
                         shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result(shape, std::move(out), "reshape", {x}, [x](const TensorImpl& o) {
    auto g = grad_sink(x);
    for (size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result({1}, {s}, "sum", {x}, [x](const TensorImpl& o) {
    auto g = grad_sink(x);
    for (double& v : g) v += o.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor weighted_sum(const Tensor& x, const std::vector<double>& weights) {
  if (static_cast<int64_t>(weights.size()) != x.numel()) {
    throw DimensionError("weighted_sum: weight count does not match " + shape_str(x.shape()));
  }
  double s = 0.0;
  const auto xv = x.data();
  for (size_t i = 0; i < weights.size(); ++i) s += weights[i] * xv[i];
  return make_result({1}, {s}, "weighted_sum", {x}, [x, weights](const TensorImpl& o) {
    auto g = grad_sink(x);
    for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[0] * weights[i];
  });
}

namespace {

// Sub-pixel q -> (row, col) offset.
constexpr int kSubRow[4] = {0, 1, 0, 1};
constexpr int kSubCol[4] = {0, 0, 1, 1};

}  // namespace

Tensor space_to_depth(const Tensor& x) {
  require_rank(x, 4, "space_to_depth");
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw DimensionError("space_to_depth: H and W must be even, got " + shape_str(x.shape()));
  }
  const int64_t oh = h / 2, ow = w / 2;
  auto src = std::make_shared<std::vector<int64_t>>(x.numel());
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  int64_t i = 0;
  for (int64_t b = 0; b < n; ++b) {
    for (int q = 0; q < 4; ++q) {
      for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t r = 0; r < oh; ++r) {
          for (int64_t col = 0; col < ow; ++col, ++i) {
            const int64_t s = ((b * c + ch) * h + 2 * r + kSubRow[q]) * w + 2 * col + kSubCol[q];
            (*src)[i] = s;
            out[i] = xv[s];
          }
        }
      }
    }
  }
  return make_result({n, 4 * c, oh, ow}, std::move(out), "space_to_depth", {x},
                     [x, src](const TensorImpl& o) {
                       auto g = grad_sink(x);
                       for (size_t j = 0; j < o.grad.size(); ++j) g[(*src)[j]] += o.grad[j];
                     });
}

Tensor depth_to_space(const Tensor& x) {
  require_rank(x, 4, "depth_to_space");
  const int64_t n = x.dim(0), c4 = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (c4 % 4 != 0) {
    throw DimensionError("depth_to_space: axis 1 (C) must be divisible by 4, got " +
                         shape_str(x.shape()));
  }
  const int64_t c = c4 / 4;
  auto src = std::make_shared<std::vector<int64_t>>(x.numel());
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  for (int64_t b = 0; b < n; ++b) {
    for (int q = 0; q < 4; ++q) {
      for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t r = 0; r < h; ++r) {
          for (int64_t col = 0; col < w; ++col) {
            const int64_t s = ((b * c4 + q * c + ch) * h + r) * w + col;
            const int64_t d =
                ((b * c + ch) * 2 * h + 2 * r + kSubRow[q]) * 2 * w + 2 * col + kSubCol[q];
            (*src)[d] = s;
            out[d] = xv[s];
          }
        }
      }
    }
  }
  return make_result({n, c, 2 * h, 2 * w}, std::move(out), "depth_to_space", {x},
                     [x, src](const TensorImpl& o) {
                       auto g = grad_sink(x);
                       for (size_t j = 0; j < o.grad.size(); ++j) g[(*src)[j]] += o.grad[j];
                     });
}

ComplexSpectrum rfft2(const Tensor& x) {
  require_rank(x, 4, "rfft2");
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h < 1 || w < 1) throw DimensionError("rfft2: empty spatial axes");
  const int64_t wh = kernels::half_width(w);
  std::vector<double> out(n * c * h * wh * 2);
  kernels::rfft2(n * c, h, w, x.data().data(), out.data());
  Tensor spec = make_result({n, c, h, wh, 2}, std::move(out), "rfft2", {x},
                            [x, n, c, h, w](const TensorImpl& o) {
                              auto g = grad_sink(x);
                              kernels::rfft2_adjoint(n * c, h, w, o.grad.data(), g.data());
                            });
  return {spec, w};
}

Tensor irfft2(const ComplexSpectrum& spectrum) {
  const Tensor& s = spectrum.data;
  require_rank(s, 5, "irfft2");
  const int64_t n = s.dim(0), c = s.dim(1), h = s.dim(2), w = spectrum.width;
  if (s.dim(4) != 2 || s.dim(3) != kernels::half_width(w)) {
    throw DimensionError("irfft2: spectrum " + shape_str(s.shape()) +
                         " does not match original width " + std::to_string(w));
  }
  std::vector<double> out(n * c * h * w);
  kernels::irfft2(n * c, h, w, s.data().data(), out.data());
  return make_result({n, c, h, w}, std::move(out), "irfft2", {s}, [s, n, c, h, w](const TensorImpl& o) {
    auto g = grad_sink(s);
    kernels::irfft2_adjoint(n * c, h, w, o.grad.data(), g.data());
  });
}

ComplexSpectrum spectral_gate(const ComplexSpectrum& spectrum, const Tensor& gate) {
  require_rank(gate, 4, "spectral_gate");
  Shape gs = gate.shape();
  gs.push_back(1);
  return {mul(spectrum.data, reshape(gate, gs)), spectrum.width};
}

}  // namespace hieraedge
