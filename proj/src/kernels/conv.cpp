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

#include <algorithm>
#include <limits>
#include <vector>

#include "hieraedge/kernels/kernels.hpp"

namespace hieraedge::kernels {

namespace {

// Rows (c, i, j) over the kernel window, columns over output pixels.
void im2col(const ConvGeometry& g, const double* x, double* col) {
  const int64_t cg = g.in_per_group();
  const int64_t hw = g.out_h * g.out_w;
  for (int64_t c = 0; c < cg; ++c) {
    const double* xc = x + c * g.in_h * g.in_w;
    for (int64_t i = 0; i < g.kernel_h; ++i) {
      for (int64_t j = 0; j < g.kernel_w; ++j) {
        double* row = col + ((c * g.kernel_h + i) * g.kernel_w + j) * hw;
        for (int64_t oh = 0; oh < g.out_h; ++oh) {
          const int64_t ih = oh * g.stride - g.pad_h + i;
          double* out = row + oh * g.out_w;
          if (ih < 0 || ih >= g.in_h) {
            std::fill(out, out + g.out_w, 0.0);
            continue;
          }
          const double* xr = xc + ih * g.in_w;
          for (int64_t ow = 0; ow < g.out_w; ++ow) {
            const int64_t iw = ow * g.stride - g.pad_w + j;
            out[ow] = (iw >= 0 && iw < g.in_w) ? xr[iw] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* col, double* dx) {
  const int64_t cg = g.in_per_group();
  const int64_t hw = g.out_h * g.out_w;
  for (int64_t c = 0; c < cg; ++c) {
    double* dc = dx + c * g.in_h * g.in_w;
    for (int64_t i = 0; i < g.kernel_h; ++i) {
      for (int64_t j = 0; j < g.kernel_w; ++j) {
        const double* row = col + ((c * g.kernel_h + i) * g.kernel_w + j) * hw;
        for (int64_t oh = 0; oh < g.out_h; ++oh) {
          const int64_t ih = oh * g.stride - g.pad_h + i;
          if (ih < 0 || ih >= g.in_h) continue;
          double* dr = dc + ih * g.in_w;
          const double* src = row + oh * g.out_w;
          for (int64_t ow = 0; ow < g.out_w; ++ow) {
            const int64_t iw = ow * g.stride - g.pad_w + j;
            if (iw >= 0 && iw < g.in_w) dr[iw] += src[ow];
          }
        }
      }
    }
  }
}

// Valid output column range [lo, hi) for kernel column j.
inline void valid_cols(const ConvGeometry& g, int64_t j, int64_t& lo, int64_t& hi) {
  // iw = ow*s - pw + j in [0, in_w)
  const int64_t off = j - g.pad_w;
  lo = off >= 0 ? 0 : (-off + g.stride - 1) / g.stride;
  hi = g.in_w - 1 - off < 0 ? 0 : (g.in_w - 1 - off) / g.stride + 1;
  hi = std::min(hi, g.out_w);
  lo = std::min(lo, hi);
}

void depthwise_forward(const ConvGeometry& g, const double* x, const double* w,
                       const double* bias, double* y) {
  const int64_t planes = g.batch * g.in_channels;
  const int64_t in_plane = g.in_h * g.in_w;
  const int64_t out_plane = g.out_h * g.out_w;
#pragma omp parallel for schedule(static)
  for (int64_t p = 0; p < planes; ++p) {
    const int64_t c = p % g.in_channels;
    const double* xp = x + p * in_plane;
    double* yp = y + p * out_plane;
    const double* wc = w + c * g.kernel_h * g.kernel_w;
    std::fill(yp, yp + out_plane, bias ? bias[c] : 0.0);
    for (int64_t i = 0; i < g.kernel_h; ++i) {
      for (int64_t j = 0; j < g.kernel_w; ++j) {
        const double wv = wc[i * g.kernel_w + j];
        int64_t lo, hi;
        valid_cols(g, j, lo, hi);
        for (int64_t oh = 0; oh < g.out_h; ++oh) {
          const int64_t ih = oh * g.stride - g.pad_h + i;
          if (ih < 0 || ih >= g.in_h) continue;
          const double* xr = xp + ih * g.in_w - g.pad_w + j;
          double* yr = yp + oh * g.out_w;
          if (g.stride == 1) {
#pragma omp simd
            for (int64_t ow = lo; ow < hi; ++ow) yr[ow] += wv * xr[ow];
          } else {
            for (int64_t ow = lo; ow < hi; ++ow) yr[ow] += wv * xr[ow * g.stride];
          }
        }
      }
    }
  }
}

void depthwise_backward(const ConvGeometry& g, const double* x, const double* w,
                        const double* dy, double* dx, double* dw, double* db) {
  const int64_t in_plane = g.in_h * g.in_w;
  const int64_t out_plane = g.out_h * g.out_w;
  const int64_t kk = g.kernel_h * g.kernel_w;
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < g.in_channels; ++c) {
    const double* wc = w + c * kk;
    for (int64_t n = 0; n < g.batch; ++n) {
      const int64_t p = n * g.in_channels + c;
      const double* xp = x + p * in_plane;
      const double* dyp = dy + p * out_plane;
      double* dxp = dx ? dx + p * in_plane : nullptr;
      if (db) {
        double s = 0.0;
        for (int64_t q = 0; q < out_plane; ++q) s += dyp[q];
        db[c] += s;
      }
      for (int64_t i = 0; i < g.kernel_h; ++i) {
        for (int64_t j = 0; j < g.kernel_w; ++j) {
          const double wv = wc[i * g.kernel_w + j];
          int64_t lo, hi;
          valid_cols(g, j, lo, hi);
          double acc = 0.0;
          for (int64_t oh = 0; oh < g.out_h; ++oh) {
            const int64_t ih = oh * g.stride - g.pad_h + i;
            if (ih < 0 || ih >= g.in_h) continue;
            const int64_t base = ih * g.in_w - g.pad_w + j;
            const double* dyr = dyp + oh * g.out_w;
            for (int64_t ow = lo; ow < hi; ++ow) {
              const int64_t idx = base + ow * g.stride;
              acc += dyr[ow] * xp[idx];
              if (dxp) dxp[idx] += wv * dyr[ow];
            }
          }
          if (dw) dw[c * kk + i * g.kernel_w + j] += acc;
        }
      }
    }
  }
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, const double* x, const double* w, const double* bias,
                    double* y) {
  if (g.depthwise()) {
    depthwise_forward(g, x, w, bias, y);
    return;
  }
  const int64_t cg = g.in_per_group();
  const int64_t og = g.out_per_group();
  const int64_t kdim = cg * g.kernel_h * g.kernel_w;
  const int64_t hw = g.out_h * g.out_w;
  std::vector<double> col(g.pointwise() ? 0 : kdim * hw);
  for (int64_t n = 0; n < g.batch; ++n) {
    for (int64_t grp = 0; grp < g.groups; ++grp) {
      const double* xg = x + (n * g.in_channels + grp * cg) * g.in_h * g.in_w;
      const double* src = xg;
      if (!g.pointwise()) {
        im2col(g, xg, col.data());
        src = col.data();
      }
      double* yg = y + (n * g.out_channels + grp * og) * hw;
      gemm(false, false, og, hw, kdim, w + grp * og * kdim, kdim, src, hw, yg, hw, false);
      if (bias) {
        for (int64_t o = 0; o < og; ++o) {
          const double b = bias[grp * og + o];
          double* yo = yg + o * hw;
          for (int64_t q = 0; q < hw; ++q) yo[q] += b;
        }
      }
    }
  }
}

void conv2d_backward(const ConvGeometry& g, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db) {
  if (g.depthwise()) {
    depthwise_backward(g, x, w, dy, dx, dw, db);
    return;
  }
  const int64_t cg = g.in_per_group();
  const int64_t og = g.out_per_group();
  const int64_t kdim = cg * g.kernel_h * g.kernel_w;
  const int64_t hw = g.out_h * g.out_w;
  std::vector<double> col(g.pointwise() ? 0 : kdim * hw);
  std::vector<double> dcol(g.pointwise() || !dx ? 0 : kdim * hw);
  for (int64_t n = 0; n < g.batch; ++n) {
    for (int64_t grp = 0; grp < g.groups; ++grp) {
      const double* dyg = dy + (n * g.out_channels + grp * og) * hw;
      if (db) {
        for (int64_t o = 0; o < og; ++o) {
          double s = 0.0;
          const double* d = dyg + o * hw;
          for (int64_t q = 0; q < hw; ++q) s += d[q];
          db[grp * og + o] += s;
        }
      }
      const int64_t xoff = (n * g.in_channels + grp * cg) * g.in_h * g.in_w;
      if (dw) {
        const double* src = x + xoff;
        if (!g.pointwise()) {
          im2col(g, x + xoff, col.data());
          src = col.data();
        }
        gemm(false, true, og, kdim, hw, dyg, hw, src, hw, dw + grp * og * kdim, kdim, true);
      }
      if (dx) {
        const double* wg = w + grp * og * kdim;
        if (g.pointwise()) {
          gemm(true, false, kdim, hw, og, wg, kdim, dyg, hw, dx + xoff, hw, true);
        } else {
          gemm(true, false, kdim, hw, og, wg, kdim, dyg, hw, dcol.data(), hw, false);
          col2im_add(g, dcol.data(), dx + xoff);
        }
      }
    }
  }
}

void maxpool2d_forward(const PoolGeometry& g, const double* x, double* y, int64_t* argmax) {
  const int64_t in_plane = g.in_h * g.in_w;
  const int64_t out_plane = g.out_h * g.out_w;
#pragma omp parallel for schedule(static)
  for (int64_t p = 0; p < g.planes; ++p) {
    const double* xp = x + p * in_plane;
    for (int64_t oh = 0; oh < g.out_h; ++oh) {
      const int64_t h0 = oh * g.stride - g.pad;
      const int64_t hs = std::max<int64_t>(h0, 0);
      const int64_t he = std::min(h0 + g.kernel, g.in_h);
      for (int64_t ow = 0; ow < g.out_w; ++ow) {
        const int64_t w0 = ow * g.stride - g.pad;
        const int64_t ws = std::max<int64_t>(w0, 0);
        const int64_t we = std::min(w0 + g.kernel, g.in_w);
        double best = -std::numeric_limits<double>::infinity();
        int64_t arg = -1;
        for (int64_t h = hs; h < he; ++h) {
          for (int64_t w = ws; w < we; ++w) {
            const double v = xp[h * g.in_w + w];
            if (v > best || arg < 0) {
              best = v;
              arg = h * g.in_w + w;
            }
          }
        }
        y[p * out_plane + oh * g.out_w + ow] = best;
        argmax[p * out_plane + oh * g.out_w + ow] = arg;
      }
    }
  }
}

void maxpool2d_backward(const PoolGeometry& g, const double* dy, const int64_t* argmax,
                        double* dx) {
  const int64_t in_plane = g.in_h * g.in_w;
  const int64_t out_plane = g.out_h * g.out_w;
#pragma omp parallel for schedule(static)
  for (int64_t p = 0; p < g.planes; ++p) {
    for (int64_t q = 0; q < out_plane; ++q) {
      const int64_t a = argmax[p * out_plane + q];
      if (a >= 0) dx[p * in_plane + a] += dy[p * out_plane + q];
    }
  }
}

namespace reference {

void conv2d_forward(const ConvGeometry& g, const double* x, const double* w, const double* bias,
                    double* y) {
  const int64_t cg = g.in_per_group();
  const int64_t og = g.out_per_group();
  for (int64_t n = 0; n < g.batch; ++n) {
    for (int64_t o = 0; o < g.out_channels; ++o) {
      const int64_t grp = o / og;
      for (int64_t oh = 0; oh < g.out_h; ++oh) {
        for (int64_t ow = 0; ow < g.out_w; ++ow) {
          double s = bias ? bias[o] : 0.0;
          for (int64_t c = 0; c < cg; ++c) {
            const int64_t ic = grp * cg + c;
            for (int64_t i = 0; i < g.kernel_h; ++i) {
              const int64_t ih = oh * g.stride - g.pad_h + i;
              if (ih < 0 || ih >= g.in_h) continue;
              for (int64_t j = 0; j < g.kernel_w; ++j) {
                const int64_t iw = ow * g.stride - g.pad_w + j;
                if (iw < 0 || iw >= g.in_w) continue;
                s += w[((o * cg + c) * g.kernel_h + i) * g.kernel_w + j] *
                     x[((n * g.in_channels + ic) * g.in_h + ih) * g.in_w + iw];
              }
            }
          }
          y[((n * g.out_channels + o) * g.out_h + oh) * g.out_w + ow] = s;
        }
      }
    }
  }
}

void conv2d_backward(const ConvGeometry& g, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db) {
  const int64_t cg = g.in_per_group();
  const int64_t og = g.out_per_group();
  for (int64_t n = 0; n < g.batch; ++n) {
    for (int64_t o = 0; o < g.out_channels; ++o) {
      const int64_t grp = o / og;
      for (int64_t oh = 0; oh < g.out_h; ++oh) {
        for (int64_t ow = 0; ow < g.out_w; ++ow) {
          const double d = dy[((n * g.out_channels + o) * g.out_h + oh) * g.out_w + ow];
          if (db) db[o] += d;
          for (int64_t c = 0; c < cg; ++c) {
            const int64_t ic = grp * cg + c;
            for (int64_t i = 0; i < g.kernel_h; ++i) {
              const int64_t ih = oh * g.stride - g.pad_h + i;
              if (ih < 0 || ih >= g.in_h) continue;
              for (int64_t j = 0; j < g.kernel_w; ++j) {
                const int64_t iw = ow * g.stride - g.pad_w + j;
                if (iw < 0 || iw >= g.in_w) continue;
                const int64_t wi = ((o * cg + c) * g.kernel_h + i) * g.kernel_w + j;
                const int64_t xi = ((n * g.in_channels + ic) * g.in_h + ih) * g.in_w + iw;
                if (dw) dw[wi] += d * x[xi];
                if (dx) dx[xi] += d * w[wi];
              }
            }
          }
        }
      }
    }
  }
}

void maxpool2d_forward(const PoolGeometry& g, const double* x, double* y, int64_t* argmax) {
  for (int64_t p = 0; p < g.planes; ++p) {
    for (int64_t oh = 0; oh < g.out_h; ++oh) {
      for (int64_t ow = 0; ow < g.out_w; ++ow) {
        double best = -std::numeric_limits<double>::infinity();
        int64_t arg = -1;
        for (int64_t i = 0; i < g.kernel; ++i) {
          for (int64_t j = 0; j < g.kernel; ++j) {
            const int64_t h = oh * g.stride - g.pad + i;
            const int64_t w = ow * g.stride - g.pad + j;
            if (h < 0 || h >= g.in_h || w < 0 || w >= g.in_w) continue;
            const double v = x[(p * g.in_h + h) * g.in_w + w];
            if (arg < 0 || v > best) {
              best = v;
              arg = h * g.in_w + w;
            }
          }
        }
        y[(p * g.out_h + oh) * g.out_w + ow] = best;
        argmax[(p * g.out_h + oh) * g.out_w + ow] = arg;
      }
    }
  }
}

}  // namespace reference

}  // namespace hieraedge::kernels
