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

#include "hieraedge/kernels/dft.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace hieraedge::kernels {

namespace {

struct Twiddles {
  std::vector<double> cos, sin;  // angle 2*pi*m/n for m in [0, n)
  explicit Twiddles(int64_t n) : cos(n), sin(n) {
    for (int64_t m = 0; m < n; ++m) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
      cos[m] = std::cos(a);
      sin[m] = std::sin(a);
    }
  }
};

// out[k][l] = sum_r in[r][l] * exp(sign * i * 2pi k r / n) over a column stack
// of `cols` complex columns (interleaved). Overwrites out.
void complex_dft_rows(int64_t n, int64_t cols, const double* in, double* out, int sign,
                      const Twiddles& tw) {
  for (int64_t k = 0; k < n; ++k) {
    double* o = out + k * cols * 2;
    for (int64_t l = 0; l < cols * 2; ++l) o[l] = 0.0;
    for (int64_t r = 0; r < n; ++r) {
      const int64_t m = (k * r) % n;
      const double c = tw.cos[m];
      const double s = sign * tw.sin[m];
      const double* src = in + r * cols * 2;
      for (int64_t l = 0; l < cols; ++l) {
        const double re = src[2 * l], im = src[2 * l + 1];
        o[2 * l] += re * c - im * s;
        o[2 * l + 1] += re * s + im * c;
      }
    }
  }
}

// Weight of half-spectrum column l when expanded to the full spectrum.
inline double column_weight(int64_t l, int64_t w) {
  if (l == 0) return 1.0;
  if (w % 2 == 0 && l == w / 2) return 1.0;
  return 2.0;
}

}  // namespace

void rfft2(int64_t planes, int64_t h, int64_t w, const double* x, double* spec) {
  const int64_t wh = half_width(w);
  const Twiddles tw_w(w), tw_h(h);
#pragma omp parallel
  {
    std::vector<double> rows(h * wh * 2);
#pragma omp for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
      const double* xp = x + p * h * w;
      for (int64_t r = 0; r < h; ++r) {
        for (int64_t l = 0; l < wh; ++l) {
          double re = 0.0, im = 0.0;
          for (int64_t c = 0; c < w; ++c) {
            const int64_t m = (l * c) % w;
            re += xp[r * w + c] * tw_w.cos[m];
            im -= xp[r * w + c] * tw_w.sin[m];
          }
          rows[(r * wh + l) * 2] = re;
          rows[(r * wh + l) * 2 + 1] = im;
        }
      }
      complex_dft_rows(h, wh, rows.data(), spec + p * h * wh * 2, -1, tw_h);
    }
  }
}

void irfft2(int64_t planes, int64_t h, int64_t w, const double* spec, double* x) {
  const int64_t wh = half_width(w);
  const Twiddles tw_w(w), tw_h(h);
  const double scale = 1.0 / static_cast<double>(h * w);
#pragma omp parallel
  {
    std::vector<double> rows(h * wh * 2);
#pragma omp for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
      complex_dft_rows(h, wh, spec + p * h * wh * 2, rows.data(), +1, tw_h);
      double* xp = x + p * h * w;
      for (int64_t r = 0; r < h; ++r) {
        for (int64_t c = 0; c < w; ++c) {
          double s = 0.0;
          for (int64_t l = 0; l < wh; ++l) {
            const int64_t m = (l * c) % w;
            const double re = rows[(r * wh + l) * 2], im = rows[(r * wh + l) * 2 + 1];
            s += column_weight(l, w) * (re * tw_w.cos[m] - im * tw_w.sin[m]);
          }
          xp[r * w + c] = s * scale;
        }
      }
    }
  }
}

void rfft2_adjoint(int64_t planes, int64_t h, int64_t w, const double* grad_spec,
                   double* grad_x) {
  const int64_t wh = half_width(w);
  const Twiddles tw_w(w), tw_h(h);
#pragma omp parallel
  {
    std::vector<double> rows(h * wh * 2);
#pragma omp for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
      complex_dft_rows(h, wh, grad_spec + p * h * wh * 2, rows.data(), +1, tw_h);
      double* gp = grad_x + p * h * w;
      for (int64_t r = 0; r < h; ++r) {
        for (int64_t c = 0; c < w; ++c) {
          double s = 0.0;
          for (int64_t l = 0; l < wh; ++l) {
            const int64_t m = (l * c) % w;
            s += rows[(r * wh + l) * 2] * tw_w.cos[m] - rows[(r * wh + l) * 2 + 1] * tw_w.sin[m];
          }
          gp[r * w + c] += s;
        }
      }
    }
  }
}

void irfft2_adjoint(int64_t planes, int64_t h, int64_t w, const double* grad_x,
                    double* grad_spec) {
  const int64_t wh = half_width(w);
  const Twiddles tw_w(w), tw_h(h);
  const double scale = 1.0 / static_cast<double>(h * w);
#pragma omp parallel
  {
    std::vector<double> rows(h * wh * 2), out(h * wh * 2);
#pragma omp for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
      const double* gp = grad_x + p * h * w;
      for (int64_t r = 0; r < h; ++r) {
        for (int64_t l = 0; l < wh; ++l) {
          double re = 0.0, im = 0.0;
          for (int64_t c = 0; c < w; ++c) {
            const int64_t m = (l * c) % w;
            re += gp[r * w + c] * tw_w.cos[m];
            im -= gp[r * w + c] * tw_w.sin[m];
          }
          const double k = column_weight(l, w) * scale;
          rows[(r * wh + l) * 2] = re * k;
          rows[(r * wh + l) * 2 + 1] = im * k;
        }
      }
      complex_dft_rows(h, wh, rows.data(), out.data(), -1, tw_h);
      double* sp = grad_spec + p * h * wh * 2;
      for (int64_t q = 0; q < h * wh * 2; ++q) sp[q] += out[q];
    }
  }
}

namespace reference {

void rfft2(int64_t planes, int64_t h, int64_t w, const double* x, double* spec) {
  const int64_t wh = half_width(w);
  for (int64_t p = 0; p < planes; ++p) {
    for (int64_t k = 0; k < h; ++k) {
      for (int64_t l = 0; l < wh; ++l) {
        double re = 0.0, im = 0.0;
        for (int64_t r = 0; r < h; ++r) {
          for (int64_t c = 0; c < w; ++c) {
            const double a = -2.0 * std::numbers::pi *
                             (static_cast<double>(k * r) / h + static_cast<double>(l * c) / w);
            re += x[(p * h + r) * w + c] * std::cos(a);
            im += x[(p * h + r) * w + c] * std::sin(a);
          }
        }
        spec[((p * h + k) * wh + l) * 2] = re;
        spec[((p * h + k) * wh + l) * 2 + 1] = im;
      }
    }
  }
}

void irfft2(int64_t planes, int64_t h, int64_t w, const double* spec, double* x) {
  const int64_t wh = half_width(w);
  // Expand to the full spectrum by conjugate symmetry, then invert directly.
  for (int64_t p = 0; p < planes; ++p) {
    for (int64_t r = 0; r < h; ++r) {
      for (int64_t c = 0; c < w; ++c) {
        double s = 0.0;
        for (int64_t k = 0; k < h; ++k) {
          for (int64_t l = 0; l < w; ++l) {
            double re, im;
            if (l < wh) {
              re = spec[((p * h + k) * wh + l) * 2];
              im = spec[((p * h + k) * wh + l) * 2 + 1];
            } else {
              const int64_t kk = (h - k) % h, ll = w - l;
              re = spec[((p * h + kk) * wh + ll) * 2];
              im = -spec[((p * h + kk) * wh + ll) * 2 + 1];
            }
            const double a = 2.0 * std::numbers::pi *
                             (static_cast<double>(k * r) / h + static_cast<double>(l * c) / w);
            s += re * std::cos(a) - im * std::sin(a);
          }
        }
        x[(p * h + r) * w + c] = s / static_cast<double>(h * w);
      }
    }
  }
}

}  // namespace reference

}  // namespace hieraedge::kernels
