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
#include <cstring>
#include <vector>

#include <omp.h>

#include "hieraedge/kernels/kernels.hpp"

namespace hieraedge::kernels {

namespace {

constexpr int64_t kMR = 4;
constexpr int64_t kNR = 16;
constexpr int64_t kKC = 256;
constexpr int64_t kMC = 128;
constexpr int64_t kNC = 2048;

inline double elem(const double* p, int64_t ld, bool trans, int64_t r, int64_t c) {
  return trans ? p[c * ld + r] : p[r * ld + c];
}

// A block rows [i0, i0+mc) x cols [p0, p0+kc) into MR-row panels, k-major.
void pack_a(const double* a, int64_t lda, bool trans, int64_t i0, int64_t p0, int64_t mc,
            int64_t kc, double* out) {
  for (int64_t ip = 0; ip < mc; ip += kMR) {
    const int64_t rows = std::min(kMR, mc - ip);
    for (int64_t p = 0; p < kc; ++p) {
      for (int64_t r = 0; r < kMR; ++r) {
        *out++ = r < rows ? elem(a, lda, trans, i0 + ip + r, p0 + p) : 0.0;
      }
    }
  }
}

void pack_b(const double* b, int64_t ldb, bool trans, int64_t p0, int64_t j0, int64_t kc,
            int64_t nc, double* out) {
  for (int64_t jp = 0; jp < nc; jp += kNR) {
    const int64_t cols = std::min(kNR, nc - jp);
    for (int64_t p = 0; p < kc; ++p) {
      if (!trans && cols == kNR) {
        std::memcpy(out, b + (p0 + p) * ldb + j0 + jp, kNR * sizeof(double));
        out += kNR;
        continue;
      }
      for (int64_t c = 0; c < kNR; ++c) {
        *out++ = c < cols ? elem(b, ldb, trans, p0 + p, j0 + jp + c) : 0.0;
      }
    }
  }
}

inline void micro_kernel(int64_t kc, const double* __restrict a, const double* __restrict b,
                         double* __restrict c, int64_t ldc, int64_t rows, int64_t cols) {
  double acc[kMR][kNR] = {};
  for (int64_t p = 0; p < kc; ++p) {
    const double* bp = b + p * kNR;
    const double* ap = a + p * kMR;
    for (int64_t r = 0; r < kMR; ++r) {
      const double ar = ap[r];
#pragma omp simd
      for (int64_t j = 0; j < kNR; ++j) acc[r][j] += ar * bp[j];
    }
  }
  for (int64_t r = 0; r < rows; ++r) {
    double* cr = c + r * ldc;
    for (int64_t j = 0; j < cols; ++j) cr[j] += acc[r][j];
  }
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, const double* a,
          int64_t lda, const double* b, int64_t ldb, double* c, int64_t ldc, bool accumulate) {
  if (m <= 0 || n <= 0) return;
  if (!accumulate) {
    for (int64_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0);
  }
  if (k <= 0) return;

  const int64_t nc_max = std::min(kNC, (n + kNR - 1) / kNR * kNR);
  std::vector<double> packed_b(kKC * nc_max);
  for (int64_t j0 = 0; j0 < n; j0 += kNC) {
    const int64_t nc = std::min(kNC, n - j0);
    for (int64_t p0 = 0; p0 < k; p0 += kKC) {
      const int64_t kc = std::min(kKC, k - p0);
      pack_b(b, ldb, trans_b, p0, j0, kc, nc, packed_b.data());
      const int64_t blocks = (m + kMC - 1) / kMC;
#pragma omp parallel
      {
        std::vector<double> packed_a(kMC * kKC);
#pragma omp for schedule(static)
        for (int64_t blk = 0; blk < blocks; ++blk) {
          const int64_t i0 = blk * kMC;
          const int64_t mc = std::min(kMC, m - i0);
          pack_a(a, lda, trans_a, i0, p0, mc, kc, packed_a.data());
          for (int64_t jp = 0; jp < nc; jp += kNR) {
            const int64_t cols = std::min(kNR, nc - jp);
            for (int64_t ip = 0; ip < mc; ip += kMR) {
              const int64_t rows = std::min(kMR, mc - ip);
              micro_kernel(kc, packed_a.data() + ip * kc, packed_b.data() + jp * kc,
                           c + (i0 + ip) * ldc + j0 + jp, ldc, rows, cols);
            }
          }
        }
      }
    }
  }
}

namespace reference {

void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, const double* a,
          int64_t lda, const double* b, int64_t ldb, double* c, int64_t ldc, bool accumulate) {
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (int64_t p = 0; p < k; ++p) {
        s += elem(a, lda, trans_a, i, p) * elem(b, ldb, trans_b, p, j);
      }
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + s : s;
    }
  }
}

}  // namespace reference

}  // namespace hieraedge::kernels
