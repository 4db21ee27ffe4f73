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

// Real 2D discrete Fourier transforms over the last two axes of a stack of
// planes. Half-spectra hold H x (W/2+1) bins as interleaved (re, im).
//
// Convention: the forward transform is unnormalized, the inverse carries the
// 1/(H*W) factor. The inverse reads only the real part of the DC and (even W)
// Nyquist columns, matching the usual c2r behaviour.

#pragma once

#include <cstdint>

namespace hieraedge::kernels {

inline int64_t half_width(int64_t w) { return w / 2 + 1; }

void rfft2(int64_t planes, int64_t h, int64_t w, const double* x, double* spec);
void irfft2(int64_t planes, int64_t h, int64_t w, const double* spec, double* x);

// Adjoints (transposes) of the two real-linear maps above; both accumulate.
void rfft2_adjoint(int64_t planes, int64_t h, int64_t w, const double* grad_spec,
                   double* grad_x);
void irfft2_adjoint(int64_t planes, int64_t h, int64_t w, const double* grad_x,
                    double* grad_spec);

namespace reference {

// Direct O((HW)^2) transforms, one complex exponential per term.
void rfft2(int64_t planes, int64_t h, int64_t w, const double* x, double* spec);
void irfft2(int64_t planes, int64_t h, int64_t w, const double* spec, double* x);

}  // namespace reference

}  // namespace hieraedge::kernels
