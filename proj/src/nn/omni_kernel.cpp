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

#include "hieraedge/nn/omni_kernel.hpp"

#include <cmath>
#include <string>

namespace hieraedge::nn {

Fca::Fca(int64_t channels, Rng& rng) : Module("FCA") {
  fc = register_module("fc", std::make_shared<Conv2d>(channels, channels, 1, 1, true, rng));
}

Tensor Fca::channel_weights(const Tensor& x) { return sigmoid(fc->forward(global_avg_pool(x))); }

Tensor Fca::forward(const Tensor& x) {
  return irfft2(spectral_gate(rfft2(x), channel_weights(x)));
}

Sca::Sca(int64_t channels, Rng& rng, int64_t reduction) : Module("SCA") {
  if (reduction < 1 || channels < reduction) {
    throw ConfigError("SCA: channels (" + std::to_string(channels) +
                      ") must be >= reduction (" + std::to_string(reduction) + ")");
  }
  const int64_t mid = channels / reduction;
  squeeze = register_module("squeeze", std::make_shared<Conv2d>(channels, mid, 1, 1, true, rng));
  excite = register_module("excite", std::make_shared<Conv2d>(mid, channels, 1, 1, true, rng));
}

Tensor Sca::excitation(const Tensor& x) {
  return sigmoid(excite->forward(relu(squeeze->forward(global_avg_pool(x)))));
}

Tensor Sca::forward(const Tensor& x) { return mul(x, excitation(x)); }

Fgm::Fgm(int64_t channels, int64_t h, int64_t w) : Module("FGM"), height(h), width(w) {
  gate_logits = register_parameter("gate", Tensor::zeros({1, channels, h, w / 2 + 1}));
}

Tensor Fgm::forward(const Tensor& x) {
  if (x.dim(1) != gate_logits.dim(1) || x.dim(2) != height || x.dim(3) != width) {
    throw DimensionError("FGM: input " + shape_str(x.shape()) + " does not match gates " +
                         shape_str(gate_logits.shape()) + " on axes C/H/W");
  }
  return irfft2(spectral_gate(rfft2(x), sigmoid(gate_logits)));
}

OmniKernel::OmniKernel(const OmniKernelParams& p, Rng& rng) : Module("OmniKernel"), params(p) {
  if (p.big_kernel % 2 == 0 || p.strip_kernel % 2 == 0 || p.big_kernel < 1 ||
      p.strip_kernel < 1) {
    throw ConfigError("OmniKernel: kernels must be odd, got " + std::to_string(p.big_kernel) +
                      " / " + std::to_string(p.strip_kernel));
  }
  const int64_t c = p.channels, k = p.big_kernel, s = p.strip_kernel;
  in_conv = register_module("in_conv", std::make_shared<Conv2d>(c, c, 1, 1, true, rng));
  dw_point = register_module(
      "dw_1x1", std::make_shared<Conv2d>(c, c, 1, 1, Conv2dOptions{1, 0, 0, c}, true, rng));
  dw_square = register_module(
      "dw_kxk", std::make_shared<Conv2d>(c, c, k, k, Conv2dOptions{1, k / 2, k / 2, c}, true, rng));
  dw_row = register_module(
      "dw_1xk", std::make_shared<Conv2d>(c, c, 1, s, Conv2dOptions{1, 0, s / 2, c}, true, rng));
  dw_col = register_module(
      "dw_kx1", std::make_shared<Conv2d>(c, c, s, 1, Conv2dOptions{1, s / 2, 0, c}, true, rng));
  fca = register_module("fca", std::make_shared<Fca>(c, rng));
  sca = register_module("sca", std::make_shared<Sca>(c, rng, std::min<int64_t>(4, c)));
  fgm = register_module("fgm", std::make_shared<Fgm>(c, p.height, p.width));
  out_conv = register_module("out_conv", std::make_shared<Conv2d>(c, c, 1, 1, true, rng));
}

Tensor OmniKernel::forward(const Tensor& x) {
  const Tensor u = silu(in_conv->forward(x));
  Tensor branches = add(add(dw_point->forward(u), dw_square->forward(u)),
                        add(dw_row->forward(u), dw_col->forward(u)));
  const Tensor local = sca->forward(fca->forward(branches));
  return out_conv->forward(add(local, fgm->forward(u)));
}

int64_t okm_share(const CspSplitSpec& spec) {
  return static_cast<int64_t>(std::lround(spec.e * static_cast<double>(spec.c1)));
}

CspOkm::CspOkm(int64_t in_channels, const CspSplitSpec& spec, const OmniKernelParams& p,
               Rng& rng)
    : Module("CSPOKM") {
  if (!(spec.e > 0.0 && spec.e < 1.0)) throw ConfigError("CSPOKM: e must lie in (0, 1)");
  okm_channels = okm_share(spec);
  skip_channels = spec.c1 - okm_channels;
  if (okm_channels < 1 || skip_channels < 1) {
    throw ConfigError("CSPOKM: split of C1=" + std::to_string(spec.c1) + " with e=" +
                      std::to_string(spec.e) + " leaves a share below one channel");
  }
  OmniKernelParams okm_params = p;
  okm_params.channels = okm_channels;
  cv_in = register_module("cv_in", std::make_shared<ConvBnAct>(in_channels, spec.c1, 1, 1, rng));
  okm = register_module("okm", std::make_shared<OmniKernel>(okm_params, rng));
  cv_out = register_module("cv_out", std::make_shared<ConvBnAct>(spec.c1, spec.c2, 1, 1, rng));
}

Tensor CspOkm::forward(const Tensor& x) {
  auto parts = split_channels(cv_in->forward(x), {okm_channels, skip_channels});
  Tensor fused = concat_channels({okm->forward(parts[0]), parts[1]});
  if (keep_intermediates) {
    last_skip = parts[1];
    last_fusion_input = fused;
  }
  return cv_out->forward(fused);
}

}  // namespace hieraedge::nn
