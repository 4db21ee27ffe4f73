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

#pragma once

#include <stdexcept>
#include <string>

namespace hieraedge {

// Shapes that do not line up. Messages name the offending axes.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse: backward on a non-scalar, an indivisible partition, bad flags.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A ModelConfig / RunConfig that violates one of its constraints.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training diverged (non-finite loss). A diagnostic dump accompanies it.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hieraedge
