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

#include "hieraedge/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hieraedge/errors.hpp"

namespace hieraedge {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ConfigError("checkpoint: truncated while reading " + what);
  }
  return v;
}

void put_entry(std::ostream& out, const std::string& name, const Tensor& t) {
  put<uint32_t>(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<uint32_t>(out, static_cast<uint32_t>(t.rank()));
  for (int64_t d : t.shape()) put<uint64_t>(out, static_cast<uint64_t>(d));
  out.write(reinterpret_cast<const char*>(t.data().data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const nn::Module& model,
                     const ModelConfig& config, const nlohmann::json& meta,
                     const nn::NamedTensors& extras) {
  const nlohmann::json header = {{"model", to_json(config)}, {"meta", meta}};
  const std::string text = header.dump();
  const nn::NamedTensors params = model.named_parameters();
  const nn::NamedTensors buffers = model.named_buffers();

  // Write to a sibling file and rename so a crash never leaves a torn checkpoint.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path.string() + "'");
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put<uint32_t>(out, kCheckpointVersion);
    put<uint32_t>(out, static_cast<uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    put<uint64_t>(out, params.size() + buffers.size() + extras.size());
    for (const auto* group : {&params, &buffers, &extras}) {
      for (const auto& [name, t] : *group) put_entry(out, name, t);
    }
    if (!out) throw std::runtime_error("failed writing checkpoint '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint '" + path.string() + "'");
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw ConfigError("checkpoint: '" + path.string() + "' has no HENCKPT1 magic");
  }
  const auto version = get<uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto header_len = get<uint32_t>(in, "header length");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), header_len)) throw ConfigError("checkpoint: truncated header");
  Checkpoint ck;
  try {
    ck.header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: bad header: ") + e.what());
  }
  ck.config = model_config_from_json(ck.header.at("model"));
  const auto count = get<uint64_t>(in, "entry count");
  for (uint64_t e = 0; e < count; ++e) {
    const auto name_len = get<uint32_t>(in, "entry name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw ConfigError("checkpoint: truncated entry name");
    const auto ndim = get<uint32_t>(in, name + " rank");
    Shape shape;
    for (uint32_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int64_t>(get<uint64_t>(in, name + " dims")));
    std::vector<double> data(shape_numel(shape));
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)))) {
      throw ConfigError("checkpoint: truncated data of '" + name + "'");
    }
    ck.entries.emplace(name, Tensor::from(shape, std::move(data)));
  }
  return ck;
}

void restore_module(nn::Module& model, const Checkpoint& ck) {
  auto copy_into = [&](const nn::NamedTensors& targets) {
    for (const auto& [name, t] : targets) {
      const auto it = ck.entries.find(name);
      if (it == ck.entries.end()) throw ConfigError("checkpoint: missing entry '" + name + "'");
      if (it->second.shape() != t.shape()) {
        throw ConfigError("checkpoint: entry '" + name + "' has shape " +
                          shape_str(it->second.shape()) + ", model expects " + shape_str(t.shape()));
      }
      Tensor dst = t;
      std::copy(it->second.data().begin(), it->second.data().end(), dst.data().begin());
    }
  };
  copy_into(model.named_parameters());
  copy_into(model.named_buffers());
}

}  // namespace hieraedge
