// Copyright 2026 The CTA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cta/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cta/error.hpp"
#include "json.hpp"

namespace cta {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'C', 'T', 'A', 'B'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  const char* take(std::size_t n, const char* what) {
    require(n <= in_.size() - pos_, ErrorCode::kFormat,
            std::string("checkpoint truncated while reading ") + what);
    const char* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t le(int n, const char* what) {
    const auto* p = reinterpret_cast<const unsigned char*>(take(static_cast<std::size_t>(n), what));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(le(1, what)); }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(le(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::uint64_t u64(const char* what) { return le(8, what); }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& checkpoint, std::uint16_t version) {
  const auto& params = checkpoint.model.params;
  json tensors = json::array();
  for (const auto& e : params.entries())
    tensors.push_back({{"name", e.name}, {"role", to_string(e.role)}});
  const json header{{"spec", json::parse(checkpoint.model.spec.to_json())},
                    {"metadata",
                     {{"seed", checkpoint.metadata.seed},
                      {"epochs", checkpoint.metadata.epochs},
                      {"final_val_accuracy", checkpoint.metadata.final_val_accuracy}}},
                    {"tensor_count", params.size()},
                    {"tensors", std::move(tensors)}};
  const std::string text = header.dump();

  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u16(version);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text.data(), text.size());
  for (const auto& e : params.entries()) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.u8(static_cast<std::uint8_t>(e.value.rank()));
    for (auto d : e.value.shape()) w.u64(d);
    for (float v : e.value.values()) w.f32(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  require(std::memcmp(r.take(4, "magic"), kMagic, 4) == 0, ErrorCode::kFormat,
          "not a checkpoint (bad magic)");
  const std::uint16_t version = r.u16("version");
  require(version == kCheckpointVersion, ErrorCode::kVersionMismatch,
          "checkpoint has format version " + std::to_string(version) +
              ", this build reads version " + std::to_string(kCheckpointVersion));
  const std::uint32_t header_len = r.u32("header length");
  const std::string header_text(r.take(header_len, "header"), header_len);

  Checkpoint cp;
  std::size_t tensor_count = 0;
  try {
    const json header = json::parse(header_text);
    cp.model.spec = ModelSpec::from_json(header.at("spec").dump());
    const auto& meta = header.at("metadata");
    cp.metadata.seed = meta.at("seed").get<std::uint64_t>();
    cp.metadata.epochs = meta.at("epochs").get<std::uint64_t>();
    cp.metadata.final_val_accuracy = meta.at("final_val_accuracy").get<double>();
    tensor_count = header.at("tensor_count").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint header: ") + e.what());
  }

  // The spec determines every expected name, role and shape.
  const Model<float> layout = build_model<float>(cp.model.spec, 0);
  require(tensor_count == layout.params.size(), ErrorCode::kFormat,
          "checkpoint lists " + std::to_string(tensor_count) + " tensors, model needs " +
              std::to_string(layout.params.size()));
  for (const auto& expected : layout.params.entries()) {
    const std::uint32_t name_len = r.u32("tensor name length");
    const std::string name(r.take(name_len, "tensor name"), name_len);
    require(name == expected.name, ErrorCode::kFormat,
            "expected tensor '" + expected.name + "', found '" + name + "'");
    const std::uint8_t rank = r.u8("tensor rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.u64("tensor dims");
    require(shape == expected.value.shape(), ErrorCode::kFormat,
            "tensor '" + name + "' has shape " + shape_string(shape) + ", model needs " +
                shape_string(expected.value.shape()));
    std::vector<float> values(shape_numel(shape));
    for (auto& v : values) v = std::bit_cast<float>(r.u32("tensor values"));
    cp.model.params.add(name, expected.role, Tensor<float>(shape, std::move(values)));
  }
  require(r.done(), ErrorCode::kFormat, "trailing bytes after the last tensor");
  return cp;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kNotFound, "cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_checkpoint(buf.str());
  } catch (const Error& e) {
    const std::string message = e.what();
    const std::size_t prefix = to_string(e.code()).size() + 2;
    throw Error(e.code(), path.string() + ": " + message.substr(prefix));
  }
}

}  // namespace cta
