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

#include "tacmap/io/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace tacmap::io {
namespace {

constexpr char kTensorMagic[4] = {'T', 'V', 'T', '1'};
constexpr char kCheckpointMagic[4] = {'T', 'V', 'M', '1'};

class Writer {
 public:
  void Bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void U8(std::uint8_t v) { out_.push_back(v); }
  void U16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void F32s(std::span<const float> values) {
    out_.reserve(out_.size() + 4 * values.size());
    for (float f : values) U32(std::bit_cast<std::uint32_t>(f));
  }
  std::vector<std::uint8_t> Take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void Need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(FormatError::Kind::kTruncated, std::string("truncated file while reading ") + what);
    }
  }
  std::uint8_t U8(const char* what) {
    Need(1, what);
    return bytes_[pos_++];
  }
  std::uint16_t U16(const char* what) {
    Need(2, what);
    std::uint16_t v = bytes_[pos_] | (std::uint16_t(bytes_[pos_ + 1]) << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t U32(const char* what) {
    Need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string String(std::size_t n, const char* what) {
    Need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void F32s(std::span<float> out, const char* what) {
    if (out.size() > (std::numeric_limits<std::size_t>::max)() / 4) {
      throw FormatError(FormatError::Kind::kBadHeader, "payload size overflows");
    }
    Need(4 * out.size(), what);
    for (float& f : out) f = std::bit_cast<float>(U32(what));
  }
  void Magic(const char (&expected)[4]) {
    Need(4, "magic");
    const std::uint8_t* m = bytes_.data() + pos_;
    if (std::memcmp(m, expected, 3) != 0) {
      throw FormatError(FormatError::Kind::kBadMagic, "bad magic bytes; expected " + std::string(expected, 4));
    }
    if (m[3] != static_cast<std::uint8_t>(expected[3])) {
      throw FormatError(FormatError::Kind::kBadVersion,
                        "unsupported format version '" + std::string(1, char(m[3])) + "'");
    }
    pos_ += 4;
  }
  void End() const {
    if (pos_ != bytes_.size()) {
      throw FormatError(FormatError::Kind::kTrailingBytes,
                        std::to_string(bytes_.size() - pos_) + " unexpected trailing bytes");
    }
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void WriteShape(Writer& w, const nn::Shape& shape) {
  if (shape.size() > 255) throw FormatError(FormatError::Kind::kBadHeader, "tensor rank exceeds 255");
  w.U8(static_cast<std::uint8_t>(shape.size()));
  for (std::size_t extent : shape) {
    if (extent > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError(FormatError::Kind::kBadHeader, "tensor extent exceeds u32");
    }
    w.U32(static_cast<std::uint32_t>(extent));
  }
}

nn::Tensor ReadShapedPayload(Reader& r) {
  const std::uint8_t ndim = r.U8("rank");
  if (ndim == 0) throw FormatError(FormatError::Kind::kBadHeader, "tensor rank must be >= 1");
  nn::Shape shape(ndim);
  for (auto& extent : shape) {
    extent = r.U32("extent");
    if (extent == 0) throw FormatError(FormatError::Kind::kBadHeader, "tensor extent of zero");
  }
  const std::size_t count = nn::NumElements(shape);
  r.Need(4 * count, "payload");
  std::vector<float> data(count);
  r.F32s(data, "payload");
  return nn::Tensor(std::move(shape), std::move(data));
}

}  // namespace

std::vector<std::uint8_t> EncodeTensor(const nn::Tensor& tensor) {
  Writer w;
  w.Bytes(kTensorMagic, 4);
  w.U8(kDtypeF32);
  WriteShape(w, tensor.shape());
  w.F32s(tensor.data());
  return w.Take();
}

nn::Tensor DecodeTensor(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.Magic(kTensorMagic);
  const std::uint8_t dtype = r.U8("dtype");
  if (dtype != kDtypeF32) {
    throw FormatError(FormatError::Kind::kBadDtype, "unsupported dtype code " + std::to_string(dtype));
  }
  nn::Tensor t = ReadShapedPayload(r);
  r.End();
  return t;
}

std::vector<std::uint8_t> EncodeCheckpoint(const NamedTensors& params) {
  Writer w;
  w.Bytes(kCheckpointMagic, 4);
  w.U32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError(FormatError::Kind::kBadHeader, "parameter name too long");
    }
    w.U16(static_cast<std::uint16_t>(name.size()));
    w.Bytes(name.data(), name.size());
    WriteShape(w, tensor.shape());
    w.F32s(tensor.data());
  }
  return w.Take();
}

NamedTensors DecodeCheckpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.Magic(kCheckpointMagic);
  const std::uint32_t count = r.U32("parameter count");
  NamedTensors params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = r.U16("name length");
    std::string name = r.String(len, "name");
    params.emplace_back(std::move(name), ReadShapedPayload(r));
  }
  r.End();
  return params;
}

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) throw MissingInputError("no such file: " + path.string());
    throw IoError("cannot open " + path.string());
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string ReadTextFile(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = ReadFileBytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  WriteFileBytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void SaveTensor(const std::filesystem::path& path, const nn::Tensor& tensor) {
  WriteFileBytes(path, EncodeTensor(tensor));
}

nn::Tensor LoadTensor(const std::filesystem::path& path) { return DecodeTensor(ReadFileBytes(path)); }

void SaveCheckpoint(const std::filesystem::path& path, const NamedTensors& params) {
  WriteFileBytes(path, EncodeCheckpoint(params));
}

NamedTensors LoadCheckpoint(const std::filesystem::path& path) { return DecodeCheckpoint(ReadFileBytes(path)); }

}  // namespace tacmap::io
