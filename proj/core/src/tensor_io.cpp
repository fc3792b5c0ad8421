/*
 * Copyright 2026 The usbf Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "usbf/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "usbf/errors.hpp"

namespace usbf {
namespace {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  template <class T>
  T get(const char* what) {
    T v{};
    is_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (is_.gcount() != static_cast<std::streamsize>(sizeof(T)))
      throw FormatError(std::string("truncated file while reading ") + what, offset_ + is_.gcount());
    offset_ += sizeof(T);
    return to_little(v);
  }

  void floats(std::vector<float>& out, std::uint64_t n) {
    constexpr std::uint64_t chunk = 1 << 16;
    out.clear();
    while (out.size() < n) {
      const std::uint64_t take = std::min<std::uint64_t>(chunk, n - out.size());
      const std::size_t at = out.size();
      out.resize(at + take);
      is_.read(reinterpret_cast<char*>(out.data() + at), static_cast<std::streamsize>(take * 4));
      const auto got = static_cast<std::uint64_t>(is_.gcount());
      if (got != take * 4) throw FormatError("truncated tensor payload", offset_ + got);
      offset_ += got;
    }
    if constexpr (std::endian::native != std::endian::little)
      for (float& f : out) f = to_little(f);
  }

  std::uint64_t offset() const { return offset_; }

 private:
  std::istream& is_;
  std::uint64_t offset_ = 0;
};

void write_body(std::ostream& os, const Tensor& t) {
  if (t.element_count() != t.data.size())
    throw InvalidArgument("tensor dims do not match its element count");
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put<std::uint64_t>(os, d);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  } else {
    for (float f : t.data) put<float>(os, f);
  }
}

Tensor read_body(Reader& r) {
  Tensor t;
  const auto ndim = r.get<std::uint32_t>("ndim");
  if (ndim > 16) throw FormatError("implausible tensor rank " + std::to_string(ndim), r.offset() - 4);
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    const auto d = r.get<std::uint64_t>("dimension");
    if (d != 0 && count > (std::uint64_t{1} << 40) / d)
      throw FormatError("tensor too large", r.offset() - 8);
    count *= d;
    t.dims.push_back(d);
  }
  r.floats(t.data, count);
  return t;
}

void write_header(std::ostream& os) {
  os.write(kTensorMagic, 4);
  put<std::uint32_t>(os, kTensorVersion);
}

void read_header(Reader& r) {
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.get<std::uint8_t>("magic"));
  if (std::memcmp(magic, kTensorMagic, 4) != 0) throw FormatError("bad magic, not a USBF container", 0);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kTensorVersion) throw UnsupportedVersion(version, 4);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  return is;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

Tensor::Tensor(std::vector<std::uint64_t> d, std::vector<float> v) : dims(std::move(d)), data(std::move(v)) {
  if (element_count() != data.size()) throw InvalidArgument("tensor dims do not match data size");
}

std::uint64_t Tensor::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_header(os);
  write_body(os, t);
}

Tensor read_tensor(std::istream& is) {
  Reader r(is);
  read_header(r);
  return read_body(r);
}

void write_records(std::ostream& os, const std::vector<Tensor>& records) {
  write_header(os);
  put<std::uint64_t>(os, records.size());
  for (const auto& t : records) write_body(os, t);
}

std::vector<Tensor> read_records(std::istream& is) {
  Reader r(is);
  read_header(r);
  const auto count = r.get<std::uint64_t>("record count");
  std::vector<Tensor> out;
  for (std::uint64_t i = 0; i < count; ++i) out.push_back(read_body(r));
  return out;
}

void write_tensor_file(const std::filesystem::path& path, const Tensor& t) {
  auto os = open_out(path);
  write_tensor(os, t);
  finish(os, path);
}

Tensor read_tensor_file(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_tensor(is);
}

void write_records_file(const std::filesystem::path& path, const std::vector<Tensor>& records) {
  auto os = open_out(path);
  write_records(os, records);
  finish(os, path);
}

std::vector<Tensor> read_records_file(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_records(is);
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<double>& pixels) {
  if (pixels.size() != width * height) throw InvalidArgument("pixel count does not match PGM size");
  auto os = open_out(path);
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::vector<unsigned char> bytes(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i)
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(pixels[i], 0.0, 1.0) * 255.0));
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  finish(os, path);
}

}  // namespace usbf
