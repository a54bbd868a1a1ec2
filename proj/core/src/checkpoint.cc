// Copyright 2026 The sdafl-sim Authors
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

#include "sdafl/checkpoint.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "sdafl/errors.h"
#include "binary_io.h"

namespace sdafl {
namespace {

using internal::ReadLe;
using internal::WriteLe;

constexpr char kMagic[8] = {'S', 'D', 'A', 'F', 'L', 'C', 'K', '1'};
// Guards against reading garbage lengths from corrupt files.
constexpr uint64_t kMaxValues = uint64_t{1} << 32;

}  // namespace

void WriteCheckpoint(std::ostream& out, const ParamVector& params) {
  out.write(kMagic, sizeof kMagic);
  WriteLe<uint32_t>(out, static_cast<uint32_t>(params.layout().size()));
  for (const Segment& s : params.layout()) {
    WriteLe<uint32_t>(out, static_cast<uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    WriteLe<uint64_t>(out, s.offset);
    WriteLe<uint64_t>(out, s.length);
  }
  WriteLe<uint64_t>(out, params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    WriteLe<double>(out, params[i]);
  }
  if (!out) throw IoError("failed writing checkpoint");
}

ParamVector ReadCheckpoint(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) ||
      std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw IoError("not a checkpoint (bad magic)");
  }
  const auto count = ReadLe<uint32_t>(in);
  Layout layout;
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = ReadLe<uint32_t>(in);
    if (name_len > 4096) throw IoError("corrupt checkpoint segment name");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw IoError("truncated checkpoint");
    const auto offset = ReadLe<uint64_t>(in);
    const auto length = ReadLe<uint64_t>(in);
    layout.push_back({std::move(name), offset, length});
  }
  const auto n = ReadLe<uint64_t>(in);
  if (n > kMaxValues) throw IoError("corrupt checkpoint value count");
  Vector values(static_cast<Eigen::Index>(n));
  for (uint64_t i = 0; i < n; ++i) {
    values[static_cast<Eigen::Index>(i)] = ReadLe<double>(in);
  }
  try {
    return ParamVector(std::move(layout), std::move(values));
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("corrupt checkpoint layout: ") + e.what());
  }
}

void SaveCheckpoint(const std::filesystem::path& path,
                    const ParamVector& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  WriteCheckpoint(out, params);
}

ParamVector LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return ReadCheckpoint(in);
}

}  // namespace sdafl
