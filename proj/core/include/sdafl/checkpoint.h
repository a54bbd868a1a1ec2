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

#ifndef SDAFL_CHECKPOINT_H_
#define SDAFL_CHECKPOINT_H_

#include <filesystem>
#include <istream>
#include <ostream>

#include "sdafl/param_vector.h"

namespace sdafl {

// Binary checkpoint: magic "SDAFLCK1", u32 segment count, then per segment
// (u32 name length, name bytes, u64 offset, u64 length), u64 value count and
// the values as IEEE-754 doubles. All integers and doubles little-endian.
void WriteCheckpoint(std::ostream& out, const ParamVector& params);
ParamVector ReadCheckpoint(std::istream& in);

void SaveCheckpoint(const std::filesystem::path& path,
                    const ParamVector& params);
ParamVector LoadCheckpoint(const std::filesystem::path& path);

}  // namespace sdafl

#endif  // SDAFL_CHECKPOINT_H_
