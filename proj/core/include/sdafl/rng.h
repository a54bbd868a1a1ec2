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

#ifndef SDAFL_RNG_H_
#define SDAFL_RNG_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/random/mersenne_twister.hpp>

namespace sdafl {

// Derives an independent 64-bit seed from a master seed, a stream name and
// optional integer coordinates (round, client id, ...). The mapping is pure,
// so the stream a component sees does not depend on call order elsewhere.
uint64_t DeriveSeed(uint64_t master_seed, std::string_view stream,
                    std::initializer_list<uint64_t> coords = {});

// Seeded random stream. Every distribution used here comes from boost::random,
// whose algorithms are fixed across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  static Rng Named(uint64_t master_seed, std::string_view stream,
                   std::initializer_list<uint64_t> coords = {}) {
    return Rng(DeriveSeed(master_seed, stream, coords));
  }

  // Uniform on [0, 1).
  double Uniform();
  double Normal();
  double Normal(double mean, double stddev);
  double Beta(double a, double b);
  // Uniform integer in [0, n).
  std::size_t Index(std::size_t n);

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[Index(i)]);
    }
  }

  // Returns the identity permutation of [0, n) shuffled.
  std::vector<std::size_t> Permutation(std::size_t n);

  uint64_t NextU64() { return engine_(); }

 private:
  boost::random::mt19937_64 engine_;
};

}  // namespace sdafl

#endif  // SDAFL_RNG_H_
