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

#include "sdafl/rng.h"

#include <numeric>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace sdafl {
namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

uint64_t DeriveSeed(uint64_t master_seed, std::string_view stream,
                    std::initializer_list<uint64_t> coords) {
  uint64_t h = SplitMix64(master_seed ^ SplitMix64(Fnv1a(stream)));
  for (uint64_t c : coords) h = SplitMix64(h ^ SplitMix64(c + 0x51ed27ULL));
  return h;
}

double Rng::Uniform() {
  return boost::random::uniform_01<double>()(engine_);
}

double Rng::Normal() {
  return boost::random::normal_distribution<double>(0.0, 1.0)(engine_);
}

double Rng::Normal(double mean, double stddev) {
  return boost::random::normal_distribution<double>(mean, stddev)(engine_);
}

double Rng::Beta(double a, double b) {
  return boost::random::beta_distribution<double>(a, b)(engine_);
}

std::size_t Rng::Index(std::size_t n) {
  return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(
      engine_);
}

std::vector<std::size_t> Rng::Permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  Shuffle(p);
  return p;
}

}  // namespace sdafl
