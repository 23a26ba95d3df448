// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The mccbf Authors
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

#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace mccbf {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed for (base, ids...). Used so that every trial and
// every event draw is reproducible regardless of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t s = mix64(base);
  for (auto id : ids) s = mix64(s ^ mix64(id + 0x632be59bd9b4e019ULL));
  return s;
}

// Uniform [0, 1) from a key, 53-bit resolution.
inline double unit_uniform(std::uint64_t key) {
  return static_cast<double>(mix64(key) >> 11) * 0x1.0p-53;
}

// Circularly-symmetric CN(0, 1).
inline std::complex<double> complex_normal(Rng& rng) {
  std::normal_distribution<double> nd(0.0, 0.70710678118654752440);
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

}  // namespace mccbf
