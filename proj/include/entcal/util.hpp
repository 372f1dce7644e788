// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace entcal {

// 64-bit FNV-1a, rendered as 16 hex digits by hash_hex().
std::uint64_t fnv1a(std::string_view data,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hash_hex(std::uint64_t h);

std::uint64_t splitmix64(std::uint64_t x);

// Per-task seed, independent of scheduling and of other tasks.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Fixed-point decimal rendering ("%.*f").
std::string format_fixed(double value, int decimals);

// Shortest "%.17g" rendering that round-trips an IEEE-754 double.
std::string format_roundtrip(double value);

// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = hardware
// concurrency). Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace entcal
