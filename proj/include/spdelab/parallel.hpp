// Copyright 2026 The spdelab Authors.
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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace spdelab {

/// Streaming mean/variance with an associative merge (Chan et al.).
class MomentAccumulator {
 public:
  void add(double x) noexcept {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }

  void merge(const MomentAccumulator& o) noexcept {
    if (o.count_ == 0) return;
    if (count_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(o.count_);
    const double n = na + nb;
    const double d = o.mean_ - mean_;
    mean_ += d * nb / n;
    m2_ += o.m2_ + d * d * na * nb / n;
    count_ += o.count_;
  }

  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance; 0 with fewer than two samples.
  double variance() const noexcept { return count_ > 1 ? std::max(0.0, m2_) / static_cast<double>(count_ - 1) : 0.0; }
  double stddev() const noexcept { return std::sqrt(variance()); }
  double stderr_of_mean() const noexcept {
    return count_ > 1 ? stddev() / std::sqrt(static_cast<double>(count_)) : 0.0;
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// A fixed-size bank of accumulators merged element-wise.
struct AccumulatorBank {
  std::vector<MomentAccumulator> items;

  AccumulatorBank() = default;
  explicit AccumulatorBank(std::size_t n) : items(n) {}

  void merge(const AccumulatorBank& o) {
    if (items.empty()) items.resize(o.items.size());
    for (std::size_t i = 0; i < items.size() && i < o.items.size(); ++i) items[i].merge(o.items[i]);
  }
};

struct ParallelOptions {
  /// 0 selects std::thread::hardware_concurrency().
  unsigned workers = 0;
  /// Merge per-unit results in unit order so reductions are bit-reproducible
  /// regardless of worker count; otherwise workers merge in completion order.
  bool deterministic = true;

  unsigned resolved_workers() const noexcept {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return workers == 0 ? hw : workers;
  }
};

/// Runs unit_fn(u) for u in [0, units) and merges the returned accumulators.
/// Acc must be default-constructible and provide merge(const Acc&).
template <class Acc, class UnitFn>
Acc reduce_units(std::size_t units, const ParallelOptions& opt, UnitFn unit_fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(opt.resolved_workers(), std::max<std::size_t>(units, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;

  if (opt.deterministic) {
    std::vector<std::optional<Acc>> per_unit(units);
    auto work = [&] {
      for (std::size_t u = next.fetch_add(1); u < units; u = next.fetch_add(1)) {
        try {
          per_unit[u].emplace(unit_fn(static_cast<std::uint64_t>(u)));
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    Acc total{};
    for (auto& a : per_unit) total.merge(*a);
    return total;
  }

  Acc total{};
  auto work = [&] {
    Acc local{};
    for (std::size_t u = next.fetch_add(1); u < units; u = next.fetch_add(1)) {
      try {
        local.merge(unit_fn(static_cast<std::uint64_t>(u)));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
    std::lock_guard lock(mu);
    total.merge(local);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return total;
}

}  // namespace spdelab
