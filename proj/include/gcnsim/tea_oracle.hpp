#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gcnsim/energy.hpp"

namespace gcnsim {

// Exhaustive grid search for the TEA objective. Every slot but the last takes
// a multiple of grid_step; the last slot takes whatever keeps the allocation
// waste-free. Ties keep the lexicographically smallest allocation.
inline TeaResult tea_oracle(std::span<const double> generation, std::span<const double> demand, double initial,
                            std::optional<double> capacity, double grid_step) {
  if (!(grid_step > 0)) throw std::invalid_argument("grid_step must be > 0");
  detail::check_tea_inputs(generation, demand, initial, capacity);
  const std::size_t T = generation.size();
  if (T > 4) throw TooLarge("tea_oracle handles at most 4 slots");

  TeaBounds bounds(generation, initial, capacity);
  const auto steps = static_cast<std::size_t>(std::floor(bounds.total / grid_step + 1e-9));
  if (std::pow(static_cast<double>(steps + 1), static_cast<double>(T - 1)) > 1e7) {
    throw TooLarge("tea_oracle grid exceeds 1e7 points");
  }

  TeaResult result;
  result.starved = detail::starved_slots(demand, bounds);
  if (std::none_of(demand.begin(), demand.end(), [](double d) { return d > 0; })) {
    return tea_allocate(generation, demand, initial, capacity);
  }
  if (bounds.total <= 0) return tea_allocate(generation, demand, initial, capacity);

  constexpr double kTol = 1e-9;
  std::vector<double> alloc(T, 0.0);
  std::vector<double> etas;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_alloc;

  auto evaluate = [&] {
    etas.clear();
    for (std::size_t t = 0; t < T; ++t) {
      if (result.starved[t]) continue;
      if (demand[t] == 0) {
        etas.push_back(0.0);
      } else if (alloc[t] <= 0) {
        return;
      } else {
        etas.push_back(demand[t] / alloc[t]);
      }
    }
    const double sigma = etas.empty() ? 0.0 : population_std(etas);
    if (sigma < best) {
      best = sigma;
      best_alloc = alloc;
    }
  };

  auto recurse = [&](auto&& self, std::size_t t, double cum) -> void {
    if (t + 1 == T) {
      const double last = bounds.total - cum;
      if (last < -kTol) return;
      alloc[t] = std::max(0.0, last);
      evaluate();
      return;
    }
    for (std::size_t k = 0;; ++k) {
      const double e = static_cast<double>(k) * grid_step;
      const double c = cum + e;
      if (c > bounds.upper[t] + kTol) break;
      if (c < bounds.lower[t] - kTol) continue;
      alloc[t] = e;
      self(self, t + 1, c);
    }
  };
  recurse(recurse, 0, 0.0);

  if (best_alloc.empty()) throw std::logic_error("tea_oracle found no feasible grid point");
  result.allocation = std::move(best_alloc);
  result.sigma = best;
  return result;
}

}  // namespace gcnsim
