#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "gcnsim/error.hpp"
#include "gcnsim/format.hpp"
#include "gcnsim/model.hpp"

namespace gcnsim {

// Floor on provisioned energy below which a slot with demand counts as
// unpowered.
inline constexpr double kMinProvision = 1e-9;

// Energy drainage ratio: demand over provisioned green energy.
inline double compute_edr(double demand, double provisioned) {
  if (demand < 0 || provisioned < 0) throw std::invalid_argument("compute_edr: negative energy");
  if (demand == 0.0) return 0.0;
  if (provisioned == 0.0) throw UnpoweredDemand("demand " + format_number(demand) + " with no green provisioning");
  return demand / provisioned;
}

// Population standard deviation (divides by N).
inline double population_std(std::span<const double> values) {
  if (values.empty()) throw EmptyVector("standard deviation of an empty vector");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

struct Settlement {
  double on_grid = 0.0;
  double residual_after = 0.0;
  double wasted = 0.0;  // surplus that did not fit in the battery
};

// Settles one slot: unused provisioned energy carries over as residual,
// shortfall beyond provisioning plus residual is drawn from the grid.
inline Settlement settle_slot(double residual_before, double demand, double provisioned,
                              double capacity = std::numeric_limits<double>::infinity()) {
  Settlement s;
  const double supply = residual_before + provisioned;
  if (demand > supply) {
    s.on_grid = demand - provisioned - residual_before;
    s.residual_after = 0.0;
  } else {
    const double surplus = supply - demand;
    s.residual_after = std::min(capacity, surplus);
    s.wasted = surplus - s.residual_after;
  }
  return s;
}

enum class TeaStatus {
  Ok,
  NoDemand,  // all demand zero: generation is provisioned as it arrives, sigma undefined
  NoEnergy,  // nothing to allocate: the GCS runs fully on-grid
};

struct TeaResult {
  std::vector<double> allocation;
  TeaStatus status = TeaStatus::Ok;
  // Slots with demand that no feasible allocation can power. They get zero
  // energy and are left out of the objective.
  std::vector<bool> starved;
  std::optional<double> sigma;
};

// Cumulative feasibility region of a TEA instance: for every prefix t,
// lower[t] <= E_0 + ... + E_t <= upper[t], with equality at the last slot.
struct TeaBounds {
  std::vector<double> upper;
  std::vector<double> lower;
  double total = 0.0;

  TeaBounds(std::span<const double> generation, double initial, std::optional<double> capacity) {
    double acc = initial;
    for (std::size_t t = 0; t < generation.size(); ++t) {
      acc += generation[t];
      upper.push_back(acc);
      lower.push_back(capacity ? std::max(0.0, acc - *capacity) : 0.0);
    }
    total = acc;
    if (!lower.empty()) lower.back() = total;
  }

  // Most energy slot t can ever receive.
  double slot_headroom(std::size_t t) const {
    const double before = t == 0 ? 0.0 : lower[t - 1];
    return upper[t] - before;
  }
};

namespace detail {

inline void check_tea_inputs(std::span<const double> generation, std::span<const double> demand, double initial,
                             std::optional<double> capacity) {
  if (generation.empty()) throw std::invalid_argument("TEA needs T >= 1");
  if (generation.size() != demand.size()) throw std::invalid_argument("generation and demand traces differ in length");
  auto bad = [](double v) { return !(v >= 0) || std::isinf(v); };
  if (bad(initial) || std::any_of(generation.begin(), generation.end(), bad) ||
      std::any_of(demand.begin(), demand.end(), bad)) {
    throw std::invalid_argument("TEA inputs must be finite and non-negative");
  }
  if (capacity && (*capacity < 0 || initial > *capacity)) throw std::invalid_argument("battery_init exceeds capacity");
}

inline std::vector<bool> starved_slots(std::span<const double> demand, const TeaBounds& bounds) {
  std::vector<bool> out(demand.size(), false);
  for (std::size_t t = 0; t < demand.size(); ++t) out[t] = demand[t] > 0 && bounds.slot_headroom(t) <= 0;
  return out;
}

// Sigma of the EDR vector over the non-starved slots; +inf when a powered
// slot with demand has no energy.
inline double tea_objective(std::span<const double> alloc, std::span<const double> demand,
                            const std::vector<bool>& starved) {
  std::vector<double> etas;
  etas.reserve(alloc.size());
  for (std::size_t t = 0; t < alloc.size(); ++t) {
    if (starved[t]) continue;
    if (demand[t] == 0.0) {
      etas.push_back(0.0);
    } else if (alloc[t] <= 0.0) {
      return std::numeric_limits<double>::infinity();
    } else {
      etas.push_back(demand[t] / alloc[t]);
    }
  }
  if (etas.empty()) return 0.0;
  return population_std(etas);
}

inline std::vector<double> from_cumulative(const std::vector<double>& cum) {
  std::vector<double> e(cum.size());
  for (std::size_t t = 0; t < cum.size(); ++t) e[t] = cum[t] - (t == 0 ? 0.0 : cum[t - 1]);
  return e;
}

inline std::vector<double> to_cumulative(std::span<const double> alloc) {
  std::vector<double> cum(alloc.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < alloc.size(); ++t) cum[t] = acc += alloc[t];
  return cum;
}

// Projects an allocation into the bounds by clamping its cumulative curve.
inline std::vector<double> clamp_to_bounds(std::span<const double> alloc, const TeaBounds& b) {
  auto cum = to_cumulative(alloc);
  double prev = 0.0;
  for (std::size_t t = 0; t < cum.size(); ++t) {
    cum[t] = std::clamp(cum[t], std::max(prev, b.lower[t]), b.upper[t]);
    prev = cum[t];
  }
  cum.back() = b.total;
  return from_cumulative(cum);
}

// Feasible interval of delta for moving delta energy from slot i to slot j
// (i < j; negative delta moves energy backwards in time).
inline std::pair<double, double> transfer_range(std::span<const double> alloc, const std::vector<double>& cum,
                                                const TeaBounds& b, std::size_t i, std::size_t j) {
  double lo = -alloc[j];
  double hi = alloc[i];
  for (std::size_t u = i; u < j; ++u) {
    hi = std::min(hi, cum[u] - b.lower[u]);
    lo = std::max(lo, cum[u] - b.upper[u]);
  }
  return {lo, hi};
}

// Minimises a one-dimensional, possibly multi-modal function on [lo, hi]:
// a uniform scan followed by golden-section refinement of the best bracket.
template <class F>
std::pair<double, double> line_minimize(F&& f, double lo, double hi) {
  constexpr int kScan = 48;
  double best_x = 0.0;
  double best_f = f(0.0);
  std::vector<double> xs(kScan + 1), fs(kScan + 1);
  std::size_t arg = 0;
  for (int k = 0; k <= kScan; ++k) {
    xs[k] = lo + (hi - lo) * k / kScan;
    fs[k] = f(xs[k]);
    if (fs[k] < fs[arg]) arg = static_cast<std::size_t>(k);
  }
  double a = xs[arg == 0 ? 0 : arg - 1];
  double c = xs[std::min<std::size_t>(arg + 1, kScan)];
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = c - g * (c - a), x2 = a + g * (c - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 90 && c - a > 0; ++it) {
    if (f1 < f2) {
      c = x2; x2 = x1; f2 = f1;
      x1 = c - g * (c - a); f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + g * (c - a); f2 = f(x2);
    }
  }
  for (auto [x, v] : {std::pair{xs[arg], fs[arg]}, std::pair{x1, f1}, std::pair{x2, f2}}) {
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  return {best_x, best_f};
}

// Pairwise-transfer descent on the allocation polytope.
inline double refine_allocation(std::vector<double>& alloc, std::span<const double> demand,
                                const std::vector<bool>& starved, const TeaBounds& b) {
  const std::size_t T = alloc.size();
  double current = tea_objective(alloc, demand, starved);
  if (!std::isfinite(current)) return current;
  std::vector<double> trial(T);
  for (int sweep = 0; sweep < 400; ++sweep) {
    bool improved = false;
    for (std::size_t i = 0; i < T; ++i) {
      for (std::size_t j = i + 1; j < T; ++j) {
        if (starved[i] && starved[j]) continue;
        const auto cum = to_cumulative(alloc);
        auto [lo, hi] = transfer_range(alloc, cum, b, i, j);
        if (!(hi - lo > 0)) continue;
        auto objective = [&](double delta) {
          trial = alloc;
          trial[i] -= delta;
          trial[j] += delta;
          return tea_objective(trial, demand, starved);
        };
        auto [delta, value] = line_minimize(objective, lo, hi);
        if (value < current - 1e-15 * std::max(1.0, current)) {
          alloc[i] -= delta;
          alloc[j] += delta;
          current = value;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  return current;
}

// Rounds the cumulative curve down onto a dyadic grid so that prefix sums of
// the result are exact whenever the inputs are representable on that grid.
inline std::vector<double> snap_allocation(std::span<const double> alloc, const TeaBounds& b) {
  int exponent = 0;
  std::frexp(std::max(b.total, 1.0), &exponent);
  const double quantum = std::ldexp(1.0, exponent - 44);
  auto cum = to_cumulative(alloc);
  double prev = 0.0;
  for (std::size_t t = 0; t < cum.size(); ++t) {
    double snapped = std::floor(cum[t] / quantum) * quantum;
    cum[t] = std::clamp(snapped, std::max(prev, b.lower[t]), b.upper[t]);
    prev = cum[t];
  }
  cum.back() = b.total;
  return from_cumulative(cum);
}

}  // namespace detail

// Equal-ratio allocation with binding-prefix splitting: one global ratio
// sum(D)/available when causality allows it, otherwise the most binding
// prefix is provisioned at its own ratio and the remainder is solved again.
// Segment ratios come out non-increasing in time. Battery capacity is not
// considered here.
inline std::vector<double> tea_equal_ratio(std::span<const double> generation, std::span<const double> demand,
                                           double initial) {
  const std::size_t T = generation.size();
  std::vector<double> avail(T);
  double acc = initial;
  for (std::size_t t = 0; t < T; ++t) avail[t] = acc += generation[t];

  std::vector<double> alloc(T, 0.0);
  std::size_t start = 0;
  double used = 0.0;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  while (start < T) {
    double best = -1.0;
    std::size_t cut = start;
    double cum_demand = 0.0;
    for (std::size_t t = start; t < T; ++t) {
      cum_demand += demand[t];
      const double energy = avail[t] - used;
      double ratio = 0.0;
      if (energy <= 0) {
        ratio = cum_demand > 0 ? kInf : 0.0;
      } else {
        ratio = cum_demand / energy;
      }
      if (ratio >= best) {
        best = ratio;
        cut = t;
      }
    }
    double seg_demand = 0.0;
    for (std::size_t t = start; t <= cut; ++t) seg_demand += demand[t];
    const double seg_energy = avail[cut] - used;
    if (seg_demand == 0.0) {
      // Nothing left to power: park the rest in the last slot.
      alloc[T - 1] += avail[T - 1] - used;
      break;
    }
    if (seg_energy > 0) {
      for (std::size_t t = start; t <= cut; ++t) alloc[t] = demand[t] * seg_energy / seg_demand;
      used = avail[cut];
    }
    start = cut + 1;
  }
  return alloc;
}

// Temporal-scale energy allocation for one GCS: spreads generation plus the
// initial battery charge over the horizon so that the EDR vector has the
// smallest population standard deviation. Constraints: prefix causality,
// battery capacity (when bounded) and no waste.
//
// The equal-ratio construction above is the starting point; pairwise energy
// transfers between slots then refine it, since equalising ratios inside
// each segment is not sigma-optimal once a prefix binds.
inline TeaResult tea_allocate(std::span<const double> generation, std::span<const double> demand, double initial,
                              std::optional<double> capacity = std::nullopt) {
  detail::check_tea_inputs(generation, demand, initial, capacity);
  const std::size_t T = generation.size();
  TeaBounds bounds(generation, initial, capacity);
  TeaResult result;
  result.starved.assign(T, false);

  const bool any_demand = std::any_of(demand.begin(), demand.end(), [](double d) { return d > 0; });
  if (!any_demand) {
    result.status = TeaStatus::NoDemand;
    result.allocation.assign(generation.begin(), generation.end());
    result.allocation[0] += initial;
    return result;
  }
  if (bounds.total <= 0) {
    result.status = TeaStatus::NoEnergy;
    result.allocation.assign(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) result.starved[t] = demand[t] > 0;
    return result;
  }

  result.starved = detail::starved_slots(demand, bounds);
  const auto& starved = result.starved;

  // Front-loaded point with a little energy pushed forward into every
  // powered slot that would otherwise get none; strictly feasible.
  std::vector<double> front = detail::from_cumulative(bounds.upper);
  for (std::size_t t = 0; t < T; ++t) {
    if (starved[t] || demand[t] == 0 || front[t] > 0) continue;
    for (std::size_t s = t; s-- > 0;) {
      if (front[s] <= 0) continue;
      const auto cum = detail::to_cumulative(front);
      double room = front[s];
      for (std::size_t u = s; u < t; ++u) room = std::min(room, cum[u] - bounds.lower[u]);
      const double delta = 0.5 * room;
      front[s] -= delta;
      front[t] += delta;
      break;
    }
  }

  std::vector<double> seed = detail::clamp_to_bounds(tea_equal_ratio(generation, demand, initial), bounds);
  const std::vector<double> back = detail::from_cumulative(bounds.lower);
  auto mix = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> m(a.size());
    for (std::size_t t = 0; t < a.size(); ++t) m[t] = 0.5 * a[t] + 0.5 * b[t];
    return m;
  };

  std::vector<std::vector<double>> starts{seed, front, mix(seed, front), mix(back, front)};
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_alloc = front;
  for (auto& start : starts) {
    if (!std::isfinite(detail::tea_objective(start, demand, starved))) continue;
    const double value = detail::refine_allocation(start, demand, starved, bounds);
    if (value < best) {
      best = value;
      best_alloc = start;
    }
  }

  auto snapped = detail::snap_allocation(best_alloc, bounds);
  const double snapped_value = detail::tea_objective(snapped, demand, starved);
  if (std::isfinite(snapped_value) && snapped_value <= best + 1e-9 * std::max(1.0, best)) {
    best_alloc = std::move(snapped);
    best = snapped_value;
  }
  result.allocation = std::move(best_alloc);
  result.sigma = best;
  return result;
}

// Sigma of an arbitrary allocation under the TEA objective (starved slots
// excluded). Used to compare allocators.
inline double tea_sigma(std::span<const double> alloc, std::span<const double> demand, const std::vector<bool>& starved) {
  return detail::tea_objective(alloc, demand, starved);
}

// Even split of the available energy, clipped to what has arrived so far.
inline std::vector<double> uniform_allocate(std::span<const double> generation, double initial) {
  const std::size_t T = generation.size();
  TeaBounds bounds(generation, initial, std::nullopt);
  std::vector<double> cum(T);
  for (std::size_t t = 0; t < T; ++t) {
    cum[t] = std::min(bounds.total * static_cast<double>(t + 1) / static_cast<double>(T), bounds.upper[t]);
    if (t > 0) cum[t] = std::max(cum[t], cum[t - 1]);
  }
  cum.back() = bounds.total;
  return detail::snap_allocation(detail::from_cumulative(cum), bounds);
}

struct LedgerCell {
  GcsId gcs;
  std::size_t slot = 0;
  double demand = 0.0;
  double generation = 0.0;
  double provisioned = 0.0;
  double residual_before = 0.0;
  double residual_after = 0.0;
  double on_grid = 0.0;
  double wasted = 0.0;
  std::optional<double> eta;  // empty when demand had no provisioning
};

// Per-(GCS, slot) energy record. Cells are kept ordered by GCS id, then slot.
class EnergyLedger {
 public:
  EnergyLedger() = default;
  EnergyLedger(std::size_t gcs_count, std::size_t slots) : slots_(slots), cells_(gcs_count * slots) {}

  LedgerCell& at(std::size_t gcs_index, std::size_t slot) { return cells_.at(gcs_index * slots_ + slot); }
  const LedgerCell& at(std::size_t gcs_index, std::size_t slot) const { return cells_.at(gcs_index * slots_ + slot); }

  std::size_t slots() const { return slots_; }
  std::size_t gcs_count() const { return slots_ == 0 ? 0 : cells_.size() / slots_; }
  const std::vector<LedgerCell>& cells() const { return cells_; }

  // EDR vector of one GCS over the horizon (unpowered slots omitted).
  std::vector<double> temporal(std::size_t gcs_index) const {
    std::vector<double> out;
    for (std::size_t t = 0; t < slots_; ++t) {
      if (auto e = at(gcs_index, t).eta) out.push_back(*e);
    }
    return out;
  }

  // EDR vector across all GCSs at one slot (unpowered GCSs omitted).
  std::vector<double> spatial(std::size_t slot) const {
    std::vector<double> out;
    for (std::size_t g = 0; g < gcs_count(); ++g) {
      if (auto e = at(g, slot).eta) out.push_back(*e);
    }
    return out;
  }

  void write_csv(std::ostream& os) const {
    os << "gcs_id,slot,D,G,E,residual_before,residual_after,on_grid,eta\n";
    for (const auto& c : cells_) {
      os << c.gcs.value << ',' << c.slot + 1 << ',' << format_number(c.demand) << ',' << format_number(c.generation)
         << ',' << format_number(c.provisioned) << ',' << format_number(c.residual_before) << ','
         << format_number(c.residual_after) << ',' << format_number(c.on_grid) << ','
         << (c.eta ? format_number(*c.eta) : std::string()) << '\n';
    }
  }

 private:
  std::size_t slots_ = 0;
  std::vector<LedgerCell> cells_;
};

// residual_before + E + on_grid - D - wasted - residual_after for one cell.
inline double conservation_gap(const LedgerCell& c) {
  return c.residual_before + c.provisioned + c.on_grid - c.demand - c.wasted - c.residual_after;
}

}  // namespace gcnsim
