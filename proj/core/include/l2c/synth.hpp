#pragma once

#include <cstdint>

#include "l2c/cohort.hpp"

namespace l2c {

/// Synthetic cohort generator for tests and demos.
///
/// Each patient has a latent severity s(t) = s0 + r * t (t in months) with
/// s0 ~ U(0, 1.2) and r ~ U(0.002, 0.02) * (1 + 0.5 * APOE4). Visits start at
/// month 0 and are spaced 6, 12 or 24 months apart (probabilities 0.5, 0.35,
/// 0.15). Per visit:
///   DX       CN below s = 0.5, MCI below 1.2, AD above; with probability
///            `reversion` the visit reports one state milder (never below CN)
///   ADAS13   8 + 20 s + N(0, 2), clamped to [0, 85], one decimal
///   MMSE     round(29.5 - 6 s + N(0, 1)), clamped to [0, 30]
///   CDRSB    0.2 + 4 s + N(0, 0.5) rounded to halves, clamped to [0, 18]
///   ICV      per-patient N(1.5e6, 1.5e5) plus N(0, 5e3) per visit
///   Ventricles  v0 * (1 + g t / 12) + N(0, 300) with v0 ~ U(1.5e4, 6e4)
///            scaled by ICV and g ~ U(0.02, 0.06) * (1 + s0): a monotone
///            per-patient drift, so the last observation beats the cohort median
/// MMSE and CDRSB go missing with probability `missing`; DX, ADAS13,
/// Ventricles and ICV with probability `outcome_missing`. Every patient is in
/// D1; a `d2_fraction` share is also flagged D2.
struct SynthOptions {
  std::size_t patients = 100;
  std::size_t visits = 0;  // exact visit count per patient when > 0
  std::size_t min_visits = 2;
  std::size_t max_visits = 12;
  double missing = 0.2;
  double outcome_missing = 0.0;
  double reversion = 0.1;
  double d2_fraction = 0.3;
  std::uint64_t seed = 1;
};

/// Deterministic for a given seed. Features: MMSE, CDRSB, ADAS13, Ventricles,
/// ICV and the derived Ventricles_ICV (the order parse_cohort produces).
Cohort synthesize(const SynthOptions& options);

}  // namespace l2c
