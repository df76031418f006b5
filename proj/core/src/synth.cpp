#include "l2c/synth.hpp"

#include <algorithm>
#include <cmath>

#include "l2c/error.hpp"
#include "l2c/random.hpp"

namespace l2c {
namespace {

double round_to(double v, double step) { return std::round(v / step) * step; }

enum Feature : std::size_t { kMmse, kCdrsb, kAdas, kVentricles, kIcv, kRatio };

}  // namespace

Cohort synthesize(const SynthOptions& o) {
  if (o.visits == 0 && (o.min_visits < 1 || o.max_visits < o.min_visits)) {
    fail(ErrorKind::Config, "synthetic visit range must satisfy 1 <= min <= max");
  }
  for (double p : {o.missing, o.outcome_missing, o.reversion, o.d2_fraction}) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::Config, "synthetic probabilities must lie in [0, 1]");
  }

  Rng rng(o.seed);
  Cohort cohort;
  cohort.features = {"MMSE", "CDRSB", "ADAS13", "Ventricles", "ICV", std::string(kVentriclesIcv)};
  cohort.patients.reserve(o.patients);

  for (std::size_t id = 1; id <= o.patients; ++id) {
    PatientHistory p;
    p.id = std::to_string(id);
    p.in_d1 = true;
    p.in_d2 = rng.bernoulli(o.d2_fraction);

    auto& demo = p.demographics;
    const double u = rng.uniform();
    demo.apoe4 = u < 0.5 ? 0 : (u < 0.85 ? 1 : 2);
    demo.is_male = rng.bernoulli(0.5);
    demo.educ = static_cast<double>(8 + rng.index(13));
    const double m = rng.uniform();
    demo.marital = m < 0.7 ? 0 : (m < 0.82 ? 1 : (m < 0.94 ? 2 : (m < 0.98 ? 3 : 4)));
    demo.baseline_age = round_to(rng.uniform(55.0, 90.0), 0.1);

    const double s0 = rng.uniform(0.0, 1.2);
    const double rate = rng.uniform(0.002, 0.02) * (1.0 + 0.5 * *demo.apoe4);
    const double icv = std::max(8e5, rng.normal(1.5e6, 1.5e5));
    const double v0 = rng.uniform(1.5e4, 6e4) * icv / 1.5e6;
    const double growth = rng.uniform(0.02, 0.06) * (1.0 + s0);

    const std::size_t n =
        o.visits > 0 ? o.visits : o.min_visits + rng.index(o.max_visits - o.min_visits + 1);
    double month = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0) {
        const double g = rng.uniform();
        month += g < 0.5 ? 6.0 : (g < 0.85 ? 12.0 : 24.0);
      }
      const double s = s0 + rate * month;
      Visit v;
      v.month = month;
      int state = s < 0.5 ? 0 : (s < 1.2 ? 1 : 2);
      if (state > 0 && rng.bernoulli(o.reversion)) --state;
      const double adas = std::clamp(round_to(8.0 + 20.0 * s + rng.normal(0.0, 2.0), 0.1), 0.0, 85.0);
      const double mmse = std::clamp(std::round(29.5 - 6.0 * s + rng.normal(0.0, 1.0)), 0.0, 30.0);
      const double cdrsb = std::clamp(round_to(0.2 + 4.0 * s + rng.normal(0.0, 0.5), 0.5), 0.0, 18.0);
      const double icv_v = std::round(icv + rng.normal(0.0, 5e3));
      const double vent = std::max(1.0, std::round(v0 * (1.0 + growth * month / 12.0) + rng.normal(0.0, 300.0)));

      // draw every mask so the stream does not depend on earlier outcomes
      const bool dx_gone = rng.bernoulli(o.outcome_missing);
      const bool adas_gone = rng.bernoulli(o.outcome_missing);
      const bool mmse_gone = rng.bernoulli(o.missing);
      const bool cdrsb_gone = rng.bernoulli(o.missing);
      const bool vent_gone = rng.bernoulli(o.outcome_missing);
      const bool icv_gone = rng.bernoulli(o.outcome_missing);

      if (!dx_gone) v.dx = static_cast<Diagnosis>(state);
      v.values.resize(cohort.features.size());
      if (!adas_gone) v.values[kAdas] = adas;
      if (!mmse_gone) v.values[kMmse] = mmse;
      if (!cdrsb_gone) v.values[kCdrsb] = cdrsb;
      if (!vent_gone) v.values[kVentricles] = vent;
      if (!icv_gone) v.values[kIcv] = icv_v;
      if (v.values[kVentricles] && v.values[kIcv]) {
        // same expression as ingestion with the default scale
        v.values[kRatio] = *v.values[kVentricles] / *v.values[kIcv] * 1.0;
      }
      p.visits.push_back(std::move(v));
    }
    cohort.patients.push_back(std::move(p));
  }
  return cohort;
}

}  // namespace l2c
