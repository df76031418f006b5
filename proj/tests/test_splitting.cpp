#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <map>
#include <tuple>
#include <set>

#include "l2c/error.hpp"
#include "l2c/splitting.hpp"
#include "l2c/synth.hpp"
#include "support.hpp"

using namespace l2c;

namespace {

FeatureTable table_for(std::size_t patients, std::size_t visits = 3, std::uint64_t seed = 1) {
  SynthOptions o;
  o.patients = patients;
  o.visits = visits;
  o.seed = seed;
  return build_training_table(synthesize(o), Task::DX, Membership::D1);
}

}  // namespace

TEST(Folds, ExactDivisibility) {
  const auto folds = patient_disjoint_folds(table_for(10), 5, 0);
  EXPECT_EQ(folds.fold_sizes(), (std::vector<std::size_t>{2, 2, 2, 2, 2}));
  std::set<std::string> all;
  for (std::size_t f = 0; f < 5; ++f) {
    for (const auto& id : folds.patients_in(f)) EXPECT_TRUE(all.insert(id).second);
  }
  EXPECT_EQ(all.size(), 10u);
}

TEST(Folds, BalancedSizes) {
  const auto folds = patient_disjoint_folds(table_for(101, 2), 4, 3);
  for (auto s : folds.fold_sizes()) EXPECT_TRUE(s == 25 || s == 26) << s;
}

TEST(Folds, ReproducibleAndSeedDependent) {
  const auto t = table_for(40);
  EXPECT_EQ(patient_disjoint_folds(t, 5, 7), patient_disjoint_folds(t, 5, 7));
  EXPECT_NE(patient_disjoint_folds(t, 5, 7), patient_disjoint_folds(t, 5, 8));
}

TEST(Folds, ConfigErrors) {
  const auto t = table_for(4);
  auto kind = [&](std::size_t k) {
    try {
      patient_disjoint_folds(t, k, 0);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Contract;
  };
  EXPECT_EQ(kind(1), ErrorKind::Config);
  EXPECT_EQ(kind(5), ErrorKind::Config);
  FeatureTable empty;
  EXPECT_THROW(patient_disjoint_folds(empty, 2, 0), Error);
}

TEST(Folds, StratifiedBalancesLatestDiagnosis) {
  SynthOptions o;
  o.patients = 150;
  const auto c = synthesize(o);
  const auto t = build_training_table(c, Task::DX, Membership::D1);
  const auto folds = patient_disjoint_folds(t, 5, 11, true);
  // latest target per patient
  std::map<std::string, std::pair<double, int>> latest;
  for (const auto& r : t.rows) {
    auto& e = latest[r.patient_id];
    if (r.target_month >= e.first) e = {r.target_month, static_cast<int>(*r.y)};
  }
  std::array<std::array<int, 5>, 3> counts{};
  for (const auto& [id, e] : latest) ++counts[e.second][*folds.fold_of(id)];
  for (const auto& per_fold : counts) {
    const auto [lo, hi] = std::minmax_element(per_fold.begin(), per_fold.end());
    EXPECT_LE(*hi - *lo, 1);
  }
  EXPECT_THROW(patient_disjoint_folds(build_training_table(c, Task::ADAS, Membership::D1), 5, 0, true), Error);
}

TEST(ValidationRows, HalfHistoryRule) {
  for (auto [n, cutoff_visits, rows] : std::vector<std::tuple<int, int, int>>{{4, 2, 2}, {2, 1, 1}, {5, 2, 3}}) {
    const auto c = support::adas_cohort({support::regular_visits(n)});
    const auto v = validation_rows(c, c.patients[0], Task::ADAS);
    ASSERT_EQ(static_cast<int>(v.size()), rows) << n;
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_EQ(v[i].cutoff_month, 6.0 * (cutoff_visits - 1));
      EXPECT_EQ(v[i].target_month, 6.0 * (cutoff_visits + static_cast<int>(i)));
    }
  }
  const auto single = support::adas_cohort({support::regular_visits(1)});
  EXPECT_TRUE(validation_rows(single, single.patients[0], Task::ADAS).empty());
}

TEST(MakeFold, DisjointPatientsAndHalfCutoffs) {
  SynthOptions o;
  o.patients = 40;
  const auto c = synthesize(o);
  const auto t = build_training_table(c, Task::ADAS, Membership::D1);
  const auto folds = patient_disjoint_folds(t, 4, 5);
  for (std::size_t f = 0; f < 4; ++f) {
    const auto data = make_fold(c, t, folds, f);
    std::set<std::string> train_ids, val_ids;
    for (const auto& r : data.train.rows) train_ids.insert(r.patient_id);
    for (const auto& r : data.validation.rows) val_ids.insert(r.patient_id);
    for (const auto& id : val_ids) {
      EXPECT_EQ(train_ids.count(id), 0u);
      EXPECT_EQ(folds.fold_of(id), f);
    }
    for (const auto& r : data.validation.rows) {
      const auto* p = c.find(r.patient_id);
      EXPECT_EQ(r.cutoff_month, p->visits[p->visits.size() / 2 - 1].month);
    }
    EXPECT_TRUE(data.train.same_schema(data.validation));
  }
}

TEST(Folds, FileRoundTrip) {
  support::TempDir dir;
  const auto folds = patient_disjoint_folds(table_for(23), 4, 2);
  write_folds(dir.file("folds.csv"), folds);
  EXPECT_EQ(read_folds(dir.file("folds.csv")), folds);
  EXPECT_EQ(support::slurp(dir.file("folds.csv")).substr(0, 16), "patient_id,fold\n");
}
