#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "l2c/cohort.hpp"
#include "l2c/error.hpp"
#include "l2c/random.hpp"
#include "l2c/synth.hpp"
#include "support.hpp"

using namespace l2c;

namespace {

const char* kHeader = "RID,month_bl,DX,ADAS13,Ventricles,ICV,APOE4,PTGENDER,PTEDUCAT,PTMARRY,AGE,D1,D2\n";

Cohort parse(const std::string& text, ParseOptions options = {}) {
  std::istringstream in(text);
  if (!options.warn) options.warn = [](const std::string&) {};
  return parse_cohort(in, options);
}

ErrorKind error_kind(const std::string& text, ParseOptions options = {}) {
  try {
    parse(text, std::move(options));
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::Contract;
}

}  // namespace

TEST(EncodeDiagnosis, StableAndTransitionLabels) {
  EXPECT_EQ(encode_diagnosis("MCI"), Diagnosis::MCI);
  EXPECT_EQ(encode_diagnosis("NL"), Diagnosis::CN);
  EXPECT_EQ(encode_diagnosis("Dementia"), Diagnosis::AD);
  EXPECT_EQ(encode_diagnosis("NL to MCI"), Diagnosis::MCI);
  EXPECT_EQ(encode_diagnosis("MCI to Dementia"), Diagnosis::AD);
  EXPECT_EQ(encode_diagnosis("Dementia to MCI"), Diagnosis::MCI);
  EXPECT_EQ(encode_diagnosis(""), std::nullopt);
}

TEST(EncodeDiagnosis, UnknownLabelIsEncodingError) {
  try {
    encode_diagnosis("Psychosis");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Encoding);
    EXPECT_NE(std::string(e.what()).find("Psychosis"), std::string::npos);
  }
}

TEST(ParseCohort, MinimalFile) {
  const auto c = parse(std::string(kHeader) + "5,0,NL,10,20000,1500000,1,Male,16,Married,70,1,0\n"
                                              "5,6,MCI,12,21000,1500000,1,Male,16,Married,70,1,0\n");
  ASSERT_EQ(c.patients.size(), 1u);
  const auto& p = c.patients[0];
  ASSERT_EQ(p.visits.size(), 2u);
  EXPECT_EQ(p.visits[0].month, 0.0);
  EXPECT_EQ(p.visits[1].month, 6.0);
  EXPECT_EQ(p.visits[1].dx, Diagnosis::MCI);
  EXPECT_EQ(p.demographics.apoe4, 1);
  EXPECT_EQ(p.demographics.is_male, true);
  EXPECT_EQ(p.demographics.marital, 0);
  EXPECT_TRUE(p.in_d1);
  EXPECT_FALSE(p.in_d2);
  EXPECT_EQ(c.features, (std::vector<std::string>{"ADAS13", "Ventricles", "ICV", "Ventricles_ICV"}));
  EXPECT_DOUBLE_EQ(*p.visits[0].values[3], 20000.0 / 1500000.0);
}

TEST(ParseCohort, SortsVisitsByMonth) {
  const auto c = parse(std::string(kHeader) + "1,12,AD,30,,,,,,,,1,0\n1,0,NL,10,,,,,,,,1,0\n1,6,MCI,20,,,,,,,,1,0\n");
  const auto& v = c.patients[0].visits;
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].month, 0);
  EXPECT_EQ(v[1].month, 6);
  EXPECT_EQ(v[2].month, 12);
  EXPECT_EQ(*v[2].values[0], 30);
}

TEST(ParseCohort, SentinelsBecomeMissing) {
  const auto c = parse(std::string(kHeader) + "1,0,,NA,-4,NaN,,,,,,1,0\n");
  const auto& v = c.patients[0].visits[0];
  EXPECT_FALSE(v.dx);
  for (const auto& value : v.values) EXPECT_FALSE(value);
}

TEST(ParseCohort, VentriclesRatioMissingWithoutIcvAndScaled) {
  ParseOptions o;
  o.ventricles_scale = 100.0;
  const auto c = parse(std::string(kHeader) + "1,0,NL,10,20000,,,,,,,1,0\n1,6,NL,10,20000,1000000,,,,,,1,0\n", o);
  EXPECT_FALSE(c.patients[0].visits[0].values[3]);
  EXPECT_DOUBLE_EQ(*c.patients[0].visits[1].values[3], 2.0);
}

TEST(ParseCohort, WrongColumnCountNamesLine) {
  try {
    parse(std::string(kHeader) + "1,0,NL,10,,,,,,,,1,0\n1,6,NL\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ParseCohort, DuplicateVisitStrictVersusLenient) {
  const std::string text = std::string(kHeader) + "1,0,NL,10,,,,,,,,1,0\n1,0,MCI,11,,,,,,,,1,0\n";
  ParseOptions strict;
  strict.strict = true;
  EXPECT_EQ(error_kind(text, strict), ErrorKind::Schema);

  std::vector<std::string> warnings;
  ParseOptions lenient;
  lenient.warn = [&](const std::string& w) { warnings.push_back(w); };
  const auto c = parse(text, lenient);
  ASSERT_EQ(c.patients[0].visits.size(), 1u);
  EXPECT_EQ(c.patients[0].visits[0].dx, Diagnosis::MCI);  // last row read wins
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(ParseCohort, UnknownDiagnosisIsEncodingError) {
  EXPECT_EQ(error_kind(std::string(kHeader) + "1,0,Unsure,10,,,,,,,,1,0\n"), ErrorKind::Encoding);
}

TEST(ParseCohort, OutOfRangeValues) {
  const std::string text = std::string(kHeader) + "1,0,NL,-3,,,,,,,,1,0\n";
  ParseOptions strict;
  strict.strict = true;
  EXPECT_EQ(error_kind(text, strict), ErrorKind::Schema);
  EXPECT_FALSE(parse(text).patients[0].visits[0].values[0]);
}

TEST(ParseCohort, MissingRequiredColumnIsSchemaError) {
  EXPECT_EQ(error_kind("PTID,month_bl\n1,0\n"), ErrorKind::Schema);
}

TEST(ParseCohort, ColumnMappingAndDelimiter) {
  ParseOptions o;
  o.columns = {{"id", "subject"}, {"month", "m"}, {"ADAS13", "adas"}};
  o.delimiter = ';';
  const auto c = parse("subject;m;adas\nA;6;3\nA;0;4\n", o);
  ASSERT_EQ(c.patients.size(), 1u);
  EXPECT_EQ(c.patients[0].id, "A");
  EXPECT_EQ(c.features, std::vector<std::string>{"ADAS13"});
  EXPECT_EQ(*c.patients[0].visits[0].values[0], 4);
  EXPECT_TRUE(c.patients[0].in_d1);  // no D1 column: everyone trains
}

TEST(ParseCohort, NumericIdsSortNumerically) {
  const auto c = parse(std::string(kHeader) + "10,0,NL,1,,,,,,,,1,0\n9,0,NL,1,,,,,,,,1,0\n"
                                              "100,0,NL,1,,,,,,,,1,0\n");
  ASSERT_EQ(c.patients.size(), 3u);
  EXPECT_EQ(c.patients[0].id, "9");
  EXPECT_EQ(c.patients[2].id, "100");
  EXPECT_NE(c.find("10"), nullptr);
  EXPECT_EQ(c.find("11"), nullptr);
}

TEST(ParseCohort, RoundTripOnSyntheticCohorts) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SynthOptions o;
    o.patients = 40;
    o.seed = seed;
    o.outcome_missing = 0.2;
    const auto original = synthesize(o);
    std::stringstream buffer;
    write_cohort(buffer, original);
    const auto again = parse_cohort(buffer);
    EXPECT_EQ(again, original) << "seed " << seed;
    std::stringstream second;
    write_cohort(second, again);
    EXPECT_EQ(parse_cohort(second), again);
    EXPECT_EQ(second.str(), buffer.str());
  }
}

TEST(ParseCohort, IndependentOfRowOrder) {
  SynthOptions o;
  o.patients = 30;
  const auto original = synthesize(o);
  std::stringstream buffer;
  write_cohort(buffer, original);
  std::string header;
  std::getline(buffer, header);
  std::vector<std::string> lines;
  for (std::string line; std::getline(buffer, line);) lines.push_back(line);
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    rng.shuffle(lines.begin(), lines.end());
    std::string text = header + "\n";
    for (const auto& l : lines) text += l + "\n";
    EXPECT_EQ(parse(text), original);
  }
}

TEST(ParseCohort, NoImputation) {
  SynthOptions o;
  o.patients = 50;
  o.missing = 0.5;
  const auto c = synthesize(o);
  std::stringstream buffer;
  write_cohort(buffer, c);
  const auto again = parse_cohort(buffer);
  std::size_t missing = 0, missing_again = 0;
  for (std::size_t i = 0; i < c.patients.size(); ++i) {
    for (std::size_t j = 0; j < c.patients[i].visits.size(); ++j) {
      for (std::size_t f = 0; f < c.features.size(); ++f) {
        missing += !c.patients[i].visits[j].values[f];
        missing_again += !again.patients[i].visits[j].values[f];
      }
    }
  }
  EXPECT_GT(missing, 0u);
  EXPECT_EQ(missing, missing_again);
}

TEST(Task, ParseAndNames) {
  EXPECT_EQ(parse_task("dx"), Task::DX);
  EXPECT_EQ(parse_task("ADAS13"), Task::ADAS);
  EXPECT_EQ(parse_task("VENT"), Task::Ventricles);
  EXPECT_EQ(task_wire_name(Task::Ventricles), "VENT");
  EXPECT_THROW(parse_task("MMSE"), Error);
}

TEST(Synth, DeterministicForSeed) {
  SynthOptions o;
  o.patients = 20;
  EXPECT_EQ(synthesize(o), synthesize(o));
  auto other = o;
  other.seed = 2;
  EXPECT_NE(synthesize(o), synthesize(other));
}

TEST(Synth, ExactVisitCountAndMembership) {
  SynthOptions o;
  o.patients = 10;
  o.visits = 4;
  const auto c = synthesize(o);
  ASSERT_EQ(c.patients.size(), 10u);
  for (const auto& p : c.patients) {
    EXPECT_EQ(p.visits.size(), 4u);
    EXPECT_TRUE(p.in_d1);
    for (std::size_t i = 1; i < p.visits.size(); ++i) EXPECT_LT(p.visits[i - 1].month, p.visits[i].month);
  }
}
