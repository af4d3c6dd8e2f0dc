/*
 * Copyright 2026 The causalrx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "causalrx/core/cohort_io.hpp"
#include "causalrx/core/split.hpp"
#include "support.hpp"

namespace causalrx {
namespace {

using testing::make_cohort;
using testing::visit;

const char* kTwoPatients =
    R"({"diseases":["d0","d1","d2"],"procedures":["p0"],"medications":["m0","m1"]})"
    "\n"
    R"({"patient_id":"a","visits":[{"d":["d0"],"p":[],"m":["m1"]},{"d":["d2","d1"],"p":["p0"],"m":[]}]})"
    "\n"
    R"({"patient_id":"b","visits":[{"d":[],"p":["p0"],"m":["m0","m1"]}]})"
    "\n";

PatientCohort parse(const std::string& text) {
  std::istringstream in(text);
  return parse_cohort(in);
}

TEST(EntityVocab, OrdinalsFollowDeclarationOrder) {
  EntityVocab v(EntityKind::disease, {"z", "a", "m"});
  EXPECT_EQ(v.ordinal("z"), 0);
  EXPECT_EQ(v.ordinal("a"), 1);
  EXPECT_EQ(v.ordinal("m"), 2);
  EXPECT_EQ(v.find("nope"), -1);
  EXPECT_EQ(v.code(2), "m");
}

TEST(EntityVocab, RejectsDuplicateCodes) {
  EXPECT_THROW(EntityVocab(EntityKind::medication, {"a", "b", "a"}), ValidationError);
}

TEST(LoadCohort, CountsPatientsAndVisits) {
  const auto c = parse(kTwoPatients);
  EXPECT_EQ(c.patients.size(), 2u);
  EXPECT_EQ(c.visit_count(), 3u);
  EXPECT_EQ(c.patients[0].visits[1].diseases, (OrdinalSet{1, 2}));
  EXPECT_EQ(c.patients[1].visits[0].medications, (OrdinalSet{0, 1}));
}

TEST(LoadCohort, UnknownCodeIsValidationErrorNamingTheCode) {
  std::string text = kTwoPatients;
  text += R"({"patient_id":"c","visits":[{"d":["X99"],"p":[],"m":[]}]})"
          "\n";
  try {
    parse(text);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("X99"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
}

TEST(LoadCohort, MalformedRecordReportsLine) {
  std::string text = kTwoPatients;
  text += "{not json\n";
  try {
    parse(text);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(LoadCohort, MissingHeaderAndMissingFieldsAreParseErrors) {
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse(R"({"diseases":["d0"],"procedures":[]})"), ParseError);
  EXPECT_THROW(parse(R"({"diseases":["d0"],"procedures":[],"medications":[]})"
                     "\n"
                     R"({"visits":[]})"),
               ParseError);
}

TEST(LoadCohort, RejectsVisitsWithoutDiseasesOrProcedures) {
  EXPECT_THROW(parse(R"({"diseases":["d0"],"procedures":["p0"],"medications":["m0"]})"
                     "\n"
                     R"({"patient_id":"a","visits":[{"d":[],"p":[],"m":["m0"]}]})"),
               ValidationError);
}

TEST(LoadCohort, RejectsPatientsWithoutVisits) {
  EXPECT_THROW(parse(R"({"diseases":["d0"],"procedures":[],"medications":[]})"
                     "\n"
                     R"({"patient_id":"a","visits":[]})"),
               ValidationError);
}

TEST(LoadCohort, RoundTripIsIdentity) {
  auto c = parse(kTwoPatients);
  c.ddi.add_pair(0, 1);
  const auto dir = testing::scratch_dir("cohort_roundtrip");
  save_cohort(c, dir / "c.jsonl");
  save_ddi(c, dir / "ddi.csv");
  EXPECT_EQ(load_cohort(dir / "c.jsonl", dir / "ddi.csv"), c);
}

TEST(LoadDdi, BuildsSymmetricZeroDiagonalMatrix) {
  auto c = parse(kTwoPatients);
  std::istringstream in("med_a,med_b\nm1,m0\n");
  load_ddi(c, in);
  EXPECT_TRUE(c.ddi.interacts(0, 1));
  EXPECT_TRUE(c.ddi.interacts(1, 0));
  EXPECT_FALSE(c.ddi.interacts(0, 0));
  EXPECT_FALSE(c.ddi.interacts(1, 1));
}

TEST(LoadDdi, RejectsBadInput) {
  auto c = parse(kTwoPatients);
  std::istringstream bad_header("a,b\nm0,m1\n");
  EXPECT_THROW(load_ddi(c, bad_header), ParseError);
  std::istringstream unknown("med_a,med_b\nm0,m7\n");
  EXPECT_THROW(load_ddi(c, unknown), ValidationError);
  std::istringstream diagonal("med_a,med_b\nm0,m0\n");
  EXPECT_THROW(load_ddi(c, diagonal), ValidationError);
}

TEST(EncodeVisit, MultiHotAtMemberOrdinals) {
  const EntityLayout layout{3, 2, 4};
  auto e = encode_visit(visit({0}, {}, {}), layout);
  EXPECT_EQ(e.diseases, (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(e.procedures, (std::vector<double>{0, 0}));
  EXPECT_EQ(e.medications, (std::vector<double>{0, 0, 0, 0}));
  e = encode_visit(visit({0, 2}, {1}, {3}), layout);
  EXPECT_EQ(e.diseases, (std::vector<double>{1, 0, 1}));
  EXPECT_EQ(e.medications, (std::vector<double>{0, 0, 0, 1}));
}

TEST(EncodeVisit, DecodingRecoversTheSet) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> members;
    for (int i = 0; i < 17; ++i)
      if (rng() % 3 == 0) members.push_back(i);
    const OrdinalSet s = make_ordinal_set(members);
    EXPECT_EQ(decode_multi_hot(multi_hot(s, 17)), s);
  }
}

PatientCohort numbered(std::size_t n) {
  std::vector<PatientHistory> ps;
  for (std::size_t i = 0; i < n; ++i) ps.push_back({"P" + std::to_string(i), {visit({0}, {}, {})}});
  return make_cohort(1, 0, 1, std::move(ps));
}

std::multiset<std::string> ids(const PatientCohort& c) {
  std::multiset<std::string> out;
  for (const auto& p : c.patients) out.insert(p.id);
  return out;
}

TEST(SplitCohort, SixPatientsGiveFourOneOne) {
  const auto s = split_cohort(numbered(6), {}, 1);
  EXPECT_EQ(s.train.patients.size(), 4u);
  EXPECT_EQ(s.validation.patients.size(), 1u);
  EXPECT_EQ(s.test.patients.size(), 1u);
}

TEST(SplitCohort, SixHundredPatients) {
  const auto s = split_cohort(numbered(600), {}, 9);
  EXPECT_EQ(s.train.patients.size(), 400u);
  EXPECT_EQ(s.validation.patients.size(), 100u);
  EXPECT_EQ(s.test.patients.size(), 100u);
}

TEST(SplitCohort, RemainderGoesToTrain) {
  const auto s = split_cohort(numbered(10), {}, 2);
  EXPECT_EQ(s.validation.patients.size(), 1u);
  EXPECT_EQ(s.test.patients.size(), 1u);
  EXPECT_EQ(s.train.patients.size(), 8u);
}

TEST(SplitCohort, IsADeterministicPartition) {
  const auto c = numbered(37);
  const auto a = split_cohort(c, {}, 5);
  const auto b = split_cohort(c, {}, 5);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);
  std::multiset<std::string> all = ids(a.train);
  for (const auto& part : {a.validation, a.test})
    for (const auto& id : ids(part)) {
      EXPECT_EQ(all.count(id), 0u) << id;
      all.insert(id);
    }
  EXPECT_EQ(all, ids(c));
  EXPECT_NE(split_cohort(c, {}, 6).test, a.test);
}

TEST(SplitCohort, RejectsTooFewPatientsAndBadRatios) {
  EXPECT_THROW(split_cohort(numbered(2), {}, 1), ConfigError);
  EXPECT_THROW(split_cohort(numbered(10), {0.5, 0.2, 0.2}, 1), ConfigError);
}

TEST(Bootstrap, TenRoundsByDefaultShape) {
  const auto rounds = bootstrap_sample(numbered(20), 10, 0.8, 4);
  ASSERT_EQ(rounds.size(), 10u);
  for (const auto& r : rounds) EXPECT_EQ(r.patients.size(), 16u);
}

TEST(Bootstrap, FullFractionKeepsSizeWithRepetition) {
  const auto c = numbered(5);
  bool repeated = false;
  for (const auto& r : bootstrap_sample(c, 20, 1.0, 8)) {
    EXPECT_EQ(r.patients.size(), 5u);
    const auto s = ids(r);
    for (const auto& id : s) {
      EXPECT_EQ(ids(c).count(id), 1u);
      repeated = repeated || s.count(id) > 1;
    }
  }
  EXPECT_TRUE(repeated);
}

TEST(Bootstrap, DeterministicGivenSeed) {
  const auto c = numbered(30);
  const auto a = bootstrap_sample(c, 10, 0.8, 12);
  const auto b = bootstrap_sample(c, 10, 0.8, 12);
  EXPECT_EQ(a, b);
}

TEST(Bootstrap, RejectsBadArguments) {
  EXPECT_THROW(bootstrap_sample(numbered(0), 10, 0.8, 1), ConfigError);
  EXPECT_THROW(bootstrap_sample(numbered(3), 0, 0.8, 1), ConfigError);
  EXPECT_THROW(bootstrap_sample(numbered(3), 1, 0.0, 1), ConfigError);
  EXPECT_THROW(bootstrap_sample(numbered(3), 1, 1.5, 1), ConfigError);
}

}  // namespace
}  // namespace causalrx
