#include <gtest/gtest.h>

#include <cmath>

#include "stenograph/cohort.hpp"
#include "support.hpp"

using namespace stenograph;
using stenograph::testing::make_record;

namespace {

Signal one_lead(std::vector<double> values) {
  Signal s(values.size());
  for (std::size_t l = 0; l < kNumLeads; ++l) std::copy(values.begin(), values.end(), s.lead(l).begin());
  return s;
}

}  // namespace

TEST(Zscore, HandComputedLead) {
  Signal s = one_lead({1, 2, 3});
  zscore_leads(s);
  const double z = std::sqrt(1.5);
  EXPECT_NEAR(s.lead(0)[0], -z, 1e-15);
  EXPECT_EQ(s.lead(0)[1], 0.0);
  EXPECT_NEAR(s.lead(0)[2], z, 1e-15);
  EXPECT_NEAR(s.lead(0)[2], 1.2247, 1e-4);
}

TEST(Zscore, ConstantLeadBecomesZero) {
  Signal s = one_lead({5, 5, 5});
  zscore_leads(s);
  for (double v : s.data) EXPECT_EQ(v, 0.0);
}

TEST(Zscore, Idempotent) {
  EcgRecord r = make_record("e", "p", {}, 500).ecg;
  const EcgRecord once = zscore_normalize(r);
  const EcgRecord twice = zscore_normalize(once);
  for (std::size_t i = 0; i < once.signal.data.size(); ++i) {
    EXPECT_NEAR(once.signal.data[i], twice.signal.data[i], 1e-12);
  }
  for (std::size_t l = 0; l < kNumLeads; ++l) {
    double m = 0, v = 0;
    for (double x : once.signal.lead(l)) m += x;
    m /= 500;
    for (double x : once.signal.lead(l)) v += (x - m) * (x - m);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v / 500, 1.0, 1e-12);
  }
}

TEST(Zscore, RejectsTooShort) {
  EcgRecord r;
  r.signal = Signal(1);
  EXPECT_THROW(zscore_normalize(r), Error);
}

TEST(Labels, EncodeSeverity) {
  EXPECT_EQ(encode_label("occluded"), StenosisGrade::severe);
  EXPECT_EQ(grade_code(encode_label("occluded")), 3);
  EXPECT_EQ(grade_code(encode_label("normal")), 0);
  EXPECT_EQ(grade_code(encode_label("mild")), 1);
  EXPECT_EQ(grade_code(encode_label("moderate")), 2);
  EXPECT_EQ(grade_code(encode_label("severe")), 3);
  try {
    encode_label("blocked");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("blocked"), std::string::npos);
  }
}

TEST(Labels, SevereIffGradeThree) {
  VesselLabels l;
  l.severity = {Severity::occluded, Severity::moderate, Severity::severe, Severity::normal};
  EXPECT_TRUE(l.severe(Vessel::RCA));
  EXPECT_FALSE(l.severe(Vessel::LM));
  EXPECT_TRUE(l.severe(Vessel::LAD));
  EXPECT_FALSE(l.severe(Vessel::LCX));
  EXPECT_EQ(l.targets(), (std::array<double, 4>{1, 0, 1, 0}));
}

TEST(Timestamps, RoundTripAndOffsets) {
  const Timestamp t = parse_rfc3339("2021-03-04T05:06:07Z");
  EXPECT_EQ(format_rfc3339(t), "2021-03-04T05:06:07Z");
  EXPECT_EQ(parse_rfc3339("2021-03-04T07:06:07+02:00"), t);
  EXPECT_EQ(parse_rfc3339("2021-03-04T05:06:07.999Z"), t);
  EXPECT_THROW(parse_rfc3339("2021-03-04 05:06:07"), Error);
  EXPECT_THROW(parse_rfc3339("2021-02-30T00:00:00Z"), Error);
}

TEST(Cohort, ValidateRejectsDuplicatesAndLatePairs) {
  Cohort c;
  c.records.push_back(make_record("a", "p1"));
  c.records.push_back(make_record("b", "p1"));
  EXPECT_NO_THROW(c.validate());
  c.records.push_back(make_record("a", "p2"));
  EXPECT_THROW(c.validate(), Error);
  c.records.pop_back();
  auto late = make_record("c", "p3");
  late.ecg.ecg_time = late.labels.ccta_time;
  c.records.push_back(late);
  EXPECT_THROW(c.validate(), Error);
}

TEST(Subgroups, Boundaries) {
  Cohort c;
  auto a = make_record("a", "p1");
  a.ecg.age = 65;
  a.labels.ccta_time = Timestamp{a.ecg.ecg_time.seconds + 3 * 3600};
  auto b = make_record("b", "p2");
  b.ecg.age = 64.9;
  b.ecg.sex = Sex::female;
  b.ecg.normal_ecg = false;
  b.labels.ccta_time = Timestamp{b.ecg.ecg_time.seconds + 3 * 3600 + 1};
  c.records = {a, b};
  EXPECT_EQ(subgroup_indices(c, Subgroup::age_65_plus), (std::vector<std::size_t>{0}));
  EXPECT_EQ(subgroup_indices(c, Subgroup::age_under_65), (std::vector<std::size_t>{1}));
  EXPECT_EQ(subgroup_indices(c, Subgroup::delta_le_3h), (std::vector<std::size_t>{0}));
  EXPECT_EQ(subgroup_indices(c, Subgroup::delta_gt_3h), (std::vector<std::size_t>{1}));
  EXPECT_EQ(subgroup_indices(c, Subgroup::male), (std::vector<std::size_t>{0}));
  EXPECT_EQ(subgroup_indices(c, Subgroup::female), (std::vector<std::size_t>{1}));
  const Cohort normal = subgroup_filter(c, Subgroup::normal_ecg);
  ASSERT_EQ(normal.size(), 1u);
  EXPECT_EQ(normal.records[0].ecg.ecg_id, "a");
}

TEST(Subgroups, MissingMetadataListsIds) {
  Cohort c;
  c.records.push_back(make_record("a", "p1"));
  auto b = make_record("b", "p2");
  b.ecg.age.reset();
  c.records.push_back(b);
  try {
    subgroup_indices(c, Subgroup::age_65_plus);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find(" b"), std::string::npos);
  }
  EXPECT_NO_THROW(subgroup_indices(c, Subgroup::male));
}

TEST(Subgroups, NamesRoundTrip) {
  for (Subgroup s : kAllSubgroups) EXPECT_EQ(parse_subgroup(subgroup_name(s)), s);
  EXPECT_THROW(parse_subgroup("teenagers"), Error);
}
