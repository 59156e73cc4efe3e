#include <gtest/gtest.h>

#include <cmath>

#include "stenograph/dataset_io.hpp"
#include "support.hpp"

using namespace stenograph;
using stenograph::testing::make_record;
using stenograph::testing::TempDir;

namespace {

Cohort small_cohort() {
  Cohort c;
  auto a = make_record("a1", "A", {Severity::severe, Severity::normal, Severity::mild, Severity::occluded}, 100);
  auto b = make_record("a2", "A", a.labels.severity, 100);
  b.ecg.ecg_time = Timestamp{a.ecg.ecg_time.seconds - 86400};
  auto d = make_record("b1", "B", {}, 100);
  d.ecg.age.reset();
  d.ecg.sex = Sex::female;
  d.follow_up = FollowUp{true, 42};
  c.records = {a, b, d};
  return c;
}

}  // namespace

TEST(DatasetIo, RoundTripPreservesMetadataAndFloat32Signal) {
  TempDir dir("dsio_roundtrip");
  const Cohort c = small_cohort();
  write_dataset(c, dir.path());
  const Cohort back = load_dataset(dir.path());
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& x = c.records[i];
    const auto& y = back.records[i];
    EXPECT_EQ(y.ecg.ecg_id, x.ecg.ecg_id);
    EXPECT_EQ(y.ecg.patient_id, x.ecg.patient_id);
    EXPECT_EQ(y.ecg.ecg_time, x.ecg.ecg_time);
    EXPECT_EQ(y.labels.ccta_time, x.labels.ccta_time);
    EXPECT_EQ(y.ecg.age, x.ecg.age);
    EXPECT_EQ(y.ecg.sex, x.ecg.sex);
    EXPECT_EQ(y.ecg.normal_ecg, x.ecg.normal_ecg);
    EXPECT_EQ(y.labels.severity, x.labels.severity);
    EXPECT_EQ(y.follow_up.has_value(), x.follow_up.has_value());
    EXPECT_EQ(y.follow_up->event, x.follow_up->event);
    EXPECT_EQ(y.follow_up->days, x.follow_up->days);
    EXPECT_EQ(y.ecg.fs, x.ecg.fs);
    ASSERT_EQ(y.ecg.signal.data.size(), x.ecg.signal.data.size());
    for (std::size_t j = 0; j < x.ecg.signal.data.size(); ++j) {
      EXPECT_EQ(y.ecg.signal.data[j], static_cast<double>(static_cast<float>(x.ecg.signal.data[j])));
    }
  }
}

TEST(DatasetIo, DigestStableAndSensitive) {
  TempDir a("dsio_digest_a"), b("dsio_digest_b");
  Cohort c = small_cohort();
  write_dataset(c, a.path());
  write_dataset(c, b.path());
  EXPECT_EQ(dataset_digest(a.path()), dataset_digest(b.path()));
  c.records[0].ecg.signal.data[5] += 1.0;
  write_dataset(c, b.path());
  EXPECT_NE(dataset_digest(a.path()), dataset_digest(b.path()));
}

TEST(DatasetIo, ClosestOnlyKeepsLatestEcgPerExam) {
  TempDir dir("dsio_closest");
  write_dataset(small_cohort(), dir.path());
  const Cohort c = load_dataset(dir.path(), LoadOptions{true});
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.records[0].ecg.ecg_id, "a1");
  EXPECT_EQ(c.records[1].ecg.ecg_id, "b1");
}

TEST(DatasetIo, TruncatedSignalIsDataError) {
  TempDir dir("dsio_trunc");
  write_dataset(small_cohort(), dir.path());
  const auto bin = dir.path() / "signals" / "a1.bin";
  std::string bytes = read_text(bin);
  bytes.resize(bytes.size() - 4);
  write_text(bin, bytes);
  try {
    load_dataset(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find("a1.bin"), std::string::npos);
  }
}

TEST(DatasetIo, WrongLeadOrderIsDataError) {
  TempDir dir("dsio_leads");
  write_dataset(small_cohort(), dir.path());
  const auto meta_path = dir.path() / "signals" / "b1.meta.json";
  auto meta = parse_json_file(meta_path);
  std::swap(meta["lead_order"][0], meta["lead_order"][1]);
  write_text(meta_path, meta.dump());
  EXPECT_THROW(load_dataset(dir.path()), Error);
}

TEST(DatasetIo, MissingOrMalformedCohortFile) {
  TempDir dir("dsio_missing");
  EXPECT_THROW(load_dataset(dir.path()), Error);
  write_text(dir.path() / "cohort.json", "{not json");
  EXPECT_THROW(load_dataset(dir.path()), Error);
  write_text(dir.path() / "cohort.json", R"({"format":"other","records":[]})");
  EXPECT_THROW(load_dataset(dir.path()), Error);
}

TEST(DatasetIo, BadSeverityNamesTheValue) {
  TempDir dir("dsio_sev");
  write_dataset(small_cohort(), dir.path());
  auto doc = parse_json_file(dir.path() / "cohort.json");
  doc["records"][0]["severity"]["LAD"] = "blocked";
  write_text(dir.path() / "cohort.json", doc.dump());
  try {
    load_dataset(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("blocked"), std::string::npos);
  }
}

TEST(DatasetIo, FoldsJsonRoundTrip) {
  FoldAssignment f;
  f.k = 3;
  f.fold_of_patient = {{"A", 0}, {"B", 2}, {"C", 1}};
  const auto j = folds_to_json(f, 17);
  EXPECT_EQ(j["seed"], 17);
  const auto back = folds_from_json(j);
  EXPECT_EQ(back.k, 3u);
  EXPECT_EQ(back.fold_of_patient, f.fold_of_patient);
  auto bad = j;
  bad["patients"]["A"] = 3;
  EXPECT_THROW(folds_from_json(bad), Error);
}
