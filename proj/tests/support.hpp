#pragma once

// Small fixtures shared by the unit tests.

#include <filesystem>
#include <string>

#include "stenograph/cohort.hpp"
#include "stenograph/rng.hpp"

namespace stenograph::testing {

inline constexpr std::int64_t kT0 = 1600000000;

inline CohortRecord make_record(const std::string& ecg_id, const std::string& patient_id,
                                std::array<Severity, kNumVessels> severity = {}, std::size_t n = 64,
                                std::uint64_t seed = 1) {
  CohortRecord r;
  r.ecg.ecg_id = ecg_id;
  r.ecg.patient_id = patient_id;
  r.ecg.fs = 100.0;
  r.ecg.signal = Signal(n);
  Rng rng = make_rng(seed, {hash_tag(ecg_id)});
  for (double& v : r.ecg.signal.data) v = normal(rng);
  r.ecg.ecg_time = Timestamp{kT0};
  r.ecg.age = 60;
  r.ecg.sex = Sex::male;
  r.ecg.normal_ecg = true;
  r.labels.severity = severity;
  r.labels.ccta_time = Timestamp{kT0 + 3600};
  r.follow_up = FollowUp{false, 365};
  return r;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("stenograph_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace stenograph::testing
