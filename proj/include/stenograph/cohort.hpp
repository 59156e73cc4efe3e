#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "stenograph/common.hpp"

namespace stenograph {

// ---------------------------------------------------------------------------
// Timestamps: UTC seconds since the Unix epoch, exchanged as RFC-3339 text.

struct Timestamp {
  std::int64_t seconds = 0;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

inline std::string format_rfc3339(Timestamp t) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{t.seconds}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long long>(hms.seconds().count()));
  return buf;
}

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff](Z|+hh:mm|-hh:mm)"; fractional seconds are
// truncated.
inline Timestamp parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  const std::string s(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%*1[Tt ]%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec,
                  &consumed) < 6) {
    fail(ErrorKind::data, "invalid RFC-3339 timestamp '" + s + "'");
  }
  std::size_t pos = static_cast<std::size_t>(consumed);
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  std::int64_t offset = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    int oh = 0, om = 0;
    if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2) {
      fail(ErrorKind::data, "invalid RFC-3339 offset in '" + s + "'");
    }
    offset = (s[pos] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
    pos += 6;
  } else {
    fail(ErrorKind::data, "RFC-3339 timestamp without zone: '" + s + "'");
  }
  if (pos != s.size()) fail(ErrorKind::data, "trailing characters in timestamp '" + s + "'");
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) {
    fail(ErrorKind::data, "out-of-range date in '" + s + "'");
  }
  const auto secs = sys_days{ymd}.time_since_epoch() + hours{h} + minutes{mi} + seconds{sec};
  return Timestamp{duration_cast<seconds>(secs).count() - offset};
}

// ---------------------------------------------------------------------------
// Labels

// Raw CCTA severity as reported per vessel.
enum class Severity : std::uint8_t { normal, mild, moderate, severe, occluded };

inline constexpr std::array<std::string_view, 5> kSeverityNames = {"normal", "mild", "moderate",
                                                                   "severe", "occluded"};

inline std::string_view severity_name(Severity s) {
  return kSeverityNames[static_cast<std::size_t>(s)];
}

inline Severity parse_severity(std::string_view token) {
  for (std::size_t i = 0; i < kSeverityNames.size(); ++i) {
    if (kSeverityNames[i] == token) return static_cast<Severity>(i);
  }
  fail(ErrorKind::data, "unknown stenosis severity '" + std::string(token) + "'");
}

// Ordinal analysis code: 0 no obvious stenosis, 1 mild, 2 moderate,
// 3 severe or occluded.
enum class StenosisGrade : std::uint8_t { none = 0, mild = 1, moderate = 2, severe = 3 };

inline constexpr int grade_code(StenosisGrade g) { return static_cast<int>(g); }

inline StenosisGrade grade_from_code(int code) {
  if (code < 0 || code > 3) fail(ErrorKind::data, "stenosis grade " + std::to_string(code) + " outside 0..3");
  return static_cast<StenosisGrade>(code);
}

inline StenosisGrade encode_label(Severity s) {
  switch (s) {
    case Severity::normal: return StenosisGrade::none;
    case Severity::mild: return StenosisGrade::mild;
    case Severity::moderate: return StenosisGrade::moderate;
    case Severity::severe:
    case Severity::occluded: return StenosisGrade::severe;
  }
  fail(ErrorKind::data, "invalid severity value");
}

inline StenosisGrade encode_label(std::string_view token) { return encode_label(parse_severity(token)); }

struct VesselLabels {
  std::array<Severity, kNumVessels> severity{};
  Timestamp ccta_time;

  StenosisGrade grade(Vessel v) const { return encode_label(severity[index_of(v)]); }
  bool severe(Vessel v) const { return grade(v) == StenosisGrade::severe; }
  std::array<double, kNumVessels> targets() const {
    std::array<double, kNumVessels> t{};
    for (Vessel v : kVessels) t[index_of(v)] = severe(v) ? 1.0 : 0.0;
    return t;
  }
};

// ---------------------------------------------------------------------------
// ECG records

enum class Sex : std::uint8_t { male, female };

inline std::string_view sex_name(Sex s) { return s == Sex::male ? "male" : "female"; }

inline Sex parse_sex(std::string_view token) {
  if (token == "male" || token == "M" || token == "m") return Sex::male;
  if (token == "female" || token == "F" || token == "f") return Sex::female;
  fail(ErrorKind::data, "unknown sex '" + std::string(token) + "'");
}

// 12-lead signal in millivolts, lead-major: data[lead * n_samples + i].
// Lead order is fixed to kLeadNames.
struct Signal {
  std::size_t n_samples = 0;
  std::vector<double> data;

  Signal() = default;
  explicit Signal(std::size_t n) : n_samples(n), data(kNumLeads * n, 0.0) {}

  std::span<double> lead(std::size_t l) { return {data.data() + l * n_samples, n_samples}; }
  std::span<const double> lead(std::size_t l) const {
    return {data.data() + l * n_samples, n_samples};
  }
  friend bool operator==(const Signal&, const Signal&) = default;
};

struct EcgRecord {
  std::string ecg_id;
  std::string patient_id;
  Signal signal;
  double fs = 500.0;
  Timestamp ecg_time;
  std::optional<bool> normal_ecg;
  std::optional<double> age;
  std::optional<Sex> sex;

  double duration_s() const { return static_cast<double>(signal.n_samples) / fs; }

  void validate() const {
    if (signal.data.size() != kNumLeads * signal.n_samples) {
      fail(ErrorKind::data, "record " + ecg_id + ": signal is not 12 x " +
                                std::to_string(signal.n_samples));
    }
    if (!(fs > 0.0)) fail(ErrorKind::data, "record " + ecg_id + ": non-positive sampling rate");
    for (double v : signal.data) {
      if (!std::isfinite(v)) fail(ErrorKind::data, "record " + ecg_id + ": non-finite sample");
    }
  }
};

// Lead-wise z-score with population std. Leads with std < 1e-8 become zeros.
inline void zscore_leads(Signal& signal) {
  if (signal.n_samples == 0) fail(ErrorKind::data, "zscore: empty signal");
  const double n = static_cast<double>(signal.n_samples);
  for (std::size_t l = 0; l < kNumLeads; ++l) {
    auto x = signal.lead(l);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    if (sd < 1e-8) {
      std::fill(x.begin(), x.end(), 0.0);
      continue;
    }
    for (double& v : x) v = (v - mean) / sd;
  }
}

inline EcgRecord zscore_normalize(EcgRecord record) {
  if (record.signal.n_samples < 2) {
    fail(ErrorKind::data, "zscore_normalize: record " + record.ecg_id + " has fewer than 2 samples");
  }
  zscore_leads(record.signal);
  return record;
}

// ---------------------------------------------------------------------------
// Cohort

struct FollowUp {
  bool event = false;
  int days = 0;
};

struct CohortRecord {
  EcgRecord ecg;
  VesselLabels labels;
  std::optional<FollowUp> follow_up;

  double hours_to_ccta() const {
    return static_cast<double>(labels.ccta_time.seconds - ecg.ecg_time.seconds) / 3600.0;
  }
};

struct Cohort {
  std::vector<CohortRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  std::vector<std::string> patients() const {
    std::vector<std::string> ids;
    std::unordered_set<std::string> seen;
    for (const auto& r : records) {
      if (seen.insert(r.ecg.patient_id).second) ids.push_back(r.ecg.patient_id);
    }
    return ids;
  }

  bool has_follow_up() const {
    return !records.empty() &&
           std::all_of(records.begin(), records.end(), [](const auto& r) { return r.follow_up.has_value(); });
  }

  // Unique ecg_ids, ECG strictly before CCTA, well-formed signals.
  void validate() const {
    std::unordered_set<std::string> ids;
    for (const auto& r : records) {
      if (!ids.insert(r.ecg.ecg_id).second) fail(ErrorKind::data, "duplicate ecg_id " + r.ecg.ecg_id);
      if (!(r.ecg.ecg_time < r.labels.ccta_time)) {
        fail(ErrorKind::data, "record " + r.ecg.ecg_id + ": ECG is not earlier than CCTA");
      }
      r.ecg.validate();
    }
  }

  Cohort subset(std::span<const std::size_t> indices) const {
    Cohort c;
    c.records.reserve(indices.size());
    for (std::size_t i : indices) c.records.push_back(records.at(i));
    return c;
  }
};

// ---------------------------------------------------------------------------
// Subgroups. Boundaries: age>=65 includes 65; dt<=3h includes exactly 3 h.

enum class Subgroup : std::uint8_t {
  age_under_65,
  age_65_plus,
  male,
  female,
  delta_le_3h,
  delta_gt_3h,
  normal_ecg,
};

inline constexpr std::array<Subgroup, 7> kAllSubgroups = {
    Subgroup::age_under_65, Subgroup::age_65_plus, Subgroup::male,      Subgroup::female,
    Subgroup::delta_le_3h,  Subgroup::delta_gt_3h, Subgroup::normal_ecg};

inline std::string_view subgroup_name(Subgroup s) {
  switch (s) {
    case Subgroup::age_under_65: return "age<65";
    case Subgroup::age_65_plus: return "age>=65";
    case Subgroup::male: return "male";
    case Subgroup::female: return "female";
    case Subgroup::delta_le_3h: return "dt<=3h";
    case Subgroup::delta_gt_3h: return "dt>3h";
    case Subgroup::normal_ecg: return "normal_ecg";
  }
  return "?";
}

inline Subgroup parse_subgroup(std::string_view name) {
  for (Subgroup s : kAllSubgroups) {
    if (subgroup_name(s) == name) return s;
  }
  fail(ErrorKind::config, "unknown subgroup '" + std::string(name) + "'");
}

inline std::vector<std::size_t> subgroup_indices(const Cohort& cohort, Subgroup criterion) {
  std::vector<std::size_t> out;
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < cohort.records.size(); ++i) {
    const auto& r = cohort.records[i];
    std::optional<bool> keep;
    switch (criterion) {
      case Subgroup::age_under_65:
        if (r.ecg.age) keep = *r.ecg.age < 65.0;
        break;
      case Subgroup::age_65_plus:
        if (r.ecg.age) keep = *r.ecg.age >= 65.0;
        break;
      case Subgroup::male:
        if (r.ecg.sex) keep = *r.ecg.sex == Sex::male;
        break;
      case Subgroup::female:
        if (r.ecg.sex) keep = *r.ecg.sex == Sex::female;
        break;
      case Subgroup::delta_le_3h:
        keep = r.labels.ccta_time.seconds - r.ecg.ecg_time.seconds <= 3 * 3600;
        break;
      case Subgroup::delta_gt_3h:
        keep = r.labels.ccta_time.seconds - r.ecg.ecg_time.seconds > 3 * 3600;
        break;
      case Subgroup::normal_ecg:
        if (r.ecg.normal_ecg) keep = *r.ecg.normal_ecg;
        break;
    }
    if (!keep) {
      missing.push_back(r.ecg.ecg_id);
    } else if (*keep) {
      out.push_back(i);
    }
  }
  if (!missing.empty()) {
    std::string msg = "subgroup " + std::string(subgroup_name(criterion)) +
                      ": missing metadata for ecg_ids:";
    for (const auto& id : missing) msg += " " + id;
    fail(ErrorKind::data, msg);
  }
  return out;
}

inline Cohort subgroup_filter(const Cohort& cohort, Subgroup criterion) {
  const auto idx = subgroup_indices(cohort, criterion);
  return cohort.subset(idx);
}

}  // namespace stenograph
