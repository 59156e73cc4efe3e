#pragma once

// Dataset directory:
//   cohort.json                  record metadata and labels
//   signals/<ecg_id>.bin         float32 little-endian, 12 x N row-major
//   signals/<ecg_id>.meta.json   {fs, n_samples, lead_order}

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "stenograph/cohort.hpp"
#include "stenograph/digest.hpp"
#include "stenograph/folds.hpp"

namespace stenograph {

namespace fs = std::filesystem;

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::data, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::data, "short write to " + path.string());
}

inline nlohmann::json parse_json_file(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

inline nlohmann::json record_to_json(const CohortRecord& r) {
  nlohmann::json j = {{"ecg_id", r.ecg.ecg_id},
                      {"patient_id", r.ecg.patient_id},
                      {"ecg_time", format_rfc3339(r.ecg.ecg_time)},
                      {"ccta_time", format_rfc3339(r.labels.ccta_time)}};
  j["age"] = r.ecg.age ? nlohmann::json(*r.ecg.age) : nlohmann::json(nullptr);
  j["sex"] = r.ecg.sex ? nlohmann::json(sex_name(*r.ecg.sex)) : nlohmann::json(nullptr);
  j["normal_ecg"] = r.ecg.normal_ecg ? nlohmann::json(*r.ecg.normal_ecg) : nlohmann::json(nullptr);
  nlohmann::json sev = nlohmann::json::object();
  for (Vessel v : kVessels) sev[std::string(vessel_name(v))] = severity_name(r.labels.severity[index_of(v)]);
  j["severity"] = sev;
  if (r.follow_up) j["follow_up"] = {{"event", r.follow_up->event}, {"days", r.follow_up->days}};
  return j;
}

inline void write_signal(const fs::path& dir, const EcgRecord& ecg) {
  std::string bytes;
  bytes.reserve(ecg.signal.data.size() * 4);
  for (double v : ecg.signal.data) {
    const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
  }
  write_text(dir / (ecg.ecg_id + ".bin"), bytes);
  nlohmann::json lead_order = nlohmann::json::array();
  for (auto name : kLeadNames) lead_order.push_back(name);
  const nlohmann::json meta = {{"fs", ecg.fs}, {"n_samples", ecg.signal.n_samples}, {"lead_order", lead_order}};
  write_text(dir / (ecg.ecg_id + ".meta.json"), meta.dump(2) + "\n");
}

inline void write_dataset(const Cohort& cohort, const fs::path& dir) {
  cohort.validate();
  fs::create_directories(dir / "signals");
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : cohort.records) {
    records.push_back(record_to_json(r));
    write_signal(dir / "signals", r.ecg);
  }
  const nlohmann::json doc = {{"format", "stenograph-cohort"}, {"version", 1}, {"records", records}};
  write_text(dir / "cohort.json", doc.dump(1) + "\n");
}

inline Signal read_signal(const fs::path& dir, const std::string& ecg_id, double* fs_out) {
  const auto meta = parse_json_file(dir / (ecg_id + ".meta.json"));
  std::size_t n = 0;
  try {
    n = meta.at("n_samples").get<std::size_t>();
    *fs_out = meta.at("fs").get<double>();
    const auto order = meta.at("lead_order").get<std::vector<std::string>>();
    if (order.size() != kNumLeads) fail(ErrorKind::data, ecg_id + ": lead_order must list 12 leads");
    for (std::size_t l = 0; l < kNumLeads; ++l) {
      if (order[l] != kLeadNames[l]) fail(ErrorKind::data, ecg_id + ": unexpected lead order (lead " + order[l] + ")");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, ecg_id + ".meta.json: " + e.what());
  }
  const std::string bytes = read_text(dir / (ecg_id + ".bin"));
  if (bytes.size() != kNumLeads * n * 4) {
    fail(ErrorKind::data, ecg_id + ".bin: " + std::to_string(bytes.size()) + " bytes, expected 12 x " +
                              std::to_string(n) + " float32");
  }
  Signal s(n);
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
    s.data[i] = static_cast<double>(std::bit_cast<float>(u));
  }
  return s;
}

struct LoadOptions {
  // Keep only the latest ECG before each CCTA exam.
  bool closest_only = false;
};

inline Cohort keep_closest(const Cohort& cohort) {
  std::map<std::pair<std::string, std::int64_t>, std::size_t> best;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& r = cohort.records[i];
    const auto key = std::pair{r.ecg.patient_id, r.labels.ccta_time.seconds};
    const auto it = best.find(key);
    if (it == best.end() || cohort.records[it->second].ecg.ecg_time < r.ecg.ecg_time) best[key] = i;
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& r = cohort.records[i];
    if (best.at({r.ecg.patient_id, r.labels.ccta_time.seconds}) == i) keep.push_back(i);
  }
  return cohort.subset(keep);
}

inline Cohort load_dataset(const fs::path& dir, const LoadOptions& opt = {}) {
  const auto doc = parse_json_file(dir / "cohort.json");
  Cohort cohort;
  try {
    if (doc.at("format") != "stenograph-cohort") fail(ErrorKind::data, "cohort.json: unknown format");
    for (const auto& j : doc.at("records")) {
      CohortRecord r;
      r.ecg.ecg_id = j.at("ecg_id").get<std::string>();
      r.ecg.patient_id = j.at("patient_id").get<std::string>();
      r.ecg.ecg_time = parse_rfc3339(j.at("ecg_time").get<std::string>());
      r.labels.ccta_time = parse_rfc3339(j.at("ccta_time").get<std::string>());
      if (j.contains("age") && !j["age"].is_null()) r.ecg.age = j["age"].get<double>();
      if (j.contains("sex") && !j["sex"].is_null()) r.ecg.sex = parse_sex(j["sex"].get<std::string>());
      if (j.contains("normal_ecg") && !j["normal_ecg"].is_null()) r.ecg.normal_ecg = j["normal_ecg"].get<bool>();
      const auto& sev = j.at("severity");
      for (Vessel v : kVessels) {
        r.labels.severity[index_of(v)] = parse_severity(sev.at(std::string(vessel_name(v))).get<std::string>());
      }
      if (j.contains("follow_up") && !j["follow_up"].is_null()) {
        r.follow_up = FollowUp{j["follow_up"].at("event").get<bool>(), j["follow_up"].at("days").get<int>()};
      }
      cohort.records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, "cohort.json: " + std::string(e.what()));
  }
  if (opt.closest_only) cohort = keep_closest(cohort);
  for (auto& r : cohort.records) r.ecg.signal = read_signal(dir / "signals", r.ecg.ecg_id, &r.ecg.fs);
  cohort.validate();
  return cohort;
}

// Digest over cohort.json and every signal file, in record order.
inline std::string dataset_digest(const fs::path& dir) {
  Digest d;
  d.update(read_text(dir / "cohort.json"));
  const auto doc = parse_json_file(dir / "cohort.json");
  for (const auto& j : doc.at("records")) {
    const std::string id = j.at("ecg_id").get<std::string>();
    d.update(read_text(dir / "signals" / (id + ".bin")));
    d.update(read_text(dir / "signals" / (id + ".meta.json")));
  }
  return d.hex();
}

inline nlohmann::json folds_to_json(const FoldAssignment& f, std::uint64_t seed) {
  nlohmann::json patients = nlohmann::json::object();
  for (const auto& [p, k] : f.fold_of_patient) patients[p] = k;
  return {{"format", "stenograph-folds"}, {"k", f.k}, {"seed", seed}, {"patients", patients}};
}

inline FoldAssignment folds_from_json(const nlohmann::json& j) {
  FoldAssignment f;
  try {
    f.k = j.at("k").get<std::size_t>();
    for (const auto& [p, k] : j.at("patients").items()) {
      f.fold_of_patient[p] = k.get<std::size_t>();
      if (f.fold_of_patient[p] >= f.k) fail(ErrorKind::data, "folds.json: patient " + p + " in fold >= k");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, "folds.json: " + std::string(e.what()));
  }
  return f;
}

}  // namespace stenograph
