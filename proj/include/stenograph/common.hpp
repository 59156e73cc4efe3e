#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace stenograph {

// Error categories map onto CLI exit codes (config=2, data=3, numerical=4).
enum class ErrorKind {
  config,
  data,
  shape,
  version,
  corrupt_file,
  numerical,
  undefined_metric,
};

inline std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::shape: return "shape";
    case ErrorKind::version: return "version";
    case ErrorKind::corrupt_file: return "corrupt_file";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::undefined_metric: return "undefined_metric";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

// ---------------------------------------------------------------------------
// Vessels and leads

enum class Vessel : std::uint8_t { RCA = 0, LM = 1, LAD = 2, LCX = 3 };

inline constexpr std::size_t kNumVessels = 4;
inline constexpr std::array<Vessel, kNumVessels> kVessels = {Vessel::RCA, Vessel::LM,
                                                            Vessel::LAD, Vessel::LCX};

inline constexpr std::size_t index_of(Vessel v) { return static_cast<std::size_t>(v); }

inline std::string_view vessel_name(Vessel v) {
  static constexpr std::array<std::string_view, kNumVessels> names = {"RCA", "LM", "LAD",
                                                                     "LCX"};
  return names[index_of(v)];
}

inline Vessel parse_vessel(std::string_view name) {
  for (Vessel v : kVessels) {
    if (vessel_name(v) == name) return v;
  }
  fail(ErrorKind::data, "unknown vessel '" + std::string(name) + "'");
}

inline constexpr std::size_t kNumLeads = 12;
inline constexpr std::array<std::string_view, kNumLeads> kLeadNames = {
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"};

namespace lead {
inline constexpr std::size_t I = 0, II = 1, III = 2, aVR = 3, aVL = 4, aVF = 5, V1 = 6,
                             V2 = 7, V3 = 8, V4 = 9, V5 = 10, V6 = 11;
}  // namespace lead

inline std::size_t lead_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumLeads; ++i) {
    if (kLeadNames[i] == name) return i;
  }
  fail(ErrorKind::data, "unknown lead '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Work distribution. Items are claimed dynamically; callers must make the
// per-item work independent so results do not depend on the thread count.

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::min(resolve_threads(threads), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace stenograph
