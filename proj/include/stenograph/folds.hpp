#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "stenograph/cohort.hpp"
#include "stenograph/rng.hpp"

namespace stenograph {

struct FoldAssignment {
  std::size_t k = 0;
  std::map<std::string, std::size_t> fold_of_patient;

  std::size_t fold_of(const std::string& patient_id) const {
    const auto it = fold_of_patient.find(patient_id);
    if (it == fold_of_patient.end()) fail(ErrorKind::data, "patient " + patient_id + " has no fold");
    return it->second;
  }

  std::vector<std::string> patients_in(std::size_t fold) const {
    std::vector<std::string> out;
    for (const auto& [p, f] : fold_of_patient) {
      if (f == fold) out.push_back(p);
    }
    return out;
  }

  // Record indices in / out of a fold.
  std::vector<std::size_t> validation_indices(const Cohort& cohort, std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      if (fold_of(cohort.records[i].ecg.patient_id) == fold) out.push_back(i);
    }
    return out;
  }
  std::vector<std::size_t> training_indices(const Cohort& cohort, std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      if (fold_of(cohort.records[i].ecg.patient_id) != fold) out.push_back(i);
    }
    return out;
  }
};

// Greedy iterative stratification over patient groups.
//
// Patients are visited in descending order of positive-label count (ties in a
// seeded random order). Each goes to the fold, among those with room under
// ceil(n_records / k), whose positive counts move least away from (or most
// toward) the per-fold targets P_v / k, with each vessel's change scaled by
// its target. Ties: smallest fold, then seeded RNG.
inline FoldAssignment stratified_group_kfold(const Cohort& cohort, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::config, "k-fold split needs k >= 2");
  struct Group {
    std::string patient;
    std::size_t records = 0;
    std::array<double, kNumVessels> positives{};
    double total_positives = 0.0;
  };
  std::vector<Group> groups;
  std::unordered_map<std::string, std::size_t> index;
  std::array<double, kNumVessels> global{};
  for (const auto& r : cohort.records) {
    auto [it, inserted] = index.try_emplace(r.ecg.patient_id, groups.size());
    if (inserted) groups.push_back(Group{r.ecg.patient_id});
    Group& g = groups[it->second];
    ++g.records;
    for (Vessel v : kVessels) {
      if (r.labels.severe(v)) {
        g.positives[index_of(v)] += 1.0;
        g.total_positives += 1.0;
        global[index_of(v)] += 1.0;
      }
    }
  }
  if (groups.size() < k) {
    fail(ErrorKind::data, "cannot split " + std::to_string(groups.size()) + " patients into " +
                              std::to_string(k) + " folds");
  }
  const double n_records = static_cast<double>(cohort.size());
  std::array<double, kNumVessels> target{};
  for (std::size_t v = 0; v < kNumVessels; ++v) target[v] = global[v] / static_cast<double>(k);

  Rng rng = make_rng(seed, {hash_tag("stratified_group_kfold")});
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return groups[a].total_positives > groups[b].total_positives;
  });

  const std::size_t capacity = static_cast<std::size_t>(std::ceil(n_records / static_cast<double>(k)));
  std::vector<std::size_t> fold_records(k, 0);
  std::vector<std::array<double, kNumVessels>> fold_pos(k, std::array<double, kNumVessels>{});

  FoldAssignment out;
  out.k = k;
  for (std::size_t gi : order) {
    const Group& g = groups[gi];
    std::vector<std::size_t> candidates;
    for (std::size_t f = 0; f < k; ++f) {
      if (fold_records[f] + g.records <= capacity) candidates.push_back(f);
    }
    if (candidates.empty()) {
      const std::size_t smallest = *std::min_element(fold_records.begin(), fold_records.end());
      for (std::size_t f = 0; f < k; ++f) {
        if (fold_records[f] == smallest) candidates.push_back(f);
      }
    }
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best;
    for (std::size_t f : candidates) {
      double cost = 0.0;
      for (std::size_t v = 0; v < kNumVessels; ++v) {
        if (g.positives[v] == 0.0) continue;
        const double before = std::abs(fold_pos[f][v] - target[v]);
        const double after = std::abs(fold_pos[f][v] + g.positives[v] - target[v]);
        cost += (after - before) / std::max(target[v], 1.0);
      }
      constexpr double eps = 1e-12;
      if (cost < best_cost - eps) {
        best_cost = cost;
        best = {f};
      } else if (std::abs(cost - best_cost) <= eps) {
        best.push_back(f);
      }
    }
    const std::size_t min_size = std::accumulate(
        best.begin(), best.end(), std::numeric_limits<std::size_t>::max(),
        [&](std::size_t m, std::size_t f) { return std::min(m, fold_records[f]); });
    std::erase_if(best, [&](std::size_t f) { return fold_records[f] != min_size; });
    const std::size_t chosen =
        best.size() == 1 ? best[0]
                         : best[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(best.size()) - 1))];
    fold_records[chosen] += g.records;
    for (std::size_t v = 0; v < kNumVessels; ++v) fold_pos[chosen][v] += g.positives[v];
    out.fold_of_patient[g.patient] = chosen;
  }
  return out;
}

}  // namespace stenograph
