#include "vexmatch/filters.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "vexmatch/error.hpp"

namespace vexmatch {

void validate(const FilterSpec &spec) {
  if (spec.id_systems && spec.id_systems->empty()) throw ValidationError("identifier-system allow-set is empty");
  if (spec.status_in && spec.status_in->empty()) throw ValidationError("status allow-set is empty");
  if (spec.exclude_temp && spec.id_systems &&
      std::all_of(spec.id_systems->begin(), spec.id_systems->end(), [](IdSystem s) { return s == IdSystem::kTemp; })) {
    throw ValidationError("excluding TEMP while allowing only TEMP selects nothing");
  }
}

std::vector<VulnRecord> apply_filter(const std::vector<VulnRecord> &records, const FilterSpec &spec,
                                     const DatasetManifest &manifest) {
  validate(spec);
  std::unordered_map<std::string_view, Subset> subsets;
  if (spec.subset) {
    for (const auto &e : manifest.entries()) subsets.emplace(e.image_ref, e.subset);
  }
  std::vector<VulnRecord> out;
  for (const auto &r : records) {
    if (spec.subset) {
      auto it = subsets.find(r.image_ref);
      if (it == subsets.end()) throw DataError("image '" + r.image_ref + "' is not labeled in the manifest");
      if (it->second != *spec.subset) continue;
    }
    if (spec.id_systems && spec.id_systems->count(r.id_system) == 0) continue;
    if (spec.exclude_temp && r.id_system == IdSystem::kTemp) continue;
    if (spec.status_in && spec.status_in->count(r.status) == 0) continue;
    out.push_back(r);
  }
  return out;
}

double coverage_fraction(const std::vector<VulnRecord> &records, const std::set<IdSystem> &id_systems) {
  if (records.empty()) return 1.0;
  const auto hits = std::count_if(records.begin(), records.end(),
                                  [&](const VulnRecord &r) { return id_systems.count(r.id_system) != 0; });
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

}  // namespace vexmatch
