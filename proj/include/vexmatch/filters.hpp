#pragma once

#include <optional>
#include <set>
#include <vector>

#include "vexmatch/model.hpp"

namespace vexmatch {

/// Dataset restriction. Every present predicate must hold (conjunction);
/// an absent subset, id_systems or status_in means "no restriction".
struct FilterSpec {
  std::optional<Subset> subset;  // nullopt is the complete dataset
  std::optional<std::set<IdSystem>> id_systems;
  bool exclude_temp = false;
  std::optional<std::set<Status>> status_in;

  bool operator==(const FilterSpec &) const = default;
};

/// Throws ValidationError for contradictory specs (TEMP both required and
/// excluded, or an empty allow-set).
void validate(const FilterSpec &spec);

/// Records passing the spec, in input order. With a subset restriction every
/// record's image must appear in the manifest; otherwise throws DataError
/// naming the image.
std::vector<VulnRecord> apply_filter(const std::vector<VulnRecord> &records, const FilterSpec &spec,
                                     const DatasetManifest &manifest);

/// Share of records whose id_system is in the allow-set. Empty input counts
/// as full coverage (1.0).
double coverage_fraction(const std::vector<VulnRecord> &records, const std::set<IdSystem> &id_systems);

}  // namespace vexmatch
