#include "vexmatch/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vexmatch/error.hpp"

namespace vexmatch {

SetOverlap overlap(const RecordSet &a, const RecordSet &b) {
  const auto &small = a.size() <= b.size() ? a : b;
  const auto &large = a.size() <= b.size() ? b : a;
  std::size_t common = 0;
  for (const auto &k : small.keys()) common += large.contains(k) ? 1 : 0;
  return {common, a.size() + b.size() - common};
}

SetOverlap overlap(std::span<const RecordSet *const> sets) {
  if (sets.size() < 2) throw ValidationError("agreement needs at least two sets");
  const RecordSet *smallest = *std::min_element(
      sets.begin(), sets.end(), [](const RecordSet *x, const RecordSet *y) { return x->size() < y->size(); });
  std::size_t common = 0;
  for (const auto &k : smallest->keys()) {
    if (std::all_of(sets.begin(), sets.end(), [&](const RecordSet *s) { return s->contains(k); })) ++common;
  }
  std::set<const MatchKey *, bool (*)(const MatchKey *, const MatchKey *)> all(
      [](const MatchKey *x, const MatchKey *y) { return *x < *y; });
  for (const RecordSet *s : sets) {
    for (const auto &k : s->keys()) all.insert(&k);
  }
  return {common, all.size()};
}

double jaccard(const RecordSet &a, const RecordSet &b) { return overlap(a, b).score(); }

double tversky(const std::vector<RecordSet> &sets) {
  std::vector<const RecordSet *> ptrs;
  for (const auto &s : sets) ptrs.push_back(&s);
  return overlap(ptrs).score();
}

SimilarityMatrix pairwise_matrix(const std::vector<RecordSet> &sets) {
  const auto n = sets.size();
  std::vector<std::string> labels;
  for (const auto &s : sets) labels.push_back(s.label());
  if (std::set<std::string>(labels.begin(), labels.end()).size() != n) {
    throw ValidationError("record set labels must be distinct");
  }
  std::vector<double> values(n * n, 1.0);
  std::vector<bool> flags(n * n, false);
  for (std::size_t i = 0; i < n; ++i) {
    flags[i * n + i] = sets[i].empty();
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto o = overlap(sets[i], sets[j]);
      values[i * n + j] = values[j * n + i] = o.score();
      flags[i * n + j] = flags[j * n + i] = o.empty_union();
    }
  }
  return SimilarityMatrix(std::move(labels), std::move(values), std::move(flags));
}

std::vector<std::vector<std::string>> group_combinations(std::vector<std::string> labels, std::size_t k) {
  const auto n = labels.size();
  if (k < 2 || k > n) {
    throw ValidationError("group size " + std::to_string(k) + " outside [2, " + std::to_string(n) + "]");
  }
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
    throw ValidationError("group labels must be distinct");
  }
  std::vector<std::vector<std::string>> out;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    std::vector<std::string> group;
    for (auto i : idx) group.push_back(labels[i]);
    out.push_back(std::move(group));
    // Advance the rightmost index that still has room.
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == n - k + (pos - 1)) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

namespace {

GroupAgreement agreement_for(const SetsByLabel &sets_by_label, const std::vector<std::string> &group) {
  if (group.size() < 2) throw ValidationError("a group needs at least two members");
  std::vector<const RecordSet *> sets;
  for (const auto &label : group) {
    auto it = sets_by_label.find(label);
    if (it == sets_by_label.end()) throw ValidationError("no record set labeled '" + label + "'");
    sets.push_back(&it->second);
  }
  const auto o = overlap(sets);
  return {group, o.score(), o.intersection, o.union_size};
}

}  // namespace

std::vector<GroupAgreement> group_agreement(const SetsByLabel &sets_by_label,
                                            const std::vector<std::vector<std::string>> &groups) {
  std::vector<GroupAgreement> out;
  out.reserve(groups.size());
  for (const auto &g : groups) out.push_back(agreement_for(sets_by_label, g));
  return out;
}

Consensus consensus(const SetsByLabel &sets_by_label, const std::vector<std::string> &members) {
  auto agreement = agreement_for(sets_by_label, members);
  std::string label = "consensus(";
  for (std::size_t i = 0; i < members.size(); ++i) label += (i ? "," : "") + members[i];
  label += ")";
  const RecordSet *first = &sets_by_label.at(members.front());
  RecordSet keys(label);
  for (const auto &k : first->keys()) {
    if (std::all_of(members.begin(), members.end(),
                    [&](const std::string &m) { return sets_by_label.at(m).contains(k); })) {
      keys.insert(k);
    }
  }
  return {std::move(agreement), std::move(keys)};
}

SimilarityMatrix database_similarity(const std::vector<ToolConfig> &configs) {
  std::vector<RecordSet> sets;
  for (const auto &c : configs) {
    // Database names ride in the component slot; the other fields stay constant.
    RecordSet s(c.id());
    for (const auto &db : c.databases) s.insert({"", db, ""});
    sets.push_back(std::move(s));
  }
  return pairwise_matrix(sets);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("samples differ in length");
  if (x.size() < 2) throw ValidationError("correlation needs at least two observations");
  // A constant sample can leave rounding residue in the deviations below.
  const auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (constant(x) || constant(y)) throw NumericDomainError("correlation undefined: a sample has zero variance");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericDomainError("correlation undefined: a sample has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> matrix_observations(const SimilarityMatrix &m, CellSelection cells) {
  std::vector<double> out;
  const auto n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = cells == CellSelection::kAllCells ? 0 : i + 1; j < n; ++j) out.push_back(m.at(i, j));
  }
  return out;
}

double pearson_between_matrices(const SimilarityMatrix &m1, const SimilarityMatrix &m2, CellSelection cells) {
  if (m1.labels() != m2.labels()) throw ValidationError("matrices carry different label lists");
  if (m1.size() < 3) throw ValidationError("correlation between matrices needs at least three labels");
  const auto x = matrix_observations(m1, cells);
  const auto y = matrix_observations(m2, cells);
  return pearson(x, y);
}

}  // namespace vexmatch
