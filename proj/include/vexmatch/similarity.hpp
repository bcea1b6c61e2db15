#pragma once

// Set agreement between tool configurations.
//
// jaccard() is |A∩B| / |A∪B|. tversky() is the n-ary form
// |A_1 ∩ ... ∩ A_n| / |A_1 ∪ ... ∪ A_n|; despite the name there are no
// asymmetry weights. When every input set is empty the score is 1 and the
// result is flagged, so "nothing found anywhere" stays distinguishable from
// genuine full agreement.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vexmatch/model.hpp"

namespace vexmatch {

/// Exact cardinalities behind a score.
struct SetOverlap {
  std::size_t intersection = 0;
  std::size_t union_size = 0;

  bool empty_union() const noexcept { return union_size == 0; }
  double score() const noexcept {
    return union_size == 0 ? 1.0 : static_cast<double>(intersection) / static_cast<double>(union_size);
  }
};

SetOverlap overlap(const RecordSet &a, const RecordSet &b);
/// Throws ValidationError for fewer than two sets.
SetOverlap overlap(std::span<const RecordSet *const> sets);

double jaccard(const RecordSet &a, const RecordSet &b);
/// Throws ValidationError for fewer than two sets.
double tversky(const std::vector<RecordSet> &sets);

/// values[i][j] = jaccard(sets[i], sets[j]), labels in input order.
/// Throws ValidationError on duplicate labels.
SimilarityMatrix pairwise_matrix(const std::vector<RecordSet> &sets);

/// All C(n, k) label subsets, each sorted, in lexicographic order.
/// Throws ValidationError unless 2 <= k <= n and labels are distinct.
std::vector<std::vector<std::string>> group_combinations(std::vector<std::string> labels, std::size_t k);

struct GroupAgreement {
  std::vector<std::string> member_labels;
  double tversky = 0.0;
  std::size_t intersection_count = 0;
  std::size_t union_count = 0;

  bool empty_union() const noexcept { return union_count == 0; }
};

using SetsByLabel = std::map<std::string, RecordSet>;

/// One agreement per group. Throws ValidationError naming an unresolved
/// label or a group with fewer than two members.
std::vector<GroupAgreement> group_agreement(const SetsByLabel &sets_by_label,
                                            const std::vector<std::vector<std::string>> &groups);

struct Consensus {
  GroupAgreement agreement;
  RecordSet keys;  // labeled "consensus(<members>)"
};

/// Keys reported by every member.
Consensus consensus(const SetsByLabel &sets_by_label, const std::vector<std::string> &members);

/// Pairwise Jaccard over the configs' advisory-database name sets.
SimilarityMatrix database_similarity(const std::vector<ToolConfig> &configs);

/// Which cells of a matrix become paired observations.
enum class CellSelection {
  kUpperTriangle,  // n(n-1)/2 off-diagonal cells
  kAllCells,       // all n*n cells, diagonal and mirrored entries included
};

/// Pearson correlation of two equal-length samples. Throws ValidationError on
/// size mismatch or fewer than two observations, NumericDomainError when
/// either sample has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Throws ValidationError unless both matrices carry identical label lists
/// with at least three labels.
double pearson_between_matrices(const SimilarityMatrix &m1, const SimilarityMatrix &m2,
                                CellSelection cells = CellSelection::kUpperTriangle);

/// The cells selected for correlation, row-major.
std::vector<double> matrix_observations(const SimilarityMatrix &m, CellSelection cells);

}  // namespace vexmatch
