#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bsdp/graph_sequence.hpp"
#include "bsdp/grid_codec.hpp"
#include "bsdp/station_graph.hpp"

namespace bsdp {

// Mann-Whitney ROC AUC with averaged tied ranks; labels are 0/1.
// Throws when only one class is present.
double roc_auc(std::span<const double> scores,
               std::span<const unsigned char> labels);

struct AucOptions {
  std::size_t max_pairs = 100000;  // seeded subsample above this many pairs
  std::uint64_t seed = 12345;
};

// Scores every unordered point pair by predicted co-membership (outliers are
// members of nothing) against same-true-cluster ground truth.
double pairwise_comembership_auc(std::span<const int> predicted,
                                 std::span<const int> truth,
                                 const AucOptions& options = {});

double vector_rmse(std::span<const double> a, std::span<const double> b);

// RMSE between the codec encodings of the two graphs, in [0, 1] cell units.
double graph_rmse(const StationGraph& predicted, const StationGraph& actual,
                  const GridCodec& codec);

struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // subset index -> fold id in [0, k)

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
};

// Seeded shuffle, then contiguous near-equal groups (first n mod k folds get
// the extra element).
FoldPlan kfold_splits(std::size_t n_subsets, int k, std::uint64_t seed);

double mean(std::span<const double> values);

// The last observed graph, unchanged, as the prediction for the next period.
const StationGraph& persistence_baseline(const GraphSequence& gs);

}  // namespace bsdp
