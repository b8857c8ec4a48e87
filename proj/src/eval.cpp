#include "bsdp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bsdp/cluster.hpp"
#include "bsdp/error.hpp"

namespace bsdp {

double roc_auc(std::span<const double> scores,
               std::span<const unsigned char> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw ContractError("AUC needs equally many scores and labels (>= 1)");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Average ranks across score ties, then Mann-Whitney U.
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]]) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw NumericalError("AUC undefined: every pair belongs to one class");
  }
  const double u = positive_rank_sum -
                   static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

inline double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double pairwise_comembership_auc(std::span<const int> predicted,
                                 std::span<const int> truth,
                                 const AucOptions& options) {
  if (predicted.size() != truth.size()) {
    throw ContractError("label lists differ in length");
  }
  const std::size_t n = predicted.size();
  if (n < 2) throw InvalidInputError("need >= 2 points for pairwise AUC");

  auto pair_score = [&](std::size_t a, std::size_t b) {
    return predicted[a] != kOutlier && predicted[a] == predicted[b] ? 1.0 : 0.0;
  };
  auto pair_label = [&](std::size_t a, std::size_t b) {
    return static_cast<unsigned char>(truth[a] == truth[b] ? 1 : 0);
  };

  std::vector<double> scores;
  std::vector<unsigned char> labels;
  const std::size_t total_pairs = n * (n - 1) / 2;
  if (total_pairs <= options.max_pairs) {
    scores.reserve(total_pairs);
    labels.reserve(total_pairs);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        scores.push_back(pair_score(a, b));
        labels.push_back(pair_label(a, b));
      }
    }
  } else {
    std::mt19937_64 rng(options.seed);
    scores.reserve(options.max_pairs);
    labels.reserve(options.max_pairs);
    for (std::size_t k = 0; k < options.max_pairs; ++k) {
      std::size_t a = static_cast<std::size_t>(unit(rng) * n) % n;
      std::size_t b = static_cast<std::size_t>(unit(rng) * n) % n;
      while (b == a) b = static_cast<std::size_t>(unit(rng) * n) % n;
      scores.push_back(pair_score(a, b));
      labels.push_back(pair_label(a, b));
    }
  }
  return roc_auc(scores, labels);
}

double vector_rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw ContractError("RMSE needs equal-length non-empty vectors");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

double graph_rmse(const StationGraph& predicted, const StationGraph& actual,
                  const GridCodec& codec) {
  return vector_rmse(encode_graph(predicted, codec),
                     encode_graph(actual, codec));
}

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan kfold_splits(std::size_t n_subsets, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  if (n_subsets < static_cast<std::size_t>(k)) {
    throw InvalidInputError("fewer subsets than folds");
  }

  std::vector<std::size_t> order(n_subsets);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n_subsets - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(unit(rng) * (i + 1)) % (i + 1);
    std::swap(order[i], order[j]);
  }

  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(n_subsets, 0);
  const std::size_t base = n_subsets / static_cast<std::size_t>(k);
  const std::size_t extra = n_subsets % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t t = 0; t < size; ++t) {
      plan.assignment[order[pos++]] = f;
    }
  }
  return plan;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw InvalidInputError("mean of an empty set");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

const StationGraph& persistence_baseline(const GraphSequence& gs) {
  if (gs.graphs.empty()) {
    throw InvalidInputError("persistence baseline needs a non-empty sequence");
  }
  return gs.graphs.back();
}

}  // namespace bsdp
