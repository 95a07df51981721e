#pragma once

#include <cstdint>
#include <vector>

#include "lma/semantics.hpp"

namespace lma {

// Two values over `rows` samples with per-value sparsity s and a planted
// Jaccard similarity: |D_v| = round(s * rows) each, overlapping in
// c = round(2 |D_v| J / (1 + J)) samples. The realized J = c / (2|D_v| - c)
// is reported; it differs from the request only by integer rounding.
struct PlantedPair {
  OccurrenceIndex index;
  ValueId v1 = 0;
  ValueId v2 = 1;
  double realized_jaccard = 0.0;
  double sparsity = 0.0;
};

PlantedPair make_planted_pair(double jaccard, double sparsity, std::uint64_t rows);

// Clustered CTR dataset with a ground-truth similarity structure:
// `clusters` latent concepts, one value per (categorical feature, cluster),
// so |S| = cat_features * clusters. A row draws a cluster z and shows
// cluster z's value in every categorical column, except that each column
// independently resets to a uniformly random cluster with probability
// `column_noise` — which makes same-cluster occurrence sets overlap with
// Jaccard about (1-nu)^2 / (2 - (1-nu)^2). Labels are Bernoulli of a
// per-cluster logit; dense columns are pure noise.
struct ClusterDatasetSpec {
  std::uint32_t clusters = 100;
  std::uint32_t cat_features = 100;
  std::uint32_t dense_features = 2;
  std::uint64_t rows = 200000;
  double column_noise = 0.05;
  double logit_scale = 1.25;
  std::uint64_t seed = 42;
};

struct ClusterDataset {
  EncodedTable table;
  std::vector<ValueRecord> value_defs;   // ValueId i = value_defs[i]
  std::vector<double> cluster_logits;
};

ClusterDataset make_cluster_dataset(const ClusterDatasetSpec& spec);

}  // namespace lma
