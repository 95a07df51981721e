#include "lma/synthetic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lma/hashing.hpp"

namespace lma {

PlantedPair make_planted_pair(double jaccard, double sparsity, std::uint64_t rows) {
  if (jaccard <= 0.0 || jaccard > 1.0) {
    throw std::invalid_argument("make_planted_pair: J must be in (0, 1]");
  }
  if (sparsity <= 0.0 || sparsity > 1.0) {
    throw std::invalid_argument("make_planted_pair: s must be in (0, 1]");
  }
  const auto per_set = static_cast<std::uint64_t>(std::llround(sparsity * static_cast<double>(rows)));
  if (per_set == 0) throw std::invalid_argument("make_planted_pair: s * n rounds to zero");
  auto shared = static_cast<std::uint64_t>(
      std::llround(2.0 * static_cast<double>(per_set) * jaccard / (1.0 + jaccard)));
  if (shared > per_set) shared = per_set;
  const std::uint64_t union_size = 2 * per_set - shared;
  if (union_size > rows) {
    throw std::invalid_argument("make_planted_pair: infeasible (J, s); union exceeds n");
  }

  PlantedPair out;
  out.sparsity = sparsity;
  out.realized_jaccard = static_cast<double>(shared) / static_cast<double>(union_size);
  out.v1 = out.index.register_value(0, "x");
  out.v2 = out.index.register_value(0, "y");
  // Shared block first, then the two private blocks. Subsampling is uniform over
  // rows, so the placement does not matter.
  for (std::uint64_t r = 0; r < shared; ++r) {
    out.index.add_occurrence(out.v1, static_cast<SampleId>(r));
    out.index.add_occurrence(out.v2, static_cast<SampleId>(r));
  }
  for (std::uint64_t r = shared; r < per_set; ++r) {
    out.index.add_occurrence(out.v1, static_cast<SampleId>(r));
  }
  for (std::uint64_t r = per_set; r < union_size; ++r) {
    out.index.add_occurrence(out.v2, static_cast<SampleId>(r));
  }
  out.index.set_sample_count(rows);
  return out;
}

ClusterDataset make_cluster_dataset(const ClusterDatasetSpec& spec) {
  if (spec.clusters == 0 || spec.cat_features == 0 || spec.rows == 0) {
    throw std::invalid_argument("make_cluster_dataset: empty dimensions");
  }
  if (spec.column_noise < 0.0 || spec.column_noise >= 1.0) {
    throw std::invalid_argument("make_cluster_dataset: column_noise must be in [0, 1)");
  }

  ClusterDataset out;
  out.value_defs.reserve(static_cast<std::size_t>(spec.cat_features) * spec.clusters);
  for (std::uint32_t f = 0; f < spec.cat_features; ++f) {
    for (std::uint32_t c = 0; c < spec.clusters; ++c) {
      out.value_defs.push_back(ValueRecord{f, "c" + std::to_string(c)});
    }
  }

  SplitMix64 rng(spec.seed);
  out.cluster_logits.resize(spec.clusters);
  for (auto& logit : out.cluster_logits) logit = rng.next_gaussian() * spec.logit_scale;

  auto& table = out.table;
  table.rows = spec.rows;
  table.dense_cols = spec.dense_features;
  table.cat_cols = spec.cat_features;
  table.dense.resize(spec.rows * spec.dense_features);
  table.cats.resize(spec.rows * spec.cat_features);
  table.labels.resize(spec.rows);

  for (std::uint64_t r = 0; r < spec.rows; ++r) {
    const auto z = static_cast<std::uint32_t>(rng.uniform_below(spec.clusters));
    const double p = 1.0 / (1.0 + std::exp(-out.cluster_logits[z]));
    table.labels[r] = rng.next_double() < p ? 1 : 0;
    for (std::uint32_t f = 0; f < spec.cat_features; ++f) {
      std::uint32_t c = z;
      if (spec.column_noise > 0.0 && rng.next_double() < spec.column_noise) {
        c = static_cast<std::uint32_t>(rng.uniform_below(spec.clusters));
      }
      table.cats[r * spec.cat_features + f] = f * spec.clusters + c;
    }
    for (std::uint32_t k = 0; k < spec.dense_features; ++k) {
      table.dense[r * spec.dense_features + k] = rng.next_gaussian();
    }
  }
  return out;
}

}  // namespace lma
