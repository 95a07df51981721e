#include "lma/allocation.hpp"

#include <mutex>
#include <stdexcept>

namespace lma {

std::string to_string(SchemeVariant v) {
  switch (v) {
    case SchemeVariant::kFull: return "full";
    case SchemeVariant::kNaiveHash: return "hash";
    case SchemeVariant::kLma: return "lma";
  }
  throw std::invalid_argument("unknown scheme variant");
}

SchemeVariant scheme_variant_from_string(std::string_view name) {
  if (name == "full") return SchemeVariant::kFull;
  if (name == "hash") return SchemeVariant::kNaiveHash;
  if (name == "lma") return SchemeVariant::kLma;
  throw std::invalid_argument("unknown scheme variant '" + std::string(name) + "'");
}

void to_json(nlohmann::json& j, const SchemeConfig& c) {
  j = nlohmann::json{{"variant", to_string(c.variant)},
                     {"dim", c.dim},
                     {"budget", c.budget},
                     {"sparse_threshold", c.sparse_threshold},
                     {"seed", c.seed},
                     {"power", c.power},
                     {"rehash_k", c.rehash_k},
                     {"surrogate_k", c.surrogate_k}};
}

void from_json(const nlohmann::json& j, SchemeConfig& c) {
  c.variant = scheme_variant_from_string(j.at("variant").get<std::string>());
  j.at("dim").get_to(c.dim);
  j.at("budget").get_to(c.budget);
  j.at("sparse_threshold").get_to(c.sparse_threshold);
  j.at("seed").get_to(c.seed);
  j.at("power").get_to(c.power);
  j.at("rehash_k").get_to(c.rehash_k);
  j.at("surrogate_k").get_to(c.surrogate_k);
}

double shared_fraction(const LocationRow& r1, const LocationRow& r2) {
  if (r1.slots.size() != r2.slots.size()) {
    throw std::invalid_argument("shared_fraction: dimension mismatch");
  }
  if (r1.slots.empty()) throw std::invalid_argument("shared_fraction: empty rows");
  std::size_t shared = 0;
  for (std::size_t i = 0; i < r1.slots.size(); ++i) {
    if (r1.slots[i] == r2.slots[i]) ++shared;
  }
  return static_cast<double>(shared) / static_cast<double>(r1.slots.size());
}

AllocationScheme::AllocationScheme(SchemeConfig config, std::optional<std::uint64_t> value_count)
    : config_(config) {
  if (config_.dim == 0) throw std::invalid_argument("AllocationScheme: dim must be >= 1");
  if (config_.budget == 0) throw std::invalid_argument("AllocationScheme: budget must be >= 1");
  switch (config_.variant) {
    case SchemeVariant::kFull:
      if (value_count && config_.budget < *value_count * config_.dim) {
        throw BudgetError("full table needs m >= |S| * d");
      }
      break;
    case SchemeVariant::kNaiveHash:
      pair_hash_ = UniversalHash::sample(derive_seed(config_.seed, 0), config_.rehash_k,
                                         config_.budget);
      break;
    case SchemeVariant::kLma: {
      if (config_.power == 0) throw std::invalid_argument("AllocationScheme: power must be >= 1");
      coordinate_lsh_.reserve(config_.dim);
      for (std::uint32_t i = 0; i < config_.dim; ++i) {
        coordinate_lsh_.push_back(PoweredRehashedLsh::sample(
            derive_seed(config_.seed, i), config_.power, config_.budget, config_.rehash_k,
            config_.surrogate_k));
      }
      pair_hash_ = UniversalHash::sample(derive_seed(config_.seed, config_.dim), config_.rehash_k,
                                         config_.budget);
      break;
    }
  }
}

bool AllocationScheme::uses_fallback(std::span<const SampleId> occurrences) const {
  return config_.variant == SchemeVariant::kLma &&
         occurrences.size() < config_.sparse_threshold;
}

std::uint64_t AllocationScheme::pair_slot(ValueId v, std::uint32_t i) const {
  const std::uint64_t key = static_cast<std::uint64_t>(v) * config_.dim + i;
  return (*pair_hash_)(key);
}

LocationRow AllocationScheme::compute(ValueId v, std::span<const SampleId> occurrences) const {
  LocationRow row;
  row.slots.resize(config_.dim);
  switch (config_.variant) {
    case SchemeVariant::kFull: {
      const std::uint64_t base = static_cast<std::uint64_t>(v) * config_.dim;
      if (base + config_.dim > config_.budget) {
        throw BudgetError("full table allocation for value " + std::to_string(v) +
                          " exceeds budget m=" + std::to_string(config_.budget));
      }
      for (std::uint32_t i = 0; i < config_.dim; ++i) row.slots[i] = base + i;
      break;
    }
    case SchemeVariant::kNaiveHash: {
      for (std::uint32_t i = 0; i < config_.dim; ++i) row.slots[i] = pair_slot(v, i);
      break;
    }
    case SchemeVariant::kLma: {
      if (uses_fallback(occurrences)) {
        for (std::uint32_t i = 0; i < config_.dim; ++i) row.slots[i] = pair_slot(v, i);
      } else {
        for (std::uint32_t i = 0; i < config_.dim; ++i) {
          row.slots[i] = coordinate_lsh_[i](occurrences);
        }
      }
      break;
    }
  }
  return row;
}

LocationRow AllocationScheme::allocate(ValueId v, std::span<const SampleId> occurrences) const {
  {
    std::shared_lock lock(cache_mutex_);
    auto it = cache_.find(v);
    if (it != cache_.end()) return it->second;
  }
  LocationRow row = compute(v, occurrences);
  {
    std::unique_lock lock(cache_mutex_);
    cache_.emplace(v, row);
  }
  return row;
}

std::vector<std::vector<double>> fcsm_matrix(const AllocationScheme& scheme,
                                             std::span<const ValueId> values,
                                             const OccurrenceIndex& index) {
  std::vector<LocationRow> rows;
  rows.reserve(values.size());
  for (ValueId v : values) rows.push_back(scheme.allocate(v, index.occurrences(v)));

  std::vector<std::vector<double>> matrix(values.size(), std::vector<double>(values.size(), 0.0));
  for (std::size_t a = 0; a < values.size(); ++a) {
    matrix[a][a] = 1.0;
    for (std::size_t b = a + 1; b < values.size(); ++b) {
      const double f = shared_fraction(rows[a], rows[b]);
      matrix[a][b] = f;
      matrix[b][a] = f;
    }
  }
  return matrix;
}

}  // namespace lma
