#pragma once

#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lma/hashing.hpp"
#include "lma/semantics.hpp"

#include "json.hpp"

namespace lma {

enum class SchemeVariant : std::uint8_t { kFull, kNaiveHash, kLma };

std::string to_string(SchemeVariant v);
SchemeVariant scheme_variant_from_string(std::string_view name);

// Serializable scheme descriptor; reconstruction from it is deterministic.
struct SchemeConfig {
  SchemeVariant variant = SchemeVariant::kLma;
  std::uint32_t dim = 32;             // simulated embedding dimension d
  std::uint64_t budget = 1;           // memory budget m
  std::uint32_t sparse_threshold = 5; // tau: |D_v| below this falls back to the hashing trick
  std::uint64_t seed = 0;
  std::uint32_t power = 4;            // n_h
  std::uint32_t rehash_k = 2;
  std::uint32_t surrogate_k = kDefaultSurrogateK;

  friend bool operator==(const SchemeConfig&, const SchemeConfig&) = default;
};

void to_json(nlohmann::json& j, const SchemeConfig& c);
void from_json(const nlohmann::json& j, SchemeConfig& c);

// Dense encoding of the one-hot allocation matrix A(v): slot j of row i is
// one-hot position slots[i].
struct LocationRow {
  std::vector<std::uint64_t> slots;

  std::uint32_t dim() const { return static_cast<std::uint32_t>(slots.size()); }
  friend bool operator==(const LocationRow&, const LocationRow&) = default;
};

// Fraction of consistently shared memory between two rows:
// f = |{i : r1[i] == r2[i]}| / d, the Frobenius inner product of the one-hot
// matrices over d.
double shared_fraction(const LocationRow& r1, const LocationRow& r2);

// Allocation function A : value -> d memory slots.
//   Full      slot[i] = v * d + i            (requires (v+1) * d <= m)
//   NaiveHash slot[i] = h(v * d + i)         (element-wise hashing trick)
//   Lma       slot[i] = l_r^{(i)}(D_v)       (d independent rehashed power-n_h
//             minwise hashes), falling back to NaiveHash when |D_v| < tau.
// Immutable after construction apart from the row memo, which is safe for
// concurrent insert-or-read; correctness never depends on the cache because
// hashing is deterministic.
class AllocationScheme {
 public:
  explicit AllocationScheme(SchemeConfig config,
                            std::optional<std::uint64_t> value_count = std::nullopt);

  LocationRow allocate(ValueId v, std::span<const SampleId> occurrences) const;

  const SchemeConfig& config() const noexcept { return config_; }

  // True when the last resort pair-hash would serve this occurrence set.
  bool uses_fallback(std::span<const SampleId> occurrences) const;

 private:
  LocationRow compute(ValueId v, std::span<const SampleId> occurrences) const;
  std::uint64_t pair_slot(ValueId v, std::uint32_t i) const;

  SchemeConfig config_;
  std::optional<UniversalHash> pair_hash_;        // NaiveHash and Lma fallback
  std::vector<PoweredRehashedLsh> coordinate_lsh_;  // Lma: one per coordinate

  mutable std::shared_mutex cache_mutex_;
  mutable std::unordered_map<ValueId, LocationRow> cache_;
};

// Symmetric matrix of shared fractions between all listed values, diagonal 1.
std::vector<std::vector<double>> fcsm_matrix(const AllocationScheme& scheme,
                                             std::span<const ValueId> values,
                                             const OccurrenceIndex& index);

}  // namespace lma
