#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lma/error.hpp"

namespace lma {

using ValueId = std::uint32_t;
using SampleId = std::uint32_t;

// Categorical cell with no token.
inline constexpr ValueId kMissingValue = std::numeric_limits<ValueId>::max();

struct ValueRecord {
  std::uint32_t feature = 0;
  std::string token;
};

// The occurrence substrate: for every registered categorical value v, the
// sorted set D_v of sample ids in which it appears, plus the global
// (feature, token) -> ValueId registry. One registry spans all features so a
// single common memory can be shared across every embedding table.
// Single-writer while building; immutable and concurrent-read safe afterwards.
class OccurrenceIndex {
 public:
  OccurrenceIndex() = default;

  // Builder API ------------------------------------------------------------

  // Get-or-create the id for (feature, token). Ids are dense in registration order.
  ValueId register_value(std::uint32_t feature, std::string_view token);

  // Append one occurrence; rows must arrive in non-decreasing order per value.
  void add_occurrence(ValueId v, SampleId row);

  void set_sample_count(std::uint64_t n) { sample_count_ = n; }

  // Queries ------------------------------------------------------------------

  std::optional<ValueId> lookup(std::uint32_t feature, std::string_view token) const;
  std::span<const SampleId> occurrences(ValueId v) const;
  const ValueRecord& record(ValueId v) const;
  std::uint64_t occurrence_count(ValueId v) const { return occurrences(v).size(); }

  std::uint64_t value_count() const { return records_.size(); }
  std::uint32_t feature_count() const { return feature_count_; }
  std::uint64_t sample_count() const { return sample_count_; }

  // Total stored non-zeros: sum of |D_v| over all values.
  std::uint64_t total_occurrences() const;

  std::vector<std::uint64_t> per_feature_cardinality() const;

  // Exact |D_v1 n D_v2| / |D_v1 u D_v2|. Throws EmptySetError when both sets
  // are empty (similarity undefined).
  double jaccard(ValueId v1, ValueId v2) const;

  // Persistence: JSON-lines, one record per value
  // {"feature", "token", "value_id", "count", "samples"}.
  void write_jsonl(std::ostream& out) const;
  static OccurrenceIndex read_jsonl(std::istream& in);

 private:
  void check_id(ValueId v) const;

  std::vector<ValueRecord> records_;
  std::vector<std::vector<SampleId>> occurrences_;
  std::vector<std::unordered_map<std::string, ValueId>> registry_;  // per feature
  std::uint32_t feature_count_ = 0;
  std::uint64_t sample_count_ = 0;
};

// Seeded i.i.d. subsample D' of the rows: n_s distinct rows drawn without
// replacement via partial Fisher-Yates. `assumed_sparsity` is an analytic
// parameter carried along for the Theorem-3 envelope, never measured here.
struct SubsampleSpec {
  std::uint32_t sample_count = 0;  // n_s
  std::uint64_t seed = 0;
  double assumed_sparsity = 1.0;   // s
};

// Restrict the index to a seeded subsample of rows; sample ids are re-indexed
// to [0, n_s) in ascending original order, so n_s == n is an identity up to
// re-indexing. Registry is preserved (sets may become empty).
OccurrenceIndex subsample(const OccurrenceIndex& index, const SubsampleSpec& spec);

// Seeded choice of n_s distinct rows out of n, ascending.
std::vector<SampleId> sample_rows(std::uint64_t n, std::uint32_t n_s, std::uint64_t seed);

// Analytic bands of Theorem 3 for the subsampled Jaccard estimator:
//   |E(J^) - J|   <= epsilon * J
//   |V(J^) - A|   <= 2 * epsilon * (A + 2 J^2),  A = J (1 + J - 2 s J) / (2 n s)
// holding with probability 1 - delta, delta = (1 + J - 2 s) / (2 n s epsilon^2).
struct Theorem3Envelope {
  double mean_tolerance = 0.0;      // epsilon * J
  double variance_center = 0.0;     // A
  double variance_tolerance = 0.0;  // 2 epsilon (A + 2 J^2)
  double delta = 0.0;
};

Theorem3Envelope theorem3_envelope(double jaccard, std::uint64_t sample_count, double sparsity,
                                   double epsilon);

// Row-wise dataset encoded against an OccurrenceIndex registry.
struct EncodedTable {
  std::uint64_t rows = 0;
  std::uint32_t dense_cols = 0;
  std::uint32_t cat_cols = 0;
  std::vector<double> dense;     // rows x dense_cols, row-major; missing -> 0
  std::vector<ValueId> cats;     // rows x cat_cols, row-major; kMissingValue when absent
  std::vector<std::uint8_t> labels;

  double dense_at(std::uint64_t r, std::uint32_t c) const { return dense[r * dense_cols + c]; }
  ValueId cat_at(std::uint64_t r, std::uint32_t f) const { return cats[r * cat_cols + f]; }
};

struct DatasetFormat {
  char delimiter = ',';
  std::uint32_t dense_cols = 0;
  std::uint32_t cat_cols = 0;
  // Column order in the file: role[i] identifies what the i-th column holds.
  enum class Role : std::uint8_t { kLabel, kDense, kCat };
  std::vector<Role> roles;
  std::vector<std::uint32_t> role_index;  // dense/cat ordinal per column
};

struct IngestResult {
  DatasetFormat format;
  EncodedTable table;
  OccurrenceIndex index;
};

// Parse a delimited dataset with header "label, int_0.., cat_0.." (tab or
// comma, auto-detected), build the occurrence index and the encoded table.
// Missing categorical cells record no occurrence. Malformed rows raise
// ParseError with the offending line number.
IngestResult ingest(std::istream& in);

// Spec-level convenience when only the index is needed.
OccurrenceIndex ingest_index(std::istream& in);

// Rebuild an index over the first `row_limit` rows of an already-encoded
// table. `value_defs` fixes the registry: entry i registers (feature, token)
// as ValueId i, matching the ids stored in the table.
OccurrenceIndex build_index(const EncodedTable& table, std::uint64_t row_limit,
                            std::span<const ValueRecord> value_defs);

}  // namespace lma
