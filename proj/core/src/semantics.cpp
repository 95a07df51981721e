#include "lma/semantics.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "lma/hashing.hpp"

#include "json.hpp"

namespace lma {

ValueId OccurrenceIndex::register_value(std::uint32_t feature, std::string_view token) {
  if (feature >= registry_.size()) {
    registry_.resize(feature + 1);
    feature_count_ = feature + 1;
  }
  auto& per_feature = registry_[feature];
  auto it = per_feature.find(std::string(token));
  if (it != per_feature.end()) return it->second;
  const auto id = static_cast<ValueId>(records_.size());
  records_.push_back(ValueRecord{feature, std::string(token)});
  occurrences_.emplace_back();
  per_feature.emplace(std::string(token), id);
  return id;
}

void OccurrenceIndex::add_occurrence(ValueId v, SampleId row) {
  check_id(v);
  auto& set = occurrences_[v];
  if (!set.empty() && set.back() == row) return;  // same row, same value: one occurrence
  if (!set.empty() && set.back() > row) {
    throw std::invalid_argument("add_occurrence: rows must be appended in order");
  }
  set.push_back(row);
}

std::optional<ValueId> OccurrenceIndex::lookup(std::uint32_t feature,
                                               std::string_view token) const {
  if (feature >= registry_.size()) return std::nullopt;
  auto it = registry_[feature].find(std::string(token));
  if (it == registry_[feature].end()) return std::nullopt;
  return it->second;
}

std::span<const SampleId> OccurrenceIndex::occurrences(ValueId v) const {
  check_id(v);
  return occurrences_[v];
}

const ValueRecord& OccurrenceIndex::record(ValueId v) const {
  check_id(v);
  return records_[v];
}

std::uint64_t OccurrenceIndex::total_occurrences() const {
  std::uint64_t total = 0;
  for (const auto& set : occurrences_) total += set.size();
  return total;
}

std::vector<std::uint64_t> OccurrenceIndex::per_feature_cardinality() const {
  std::vector<std::uint64_t> counts(feature_count_, 0);
  for (const auto& rec : records_) ++counts[rec.feature];
  return counts;
}

double OccurrenceIndex::jaccard(ValueId v1, ValueId v2) const {
  const auto a = occurrences(v1);
  const auto b = occurrences(v2);
  if (a.empty() && b.empty()) {
    throw EmptySetError("jaccard: both occurrence sets are empty");
  }
  std::size_t i = 0, j = 0, intersection = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++intersection;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t unions = a.size() + b.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(unions);
}

void OccurrenceIndex::check_id(ValueId v) const {
  if (v >= records_.size()) throw std::out_of_range("OccurrenceIndex: unregistered value id");
}

void OccurrenceIndex::write_jsonl(std::ostream& out) const {
  // Header record carries the global counts.
  nlohmann::json header{{"kind", "occurrence_index"},
                        {"samples", sample_count_},
                        {"values", records_.size()},
                        {"features", feature_count_}};
  out << header.dump() << '\n';
  for (ValueId v = 0; v < records_.size(); ++v) {
    nlohmann::json rec{{"feature", records_[v].feature},
                       {"token", records_[v].token},
                       {"value_id", v},
                       {"count", occurrences_[v].size()},
                       {"samples", occurrences_[v]}};
    out << rec.dump() << '\n';
  }
}

OccurrenceIndex OccurrenceIndex::read_jsonl(std::istream& in) {
  OccurrenceIndex index;
  std::string line;
  std::uint64_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON in index file", line_no);
    if (!seen_header) {
      if (j.value("kind", "") != "occurrence_index") {
        throw ParseError("missing occurrence_index header record", line_no);
      }
      index.set_sample_count(j.at("samples").get<std::uint64_t>());
      seen_header = true;
      continue;
    }
    const auto feature = j.at("feature").get<std::uint32_t>();
    const auto token = j.at("token").get<std::string>();
    const auto id = index.register_value(feature, token);
    if (id != j.at("value_id").get<ValueId>()) {
      throw ParseError("value ids out of order in index file", line_no);
    }
    for (const auto& s : j.at("samples")) index.add_occurrence(id, s.get<SampleId>());
  }
  if (!seen_header) throw ParseError("empty index file", 0);
  return index;
}

std::vector<SampleId> sample_rows(std::uint64_t n, std::uint32_t n_s, std::uint64_t seed) {
  if (n_s > n) throw std::invalid_argument("sample_rows: n_s exceeds the row count");
  std::vector<SampleId> ids(n);
  std::iota(ids.begin(), ids.end(), SampleId{0});
  SplitMix64 rng(seed);
  for (std::uint32_t i = 0; i < n_s; ++i) {
    const std::uint64_t j = i + rng.uniform_below(n - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(n_s);
  std::sort(ids.begin(), ids.end());
  return ids;
}

OccurrenceIndex subsample(const OccurrenceIndex& index, const SubsampleSpec& spec) {
  if (spec.sample_count > index.sample_count()) {
    throw std::invalid_argument("subsample: n_s exceeds the sample count");
  }
  const auto selected = sample_rows(index.sample_count(), spec.sample_count, spec.seed);

  OccurrenceIndex out;
  for (ValueId v = 0; v < index.value_count(); ++v) {
    const auto& rec = index.record(v);
    const ValueId id = out.register_value(rec.feature, rec.token);
    const auto occ = index.occurrences(v);
    // Both sides sorted: intersect and re-index by rank in the sample.
    std::size_t i = 0, j = 0;
    while (i < occ.size() && j < selected.size()) {
      if (occ[i] == selected[j]) {
        out.add_occurrence(id, static_cast<SampleId>(j));
        ++i;
        ++j;
      } else if (occ[i] < selected[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  out.set_sample_count(spec.sample_count);
  return out;
}

Theorem3Envelope theorem3_envelope(double jaccard, std::uint64_t sample_count, double sparsity,
                                   double epsilon) {
  if (jaccard <= 0.0 || jaccard > 1.0) {
    throw std::invalid_argument("theorem3_envelope: J must be in (0, 1]");
  }
  if (sparsity <= 0.0 || sparsity > 1.0) {
    throw std::invalid_argument("theorem3_envelope: s must be in (0, 1]");
  }
  if (sample_count == 0) throw std::invalid_argument("theorem3_envelope: n must be >= 1");
  if (epsilon <= 0.0) throw std::invalid_argument("theorem3_envelope: epsilon must be > 0");
  const double ns = static_cast<double>(sample_count) * sparsity;
  Theorem3Envelope env;
  env.variance_center = jaccard * (1.0 + jaccard - 2.0 * sparsity * jaccard) / (2.0 * ns);
  env.mean_tolerance = epsilon * jaccard;
  env.variance_tolerance = 2.0 * epsilon * (env.variance_center + 2.0 * jaccard * jaccard);
  env.delta = (1.0 + jaccard - 2.0 * sparsity) / (2.0 * ns * epsilon * epsilon);
  return env;
}

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') {
    out.back().pop_back();
  }
  return out;
}

// "int_7" -> 7; nullopt when the name does not match prefix + number.
std::optional<std::uint32_t> suffix_number(std::string_view name, std::string_view prefix) {
  if (name.size() <= prefix.size() || name.substr(0, prefix.size()) != prefix) {
    return std::nullopt;
  }
  std::uint32_t value = 0;
  const auto* first = name.data() + prefix.size();
  const auto* last = name.data() + name.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

DatasetFormat parse_header(const std::string& line) {
  DatasetFormat fmt;
  fmt.delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
  const auto names = split(line, fmt.delimiter);

  bool saw_label = false;
  std::vector<std::optional<std::uint32_t>> dense_seen, cat_seen;
  for (const auto& name : names) {
    if (name == "label") {
      if (saw_label) throw ParseError("duplicate label column", 1);
      saw_label = true;
      fmt.roles.push_back(DatasetFormat::Role::kLabel);
      fmt.role_index.push_back(0);
    } else if (auto d = suffix_number(name, "int_")) {
      if (*d < dense_seen.size() && dense_seen[*d]) throw ParseError("duplicate column " + name, 1);
      if (*d >= dense_seen.size()) dense_seen.resize(*d + 1);
      dense_seen[*d] = *d;
      fmt.roles.push_back(DatasetFormat::Role::kDense);
      fmt.role_index.push_back(*d);
    } else if (auto c = suffix_number(name, "cat_")) {
      if (*c < cat_seen.size() && cat_seen[*c]) throw ParseError("duplicate column " + name, 1);
      if (*c >= cat_seen.size()) cat_seen.resize(*c + 1);
      cat_seen[*c] = *c;
      fmt.roles.push_back(DatasetFormat::Role::kCat);
      fmt.role_index.push_back(*c);
    } else {
      throw ParseError("unrecognized column name '" + name + "'", 1);
    }
  }
  if (!saw_label) throw ParseError("header has no label column", 1);
  for (std::size_t i = 0; i < dense_seen.size(); ++i) {
    if (!dense_seen[i]) throw ParseError("int_ columns are not contiguous", 1);
  }
  for (std::size_t i = 0; i < cat_seen.size(); ++i) {
    if (!cat_seen[i]) throw ParseError("cat_ columns are not contiguous", 1);
  }
  fmt.dense_cols = static_cast<std::uint32_t>(dense_seen.size());
  fmt.cat_cols = static_cast<std::uint32_t>(cat_seen.size());
  return fmt;
}

}  // namespace

IngestResult ingest(std::istream& in) {
  IngestResult result;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input: no header row", 1);
  result.format = parse_header(line);
  const auto& fmt = result.format;

  auto& table = result.table;
  table.dense_cols = fmt.dense_cols;
  table.cat_cols = fmt.cat_cols;

  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, fmt.delimiter);
    if (fields.size() != fmt.roles.size()) {
      throw ParseError("expected " + std::to_string(fmt.roles.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    const auto row = static_cast<SampleId>(table.rows);
    table.dense.resize(table.dense.size() + fmt.dense_cols, 0.0);
    table.cats.resize(table.cats.size() + fmt.cat_cols, kMissingValue);
    double* dense_row = table.dense.data() + static_cast<std::size_t>(row) * fmt.dense_cols;
    ValueId* cat_row = table.cats.data() + static_cast<std::size_t>(row) * fmt.cat_cols;

    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto& field = fields[i];
      switch (fmt.roles[i]) {
        case DatasetFormat::Role::kLabel: {
          if (field == "0") {
            table.labels.push_back(0);
          } else if (field == "1") {
            table.labels.push_back(1);
          } else {
            throw ParseError("label must be 0 or 1, got '" + field + "'", line_no);
          }
          break;
        }
        case DatasetFormat::Role::kDense: {
          if (field.empty()) break;  // missing integer -> 0
          double value = 0.0;
          auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
          if (ec != std::errc() || ptr != field.data() + field.size()) {
            throw ParseError("bad numeric field '" + field + "'", line_no);
          }
          dense_row[fmt.role_index[i]] = value;
          break;
        }
        case DatasetFormat::Role::kCat: {
          if (field.empty()) break;  // missing token: skipped, no occurrence
          const ValueId id = result.index.register_value(fmt.role_index[i], field);
          cat_row[fmt.role_index[i]] = id;
          result.index.add_occurrence(id, row);
          break;
        }
      }
    }
    ++table.rows;
  }
  result.index.set_sample_count(table.rows);
  return result;
}

OccurrenceIndex ingest_index(std::istream& in) { return ingest(in).index; }

OccurrenceIndex build_index(const EncodedTable& table, std::uint64_t row_limit,
                            std::span<const ValueRecord> value_defs) {
  if (row_limit > table.rows) throw std::invalid_argument("build_index: row_limit > rows");
  OccurrenceIndex index;
  for (std::size_t i = 0; i < value_defs.size(); ++i) {
    const ValueId id = index.register_value(value_defs[i].feature, value_defs[i].token);
    if (id != i) throw std::invalid_argument("build_index: duplicate value definition");
  }
  for (std::uint64_t r = 0; r < row_limit; ++r) {
    for (std::uint32_t f = 0; f < table.cat_cols; ++f) {
      const ValueId v = table.cat_at(r, f);
      if (v == kMissingValue) continue;
      index.add_occurrence(v, static_cast<SampleId>(r));
    }
  }
  index.set_sample_count(row_limit);
  return index;
}

}  // namespace lma
