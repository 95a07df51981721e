#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lma/allocation.hpp"
#include "lma/semantics.hpp"

#include "json.hpp"

namespace lma {

// Report schema version for the JSON/CSV artifacts.
inline constexpr int kReportSchemaVersion = 1;

// Pinned tolerances. Monte Carlo noise at 10^4 trials motivates the variance
// and tail slack; the mean tolerances come straight from the acceptance bar.
struct VerifyTolerances {
  double theorem1_mean = 0.01;
  double theorem2_mean = 0.02;
  double variance_rel = 0.25;
  double tail_slack = 0.10;       // empirical <= bound * (1 + slack)
  double snap_jaccard = 0.01;     // max |J_target - J_snapped| considered realizable
};

// Integer set pair A = {0..a+c-1}, B = {a..a+b+c-1} realizing J = c/(a+b+c)
// exactly; the closest realizable rational to the requested kernel with union
// size <= max_union (ties broken toward the smallest sets).
struct SnappedPair {
  double jaccard = 0.0;      // realized base J
  double phi = 0.0;          // realized J^{n_h}
  std::uint32_t intersection = 0;
  std::uint32_t union_size = 0;
  std::vector<SampleId> set_a;
  std::vector<SampleId> set_b;
};

// Throws std::invalid_argument when no pair within tolerance exists.
SnappedPair snap_pair(double target_phi, unsigned power, std::uint32_t max_union = 64,
                      double tolerance = 0.01);

struct GridPoint {
  double phi = 0.5;          // target kernel value
  std::uint32_t dim = 64;    // d
  std::uint64_t budget = 1000000;  // m
  std::uint32_t power = 1;   // n_h
};

struct TailStat {
  double eta = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
};

// One grid point of empirical-vs-analytic comparison. Analytic columns are
// pure functions of the (snapped) grid point and can be recomputed bit-stably.
struct TheoremReport {
  std::string theorem;            // "theorem1" | "theorem2" | "theorem3"
  double target_phi = 0.0;        // requested kernel (or J for theorem 3)
  double snapped_phi = 0.0;       // realized kernel after snapping
  double snapped_jaccard = 0.0;   // realized base J
  std::uint32_t dim = 0;
  std::uint64_t budget = 0;
  std::uint32_t power = 0;
  std::uint64_t trials = 0;

  // Theorem 3 grid extras (0 when unused).
  std::uint64_t population_rows = 0;   // n
  std::uint32_t subsample_rows = 0;    // n_s
  double sparsity = 0.0;               // s
  double epsilon = 0.0;

  double empirical_mean = 0.0;
  double empirical_variance = 0.0;
  double analytic_mean = 0.0;          // Gamma, or J for theorem 3
  double analytic_variance = 0.0;      // theorem variance (A for theorem 3)
  double mean_tolerance = 0.0;
  double variance_tolerance = 0.0;     // absolute
  double additive_term = 0.0;          // (1 - phi)/m, recorded not asserted
  std::vector<TailStat> tails;

  std::string verdict;                 // "pass" | "fail" | "insufficient_trials"
  std::vector<std::string> failures;

  bool passed() const { return verdict == "pass"; }
};

void to_json(nlohmann::json& j, const TheoremReport& r);

// CSV: one row per grid point; `header` emits the column names.
std::string report_csv_header();
std::string report_csv_row(const TheoremReport& r);
void write_reports_json(std::ostream& out, std::span<const TheoremReport> reports,
                        const std::string& command);
void write_reports_csv(std::ostream& out, std::span<const TheoremReport> reports);

struct VerifyOptions {
  std::uint64_t master_seed = 42;
  std::uint64_t trials = 10000;
  unsigned threads = 1;
  VerifyTolerances tolerances;
};

// Theorem 1: distribution of the consistently-shared fraction f under LMA.
// Per grid point, `trials` independently seeded allocators score the snapped
// pair; moments are compared against Gamma and Gamma(1-Gamma)/d and the tail
// exceedance of |f - Gamma| > eta * Gamma against 2 exp(-d Gamma eta^2 / 3)
// at eta in {0.2, 0.5, 1.0}.
std::vector<TheoremReport> verify_theorem1(std::span<const GridPoint> grid,
                                           const VerifyOptions& options);

// Theorem 2: cosine similarity of the pair's embeddings from a +-1 memory
// redrawn each trial; moments vs Gamma and (1-Gamma^2)/d + 2(1-Gamma)(d-1)/(d m^2),
// Chebyshev tail at eta in {0.5, 1.0} on |C_s - phi| >= eta Gamma + (1-phi)/m.
std::vector<TheoremReport> verify_theorem2(std::span<const GridPoint> grid,
                                           const VerifyOptions& options);

struct Theorem3Params {
  double jaccard = 0.4;
  double sparsity = 0.05;
  std::uint64_t rows = 100000;      // n
  std::uint32_t subsample_rows = 10000;  // n_s
  double epsilon = 0.15;
};

// Theorem 3: subsampled-Jaccard moments and failure rate against the analytic
// envelope, over `trials` subsample seeds of a planted pair.
TheoremReport verify_theorem3(const Theorem3Params& params, const VerifyOptions& options);

// The data behind the confidence-band figure: per (d, phi), 2.5%/97.5%
// quantiles of f and C_s plus moment-based coverage.
struct BandRow {
  std::uint32_t dim = 0;
  double target_phi = 0.0;
  double snapped_phi = 0.0;
  std::uint64_t budget = 0;
  std::uint32_t power = 0;
  std::uint64_t trials = 0;
  double f_q025 = 0.0, f_q975 = 0.0, f_width = 0.0;
  double c_q025 = 0.0, c_q975 = 0.0, c_width = 0.0;
  double f_coverage_196 = 0.0;  // fraction within Gamma +- 1.96 sigma(Theorem 1)
  double c_coverage_196 = 0.0;
};

std::vector<BandRow> band_sweep(std::span<const std::uint32_t> dims, std::span<const double> phis,
                                std::uint64_t budget, std::uint32_t power,
                                const VerifyOptions& options);

void write_bands_json(std::ostream& out, std::span<const BandRow> rows);
void write_bands_csv(std::ostream& out, std::span<const BandRow> rows);

// Small-instance diagnostic: Frobenius distance between the target similarity
// matrix S*[v1,v2] = J(D_v1, D_v2) and the realized FCSM (or cosine) matrix.
enum class RealizedSimilarity : std::uint8_t { kFcsm, kCosine };

struct SimilarityDistortion {
  std::vector<std::vector<double>> target;
  std::vector<std::vector<double>> realized;
  double frobenius_distance = 0.0;
};

SimilarityDistortion distortion(const AllocationScheme& scheme, std::span<const ValueId> values,
                                const OccurrenceIndex& index, RealizedSimilarity kind,
                                std::uint64_t memory_seed = 0);

// Shared statistics helpers (fixed evaluation order, deterministic).
double mean_of(std::span<const double> xs);
double variance_of(std::span<const double> xs);  // unbiased; needs >= 2 samples
double quantile_of(std::vector<double> xs, double p);  // order statistic ceil(p*N)

// Runs per_trial(t) for t in [0, trials) on `threads` workers. Each trial
// must depend only on its own index, so results are identical for any thread
// count; callers merge in index order.
void parallel_trials(std::uint64_t trials, unsigned threads,
                     const std::function<void(std::uint64_t)>& per_trial);

}  // namespace lma
