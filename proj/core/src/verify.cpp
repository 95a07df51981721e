#include "lma/verify.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "lma/hashing.hpp"
#include "lma/memory_table.hpp"
#include "lma/synthetic.hpp"

namespace lma {

namespace {

constexpr double kTheorem1Etas[] = {0.2, 0.5, 1.0};
constexpr double kTheorem2Etas[] = {0.5, 1.0};

std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double pow_u(double base, unsigned exp) {
  double out = 1.0;
  for (unsigned i = 0; i < exp; ++i) out *= base;
  return out;
}

// One pair of LMA location rows for the snapped sets under a fresh scheme.
std::pair<LocationRow, LocationRow> draw_rows(const SnappedPair& pair, const GridPoint& point,
                                              std::uint64_t scheme_seed) {
  SchemeConfig cfg;
  cfg.variant = SchemeVariant::kLma;
  cfg.dim = point.dim;
  cfg.budget = point.budget;
  cfg.sparse_threshold = 0;  // the synthetic sets must never take the fallback
  cfg.seed = scheme_seed;
  cfg.power = point.power;
  AllocationScheme scheme(cfg);
  return {scheme.allocate(0, pair.set_a), scheme.allocate(1, pair.set_b)};
}

// Cosine of the two embeddings over a +-1 memory drawn lazily: every distinct
// slot gets an independent sign, in first-touch order, which is distributed
// exactly as indexing a fresh RademacherHalf memory of size m.
double rademacher_cosine(const LocationRow& r1, const LocationRow& r2, std::uint64_t memory_seed) {
  SplitMix64 rng(memory_seed);
  std::unordered_map<std::uint64_t, double> slot_value;
  slot_value.reserve(2 * r1.slots.size());
  auto value_of = [&](std::uint64_t slot) {
    auto it = slot_value.find(slot);
    if (it != slot_value.end()) return it->second;
    const double v = (rng.next() & 1) ? 1.0 : -1.0;
    slot_value.emplace(slot, v);
    return v;
  };
  double dot = 0.0;
  for (std::size_t i = 0; i < r1.slots.size(); ++i) {
    dot += value_of(r1.slots[i]) * value_of(r2.slots[i]);
  }
  // +-1 entries: both norms are exactly sqrt(d).
  return dot / static_cast<double>(r1.slots.size());
}

void evaluate_moments(TheoremReport& report, const VerifyTolerances& tol, double mean_tol) {
  report.mean_tolerance = mean_tol;
  report.variance_tolerance = tol.variance_rel * report.analytic_variance;
  if (report.trials < 2) {
    report.verdict = "insufficient_trials";
    report.failures.push_back("need at least 2 trials to compare moments");
    return;
  }
  if (std::abs(report.empirical_mean - report.analytic_mean) > report.mean_tolerance) {
    report.failures.push_back("mean off by " +
                              fmt_double(std::abs(report.empirical_mean - report.analytic_mean)));
  }
  if (std::abs(report.empirical_variance - report.analytic_variance) >
      report.variance_tolerance) {
    report.failures.push_back(
        "variance off by " +
        fmt_double(std::abs(report.empirical_variance - report.analytic_variance)));
  }
  for (const auto& tail : report.tails) {
    if (tail.empirical > tail.bound * (1.0 + tol.tail_slack)) {
      report.failures.push_back("tail at eta=" + fmt_double(tail.eta) + " exceeds bound: " +
                                fmt_double(tail.empirical) + " > " + fmt_double(tail.bound));
    }
  }
  report.verdict = report.failures.empty() ? "pass" : "fail";
}

}  // namespace

SnappedPair snap_pair(double target_phi, unsigned power, std::uint32_t max_union,
                      double tolerance) {
  if (target_phi < 0.0 || target_phi > 1.0) {
    throw std::invalid_argument("snap_pair: phi must be in [0, 1]");
  }
  if (power == 0) throw std::invalid_argument("snap_pair: power must be >= 1");
  const double target_j = std::pow(target_phi, 1.0 / static_cast<double>(power));

  double best_err = 2.0;
  std::uint32_t best_c = 0, best_u = 0;
  for (std::uint32_t u = 1; u <= max_union; ++u) {
    for (std::uint32_t c = 0; c <= u; ++c) {
      if (c == 0 && u < 2) continue;  // both sets must be non-empty
      const double j = static_cast<double>(c) / static_cast<double>(u);
      const double err = std::abs(j - target_j);
      if (err < best_err - 1e-15) {
        best_err = err;
        best_c = c;
        best_u = u;
      }
    }
  }
  if (best_u == 0 || best_err > tolerance) {
    throw std::invalid_argument("snap_pair: no realizable sets for phi=" + fmt_double(target_phi) +
                                " power=" + std::to_string(power));
  }

  SnappedPair out;
  out.intersection = best_c;
  out.union_size = best_u;
  out.jaccard = static_cast<double>(best_c) / static_cast<double>(best_u);
  out.phi = pow_u(out.jaccard, power);
  const std::uint32_t only_a = (best_u - best_c + 1) / 2;
  const std::uint32_t only_b = best_u - best_c - only_a;
  for (std::uint32_t x = 0; x < only_a + best_c; ++x) out.set_a.push_back(x);
  for (std::uint32_t x = only_a; x < only_a + only_b + best_c; ++x) out.set_b.push_back(x);
  return out;
}

void parallel_trials(std::uint64_t trials, unsigned threads,
                     const std::function<void(std::uint64_t)>& per_trial) {
  threads = std::max(1u, threads);
  if (threads == 1 || trials < 2) {
    for (std::uint64_t t = 0; t < trials; ++t) per_trial(t);
    return;
  }
  std::atomic<std::uint64_t> cursor{0};
  const std::uint64_t chunk = std::max<std::uint64_t>(1, trials / (threads * 16));
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      try {
        while (true) {
          const std::uint64_t start = cursor.fetch_add(chunk);
          if (start >= trials) break;
          const std::uint64_t end = std::min(start + chunk, trials);
          for (std::uint64_t t = start; t < end; ++t) per_trial(t);
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty");
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double variance_of(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance_of: need >= 2 samples");
  const double mu = mean_of(xs);
  double sum = 0.0;
  for (double x : xs) sum += (x - mu) * (x - mu);
  return sum / static_cast<double>(xs.size() - 1);
}

double quantile_of(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("quantile_of: empty");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile_of: p must be in [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size());
  auto idx = static_cast<std::size_t>(std::ceil(pos));
  idx = idx == 0 ? 0 : idx - 1;
  if (idx >= xs.size()) idx = xs.size() - 1;
  return xs[idx];
}

std::vector<TheoremReport> verify_theorem1(std::span<const GridPoint> grid,
                                           const VerifyOptions& options) {
  std::vector<TheoremReport> reports;
  reports.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const GridPoint& point = grid[g];
    const SnappedPair pair = snap_pair(point.phi, point.power, 64,
                                       options.tolerances.snap_jaccard);
    const double gamma = kernel_value(pair.jaccard, point.power, point.budget);
    const std::uint64_t point_seed = derive_seed(options.master_seed, g);

    std::vector<double> f_values(options.trials);
    parallel_trials(options.trials, options.threads, [&](std::uint64_t t) {
      const auto [r1, r2] = draw_rows(pair, point, derive_seed(point_seed, t));
      f_values[t] = shared_fraction(r1, r2);
    });

    TheoremReport report;
    report.theorem = "theorem1";
    report.target_phi = point.phi;
    report.snapped_phi = pair.phi;
    report.snapped_jaccard = pair.jaccard;
    report.dim = point.dim;
    report.budget = point.budget;
    report.power = point.power;
    report.trials = options.trials;
    report.analytic_mean = gamma;
    report.analytic_variance = gamma * (1.0 - gamma) / point.dim;
    report.additive_term = (1.0 - pair.phi) / static_cast<double>(point.budget);
    report.empirical_mean = mean_of(f_values);
    report.empirical_variance = options.trials >= 2 ? variance_of(f_values) : 0.0;
    for (double eta : kTheorem1Etas) {
      TailStat tail;
      tail.eta = eta;
      tail.bound = 2.0 * std::exp(-static_cast<double>(point.dim) * gamma * eta * eta / 3.0);
      std::uint64_t exceed = 0;
      for (double f : f_values) {
        if (std::abs(f - gamma) > eta * gamma) ++exceed;
      }
      tail.empirical = static_cast<double>(exceed) / static_cast<double>(options.trials);
      report.tails.push_back(tail);
    }
    evaluate_moments(report, options.tolerances, options.tolerances.theorem1_mean);
    reports.push_back(std::move(report));
  }
  return reports;
}

std::vector<TheoremReport> verify_theorem2(std::span<const GridPoint> grid,
                                           const VerifyOptions& options) {
  std::vector<TheoremReport> reports;
  reports.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const GridPoint& point = grid[g];
    const SnappedPair pair = snap_pair(point.phi, point.power, 64,
                                       options.tolerances.snap_jaccard);
    const double gamma = kernel_value(pair.jaccard, point.power, point.budget);
    const double m = static_cast<double>(point.budget);
    const std::uint64_t point_seed = derive_seed(options.master_seed, g);

    std::vector<double> cosines(options.trials);
    parallel_trials(options.trials, options.threads, [&](std::uint64_t t) {
      const std::uint64_t trial_seed = derive_seed(point_seed, t);
      const auto [r1, r2] = draw_rows(pair, point, derive_seed(trial_seed, 0));
      cosines[t] = rademacher_cosine(r1, r2, derive_seed(trial_seed, 1));
    });

    TheoremReport report;
    report.theorem = "theorem2";
    report.target_phi = point.phi;
    report.snapped_phi = pair.phi;
    report.snapped_jaccard = pair.jaccard;
    report.dim = point.dim;
    report.budget = point.budget;
    report.power = point.power;
    report.trials = options.trials;
    report.analytic_mean = gamma;
    report.analytic_variance = (1.0 - gamma * gamma) / point.dim +
                               2.0 * (1.0 - gamma) * (point.dim - 1) / (point.dim * m * m);
    report.additive_term = (1.0 - pair.phi) / m;
    report.empirical_mean = mean_of(cosines);
    report.empirical_variance = options.trials >= 2 ? variance_of(cosines) : 0.0;
    for (double eta : kTheorem2Etas) {
      TailStat tail;
      tail.eta = eta;
      tail.bound = gamma > 0.0
                       ? (1.0 - gamma * gamma) /
                             (static_cast<double>(point.dim) * eta * eta * gamma * gamma)
                       : std::numeric_limits<double>::infinity();
      const double threshold = eta * gamma + (1.0 - pair.phi) / m;
      std::uint64_t exceed = 0;
      for (double c : cosines) {
        if (std::abs(c - pair.phi) >= threshold) ++exceed;
      }
      tail.empirical = static_cast<double>(exceed) / static_cast<double>(options.trials);
      report.tails.push_back(tail);
    }
    evaluate_moments(report, options.tolerances, options.tolerances.theorem2_mean);
    reports.push_back(std::move(report));
  }
  return reports;
}

TheoremReport verify_theorem3(const Theorem3Params& params, const VerifyOptions& options) {
  if (params.subsample_rows > params.rows) {
    throw std::invalid_argument("verify_theorem3: n_s exceeds n");
  }
  const PlantedPair planted = make_planted_pair(params.jaccard, params.sparsity, params.rows);
  const double j = planted.realized_jaccard;
  const Theorem3Envelope env =
      theorem3_envelope(j, params.subsample_rows, params.sparsity, params.epsilon);

  std::vector<double> estimates(options.trials);
  parallel_trials(options.trials, options.threads, [&](std::uint64_t t) {
    SubsampleSpec spec;
    spec.sample_count = params.subsample_rows;
    spec.seed = derive_seed(options.master_seed, t);
    spec.assumed_sparsity = params.sparsity;
    const OccurrenceIndex sub = subsample(planted.index, spec);
    double jhat = 0.0;  // both sets empty in the subsample: estimator degenerates to 0
    try {
      jhat = sub.jaccard(planted.v1, planted.v2);
    } catch (const EmptySetError&) {
    }
    estimates[t] = jhat;
  });

  TheoremReport report;
  report.theorem = "theorem3";
  report.target_phi = params.jaccard;
  report.snapped_phi = j;
  report.snapped_jaccard = j;
  report.dim = 0;
  report.budget = 0;
  report.power = 1;
  report.trials = options.trials;
  report.population_rows = params.rows;
  report.subsample_rows = params.subsample_rows;
  report.sparsity = params.sparsity;
  report.epsilon = params.epsilon;
  report.analytic_mean = j;
  report.analytic_variance = env.variance_center;
  report.empirical_mean = mean_of(estimates);
  report.empirical_variance = options.trials >= 2 ? variance_of(estimates) : 0.0;
  report.mean_tolerance = env.mean_tolerance;
  report.variance_tolerance = env.variance_tolerance;

  TailStat failure;
  failure.eta = params.epsilon;
  failure.bound = env.delta;
  std::uint64_t exceed = 0;
  for (double jhat : estimates) {
    if (std::abs(jhat - j) > env.mean_tolerance) ++exceed;
  }
  failure.empirical = static_cast<double>(exceed) / static_cast<double>(options.trials);
  report.tails.push_back(failure);

  if (report.trials < 2) {
    report.verdict = "insufficient_trials";
    report.failures.push_back("need at least 2 trials to compare moments");
    return report;
  }
  if (std::abs(report.empirical_mean - j) > env.mean_tolerance) {
    report.failures.push_back("mean outside the epsilon J band");
  }
  if (std::abs(report.empirical_variance - env.variance_center) > env.variance_tolerance) {
    report.failures.push_back("variance outside the Theorem 3 envelope");
  }
  if (failure.empirical > env.delta) {
    report.failures.push_back("failure frequency " + fmt_double(failure.empirical) +
                              " exceeds delta " + fmt_double(env.delta));
  }
  report.verdict = report.failures.empty() ? "pass" : "fail";
  return report;
}

std::vector<BandRow> band_sweep(std::span<const std::uint32_t> dims, std::span<const double> phis,
                                std::uint64_t budget, std::uint32_t power,
                                const VerifyOptions& options) {
  if (dims.empty() || phis.empty()) throw std::invalid_argument("band_sweep: empty grids");
  std::vector<BandRow> rows;
  rows.reserve(dims.size() * phis.size());
  std::size_t point_counter = 0;
  for (std::uint32_t dim : dims) {
    for (double phi : phis) {
      const SnappedPair pair = snap_pair(phi, power, 64, options.tolerances.snap_jaccard);
      const double gamma = kernel_value(pair.jaccard, power, budget);
      const double m = static_cast<double>(budget);
      GridPoint point{phi, dim, budget, power};
      const std::uint64_t point_seed = derive_seed(options.master_seed, point_counter++);

      std::vector<double> f_values(options.trials), cosines(options.trials);
      parallel_trials(options.trials, options.threads, [&](std::uint64_t t) {
        const std::uint64_t trial_seed = derive_seed(point_seed, t);
        const auto [r1, r2] = draw_rows(pair, point, derive_seed(trial_seed, 0));
        f_values[t] = shared_fraction(r1, r2);
        cosines[t] = rademacher_cosine(r1, r2, derive_seed(trial_seed, 1));
      });

      BandRow row;
      row.dim = dim;
      row.target_phi = phi;
      row.snapped_phi = pair.phi;
      row.budget = budget;
      row.power = power;
      row.trials = options.trials;
      row.f_q025 = quantile_of(f_values, 0.025);
      row.f_q975 = quantile_of(f_values, 0.975);
      row.f_width = row.f_q975 - row.f_q025;
      row.c_q025 = quantile_of(cosines, 0.025);
      row.c_q975 = quantile_of(cosines, 0.975);
      row.c_width = row.c_q975 - row.c_q025;

      const double f_sigma = std::sqrt(gamma * (1.0 - gamma) / dim);
      const double c_sigma = std::sqrt((1.0 - gamma * gamma) / dim +
                                       2.0 * (1.0 - gamma) * (dim - 1) / (dim * m * m));
      auto coverage = [](std::span<const double> xs, double lo, double hi) {
        std::uint64_t inside = 0;
        for (double x : xs) {
          if (x >= lo && x <= hi) ++inside;
        }
        return static_cast<double>(inside) / static_cast<double>(xs.size());
      };
      row.f_coverage_196 = coverage(f_values, gamma - 1.96 * f_sigma, gamma + 1.96 * f_sigma);
      row.c_coverage_196 = coverage(cosines, gamma - 1.96 * c_sigma, gamma + 1.96 * c_sigma);
      rows.push_back(row);
    }
  }
  return rows;
}

SimilarityDistortion distortion(const AllocationScheme& scheme, std::span<const ValueId> values,
                                const OccurrenceIndex& index, RealizedSimilarity kind,
                                std::uint64_t memory_seed) {
  if (values.size() > 1000) {
    throw std::invalid_argument("distortion: too many values for a dense comparison");
  }
  SimilarityDistortion out;
  const std::size_t n = values.size();
  out.target.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    out.target[a][a] = 1.0;
    for (std::size_t b = a + 1; b < n; ++b) {
      const double j = index.jaccard(values[a], values[b]);
      out.target[a][b] = j;
      out.target[b][a] = j;
    }
  }

  if (kind == RealizedSimilarity::kFcsm) {
    out.realized = fcsm_matrix(scheme, values, index);
  } else {
    SharedMemory memory(scheme.config().budget, {MemoryInit::kRademacherHalf, 1.0}, memory_seed);
    LocationMatrix locations;
    locations.dim = scheme.config().dim;
    for (ValueId v : values) {
      locations.values.push_back(v);
      locations.rows.push_back(scheme.allocate(v, index.occurrences(v)));
    }
    const Eigen::MatrixXd embeddings = gather(memory, locations);
    out.realized.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a) {
      out.realized[a][a] = 1.0;
      for (std::size_t b = a + 1; b < n; ++b) {
        Eigen::VectorXd ea = embeddings.row(static_cast<Eigen::Index>(a));
        Eigen::VectorXd eb = embeddings.row(static_cast<Eigen::Index>(b));
        const double c = cosine_similarity({ea.data(), static_cast<std::size_t>(ea.size())},
                                           {eb.data(), static_cast<std::size_t>(eb.size())});
        out.realized[a][b] = c;
        out.realized[b][a] = c;
      }
    }
  }

  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double diff = out.target[a][b] - out.realized[a][b];
      sum += diff * diff;
    }
  }
  out.frobenius_distance = std::sqrt(sum);
  return out;
}

void to_json(nlohmann::json& j, const TheoremReport& r) {
  nlohmann::json tails = nlohmann::json::array();
  for (const auto& t : r.tails) {
    tails.push_back({{"eta", t.eta}, {"empirical", t.empirical}, {"bound", t.bound}});
  }
  j = nlohmann::json{{"theorem", r.theorem},
                     {"target_phi", r.target_phi},
                     {"snapped_phi", r.snapped_phi},
                     {"snapped_jaccard", r.snapped_jaccard},
                     {"dim", r.dim},
                     {"budget", r.budget},
                     {"power", r.power},
                     {"trials", r.trials},
                     {"population_rows", r.population_rows},
                     {"subsample_rows", r.subsample_rows},
                     {"sparsity", r.sparsity},
                     {"epsilon", r.epsilon},
                     {"empirical_mean", r.empirical_mean},
                     {"empirical_variance", r.empirical_variance},
                     {"analytic_mean", r.analytic_mean},
                     {"analytic_variance", r.analytic_variance},
                     {"mean_tolerance", r.mean_tolerance},
                     {"variance_tolerance", r.variance_tolerance},
                     {"additive_term", r.additive_term},
                     {"tails", tails},
                     {"verdict", r.verdict},
                     {"failures", r.failures}};
}

std::string report_csv_header() {
  return "theorem,target_phi,snapped_phi,snapped_jaccard,dim,budget,power,trials,"
         "population_rows,subsample_rows,sparsity,epsilon,"
         "empirical_mean,analytic_mean,mean_tolerance,"
         "empirical_variance,analytic_variance,variance_tolerance,additive_term,"
         "tail1_eta,tail1_empirical,tail1_bound,"
         "tail2_eta,tail2_empirical,tail2_bound,"
         "tail3_eta,tail3_empirical,tail3_bound,verdict";
}

std::string report_csv_row(const TheoremReport& r) {
  std::string row = r.theorem;
  auto add = [&row](const std::string& s) {
    row += ',';
    row += s;
  };
  add(fmt_double(r.target_phi));
  add(fmt_double(r.snapped_phi));
  add(fmt_double(r.snapped_jaccard));
  add(std::to_string(r.dim));
  add(std::to_string(r.budget));
  add(std::to_string(r.power));
  add(std::to_string(r.trials));
  add(std::to_string(r.population_rows));
  add(std::to_string(r.subsample_rows));
  add(fmt_double(r.sparsity));
  add(fmt_double(r.epsilon));
  add(fmt_double(r.empirical_mean));
  add(fmt_double(r.analytic_mean));
  add(fmt_double(r.mean_tolerance));
  add(fmt_double(r.empirical_variance));
  add(fmt_double(r.analytic_variance));
  add(fmt_double(r.variance_tolerance));
  add(fmt_double(r.additive_term));
  for (std::size_t i = 0; i < 3; ++i) {
    if (i < r.tails.size()) {
      add(fmt_double(r.tails[i].eta));
      add(fmt_double(r.tails[i].empirical));
      add(fmt_double(r.tails[i].bound));
    } else {
      add("");
      add("");
      add("");
    }
  }
  add(r.verdict);
  return row;
}

void write_reports_json(std::ostream& out, std::span<const TheoremReport> reports,
                        const std::string& command) {
  nlohmann::json body;
  body["schema_version"] = kReportSchemaVersion;
  body["command"] = command;
  body["reports"] = nlohmann::json::array();
  for (const auto& r : reports) body["reports"].push_back(r);
  out << body.dump(2) << '\n';
}

void write_reports_csv(std::ostream& out, std::span<const TheoremReport> reports) {
  out << report_csv_header() << '\n';
  for (const auto& r : reports) out << report_csv_row(r) << '\n';
}

void write_bands_json(std::ostream& out, std::span<const BandRow> rows) {
  nlohmann::json body;
  body["schema_version"] = kReportSchemaVersion;
  body["bands"] = nlohmann::json::array();
  for (const auto& r : rows) {
    body["bands"].push_back({{"dim", r.dim},
                             {"target_phi", r.target_phi},
                             {"snapped_phi", r.snapped_phi},
                             {"budget", r.budget},
                             {"power", r.power},
                             {"trials", r.trials},
                             {"f_q025", r.f_q025},
                             {"f_q975", r.f_q975},
                             {"f_width", r.f_width},
                             {"c_q025", r.c_q025},
                             {"c_q975", r.c_q975},
                             {"c_width", r.c_width},
                             {"f_coverage_196", r.f_coverage_196},
                             {"c_coverage_196", r.c_coverage_196}});
  }
  out << body.dump(2) << '\n';
}

void write_bands_csv(std::ostream& out, std::span<const BandRow> rows) {
  out << "dim,target_phi,snapped_phi,budget,power,trials,f_q025,f_q975,f_width,"
         "c_q025,c_q975,c_width,f_coverage_196,c_coverage_196\n";
  for (const auto& r : rows) {
    out << r.dim << ',' << fmt_double(r.target_phi) << ',' << fmt_double(r.snapped_phi) << ','
        << r.budget << ',' << r.power << ',' << r.trials << ',' << fmt_double(r.f_q025) << ','
        << fmt_double(r.f_q975) << ',' << fmt_double(r.f_width) << ',' << fmt_double(r.c_q025)
        << ',' << fmt_double(r.c_q975) << ',' << fmt_double(r.c_width) << ','
        << fmt_double(r.f_coverage_196) << ',' << fmt_double(r.c_coverage_196) << '\n';
  }
}

}  // namespace lma
