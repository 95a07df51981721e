#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lma/error.hpp"

#include "json.hpp"

namespace lma {

// Largest Mersenne prime below 2^64; modular reduction is two shifts and an add.
inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

// Universality of the hash simulating the minwise permutation. A 2-universal
// surrogate measurably biases the collision rate on small structured sets;
// degree 4 keeps the empirical kernel within +-0.002 of exact Jaccard.
inline constexpr unsigned kDefaultSurrogateK = 4;

namespace detail {

// z mod (2^61 - 1) for z < 2^122.
inline std::uint64_t mod_mersenne61(unsigned __int128 z) noexcept {
  std::uint64_t r = static_cast<std::uint64_t>(z & kMersenne61) +
                    static_cast<std::uint64_t>(z >> 61);
  r = (r & kMersenne61) + (r >> 61);
  return r >= kMersenne61 ? r - kMersenne61 : r;
}

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t p) noexcept {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % p);
}

}  // namespace detail

bool is_prime_u64(std::uint64_t n);

// Counter-based seed split: one master seed fans out to any number of
// independent child seeds, so a whole allocation is reproducible from one
// integer.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

// SplitMix64. All randomness in the project flows through this generator so
// results do not depend on the standard library's distribution internals.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  // Unbiased draw from [0, bound).
  std::uint64_t uniform_below(std::uint64_t bound);

  // Uniform in [0, 1) with 53 random bits.
  double next_double();

  // Uniform in [-scale, scale].
  double next_symmetric(double scale);

  // Standard normal via Box-Muller (two draws per call, no caching).
  double next_gaussian();

 private:
  std::uint64_t state_;
};

// The k-universal polynomial family
//   h(x) = (a_0 + sum_{i=1}^{k-1} a_i x^i) mod P mod r
// with a_0 in [0, P) and a_i in [1, P) for i >= 1. Evaluation is Horner's
// rule with 128-bit intermediates; x is reduced mod P on entry. Immutable
// after construction.
class UniversalHash {
 public:
  UniversalHash(std::vector<std::uint64_t> coefficients, std::uint64_t range,
                std::uint64_t prime = kMersenne61);

  // Coefficients drawn uniformly from a seeded generator; same seed, same function.
  static UniversalHash sample(std::uint64_t seed, unsigned k, std::uint64_t range,
                              std::uint64_t prime = kMersenne61);

  std::uint64_t operator()(std::uint64_t x) const noexcept;

  unsigned universality() const noexcept { return static_cast<unsigned>(coeffs_.size()); }
  std::uint64_t prime() const noexcept { return prime_; }
  std::uint64_t range() const noexcept { return range_; }
  std::span<const std::uint64_t> coefficients() const noexcept { return coeffs_; }

 private:
  std::vector<std::uint64_t> coeffs_;
  std::uint64_t prime_;
  std::uint64_t range_;
  bool full_range_;  // range == prime, skip the final reduction
};

// Minwise hash over integer sets. The permutation over U is simulated by a
// k-universal hash with range P; the hash of a set is the minimum of the
// hashed member values, so it depends on membership only.
class MinwiseHash {
 public:
  explicit MinwiseHash(UniversalHash surrogate);

  static MinwiseHash sample(std::uint64_t seed, unsigned surrogate_k = kDefaultSurrogateK);

  std::uint64_t operator()(std::span<const std::uint32_t> set) const;
  std::uint64_t operator()(std::span<const std::uint64_t> set) const;

  const UniversalHash& surrogate() const noexcept { return surrogate_; }

 private:
  template <typename T>
  std::uint64_t min_over(std::span<const T> set) const;

  UniversalHash surrogate_;
};

// Power-n_h minwise hash rehashed into [0, m): n_h independent minwise values
// are folded into one key by iterated universal hashing
//   key <- (key * c + next) mod P,
// which collides distinct tuples with probability < n_h/P, then the key is
// mapped through a k'-universal rehasher with range m. Collision kernel:
//   phi^{n_h} + (1 - phi^{n_h}) / m.
class PoweredRehashedLsh {
 public:
  PoweredRehashedLsh(std::vector<MinwiseHash> bases, UniversalHash rehasher,
                     std::uint64_t fold_multiplier);

  static PoweredRehashedLsh sample(std::uint64_t seed, unsigned power, std::uint64_t range,
                                   unsigned rehash_k = 2,
                                   unsigned surrogate_k = kDefaultSurrogateK);

  std::uint64_t operator()(std::span<const std::uint32_t> set) const;
  std::uint64_t operator()(std::span<const std::uint64_t> set) const;

  unsigned power() const noexcept { return static_cast<unsigned>(bases_.size()); }
  std::uint64_t range() const noexcept { return rehasher_.range(); }
  const UniversalHash& rehasher() const noexcept { return rehasher_; }

 private:
  template <typename T>
  std::uint64_t combined_key(std::span<const T> set) const;

  std::vector<MinwiseHash> bases_;
  UniversalHash rehasher_;
  std::uint64_t fold_multiplier_;
};

// Gamma = phi^{n_h} + (1 - phi^{n_h}) / m, the analytic collision expectation
// the verification harness compares against.
double kernel_value(double phi_base, unsigned power, std::uint64_t range);

// Portable descriptor for a family of powered rehashed hashes. Integer fields
// only, so the JSON round-trip is bit-exact and reconstruction is deterministic.
struct LshFamilyDescriptor {
  std::uint64_t seed = 0;
  unsigned power = 1;          // n_h
  unsigned rehash_k = 2;       // k' of the rehasher
  unsigned surrogate_k = kDefaultSurrogateK;
  std::uint64_t prime = kMersenne61;
  std::uint64_t range = 1;     // m

  PoweredRehashedLsh instantiate() const;

  friend bool operator==(const LshFamilyDescriptor&, const LshFamilyDescriptor&) = default;
};

void to_json(nlohmann::json& j, const LshFamilyDescriptor& d);
void from_json(const nlohmann::json& j, LshFamilyDescriptor& d);

}  // namespace lma
