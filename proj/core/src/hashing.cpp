#include "lma/hashing.hpp"

#include <cmath>
#include <stdexcept>

namespace lma {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t powmod(std::uint64_t base, std::uint64_t exp, std::uint64_t mod) {
  std::uint64_t result = 1;
  base %= mod;
  while (exp > 0) {
    if (exp & 1) result = detail::mulmod(result, base, mod);
    base = detail::mulmod(base, base, mod);
    exp >>= 1;
  }
  return result;
}

}  // namespace

bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // Deterministic Miller-Rabin bases for the full 64-bit range.
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int i = 1; i < s; ++i) {
      x = detail::mulmod(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  return mix64(master + kGolden * (counter + 1));
}

std::uint64_t SplitMix64::next() {
  state_ += kGolden;
  return mix64(state_);
}

std::uint64_t SplitMix64::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
  // Lemire's multiply-shift with rejection.
  unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (lo < threshold) {
      m = static_cast<unsigned __int128>(next()) * bound;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double SplitMix64::next_double() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::next_symmetric(double scale) {
  return (2.0 * next_double() - 1.0) * scale;
}

double SplitMix64::next_gaussian() {
  const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

UniversalHash::UniversalHash(std::vector<std::uint64_t> coefficients, std::uint64_t range,
                             std::uint64_t prime)
    : coeffs_(std::move(coefficients)), prime_(prime), range_(range), full_range_(range == prime) {
  if (coeffs_.empty()) throw std::invalid_argument("UniversalHash: need at least one coefficient");
  if (!is_prime_u64(prime_)) throw std::invalid_argument("UniversalHash: P must be prime");
  if (range_ == 0 || range_ > prime_) {
    throw std::invalid_argument("UniversalHash: range must be in [1, P]");
  }
  if (coeffs_[0] >= prime_) throw std::invalid_argument("UniversalHash: a_0 must be in [0, P)");
  for (std::size_t i = 1; i < coeffs_.size(); ++i) {
    if (coeffs_[i] == 0 || coeffs_[i] >= prime_) {
      throw std::invalid_argument("UniversalHash: a_i must be in [1, P) for i >= 1");
    }
  }
}

UniversalHash UniversalHash::sample(std::uint64_t seed, unsigned k, std::uint64_t range,
                                    std::uint64_t prime) {
  if (k == 0) throw std::invalid_argument("UniversalHash::sample: k must be >= 1");
  if (!is_prime_u64(prime)) throw std::invalid_argument("UniversalHash::sample: P must be prime");
  SplitMix64 rng(seed);
  std::vector<std::uint64_t> coeffs(k);
  coeffs[0] = rng.uniform_below(prime);
  for (unsigned i = 1; i < k; ++i) coeffs[i] = 1 + rng.uniform_below(prime - 1);
  return UniversalHash(std::move(coeffs), range, prime);
}

std::uint64_t UniversalHash::operator()(std::uint64_t x) const noexcept {
  std::uint64_t value;
  if (prime_ == kMersenne61) {
    const std::uint64_t xr = detail::mod_mersenne61(x);
    std::uint64_t acc = coeffs_.back();
    for (std::size_t i = coeffs_.size() - 1; i-- > 0;) {
      acc = detail::mod_mersenne61(static_cast<unsigned __int128>(acc) * xr + coeffs_[i]);
    }
    value = acc;
  } else {
    const std::uint64_t xr = x % prime_;
    std::uint64_t acc = coeffs_.back();
    for (std::size_t i = coeffs_.size() - 1; i-- > 0;) {
      acc = static_cast<std::uint64_t>(
          (static_cast<unsigned __int128>(acc) * xr + coeffs_[i]) % prime_);
    }
    value = acc;
  }
  return full_range_ ? value : value % range_;
}

MinwiseHash::MinwiseHash(UniversalHash surrogate) : surrogate_(std::move(surrogate)) {
  if (surrogate_.range() != surrogate_.prime()) {
    throw std::invalid_argument("MinwiseHash: surrogate must have range == P");
  }
}

MinwiseHash MinwiseHash::sample(std::uint64_t seed, unsigned surrogate_k) {
  return MinwiseHash(UniversalHash::sample(seed, surrogate_k, kMersenne61, kMersenne61));
}

template <typename T>
std::uint64_t MinwiseHash::min_over(std::span<const T> set) const {
  if (set.empty()) throw EmptySetError("minhash of an empty set");
  std::uint64_t best = surrogate_(static_cast<std::uint64_t>(set[0]));
  for (std::size_t i = 1; i < set.size(); ++i) {
    const std::uint64_t h = surrogate_(static_cast<std::uint64_t>(set[i]));
    if (h < best) best = h;
  }
  return best;
}

std::uint64_t MinwiseHash::operator()(std::span<const std::uint32_t> set) const {
  return min_over(set);
}

std::uint64_t MinwiseHash::operator()(std::span<const std::uint64_t> set) const {
  return min_over(set);
}

PoweredRehashedLsh::PoweredRehashedLsh(std::vector<MinwiseHash> bases, UniversalHash rehasher,
                                       std::uint64_t fold_multiplier)
    : bases_(std::move(bases)), rehasher_(std::move(rehasher)), fold_multiplier_(fold_multiplier) {
  if (bases_.empty()) throw std::invalid_argument("PoweredRehashedLsh: power must be >= 1");
  if (fold_multiplier_ == 0 || fold_multiplier_ >= kMersenne61) {
    throw std::invalid_argument("PoweredRehashedLsh: fold multiplier must be in [1, P)");
  }
}

PoweredRehashedLsh PoweredRehashedLsh::sample(std::uint64_t seed, unsigned power,
                                              std::uint64_t range, unsigned rehash_k,
                                              unsigned surrogate_k) {
  if (power == 0) throw std::invalid_argument("PoweredRehashedLsh::sample: power must be >= 1");
  std::vector<MinwiseHash> bases;
  bases.reserve(power);
  for (unsigned i = 0; i < power; ++i) {
    bases.push_back(MinwiseHash::sample(derive_seed(seed, i), surrogate_k));
  }
  UniversalHash rehasher = UniversalHash::sample(derive_seed(seed, power), rehash_k, range);
  SplitMix64 fold_rng(derive_seed(seed, power + 1));
  const std::uint64_t fold_c = 1 + fold_rng.uniform_below(kMersenne61 - 1);
  return PoweredRehashedLsh(std::move(bases), std::move(rehasher), fold_c);
}

template <typename T>
std::uint64_t PoweredRehashedLsh::combined_key(std::span<const T> set) const {
  std::uint64_t key = bases_[0](set);
  for (std::size_t i = 1; i < bases_.size(); ++i) {
    key = detail::mod_mersenne61(static_cast<unsigned __int128>(key) * fold_multiplier_ +
                                 bases_[i](set));
  }
  return key;
}

std::uint64_t PoweredRehashedLsh::operator()(std::span<const std::uint32_t> set) const {
  return rehasher_(combined_key(set));
}

std::uint64_t PoweredRehashedLsh::operator()(std::span<const std::uint64_t> set) const {
  return rehasher_(combined_key(set));
}

double kernel_value(double phi_base, unsigned power, std::uint64_t range) {
  if (phi_base < 0.0 || phi_base > 1.0) {
    throw std::invalid_argument("kernel_value: phi must be in [0, 1]");
  }
  if (range == 0) throw std::invalid_argument("kernel_value: range must be >= 1");
  double powered = 1.0;
  for (unsigned i = 0; i < power; ++i) powered *= phi_base;
  return powered + (1.0 - powered) / static_cast<double>(range);
}

PoweredRehashedLsh LshFamilyDescriptor::instantiate() const {
  if (prime != kMersenne61) {
    throw std::invalid_argument("LshFamilyDescriptor: only P = 2^61 - 1 is instantiable");
  }
  return PoweredRehashedLsh::sample(seed, power, range, rehash_k, surrogate_k);
}

void to_json(nlohmann::json& j, const LshFamilyDescriptor& d) {
  j = nlohmann::json{{"seed", d.seed},           {"power", d.power},
                     {"rehash_k", d.rehash_k},   {"surrogate_k", d.surrogate_k},
                     {"prime", d.prime},         {"range", d.range}};
}

void from_json(const nlohmann::json& j, LshFamilyDescriptor& d) {
  j.at("seed").get_to(d.seed);
  j.at("power").get_to(d.power);
  j.at("rehash_k").get_to(d.rehash_k);
  j.at("surrogate_k").get_to(d.surrogate_k);
  j.at("prime").get_to(d.prime);
  j.at("range").get_to(d.range);
}

}  // namespace lma
