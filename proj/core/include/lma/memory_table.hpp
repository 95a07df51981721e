#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lma/allocation.hpp"

#include "json.hpp"

namespace lma {

enum class MemoryInit : std::uint8_t {
  kRademacherHalf,    // +-1 with probability 1/2 (the existence-argument init)
  kUniformSymmetric,  // uniform in [-scale, scale] (training init)
};

struct MemoryInitSpec {
  MemoryInit kind = MemoryInit::kUniformSymmetric;
  double scale = 1.0;  // only used by kUniformSymmetric

  friend bool operator==(const MemoryInitSpec&, const MemoryInitSpec&) = default;
};

void to_json(nlohmann::json& j, const MemoryInitSpec& s);
void from_json(const nlohmann::json& j, MemoryInitSpec& s);

// The budget-m parameter vector. Fixed length for its whole lifetime; gathers
// are concurrent-read safe, mutation is single-writer.
class SharedMemory {
 public:
  SharedMemory(std::uint64_t budget, MemoryInitSpec init, std::uint64_t seed);

  std::uint64_t budget() const noexcept { return params_.size(); }
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  const MemoryInitSpec& init_spec() const noexcept { return init_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Checkpoint: 8-byte magic, m as little-endian u64, then m little-endian
  // IEEE-754 doubles. A JSON sidecar at <path>.json carries init spec and seed.
  void save(const std::filesystem::path& path) const;
  static SharedMemory load(const std::filesystem::path& path);

 private:
  SharedMemory() = default;

  std::vector<double> params_;
  MemoryInitSpec init_;
  std::uint64_t seed_ = 0;
};

// Per-batch index matrix I: one LocationRow per batch value.
struct LocationMatrix {
  std::vector<ValueId> values;
  std::vector<LocationRow> rows;
  std::uint32_t dim = 0;

  std::size_t batch_size() const { return rows.size(); }
};

// E_batch = M[I]; out[b][i] = params[rows[b].slots[i]]. Out-of-range slots
// signal an allocator/budget mismatch.
Eigen::MatrixXd gather(const SharedMemory& memory, const LocationMatrix& locations);

// acc[s] += sum of grads[b][i] over all cells with slots[b][i] == s; duplicate
// slots within and across rows accumulate additively, in row-major order, so
// single-threaded runs are bitwise reproducible.
void scatter_add(const LocationMatrix& locations, const Eigen::MatrixXd& grads,
                 std::span<double> accumulator);

double cosine_similarity(std::span<const double> e1, std::span<const double> e2);

}  // namespace lma
