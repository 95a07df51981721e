#include "lma/memory_table.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "lma/hashing.hpp"

#include "binary_io.hpp"

namespace lma {

namespace {

using detail::get_f64;
using detail::get_u64;
using detail::put_f64;
using detail::put_u64;

constexpr char kMagic[8] = {'L', 'M', 'A', 'M', 'E', 'M', '0', '1'};

}  // namespace

void to_json(nlohmann::json& j, const MemoryInitSpec& s) {
  j = nlohmann::json{
      {"kind", s.kind == MemoryInit::kRademacherHalf ? "rademacher_half" : "uniform_symmetric"},
      {"scale", s.scale}};
}

void from_json(const nlohmann::json& j, MemoryInitSpec& s) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "rademacher_half") {
    s.kind = MemoryInit::kRademacherHalf;
  } else if (kind == "uniform_symmetric") {
    s.kind = MemoryInit::kUniformSymmetric;
  } else {
    throw std::invalid_argument("unknown memory init '" + kind + "'");
  }
  j.at("scale").get_to(s.scale);
}

SharedMemory::SharedMemory(std::uint64_t budget, MemoryInitSpec init, std::uint64_t seed)
    : init_(init), seed_(seed) {
  if (budget == 0) throw std::invalid_argument("SharedMemory: budget must be >= 1");
  params_.resize(budget);
  SplitMix64 rng(seed);
  switch (init.kind) {
    case MemoryInit::kRademacherHalf:
      for (auto& p : params_) p = (rng.next() & 1) ? 1.0 : -1.0;
      break;
    case MemoryInit::kUniformSymmetric:
      for (auto& p : params_) p = rng.next_symmetric(init.scale);
      break;
  }
}

void SharedMemory::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put_u64(out, params_.size());
  for (double p : params_) put_f64(out, p);
  if (!out) throw std::runtime_error("short write to " + path.string());

  nlohmann::json sidecar{{"init", init_}, {"seed", seed_}, {"budget", params_.size()}};
  std::ofstream side(path.string() + ".json");
  if (!side) throw std::runtime_error("cannot write sidecar for " + path.string());
  side << sidecar.dump(2) << '\n';
}

SharedMemory SharedMemory::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error(path.string() + " is not a memory checkpoint");
  }
  const std::uint64_t budget = get_u64(in);
  SharedMemory memory;
  memory.params_.resize(budget);
  for (auto& p : memory.params_) p = get_f64(in);
  if (!in) throw std::runtime_error("truncated memory checkpoint " + path.string());

  std::ifstream side(path.string() + ".json");
  if (side) {
    nlohmann::json sidecar = nlohmann::json::parse(side);
    memory.init_ = sidecar.at("init").get<MemoryInitSpec>();
    memory.seed_ = sidecar.at("seed").get<std::uint64_t>();
  }
  return memory;
}

Eigen::MatrixXd gather(const SharedMemory& memory, const LocationMatrix& locations) {
  const auto params = memory.params();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(locations.rows.size()),
                      static_cast<Eigen::Index>(locations.dim));
  for (std::size_t b = 0; b < locations.rows.size(); ++b) {
    const auto& row = locations.rows[b];
    if (row.dim() != locations.dim) {
      throw std::invalid_argument("gather: row dimension mismatch");
    }
    for (std::uint32_t i = 0; i < locations.dim; ++i) {
      const std::uint64_t slot = row.slots[i];
      if (slot >= params.size()) {
        throw std::out_of_range("gather: slot " + std::to_string(slot) +
                                " outside budget m=" + std::to_string(params.size()));
      }
      out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i)) = params[slot];
    }
  }
  return out;
}

void scatter_add(const LocationMatrix& locations, const Eigen::MatrixXd& grads,
                 std::span<double> accumulator) {
  if (grads.rows() != static_cast<Eigen::Index>(locations.rows.size()) ||
      grads.cols() != static_cast<Eigen::Index>(locations.dim)) {
    throw std::invalid_argument("scatter_add: gradient shape mismatch");
  }
  for (std::size_t b = 0; b < locations.rows.size(); ++b) {
    const auto& row = locations.rows[b];
    for (std::uint32_t i = 0; i < locations.dim; ++i) {
      const std::uint64_t slot = row.slots[i];
      if (slot >= accumulator.size()) {
        throw std::out_of_range("scatter_add: slot outside accumulator");
      }
      accumulator[slot] += grads(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i));
    }
  }
}

double cosine_similarity(std::span<const double> e1, std::span<const double> e2) {
  if (e1.size() != e2.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  if (e1.empty()) throw std::invalid_argument("cosine_similarity: empty vectors");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    dot += e1[i] * e2[i];
    n1 += e1[i] * e1[i];
    n2 += e2[i] * e2[i];
  }
  if (n1 == 0.0 || n2 == 0.0) {
    throw std::invalid_argument("cosine_similarity: zero-norm vector");
  }
  return dot / (std::sqrt(n1) * std::sqrt(n2));
}

}  // namespace lma
