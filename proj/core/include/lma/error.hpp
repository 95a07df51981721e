#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lma {

// Thrown by set hashes and Jaccard when the input set is empty; callers that
// allocate embeddings are expected to catch this and take the sparse fallback.
struct EmptySetError : std::domain_error {
  using std::domain_error::domain_error;
};

// A full-table allocation was asked for more slots than the memory budget has.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed dataset input. `line` is the 1-based line number in the file.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::uint64_t line_number)
      : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  std::uint64_t line;
};

}  // namespace lma
