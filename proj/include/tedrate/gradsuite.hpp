#ifndef TEDRATE_GRADSUITE_HPP
#define TEDRATE_GRADSUITE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tedrate/models.hpp"

namespace tedrate::gradsuite {

struct CheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Finite-difference checks for every autodiff primitive at seeded random
// points. Fast; runs on every `gradcheck` invocation.
std::vector<CheckResult> primitive_checks(std::uint64_t seed);

// End-to-end checks through the three architectures at a tiny configuration
// (H=8, embeddings 8/4/4, two 3-sentence talks); backs `gradcheck --full`.
std::vector<CheckResult> model_checks(std::uint64_t seed);

bool all_pass(const std::vector<CheckResult>& results);

// A deterministic miniature talk set exercising branching trees, chains and
// prosody signals; shared by the model checks and the model unit tests.
struct TinyFixture {
  models::ModelConfig config;  // variant left for the caller to set
  std::vector<models::TalkInput> talks;
  std::vector<std::vector<double>> targets;  // one 14-vector per talk
};
TinyFixture tiny_fixture(std::uint64_t seed);

}  // namespace tedrate::gradsuite

#endif  // TEDRATE_GRADSUITE_HPP
