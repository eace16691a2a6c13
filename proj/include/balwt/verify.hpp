#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "balwt/dataset.hpp"
#include "balwt/random.hpp"
#include "balwt/types.hpp"

// Self-checking suite of the library's numerical equivalences, run over
// randomly generated instances. Each check reports its worst observed
// violation; an injection hook perturbs one side of a named identity so the
// suite can prove it would catch a regression.

namespace balwt {

struct IdentityReport {
  std::string name;
  double max_violation = 0;
  double tolerance = 0;
  bool pass = false;
};

struct VerifyOptions {
  int instances = 50;
  std::uint64_t seed = 0;
  std::string perturb;  // name of one identity to fault-inject
};

std::vector<IdentityReport> run_identity_suite(const VerifyOptions& opts);

std::vector<std::string> identity_names();

// Random problem instances for the suite and for tests. Diagonal instances
// have exactly orthogonal feature columns (Gram is diagonal to float
// precision); outcomes follow a random linear signal plus noise.
ProblemData random_instance(Rng& rng, Index n, Index d, bool diagonal = false);

}  // namespace balwt
