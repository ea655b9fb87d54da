#pragma once

#include <gmpxx.h>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "martsia/common.hpp"
#include "martsia/policy.hpp"

namespace martsia::lsss {

using Int = mpz_class;

// Share-generating matrix over Z_p. A subset of rows reconstructs the
// secret iff e1 = (1,0,...,0) lies in its row span.
struct LsssMatrix {
  std::vector<std::vector<Int>> rows;
  std::vector<std::string> rho;  // row index -> namespaced attribute
  size_t width = 0;
  Int p;
};

struct ReconstructionPlan {
  std::map<size_t, Int> coefficients;  // zero-coefficient rows omitted
};

// Vandermonde insertion, depth-first. A Threshold(t, n) gate with label v
// allocates t-1 fresh columns; child i (1-based) is labeled
// v + sum_{j=1..t-1} i^j * e_{c+j}. AND (t=n) and OR (t=1) fall out as
// specializations. Deterministic for a fixed formula.
LsssMatrix compile_lsss(const policy::Formula& f, const Int& p);

// Gaussian elimination over Z_p, smallest-index pivot first. nullopt when
// the subset is unqualified.
std::optional<ReconstructionPlan> reconstruction_coefficients(
    const LsssMatrix& m, const std::set<std::string>& subset);

// Test oracle for share-level correctness; the ABE engine consumes the
// matrix directly.
std::map<size_t, Int> share_secret(const LsssMatrix& m, const Int& s, Rng& rng);

}  // namespace martsia::lsss
