#pragma once

#include "lmplambda/lmp.hpp"
#include "lmplambda/rng.hpp"
#include "lmplambda/syntax.hpp"

namespace lmplambda {

// Closed real-typed program in the continuous fragment. Terminating by
// construction: no fixpoints, applications only of literal lambdas, case only
// on literal booleans.
TermPtr random_continuous_program(RngStream& rng, int max_depth = 5);

// Small subprobabilistic kernel family with eighth-denominator weights, so
// all row sums and iterated products are exact doubles.
FiniteLMP random_finite_lmp(RngStream& rng, int max_states = 8, int max_labels = 3);

} // namespace lmplambda
