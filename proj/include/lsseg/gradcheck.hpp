#pragma once

#include <functional>
#include <vector>

#include "lsseg/rng.hpp"
#include "lsseg/tape.hpp"

namespace lsseg {

/// Builds a scalar loss from already-recorded leaf Vars (one per entry of the
/// leaf value list; scalars are passed as 1x1 grids).
using TapedProgram = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheckResult {
    double max_rel_err = 0.0;
    int samples = 0;
};

/// Compares tape gradients against central finite differences on a random
/// subsample of at least `min_samples` leaf coordinates.
/// rel err = |g_tape - g_fd| / max(|g_tape|, |g_fd|, 1e-6)
GradCheckResult grad_check(const TapedProgram& program, const std::vector<Grid>& leaves, double h,
                           int min_samples, Rng& rng);

}  // namespace lsseg
