#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lsseg/grid.hpp"
#include "lsseg/tape.hpp"

namespace lsseg {

enum class RegionMode { Localized, Global };
enum class LambdaMode { Fields, Constants };

/// Scalar knobs of the level-set evolution.
struct AcmParams {
    double mu = 0.2;
    double eps = 1.0;
    double dt = 0.5;
    int iters = 60;
    int window = 5;
    double eta = kDivGuard;  // flat-gradient/normalizer guard; not part of the JSON schema
    RegionMode region_mode = RegionMode::Localized;
    LambdaMode lambda_mode = LambdaMode::Fields;
    double lambda1 = 1.0;  // Constants mode only
    double lambda2 = 1.0;

    void validate() const;
    std::string to_json() const;
    /// Rejects unknown keys.
    static AcmParams from_json(const std::string& text);
};

struct AcmState {
    Grid phi;
    Grid image;
    Val lambda1;
    Val lambda2;
    int step_index = 0;
};

Grid heaviside(const Grid& phi, double eps);
Grid dirac(const Grid& phi, double eps);
Grid curvature(const Grid& phi, PadMode pad = PadMode::Replicate);

/// Heaviside-weighted means inside/outside the contour; Global mode broadcasts
/// the scalar means to grids.
std::pair<Grid, Grid> local_means(const Grid& image, const Grid& phi, const AcmParams& p);

Grid force(const Grid& image, const Grid& phi, const Val& lambda1, const Val& lambda2,
           const Val& m1, const Val& m2, double eps);

AcmState evolve_step(const AcmState& state, const AcmParams& p);

struct EvolveResult {
    Grid phi;
    std::vector<Grid> history;
};
EvolveResult evolve(const Grid& image, const Grid& phi0, const Val& lambda1, const Val& lambda2,
                    const AcmParams& p, int history_every = 0);

double energy(const Grid& image, const Grid& phi, const Val& lambda1, const Val& lambda2,
              const AcmParams& p);

Grid mask_from_phi(const Grid& phi);

/// Records the full N-iteration evolution on the tape; image enters as a
/// constant, phi0/lambda enter as already-recorded Vars.
Var evolve_on_tape(Tape& tape, const Grid& image, Var phi0, Var lambda1, Var lambda2,
                   const AcmParams& p);

}  // namespace lsseg
