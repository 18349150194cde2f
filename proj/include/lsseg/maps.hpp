#pragma once

#include <vector>

#include "lsseg/grid.hpp"
#include "lsseg/tape.hpp"

namespace lsseg {

/// Exact Euclidean distance (pixels) to the nearest 1-pixel of the mask.
/// An all-zero mask yields the sentinel distance everywhere.
Grid edt(const Grid& mask);

/// Signed distance map from a probability map: positive inside {prob > threshold},
/// negative outside, magnitude = exact Euclidean distance to the other side.
Grid prob_to_sdm(const Grid& prob, double threshold = 0.5);

/// lambda1 = exp((2-Y)/(1+Y)), lambda2 = exp((1+Y)/(2-Y)), pointwise.
std::pair<Grid, Grid> lambda_maps(const Grid& prob);

/// Binary edge map: 1 where the Sobel magnitude of the mask is nonzero.
Grid edge_gt(const Grid& mask);

/// Differentiable boundary strength: Gumbel-softmax over the class probability
/// maps (frozen noise, zeros if absent), then the gradient magnitude of the
/// foreground channel (index 1).
Var soft_boundary(Tape& tape, const std::vector<Var>& class_probs, double tau,
                  const std::vector<Grid>* frozen_noise = nullptr);

/// Eager convenience wrapper over a scratch tape.
Grid soft_boundary(const std::vector<Grid>& class_probs, double tau,
                   const std::vector<Grid>* frozen_noise = nullptr);

}  // namespace lsseg
