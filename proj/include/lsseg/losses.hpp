#pragma once

#include <vector>

#include "lsseg/grid.hpp"
#include "lsseg/tape.hpp"

namespace lsseg {

struct LossWeights {
    double w_main_dice = 1.0;
    double w_shape_dice = 0.5;
    double w_edge = 0.1;
    double edge_dice = 1.0;
    double edge_bce = 1.0;
    double consistency_tau = 1.0;
};

inline constexpr double kProbClamp = 1e-7;

// Taped forms (ground truth enters as a constant), plus eager wrappers that
// run on a scratch tape so both paths share one formula.

/// 1 - 2*sum(gt*pred) / (sum(gt^2) + sum(pred^2) + eps)
Var dice_loss(Tape& t, Var pred, const Grid& gt, double eps = 1e-7);
double dice_loss(const Grid& pred, const Grid& gt, double eps = 1e-7);

/// Balanced BCE with beta = (#non-edge)/(#total) weighting the edge term.
Var balanced_bce(Tape& t, Var pred, const Grid& gt_edges);
double balanced_bce(const Grid& pred, const Grid& gt_edges);

Var edge_loss(Tape& t, Var pred_edges, const Grid& gt_edges, const LossWeights& w);
double edge_loss(const Grid& pred_edges, const Grid& gt_edges, const LossWeights& w);

/// L1 mismatch of soft and hard boundary strength over the gt edge set.
Var consistency_loss(Tape& t, const std::vector<Var>& class_probs, const Grid& gt_mask,
                     double tau, const std::vector<Grid>* frozen_noise = nullptr);
double consistency_loss(const std::vector<Grid>& class_probs, const Grid& gt_mask, double tau,
                        const std::vector<Grid>* frozen_noise = nullptr);

/// Mean BCE between H_eps(phi) and the gt mask.
Var acm_bce(Tape& t, Var phi, const Grid& gt, double eps);
double acm_bce(const Grid& phi, const Grid& gt, double eps);

/// Mean BCE between a probability map and the gt mask.
Var prob_bce(Tape& t, Var prob, const Grid& gt);
double prob_bce(const Grid& prob, const Grid& gt);

Var total_edge_network_loss(Tape& t, Var main_pred, Var shape_pred, const Grid& y_true,
                            const Grid& s_true, const LossWeights& w,
                            bool with_consistency = false);
double total_edge_network_loss(const Grid& main_pred, const Grid& shape_pred, const Grid& y_true,
                               const Grid& s_true, const LossWeights& w,
                               bool with_consistency = false);

/// acm_bce(phi_N, gt) + prob_bce(cnn_prob, gt)
Var dtac_total_loss(Tape& t, Var phi_n, Var cnn_prob, const Grid& gt, double eps);
double dtac_total_loss(const Grid& phi_n, const Grid& cnn_prob, const Grid& gt, double eps);

}  // namespace lsseg
