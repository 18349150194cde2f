#include "lsseg/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "lsseg/acm_expr.hpp"
#include "lsseg/maps.hpp"

namespace lsseg {

namespace {

void check_pred_gt(const Tape& t, Var pred, const Grid& gt, const char* what) {
    const Val& pv = t.value(pred);
    if (pv.scalar) throw std::invalid_argument(std::string(what) + ": pred must be a grid");
    check_same_shape(pv.g, gt, what);
}

}  // namespace

Var dice_loss(Tape& t, Var pred, const Grid& gt, double eps) {
    check_pred_gt(t, pred, gt, "dice_loss");
    double sum_gt2 = gsum(ew_mul(gt, gt));
    Var inter = t.sum(t.mul(pred, t.constant(gt)));
    Var sum_pred2 = t.sum(t.mul(pred, pred));
    Var denom = t.cadd(sum_pred2, sum_gt2 + eps);
    Var ratio = t.div_guarded(t.cmul(inter, 2.0), denom, 0.0);
    return t.cadd(t.cmul(ratio, -1.0), 1.0);
}

double dice_loss(const Grid& pred, const Grid& gt, double eps) {
    Tape t;
    return t.value(dice_loss(t, t.leaf(pred), gt, eps)).s;
}

Var balanced_bce(Tape& t, Var pred, const Grid& gt_edges) {
    check_pred_gt(t, pred, gt_edges, "balanced_bce");
    const int total = gt_edges.size();
    int n_edge = 0;
    for (double v : gt_edges.values) n_edge += v > 0.5 ? 1 : 0;
    double beta = static_cast<double>(total - n_edge) / total;
    Grid non_edges(gt_edges.height, gt_edges.width);
    Grid edges(gt_edges.height, gt_edges.width);
    for (int i = 0; i < total; ++i) {
        edges.values[i] = gt_edges.values[i] > 0.5 ? 1.0 : 0.0;
        non_edges.values[i] = 1.0 - edges.values[i];
    }
    Var pc = t.clamp(pred, kProbClamp, 1.0 - kProbClamp);
    Var log_p = t.map_log(pc);
    Var log_1mp = t.map_log(t.cadd(t.cmul(pc, -1.0), 1.0));
    Var edge_term = t.sum(t.mul(t.constant(edges), log_p));
    Var non_edge_term = t.sum(t.mul(t.constant(non_edges), log_1mp));
    return t.add(t.cmul(edge_term, -beta), t.cmul(non_edge_term, -(1.0 - beta)));
}

double balanced_bce(const Grid& pred, const Grid& gt_edges) {
    Tape t;
    return t.value(balanced_bce(t, t.leaf(pred), gt_edges)).s;
}

Var edge_loss(Tape& t, Var pred_edges, const Grid& gt_edges, const LossWeights& w) {
    Var d = dice_loss(t, pred_edges, gt_edges);
    Var b = balanced_bce(t, pred_edges, gt_edges);
    return t.add(t.cmul(d, w.edge_dice), t.cmul(b, w.edge_bce));
}

double edge_loss(const Grid& pred_edges, const Grid& gt_edges, const LossWeights& w) {
    Tape t;
    return t.value(edge_loss(t, t.leaf(pred_edges), gt_edges, w)).s;
}

Var consistency_loss(Tape& t, const std::vector<Var>& class_probs, const Grid& gt_mask,
                     double tau, const std::vector<Grid>* frozen_noise) {
    Grid e_plus = edge_gt(gt_mask);
    // hard boundary strength of the ground truth
    Grid dx = central_diff(gt_mask, Axis::X, PadMode::Replicate);
    Grid dy = central_diff(gt_mask, Axis::Y, PadMode::Replicate);
    Grid gm(gt_mask.height, gt_mask.width);
    for (int i = 0; i < gm.size(); ++i)
        gm.values[i] = std::sqrt(dx.values[i] * dx.values[i] + dy.values[i] * dy.values[i]);
    Var sb = soft_boundary(t, class_probs, tau, frozen_noise);
    Var diff = t.map_abs(t.sub(sb, t.constant(gm)));
    return t.sum(t.mul(t.constant(e_plus), diff));
}

double consistency_loss(const std::vector<Grid>& class_probs, const Grid& gt_mask, double tau,
                        const std::vector<Grid>* frozen_noise) {
    Tape t;
    std::vector<Var> vars;
    for (const Grid& g : class_probs) vars.push_back(t.leaf(g));
    return t.value(consistency_loss(t, vars, gt_mask, tau, frozen_noise)).s;
}

namespace {

Var mean_bce_of_prob(Tape& t, Var prob, const Grid& gt) {
    Grid g_pos(gt.height, gt.width), g_neg(gt.height, gt.width);
    for (int i = 0; i < gt.size(); ++i) {
        g_pos.values[i] = gt.values[i] > 0.5 ? 1.0 : 0.0;
        g_neg.values[i] = 1.0 - g_pos.values[i];
    }
    Var pc = t.clamp(prob, kProbClamp, 1.0 - kProbClamp);
    Var log_p = t.map_log(pc);
    Var log_1mp = t.map_log(t.cadd(t.cmul(pc, -1.0), 1.0));
    Var inner = t.add(t.mul(t.constant(g_pos), log_p), t.mul(t.constant(g_neg), log_1mp));
    return t.cmul(t.mean(inner), -1.0);
}

}  // namespace

Var acm_bce(Tape& t, Var phi, const Grid& gt, double eps) {
    check_pred_gt(t, phi, gt, "acm_bce");
    TapeEngine e(t);
    Var h = expr::heaviside(e, phi, eps);
    return mean_bce_of_prob(t, h, gt);
}

double acm_bce(const Grid& phi, const Grid& gt, double eps) {
    Tape t;
    return t.value(acm_bce(t, t.leaf(phi), gt, eps)).s;
}

Var prob_bce(Tape& t, Var prob, const Grid& gt) {
    check_pred_gt(t, prob, gt, "prob_bce");
    return mean_bce_of_prob(t, prob, gt);
}

double prob_bce(const Grid& prob, const Grid& gt) {
    Tape t;
    return t.value(prob_bce(t, t.leaf(prob), gt)).s;
}

Var total_edge_network_loss(Tape& t, Var main_pred, Var shape_pred, const Grid& y_true,
                            const Grid& s_true, const LossWeights& w, bool with_consistency) {
    Var main_dice = dice_loss(t, main_pred, y_true);
    Var shape_dice = dice_loss(t, shape_pred, s_true);
    Var shape_bce = balanced_bce(t, shape_pred, s_true);
    Var total = t.add(t.add(t.cmul(main_dice, w.w_main_dice), t.cmul(shape_dice, w.w_shape_dice)),
                      t.cmul(shape_bce, w.w_edge));
    if (with_consistency) {
        std::vector<Var> probs = {t.cadd(t.cmul(main_pred, -1.0), 1.0), main_pred};
        total = t.add(total, consistency_loss(t, probs, y_true, w.consistency_tau));
    }
    return total;
}

double total_edge_network_loss(const Grid& main_pred, const Grid& shape_pred, const Grid& y_true,
                               const Grid& s_true, const LossWeights& w, bool with_consistency) {
    Tape t;
    return t.value(total_edge_network_loss(t, t.leaf(main_pred), t.leaf(shape_pred), y_true,
                                           s_true, w, with_consistency))
        .s;
}

Var dtac_total_loss(Tape& t, Var phi_n, Var cnn_prob, const Grid& gt, double eps) {
    return t.add(acm_bce(t, phi_n, gt, eps), prob_bce(t, cnn_prob, gt));
}

double dtac_total_loss(const Grid& phi_n, const Grid& cnn_prob, const Grid& gt, double eps) {
    Tape t;
    return t.value(dtac_total_loss(t, t.leaf(phi_n), t.leaf(cnn_prob), gt, eps)).s;
}

}  // namespace lsseg
