#include "lsseg/acm.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "lsseg/acm_expr.hpp"

namespace lsseg {

void AcmParams::validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("AcmParams: eps must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("AcmParams: dt must be > 0");
    if (mu < 0.0) throw std::invalid_argument("AcmParams: mu must be >= 0");
    if (iters < 0) throw std::invalid_argument("AcmParams: iters must be >= 0");
    if (window < 1) throw std::invalid_argument("AcmParams: window must be >= 1");
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw std::invalid_argument("AcmParams: eta must be > 0");
    if (lambda1 < 0.0 || lambda2 < 0.0)
        throw std::invalid_argument("AcmParams: lambda values must be >= 0");
    if (!std::isfinite(mu) || !std::isfinite(eps) || !std::isfinite(dt) ||
        !std::isfinite(lambda1) || !std::isfinite(lambda2))
        throw std::invalid_argument("AcmParams: non-finite value");
}

std::string AcmParams::to_json() const {
    nlohmann::json j;
    j["mu"] = mu;
    j["eps"] = eps;
    j["dt"] = dt;
    j["iters"] = iters;
    j["window"] = window;
    j["region_mode"] = region_mode == RegionMode::Localized ? "localized" : "global";
    j["lambda_mode"] = lambda_mode == LambdaMode::Fields ? "fields" : "constants";
    j["lambda1"] = lambda1;
    j["lambda2"] = lambda2;
    return j.dump(2);
}

AcmParams AcmParams::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    static const std::set<std::string> known = {"mu",     "eps",         "dt",
                                               "iters",  "window",      "region_mode",
                                               "lambda_mode", "lambda1", "lambda2"};
    for (auto& [key, _] : j.items())
        if (!known.count(key)) throw std::invalid_argument("AcmParams: unknown key \"" + key + "\"");
    AcmParams p;
    if (j.contains("mu")) p.mu = j["mu"].get<double>();
    if (j.contains("eps")) p.eps = j["eps"].get<double>();
    if (j.contains("dt")) p.dt = j["dt"].get<double>();
    if (j.contains("iters")) p.iters = j["iters"].get<int>();
    if (j.contains("window")) p.window = j["window"].get<int>();
    if (j.contains("region_mode")) {
        std::string m = j["region_mode"].get<std::string>();
        if (m == "localized")
            p.region_mode = RegionMode::Localized;
        else if (m == "global")
            p.region_mode = RegionMode::Global;
        else
            throw std::invalid_argument("AcmParams: bad region_mode \"" + m + "\"");
    }
    if (j.contains("lambda_mode")) {
        std::string m = j["lambda_mode"].get<std::string>();
        if (m == "fields")
            p.lambda_mode = LambdaMode::Fields;
        else if (m == "constants")
            p.lambda_mode = LambdaMode::Constants;
        else
            throw std::invalid_argument("AcmParams: bad lambda_mode \"" + m + "\"");
    }
    if (j.contains("lambda1")) p.lambda1 = j["lambda1"].get<double>();
    if (j.contains("lambda2")) p.lambda2 = j["lambda2"].get<double>();
    p.validate();
    return p;
}

Grid heaviside(const Grid& phi, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("heaviside: eps must be > 0");
    EagerEngine e;
    return expr::heaviside(e, Val(phi), eps).g;
}

Grid dirac(const Grid& phi, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("dirac: eps must be > 0");
    EagerEngine e;
    return expr::dirac(e, Val(phi), eps).g;
}

Grid curvature(const Grid& phi, PadMode pad) {
    EagerEngine e;
    return expr::curvature(e, Val(phi), pad).g;
}

namespace {

Grid broadcast_grid(const Val& v, int h, int w) {
    if (v.scalar) return Grid(h, w, v.s);
    return v.g;
}

}  // namespace

std::pair<Grid, Grid> local_means(const Grid& image, const Grid& phi, const AcmParams& p) {
    check_same_shape(image, phi, "local_means");
    EagerEngine e;
    Val h = expr::heaviside(e, Val(phi), p.eps);
    auto [m1, m2] = expr::local_means(e, Val(image), h, p);
    return {broadcast_grid(m1, image.height, image.width),
            broadcast_grid(m2, image.height, image.width)};
}

Grid force(const Grid& image, const Grid& phi, const Val& lambda1, const Val& lambda2,
           const Val& m1, const Val& m2, double eps) {
    check_same_shape(image, phi, "force");
    EagerEngine e;
    Val delta = expr::dirac(e, Val(phi), eps);
    return expr::force(e, Val(image), delta, lambda1, lambda2, m1, m2).g;
}

AcmState evolve_step(const AcmState& state, const AcmParams& p) {
    check_same_shape(state.image, state.phi, "evolve_step");
    EagerEngine e;
    Val phi = expr::evolve_step(e, Val(state.image), Val(state.phi), state.lambda1,
                                state.lambda2, p);
    AcmState next = state;
    next.phi = std::move(phi.g);
    next.step_index = state.step_index + 1;
    return next;
}

EvolveResult evolve(const Grid& image, const Grid& phi0, const Val& lambda1, const Val& lambda2,
                    const AcmParams& p, int history_every) {
    p.validate();
    AcmState state{phi0, image, lambda1, lambda2, 0};
    EvolveResult result;
    for (int t = 0; t < p.iters; ++t) {
        state = evolve_step(state, p);
        if (history_every > 0 && state.step_index % history_every == 0)
            result.history.push_back(state.phi);
    }
    result.phi = std::move(state.phi);
    return result;
}

double energy(const Grid& image, const Grid& phi, const Val& lambda1, const Val& lambda2,
              const AcmParams& p) {
    check_same_shape(image, phi, "energy");
    EagerEngine e;
    Val phiv(phi);
    Val imgv(image);
    Val h = expr::heaviside(e, phiv, p.eps);
    Val delta = expr::dirac(e, phiv, p.eps);
    Val dx = e.central_diff(phiv, Axis::X, PadMode::Replicate);
    Val dy = e.central_diff(phiv, Axis::Y, PadMode::Replicate);
    Val grad_mag = e.map_sqrt(e.add(e.mul(dx, dx), e.mul(dy, dy)));
    double e_length = p.mu * val_sum(val_mul(delta, grad_mag)).s;

    auto [m1, m2] = expr::local_means(e, imgv, h, p);
    // winsum of (I(u)-m(x))^2 over the window = winsum(I^2) - 2 m winsum(I) + K^2 m^2
    Val win_i, win_i2;
    double k2;
    if (p.region_mode == RegionMode::Localized) {
        double k = 2.0 * p.window + 1.0;
        k2 = k * k;
        win_i = val_cmul(Val(box_mean(image, p.window, PadMode::Replicate)), k2);
        win_i2 = val_cmul(Val(box_mean(ew_mul(image, image), p.window, PadMode::Replicate)), k2);
    } else {
        k2 = static_cast<double>(image.size());
        win_i = Val(gsum(image));
        win_i2 = Val(gsum(ew_mul(image, image)));
    }
    auto residual_winsum = [&](const Val& m) {
        return val_add(val_sub(win_i2, val_cmul(val_mul(m, win_i), 2.0)),
                       val_cmul(val_mul(m, m), k2));
    };
    Val one_minus_h = val_cadd(val_cmul(h, -1.0), 1.0);
    Val inner = val_add(val_mul(lambda1, val_mul(h, residual_winsum(m1))),
                        val_mul(lambda2, val_mul(one_minus_h, residual_winsum(m2))));
    double e_image = val_sum(val_mul(delta, inner)).s;
    return e_length + e_image;
}

Grid mask_from_phi(const Grid& phi) { return threshold(phi, 0.0); }

Var evolve_on_tape(Tape& tape, const Grid& image, Var phi0, Var lambda1, Var lambda2,
                   const AcmParams& p) {
    p.validate();
    TapeEngine e(tape);
    Var img = tape.constant(image);
    Var phi = phi0;
    for (int t = 0; t < p.iters; ++t) phi = expr::evolve_step(e, img, phi, lambda1, lambda2, p);
    return phi;
}

}  // namespace lsseg
