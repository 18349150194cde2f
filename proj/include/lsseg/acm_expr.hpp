#pragma once

#include <cmath>
#include <utility>

#include "lsseg/acm.hpp"
#include "lsseg/engine.hpp"

namespace lsseg::expr {

inline constexpr double kPi = 3.14159265358979323846;

// H(phi) = 1/2 + (1/pi) * arctan(phi/eps)
template <class E>
typename E::V heaviside(E& e, typename E::V phi, double eps) {
    return e.cadd(e.cmul(e.map_arctan(e.cmul(phi, 1.0 / eps)), 1.0 / kPi), 0.5);
}

// delta(phi) = (1/pi) * eps / (eps^2 + phi^2)
template <class E>
typename E::V dirac(E& e, typename E::V phi, double eps) {
    auto den = e.cadd(e.mul(phi, phi), eps * eps);
    return e.cmul(e.div_guarded(e.constant(eps), den, 0.0), 1.0 / kPi);
}

// (pxx*py^2 - 2*pxy*px*py + pyy*px^2) / (px^2 + py^2 + eta)^(3/2)
template <class E>
typename E::V curvature(E& e, typename E::V phi, PadMode pad, double eta = kDivGuard) {
    auto dx = e.central_diff(phi, Axis::X, pad);
    auto dy = e.central_diff(phi, Axis::Y, pad);
    auto dxx = e.diff_xx(phi, pad);
    auto dyy = e.diff_yy(phi, pad);
    auto dxy = e.diff_xy(phi, pad);
    auto dx2 = e.mul(dx, dx);
    auto dy2 = e.mul(dy, dy);
    auto t1 = e.mul(dxx, dy2);
    auto t2 = e.cmul(e.mul(e.mul(dxy, dx), dy), 2.0);
    auto t3 = e.mul(dyy, dx2);
    auto num = e.add(e.sub(t1, t2), t3);
    auto s = e.cadd(e.add(dx2, dy2), eta);
    auto den = e.mul(s, e.map_sqrt(s));
    return e.div_guarded(num, den, 0.0);
}

// Heaviside-weighted window means of the image inside/outside the contour.
template <class E>
std::pair<typename E::V, typename E::V> local_means(E& e, typename E::V image,
                                                    typename E::V h_phi, const AcmParams& p) {
    auto one_minus_h = e.cadd(e.cmul(h_phi, -1.0), 1.0);
    if (p.region_mode == RegionMode::Localized) {
        auto m1 = e.div_guarded(e.box_mean(e.mul(image, h_phi), p.window, PadMode::Replicate),
                                e.box_mean(h_phi, p.window, PadMode::Replicate), p.eta);
        auto m2 = e.div_guarded(e.box_mean(e.mul(image, one_minus_h), p.window, PadMode::Replicate),
                                e.box_mean(one_minus_h, p.window, PadMode::Replicate), p.eta);
        return {m1, m2};
    }
    auto m1 = e.div_guarded(e.sum(e.mul(image, h_phi)), e.sum(h_phi), p.eta);
    auto m2 = e.div_guarded(e.sum(e.mul(image, one_minus_h)), e.sum(one_minus_h), p.eta);
    return {m1, m2};
}

// delta(phi) * (l1*(I-m1)^2 - l2*(I-m2)^2)
template <class E>
typename E::V force(E& e, typename E::V image, typename E::V delta, typename E::V l1,
                    typename E::V l2, typename E::V m1, typename E::V m2) {
    auto r1 = e.sub(image, m1);
    auto r2 = e.sub(image, m2);
    auto a = e.mul(l1, e.mul(r1, r1));
    auto b = e.mul(l2, e.mul(r2, r2));
    return e.mul(delta, e.sub(a, b));
}

// One explicit Euler step of the evolution PDE. The window integral of the
// force is (2f+1)^2 * box_mean in Localized mode and the global sum in Global
// mode. The force term enters with a minus sign so that a bright object on a
// dark background expands the interior-positive contour.
template <class E>
typename E::V evolve_step(E& e, typename E::V image, typename E::V phi, typename E::V l1,
                          typename E::V l2, const AcmParams& p) {
    auto h = heaviside(e, phi, p.eps);
    auto delta = dirac(e, phi, p.eps);
    auto [m1, m2] = local_means(e, image, h, p);
    auto f = force(e, image, delta, l1, l2, m1, m2);
    typename E::V win;
    if (p.region_mode == RegionMode::Localized) {
        double k = 2.0 * p.window + 1.0;
        win = e.cmul(e.box_mean(f, p.window, PadMode::Replicate), k * k);
    } else {
        win = e.sum(f);
    }
    auto kappa = curvature(e, phi, PadMode::Replicate, p.eta);
    auto dphidt = e.mul(delta, e.sub(e.cmul(kappa, p.mu), win));
    return e.add(phi, e.cmul(dphidt, p.dt));
}

}  // namespace lsseg::expr
