#include "lsseg/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lsseg {

Grid oracle_edt(const Grid& mask) {
    const int h = mask.height, w = mask.width;
    std::vector<std::pair<int, int>> seeds;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            if (mask.at(i, j) > 0.5) seeds.push_back({i, j});
    Grid d(h, w, kSdmSentinel);
    if (seeds.empty()) return d;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            double best = 1e30;
            for (auto [si, sj] : seeds) {
                double di = i - si, dj = j - sj;
                best = std::min(best, di * di + dj * dj);
            }
            d.at(i, j) = std::sqrt(best);
        }
    return d;
}

namespace {

// independent flood-fill labeling, 8-connectivity
void flood(const Grid& mask, std::vector<int>& labels, int i, int j, int label) {
    const int h = mask.height, w = mask.width;
    std::vector<std::pair<int, int>> todo{{i, j}};
    labels[static_cast<size_t>(i) * w + j] = label;
    while (!todo.empty()) {
        auto [ci, cj] = todo.back();
        todo.pop_back();
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
                if (di == 0 && dj == 0) continue;
                int ni = ci + di, nj = cj + dj;
                if (ni < 0 || ni >= h || nj < 0 || nj >= w) continue;
                size_t idx = static_cast<size_t>(ni) * w + nj;
                if (mask.values[idx] > 0.5 && labels[idx] == 0) {
                    labels[idx] = label;
                    todo.push_back({ni, nj});
                }
            }
    }
}

int flood_label_all(const Grid& mask, std::vector<int>& labels) {
    labels.assign(mask.values.size(), 0);
    int count = 0;
    for (int i = 0; i < mask.height; ++i)
        for (int j = 0; j < mask.width; ++j) {
            size_t idx = static_cast<size_t>(i) * mask.width + j;
            if (mask.values[idx] > 0.5 && labels[idx] == 0) flood(mask, labels, i, j, ++count);
        }
    return count;
}

std::vector<std::pair<int, int>> boundary_points(const Grid& mask) {
    std::vector<std::pair<int, int>> pts;
    const int h = mask.height, w = mask.width;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            if (mask.at(i, j) <= 0.5) continue;
            bool edge = i == 0 || i == h - 1 || j == 0 || j == w - 1;
            if (!edge)
                edge = mask.at(i - 1, j) <= 0.5 || mask.at(i + 1, j) <= 0.5 ||
                       mask.at(i, j - 1) <= 0.5 || mask.at(i, j + 1) <= 0.5;
            if (edge) pts.push_back({i, j});
        }
    return pts;
}

double min_dist(std::pair<int, int> p, const std::vector<std::pair<int, int>>& set) {
    double best = 1e30;
    for (auto [i, j] : set) {
        double di = p.first - i, dj = p.second - j;
        best = std::min(best, di * di + dj * dj);
    }
    return std::sqrt(best);
}

}  // namespace

double oracle_wcov(const Grid& gt, const Grid& pred) {
    std::vector<int> lg, lp;
    int ng = flood_label_all(gt, lg);
    int np = flood_label_all(pred, lp);
    if (ng == 0) return np == 0 ? 1.0 : 0.0;
    double total = 0.0;
    long n_fg = 0;
    for (int a = 1; a <= ng; ++a) {
        long area_a = 0;
        for (size_t i = 0; i < lg.size(); ++i) area_a += lg[i] == a;
        n_fg += area_a;
        double best = 0.0;
        for (int b = 1; b <= np; ++b) {
            long inter = 0, uni = 0;
            for (size_t i = 0; i < lg.size(); ++i) {
                bool ia = lg[i] == a, ib = lp[i] == b;
                inter += ia && ib;
                uni += ia || ib;
            }
            if (uni > 0) best = std::max(best, static_cast<double>(inter) / uni);
        }
        total += static_cast<double>(area_a) * best;
    }
    return total / static_cast<double>(n_fg);
}

std::pair<double, double> oracle_global_means(const Grid& image, const Grid& phi, double eps) {
    double num1 = 0.0, den1 = 0.0, num2 = 0.0, den2 = 0.0;
    for (int i = 0; i < image.size(); ++i) {
        double h = 0.5 + std::atan(phi.values[i] / eps) / 3.14159265358979323846;
        num1 += image.values[i] * h;
        den1 += h;
        num2 += image.values[i] * (1.0 - h);
        den2 += 1.0 - h;
    }
    return {num1 / (den1 + 1e-8), num2 / (den2 + 1e-8)};
}

OracleBoundaryMetrics oracle_boundary_metrics(const Grid& gt, const Grid& pred) {
    auto bg = boundary_points(gt);
    auto bp = boundary_points(pred);
    OracleBoundaryMetrics m{1.0, -1.0};
    if (bg.empty() && bp.empty()) return m;
    double acc = 0.0;
    for (int d = 1; d <= 5; ++d) {
        double precision = 0.0, recall = 0.0;
        if (!bp.empty()) {
            long hit = 0;
            for (auto p : bp)
                if (!bg.empty() && min_dist(p, bg) <= d) ++hit;
            precision = static_cast<double>(hit) / bp.size();
        }
        if (!bg.empty()) {
            long hit = 0;
            for (auto p : bg)
                if (!bp.empty() && min_dist(p, bp) <= d) ++hit;
            recall = static_cast<double>(hit) / bg.size();
        }
        acc += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    m.boundf = acc / 5.0;
    if (!bg.empty() && !bp.empty()) {
        double h1 = 0.0, h2 = 0.0;
        for (auto p : bg) h1 = std::max(h1, min_dist(p, bp));
        for (auto p : bp) h2 = std::max(h2, min_dist(p, bg));
        m.hausdorff = std::max(h1, h2);
    }
    return m;
}

}  // namespace lsseg
