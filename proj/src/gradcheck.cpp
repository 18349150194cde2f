#include "lsseg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lsseg {

GradCheckResult grad_check(const TapedProgram& program, const std::vector<Grid>& leaves, double h,
                           int min_samples, Rng& rng) {
    if (!(h > 0.0)) throw std::invalid_argument("grad_check: h must be > 0");

    auto run = [&](const std::vector<Grid>& vals, bool want_grads,
                   std::vector<Grid>* grads) -> double {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(vals.size());
        for (const Grid& g : vals) vars.push_back(tape.leaf(g));
        Var loss = program(tape, vars);
        const Val& lv = tape.value(loss);
        if (lv.scalar == false) throw std::invalid_argument("grad_check: loss must be scalar");
        if (want_grads) {
            tape.backward(loss);
            grads->clear();
            for (Var v : vars) {
                Val g = tape.grad(v);
                grads->push_back(g.scalar ? Grid(1, 1, g.s) : g.g);
            }
        }
        return lv.s;
    };

    std::vector<Grid> tape_grads;
    run(leaves, true, &tape_grads);

    long total_coords = 0;
    for (const Grid& g : leaves) total_coords += g.size();
    long n_samples = std::min<long>(total_coords, std::max(min_samples, 1));

    GradCheckResult result;
    std::vector<Grid> work = leaves;
    for (long s = 0; s < n_samples; ++s) {
        long flat = static_cast<long>(rng.next() % static_cast<uint64_t>(total_coords));
        size_t li = 0;
        while (flat >= work[li].size()) {
            flat -= work[li].size();
            ++li;
        }
        double orig = work[li].values[flat];
        work[li].values[flat] = orig + h;
        double lp = run(work, false, nullptr);
        work[li].values[flat] = orig - h;
        double lm = run(work, false, nullptr);
        work[li].values[flat] = orig;

        double g_fd = (lp - lm) / (2.0 * h);
        double g_tape = tape_grads[li].values[flat];
        double denom = std::max({std::fabs(g_tape), std::fabs(g_fd), 1e-6});
        result.max_rel_err = std::max(result.max_rel_err, std::fabs(g_tape - g_fd) / denom);
        ++result.samples;
    }
    return result;
}

}  // namespace lsseg
