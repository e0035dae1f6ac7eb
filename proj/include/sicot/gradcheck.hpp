#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sicot/optim.hpp"
#include "sicot/tape.hpp"
#include "sicot/tensor.hpp"

namespace sicot {

// Central finite-difference verification of the analytic gradients produced
// by a tape. The scalar function is rebuilt from scratch for every
// evaluation, so the check is independent of any recorded graph state.
struct GradCheckEntry {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    bool pass = true;
    double tolerance = 0.0;
    GradCheckEntry worst;
    std::vector<GradCheckEntry> failures;
    std::size_t coords_checked = 0;

    std::string summary() const {
        std::ostringstream os;
        os << (pass ? "pass" : "fail") << " coords=" << coords_checked
           << " worst=" << worst.param << "[" << worst.index << "]"
           << " rel_err=" << worst.rel_err << " tol=" << tolerance;
        return os.str();
    }
};

// err = |a - n| / max(1, |a|, |n|): relative above 1, absolute below.
inline double gradcheck_rel_err(double analytic, double numeric) {
    double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
    return std::fabs(analytic - numeric) / denom;
}

using ScalarFn = std::function<Tensor(Tape&)>;

// Named finite-difference case: parameters plus the scalar function that
// rebuilds the graph from them.
struct OpCheck {
    std::string name;
    ParamSet params;
    ScalarFn fn;
};

inline GradCheckReport grad_check(const ScalarFn& fn, ParamSet& params,
                                  double tolerance) {
    GradCheckReport report;
    report.tolerance = tolerance;

    zero_grads(params);
    Tape tape;
    Tensor loss = fn(tape);
    tape.backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.tensor.grad());

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor t = params[pi].tensor;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double w0 = t.data()[i];
            const double h = 1e-5 * (1.0 + std::fabs(w0));
            t.data()[i] = w0 + h;
            Tape tp;
            const double fp = fn(tp).value();
            t.data()[i] = w0 - h;
            Tape tm;
            const double fm = fn(tm).value();
            t.data()[i] = w0;

            GradCheckEntry e;
            e.param = params[pi].name;
            e.index = i;
            e.analytic = analytic[pi][i];
            e.numeric = (fp - fm) / (2.0 * h);
            e.rel_err = gradcheck_rel_err(e.analytic, e.numeric);
            ++report.coords_checked;
            if (e.rel_err > report.worst.rel_err) report.worst = e;
            if (e.rel_err > tolerance) {
                report.pass = false;
                report.failures.push_back(e);
            }
        }
    }
    zero_grads(params);
    return report;
}

}  // namespace sicot
