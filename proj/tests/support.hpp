#pragma once

// Shared helpers for the unit and acceptance suites. No test-framework
// dependency so the acceptance binary can use them too.

#include <cmath>
#include <cstdint>
#include <vector>

#include "pmafl/rng.hpp"
#include "pmafl/tensor.hpp"

namespace testsup {

inline pmafl::Tensor random_tensor(pmafl::Shape shape, pmafl::Rng& rng, double lo = -1.0,
                                   double hi = 1.0, bool requires_grad = false) {
    std::vector<double> v(static_cast<size_t>(pmafl::shape_numel(shape)));
    for (auto& x : v) x = pmafl::uniform_in(rng, lo, hi);
    return pmafl::Tensor::from(std::move(shape), std::move(v), requires_grad);
}

// Relative error with a small floor so finite-difference noise on near-zero
// gradients does not dominate: |a-b| / max(|a|, |b|, 1e-3).
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

inline double max_rel_err(const pmafl::Tensor& a, const pmafl::Tensor& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.data().size(); ++i) {
        worst = std::max(worst, rel_err(a.data()[i], b.data()[i]));
    }
    return worst;
}

inline double max_abs_diff(const pmafl::Tensor& a, const pmafl::Tensor& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.data().size(); ++i) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

inline bool bit_equal(const pmafl::Tensor& a, const pmafl::Tensor& b) {
    if (a.shape() != b.shape()) return false;
    for (size_t i = 0; i < a.data().size(); ++i) {
        if (a.data()[i] != b.data()[i]) return false;
    }
    return true;
}

// Checks backward() of `build(x)` against central finite differences in x.
// Returns the worst per-coordinate relative error.
inline double grad_check_input(const std::function<pmafl::Tensor(const pmafl::Tensor&)>& build,
                               const pmafl::Tensor& x0, double h = 1e-5) {
    pmafl::Tensor leaf = pmafl::Tensor::from(x0.shape(), x0.data(), true);
    pmafl::Tensor out = build(leaf);
    pmafl::Tensor analytic = pmafl::backward(out).get(leaf);
    pmafl::Tensor numeric = pmafl::finite_diff_gradient(
        [&](const pmafl::Tensor& x) { return build(x).item(); }, x0, h);
    return max_rel_err(analytic, numeric);
}

}  // namespace testsup
