#pragma once

// l-inf adversarial example generation: FGSM, BIM, and PGD with projection
// back into the epsilon-ball and the [0,1] input range.
//
// The loss callback owns the model; attacks only ever see gradients w.r.t.
// the input leaf, so the attacked parameters cannot pick up updates here.

#include <functional>
#include <vector>

#include "pmafl/errors.hpp"
#include "pmafl/rng.hpp"
#include "pmafl/tensor.hpp"

namespace pmafl {

struct AdvBudget {
    double epsilon = 0.0;    // l-inf bound, input units
    double step_size = 0.0;  // per-iteration step, input units
    int iterations = 0;
    bool random_start = false;

    void validate() const {
        if (epsilon < 0.0) throw ValueError("budget: epsilon must be >= 0");
        if (iterations < 0) throw ValueError("budget: iterations must be >= 0");
        if (iterations > 0 && !(step_size > 0.0)) {
            throw ValueError("budget: step_size must be > 0 when iterations > 0");
        }
    }
};

using AttackLossFn = std::function<Tensor(const Tensor& x, const std::vector<int>& y)>;

// Elementwise clamp into [center - eps, center + eps], then into [0,1].
inline Tensor project_linf(const Tensor& x_cand, const Tensor& x_center, double epsilon) {
    check_same_shape("project_linf", x_cand, x_center);
    std::vector<double> out(x_cand.data().size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double c = x_center.data()[i];
        double v = x_cand.data()[i];
        v = std::min(std::max(v, c - epsilon), c + epsilon);
        out[i] = std::min(std::max(v, 0.0), 1.0);
    }
    return Tensor::from(x_cand.shape(), std::move(out));
}

// x^{t+1} = project(x^t + step * sign(grad_x loss)); maximizes the loss
// within the epsilon-ball. Each iterate is a fresh leaf, so no graph spans
// iterations and the model parameters stay untouched.
inline Tensor pgd_attack(const AttackLossFn& loss_fn, const Tensor& x,
                         const std::vector<int>& y, const AdvBudget& budget, Rng& rng) {
    budget.validate();

    Tensor xt = x;
    if (budget.random_start) {
        std::vector<double> v(x.data().size());
        for (size_t i = 0; i < v.size(); ++i) {
            const double noise = uniform_in(rng, -budget.epsilon, budget.epsilon);
            v[i] = std::min(std::max(x.data()[i] + noise, 0.0), 1.0);
        }
        xt = project_linf(Tensor::from(x.shape(), std::move(v)), x, budget.epsilon);
    }

    for (int it = 0; it < budget.iterations; ++it) {
        Tensor leaf = Tensor::from(xt.shape(), xt.data(), true);
        Tensor loss = loss_fn(leaf, y);
        if (loss.numel() != 1) {
            throw ShapeError("pgd: loss must be scalar, got " + shape_str(loss.shape()));
        }
        Tensor g = backward(loss).get(leaf);
        std::vector<double> next(xt.data().size());
        for (size_t i = 0; i < next.size(); ++i) {
            const double gv = g.data()[i];
            const double s = gv > 0.0 ? 1.0 : (gv < 0.0 ? -1.0 : 0.0);
            next[i] = xt.data()[i] + budget.step_size * s;
        }
        xt = project_linf(Tensor::from(xt.shape(), std::move(next)), x, budget.epsilon);
    }
    return xt;
}

// Single signed step of size epsilon; definitionally PGD(K=1, step=eps, no
// random start), so it is implemented as exactly that call.
inline Tensor fgsm_attack(const AttackLossFn& loss_fn, const Tensor& x,
                          const std::vector<int>& y, double epsilon) {
    AdvBudget b{epsilon, epsilon, 1, false};
    if (epsilon == 0.0) b = AdvBudget{0.0, 0.0, 0, false};
    Rng unused(0);
    return pgd_attack(loss_fn, x, y, b, unused);
}

// PGD without the random start.
inline Tensor bim_attack(const AttackLossFn& loss_fn, const Tensor& x,
                         const std::vector<int>& y, const AdvBudget& budget) {
    AdvBudget b = budget;
    b.random_start = false;
    Rng unused(0);
    return pgd_attack(loss_fn, x, y, b, unused);
}

}  // namespace pmafl
