#include <catch2/catch_amalgamated.hpp>

#include "pmafl/attacks.hpp"
#include "pmafl/model.hpp"
#include "support.hpp"

using namespace pmafl;

namespace {

AttackLossFn ce_loss_for(const ModelParams& frozen) {
    return [frozen](const Tensor& x, const std::vector<int>& y) {
        return cross_entropy(forward(frozen, x), y);
    };
}

}  // namespace

TEST_CASE("zero-iteration budget without random start is the identity") {
    Rng rng(1);
    ModelParams p = init_params(ModelSpec{{4, 3}}, 2).detached();
    Tensor x = testsup::random_tensor({2, 4}, rng, 0.0, 1.0);
    Tensor adv = pgd_attack(ce_loss_for(p), x, {0, 1}, {0.3, 0.1, 0, false}, rng);
    CHECK(testsup::bit_equal(adv, x));
}

TEST_CASE("epsilon zero is the identity for any iteration count") {
    Rng rng(2);
    ModelParams p = init_params(ModelSpec{{4, 3}}, 2).detached();
    Tensor x = testsup::random_tensor({2, 4}, rng, 0.0, 1.0);
    Tensor adv = pgd_attack(ce_loss_for(p), x, {0, 1}, {0.0, 0.1, 7, true}, rng);
    CHECK(testsup::bit_equal(adv, x));
    CHECK(testsup::bit_equal(fgsm_attack(ce_loss_for(p), x, {0, 1}, 0.0), x));
    CHECK(testsup::bit_equal(bim_attack(ce_loss_for(p), x, {0, 1}, {0.0, 0.1, 7, false}), x));
}

TEST_CASE("hand-derived 1-D logistic case moves against the gradient of correctness") {
    // logits [0, w*x] with w=1, b=0: positive class score rises with x, so
    // maximizing CE of the true positive label pushes x down.
    ModelParams p;
    p.spec = ModelSpec{{1, 2}};
    p.weights.push_back(Tensor::from({1, 2}, {0.0, 1.0}));
    p.biases.push_back(Tensor::from({2}, {0.0, 0.0}));

    Tensor x = Tensor::from({1, 1}, {0.5});
    std::vector<int> y{1};
    Rng rng(3);

    Tensor adv = pgd_attack(ce_loss_for(p), x, y, {0.1, 0.1, 1, false}, rng);
    CHECK(adv.at(0) == Catch::Approx(0.4));
    CHECK(fgsm_attack(ce_loss_for(p), x, y, 0.1).at(0) == Catch::Approx(0.4));

    // brute force confirmation: loss at x-eps beats loss at x+eps
    auto loss_at = [&](double v) {
        return cross_entropy(forward(p, Tensor::from({1, 1}, {v})), y).item();
    };
    CHECK(loss_at(0.4) > loss_at(0.6));
}

TEST_CASE("fgsm equals pgd with K=1, step=eps, no random start, bit for bit") {
    Rng rng(5);
    ModelParams p = init_params(ModelSpec{{6, 8, 3}}, 11).detached();
    Tensor x = testsup::random_tensor({4, 6}, rng, 0.0, 1.0);
    std::vector<int> y{0, 1, 2, 0};
    const double eps = 0.07;
    Tensor a = fgsm_attack(ce_loss_for(p), x, y, eps);
    Rng rng2(999);  // rng unused without random start
    Tensor b = pgd_attack(ce_loss_for(p), x, y, {eps, eps, 1, false}, rng2);
    CHECK(testsup::bit_equal(a, b));
}

TEST_CASE("bim equals pgd with random start disabled") {
    Rng rng(6);
    ModelParams p = init_params(ModelSpec{{5, 4, 2}}, 13).detached();
    Tensor x = testsup::random_tensor({3, 5}, rng, 0.0, 1.0);
    std::vector<int> y{0, 1, 1};
    AdvBudget budget{0.2, 0.05, 6, true};
    Tensor a = bim_attack(ce_loss_for(p), x, y, budget);
    AdvBudget no_start = budget;
    no_start.random_start = false;
    Rng rng2(7);
    Tensor b = pgd_attack(ce_loss_for(p), x, y, no_start, rng2);
    CHECK(testsup::bit_equal(a, b));
}

TEST_CASE("budget soundness over random attacks and budgets") {
    Rng rng(8);
    ModelParams p = init_params(ModelSpec{{5, 6, 3}}, 14).detached();
    for (int trial = 0; trial < 40; ++trial) {
        Tensor x = testsup::random_tensor({3, 5}, rng, 0.0, 1.0);
        std::vector<int> y{static_cast<int>(rng() % 3), static_cast<int>(rng() % 3),
                           static_cast<int>(rng() % 3)};
        AdvBudget budget{uniform_in(rng, 0.0, 0.4), uniform_in(rng, 0.01, 0.2),
                         static_cast<int>(rng() % 6), (rng() % 2) == 0};
        Tensor adv = pgd_attack(ce_loss_for(p), x, y, budget, rng);
        for (size_t i = 0; i < adv.data().size(); ++i) {
            CHECK(std::abs(adv.data()[i] - x.data()[i]) <= budget.epsilon + 1e-12);
            CHECK(adv.data()[i] >= 0.0);
            CHECK(adv.data()[i] <= 1.0);
        }
    }
}

TEST_CASE("attacks leave model parameters untouched") {
    Rng rng(9);
    ModelParams p = init_params(ModelSpec{{4, 5, 2}}, 15);
    std::vector<double> before = p.weights[0].data();
    ModelParams frozen = p.detached();
    Tensor x = testsup::random_tensor({2, 4}, rng, 0.0, 1.0);
    pgd_attack(ce_loss_for(frozen), x, {0, 1}, {0.3, 0.1, 5, true}, rng);
    CHECK(p.weights[0].data() == before);
    CHECK(frozen.weights[0].data() == before);
}

TEST_CASE("iterated attack raises the loss on most points") {
    // train a small model first so the loss surface is meaningful
    Dataset ds = synth_gaussian_mixture(3, 8, 60, 0.1, 77);
    Teacher t = pretrain_teacher(ds, ModelSpec{{8, 12, 3}}, {0.0, 0.1, 0, false}, {10, 0.3, 16}, 5);
    const ModelParams& p = t.params();

    Rng rng(10);
    int raised = 0;
    const int total = 60;
    for (int i = 0; i < total; ++i) {
        std::vector<int64_t> one{static_cast<int64_t>(i)};
        auto [x, y] = ds.batch(one);
        Tensor adv = bim_attack(ce_loss_for(p), x, y, {0.15, 0.03, 10, false});
        const double before = cross_entropy(forward(p, x), y).item();
        const double after = cross_entropy(forward(p, adv), y).item();
        raised += (after >= before - 1e-12);
    }
    CHECK(static_cast<double>(raised) / total >= 0.95);
}

TEST_CASE("project_linf clamps into the ball and the unit range") {
    Tensor center = Tensor::from({3}, {0.5, 0.5, 0.99});
    Tensor cand = Tensor::from({3}, {0.52, 0.9, 1.2});
    Tensor out = project_linf(cand, center, 0.05);
    CHECK(out.at(0) == 0.52);                  // inside the ball: unchanged
    CHECK(out.at(1) == Catch::Approx(0.55));   // ball boundary
    CHECK(out.at(2) == 1.0);                   // range clamp dominates
    CHECK_THROWS_AS(project_linf(Tensor::from({2}, {0.0, 0.0}), center, 0.1), ShapeError);
}

TEST_CASE("invalid budgets are rejected") {
    AdvBudget bad{0.1, 0.0, 3, false};
    CHECK_THROWS_AS(bad.validate(), ValueError);
    AdvBudget neg{-0.1, 0.1, 3, false};
    CHECK_THROWS_AS(neg.validate(), ValueError);
}
