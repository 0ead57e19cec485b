#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "megu/nn.hpp"
#include "test_util.hpp"

using namespace megu;
namespace tu = megu::testutil;

TEST_CASE("softmax_rows: symmetry and overflow stability") {
    Matrix m(2, 3);
    m.row(1)[0] = 1000.0;  // row 0 stays all-zero
    auto p = softmax_rows(m);
    for (std::size_t c = 0; c < 3; ++c) CHECK(p(0, c) == doctest::Approx(1.0 / 3.0));
    CHECK(p(1, 0) == doctest::Approx(1.0));
    CHECK(p(1, 1) == doctest::Approx(0.0));
    CHECK(p.all_finite());

    Matrix bad(1, 2);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(softmax_rows(bad), std::invalid_argument);
}

TEST_CASE("softmax_rows: rows sum to 1 for random input") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(-20.0, 20.0);
    Matrix m(50, 6);
    for (double& v : m.data) v = unit(rng);
    auto p = softmax_rows(m);
    for (std::size_t i = 0; i < p.rows; ++i) {
        double s = 0.0;
        for (double v : p.row(i)) s += v;
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("cross_entropy: closed forms") {
    Matrix onehot(1, 2);
    onehot(0, 0) = 1.0;
    CHECK(cross_entropy(onehot, onehot, {0}) == doctest::Approx(0.0).epsilon(1e-9));

    Matrix half(1, 2, 0.5);
    CHECK(cross_entropy(half, onehot, {0}) == doctest::Approx(std::log(2.0)).epsilon(1e-9));

    CHECK(cross_entropy(half, onehot, {}) == 0.0);
    CHECK_THROWS_AS(cross_entropy(half, Matrix(1, 3), {0}), std::invalid_argument);
}

TEST_CASE("cross_entropy matches independent summation oracle") {
    std::mt19937_64 rng(2);
    auto pred = tu::random_prob_matrix(20, 5, rng);
    auto target = tu::random_prob_matrix(20, 5, rng);
    auto rows = tu::all_rows(20);
    double expected = 0.0;
    for (auto r : rows)
        for (std::size_t c = 0; c < 5; ++c)
            expected -= target(r, c) * std::log(pred(r, c) + 1e-12);
    expected /= 20.0;
    CHECK(cross_entropy(pred, target, rows) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("kl_divergence: closed forms and nonnegativity") {
    std::mt19937_64 rng(3);
    auto p = tu::random_prob_matrix(10, 4, rng);
    CHECK(kl_divergence(p, p, tu::all_rows(10)) == doctest::Approx(0.0).epsilon(1e-12));

    Matrix ref(1, 2), other(1, 2, 0.5);
    ref(0, 0) = 1.0;
    CHECK(kl_divergence(ref, other, {0}) == doctest::Approx(std::log(2.0)).epsilon(1e-6));

    auto q = tu::random_prob_matrix(10, 4, rng);
    CHECK(kl_divergence(p, q, tu::all_rows(10)) >= 0.0);
}

TEST_CASE("loss identity: CE(p,t) - KL(t,p) = H(t) on random interior pairs") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i) {
        auto p = tu::random_prob_matrix(1, 5, rng);
        auto t = tu::random_prob_matrix(1, 5, rng);
        double entropy = 0.0;
        for (std::size_t c = 0; c < 5; ++c) entropy -= t(0, c) * std::log(t(0, c) + 1e-12);
        CHECK(std::abs(cross_entropy(p, t, {0}) - kl_divergence(t, p, {0}) - entropy) <= 1e-9);
    }
}

TEST_CASE("sgd_step arithmetic") {
    std::vector<Matrix> params{Matrix(1, 1, 1.0)};
    std::vector<Matrix> grads{Matrix(1, 1, 2.0)};
    sgd_step(params, grads, {0.1, 1, 0.0});
    CHECK(params[0](0, 0) == doctest::Approx(0.8).epsilon(1e-15));

    // lr = 0 leaves params unchanged whatever the gradient
    sgd_step(params, grads, {0.0, 1, 0.3});
    CHECK(params[0](0, 0) == doctest::Approx(0.8).epsilon(1e-15));

    std::vector<Matrix> nang{Matrix(1, 1, std::nan(""))};
    CHECK_THROWS_AS(sgd_step(params, nang, {0.1, 1, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(sgd_step(params, {Matrix(2, 2)}, {0.1, 1, 0.0}), std::invalid_argument);
}

TEST_CASE("sgd converges on a quadratic bowl") {
    std::vector<Matrix> w{Matrix(1, 1, 3.0)};
    for (int step = 0; step < 200; ++step) {
        std::vector<Matrix> g{Matrix(1, 1, 2.0 * w[0](0, 0))};  // d/dw of w^2
        sgd_step(w, g, {0.1, 1, 0.0});
    }
    CHECK(std::abs(w[0](0, 0)) <= 1e-6);
}

TEST_CASE("finite_difference_check: linear loss, softmax-CE, negative control") {
    // linear loss w . c
    Matrix coeff(2, 2);
    coeff.data = {1.0, -2.0, 0.5, 3.0};
    auto linear = [&](const std::vector<Matrix>& p) {
        double s = 0.0;
        for (std::size_t i = 0; i < 4; ++i) s += p[0].data[i] * coeff.data[i];
        return s;
    };
    std::vector<Matrix> params{Matrix(2, 2, 0.3)};
    auto rep = finite_difference_check(linear, params, {coeff}, 1e-7);
    CHECK(rep.passed);

    // softmax + CE on random logits
    std::mt19937_64 rng(5);
    auto target = tu::random_prob_matrix(4, 3, rng);
    auto rows = tu::all_rows(4);
    auto loss = [&](const std::vector<Matrix>& p) {
        return cross_entropy(softmax_rows(p[0]), target, rows);
    };
    Matrix logits(4, 3);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (double& v : logits.data) v = unit(rng);
    auto probs = softmax_rows(logits);
    Matrix grad_probs(4, 3);
    cross_entropy_backward(probs, target, rows, 1.0, grad_probs);
    Matrix analytic = softmax_backward(probs, grad_probs);
    auto rep2 = finite_difference_check(loss, {logits}, {analytic}, 1e-5);
    CHECK(rep2.passed);

    // corrupting one gradient entry must fail the check
    analytic.data[3] += 0.5;
    CHECK_FALSE(finite_difference_check(loss, {logits}, {analytic}, 1e-5).passed);
}

TEST_CASE("kl_divergence_backward matches finite differences through both arguments") {
    std::mt19937_64 rng(6);
    Matrix la(3, 4), lb(3, 4);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (double& v : la.data) v = unit(rng);
    for (double& v : lb.data) v = unit(rng);
    auto rows = tu::all_rows(3);
    auto loss = [&](const std::vector<Matrix>& p) {
        return kl_divergence(softmax_rows(p[0]), softmax_rows(p[1]), rows);
    };
    auto pa = softmax_rows(la), pb = softmax_rows(lb);
    Matrix ga(3, 4), gb(3, 4);
    kl_divergence_backward(pa, pb, rows, 1.0, ga, gb);
    std::vector<Matrix> analytic{softmax_backward(pa, ga), softmax_backward(pb, gb)};
    auto rep = finite_difference_check(loss, {la, lb}, analytic, 1e-5);
    CHECK(rep.passed);
}
