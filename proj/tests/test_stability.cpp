#include "catts/random.hpp"
#include "catts/stability.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace catts;

namespace {

Eigen::MatrixXd scalar(double a) { return Eigen::MatrixXd::Constant(1, 1, a); }
Eigen::VectorXd vscalar(double a) { return Eigen::VectorXd::Constant(1, a); }

/// All N^L newest-first histories.
std::vector<std::vector<CategoryValue>> all_histories(int n, int L) {
    std::vector<std::vector<CategoryValue>> out;
    std::size_t total = 1;
    for (int i = 0; i < L; ++i) {
        total *= static_cast<std::size_t>(n);
    }
    for (std::size_t code = 0; code < total; ++code) {
        std::vector<CategoryValue> h;
        std::size_t rest = code;
        for (int i = 0; i < L; ++i) {
            h.emplace_back(static_cast<int>(rest % static_cast<std::size_t>(n)) + 1, n);
            rest /= static_cast<std::size_t>(n);
        }
        out.push_back(std::move(h));
    }
    return out;
}

TruncatedLinear random_truncated(Rng& rng, int n, int L, double scale) {
    TruncatedLinear m{n, Eigen::VectorXd(n - 1), {}};
    for (int j = 0; j < n - 1; ++j) {
        m.d[j] = scale * (2.0 * rng.uniform() - 1.0);
    }
    for (int l = 0; l < L; ++l) {
        Eigen::MatrixXd A(n - 1, n - 1);
        for (Eigen::Index i = 0; i < A.size(); ++i) {
            A.data()[i] = scale * (2.0 * rng.uniform() - 1.0) / (l + 1);
        }
        m.A.push_back(A);
    }
    return m;
}

}  // namespace

TEST_CASE("lipschitz_profile examples") {
    const auto p = lipschitz_profile(TruncatedLinear{2, vscalar(0.0), {scalar(0.5)}});
    REQUIRE(p.delta.size() == 1);
    CHECK(p.delta[0] == doctest::Approx(0.5 * std::sqrt(2.0)));
    CHECK(p.weighted_sum == doctest::Approx(0.5 * std::sqrt(2.0)));

    const auto z = lipschitz_profile(TruncatedLinear{3, Eigen::VectorXd::Zero(2), {Eigen::MatrixXd::Zero(2, 2)}});
    CHECK(z.delta[0] == 0.0);
    CHECK(z.weighted_sum == 0.0);

    const auto two = lipschitz_profile(TruncatedLinear{2, vscalar(0.0), {scalar(0.3), scalar(-0.1)}});
    CHECK(two.weighted_sum == doctest::Approx(std::sqrt(2.0) * (0.3 + 0.2)));

    CHECK_THROWS_AS((void)lipschitz_profile(LinearFeedback{2, vscalar(0.0), {scalar(0.5)}, {scalar(1.0)}}),
                    std::invalid_argument);
}

TEST_CASE("property: the Lipschitz profile bounds every history pair") {
    Rng rng(31);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 2 + rep % 3;
        const int L = 1 + rep % 2;
        const auto m = random_truncated(rng, n, L, 1.0);
        const auto profile = lipschitz_profile(m);
        const auto hist = all_histories(n, L);
        for (const auto& x : hist) {
            for (const auto& y : hist) {
                double bound = 0.0;
                for (int j = 0; j < L; ++j) {
                    bound += x[j] == y[j] ? 0.0 : profile.delta[j];
                }
                const double diff = (eval_logodds(m, x, {}).values() - eval_logodds(m, y, {}).values()).norm();
                CHECK(diff <= bound + 1e-12);
            }
        }
    }
}

TEST_CASE("coupling_constants examples") {
    const auto zero = coupling_constants(TruncatedLinear{2, vscalar(0.0), {scalar(0.0)}});
    CHECK(zero.eta == doctest::Approx(0.5));
    CHECK(zero.M == doctest::Approx(0.25));
    CHECK(zero.gamma.values[0] == 0.0);
    CHECK(zero.gamma.at(5) == 0.0);

    const auto half = coupling_constants(TruncatedLinear{2, vscalar(0.0), {scalar(0.5)}});
    CHECK(half.eta == doctest::Approx(std::exp(-0.5) / (1.0 + std::exp(0.5))).epsilon(1e-14));
    CHECK(half.eta == doctest::Approx(0.2289).epsilon(1e-3));
    CHECK(half.gamma.values.size() == 2);
    CHECK(half.gamma.values[1] == 0.0);
    CHECK(half.gamma.values[0] < 1.0);
    CHECK(half.gamma.values[0] ==
          doctest::Approx(std::min(1.0 - half.eta, 0.25 * 0.5 * std::sqrt(2.0) / half.eta)));

    const auto three = coupling_constants(TruncatedLinear{4, Eigen::VectorXd::Zero(3), {Eigen::MatrixXd::Zero(3, 3)}});
    CHECK(three.M == doctest::Approx(std::sqrt(3.0) / 4.0));
}

TEST_CASE("property: eta is a lower bound on every conditional probability") {
    Rng rng(32);
    for (int rep = 0; rep < 40; ++rep) {
        const int n = 2 + rep % 3;
        const int L = 1 + rep % 3;
        const auto m = random_truncated(rng, n, L, 2.0);
        const auto cc = coupling_constants(m);
        CHECK(cc.eta <= 1.0 / n + 1e-15);
        double smallest = 1.0;
        for (const auto& h : all_histories(n, L)) {
            smallest = std::min(smallest, softmax_link(eval_logodds(m, h, {})).values().minCoeff());
        }
        CHECK(smallest >= cc.eta);
    }
}

TEST_CASE("property: gamma sequence satisfies the coupling ratio bound") {
    Rng rng(33);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 2 + rep % 2;
        const int L = 3;
        const auto m = random_truncated(rng, n, L, 0.6);
        const auto cc = coupling_constants(m);
        CHECK(cc.gamma.values[0] < 1.0);
        for (int pair = 0; pair < 1000; ++pair) {
            const auto agree = static_cast<std::size_t>(pair % (L + 1));
            std::vector<CategoryValue> x;
            std::vector<CategoryValue> y;
            for (int j = 0; j < L; ++j) {
                const int a = 1 + static_cast<int>(rng.uniform() * n);
                const int b = 1 + static_cast<int>(rng.uniform() * n);
                x.emplace_back(a, n);
                y.emplace_back(static_cast<std::size_t>(j) < agree ? a : b, n);
            }
            const Eigen::VectorXd px = softmax_link(eval_logodds(m, x, {})).values();
            const Eigen::VectorXd py = softmax_link(eval_logodds(m, y, {})).values();
            const double ratio = px.cwiseQuotient(py).minCoeff();
            CHECK(ratio >= 1.0 - cc.gamma.at(agree) - 1e-12);
        }
    }
}

TEST_CASE("check_linear_feedback examples") {
    const auto a = check_linear_feedback(LinearFeedback{2, vscalar(0.0), {scalar(0.5)}, {scalar(1.0)}});
    CHECK(a.rho == doctest::Approx(0.5));
    CHECK(a.pass);
    CHECK(*a.k == 1);
    CHECK(*a.kappa == doctest::Approx(0.5));

    const auto b = check_linear_feedback(LinearFeedback{2, vscalar(0.0), {scalar(0.5), scalar(0.3)}, {}});
    const double root = (0.5 + std::sqrt(0.25 + 1.2)) / 2.0;
    CHECK(b.rho == doctest::Approx(root).epsilon(1e-12));
    CHECK(b.rho == doctest::Approx(0.85208).epsilon(1e-5));
    CHECK(b.pass);

    const auto c = check_linear_feedback(LinearFeedback{2, vscalar(0.0), {scalar(1.0)}, {scalar(0.5)}});
    CHECK(c.rho == doctest::Approx(1.0));
    CHECK_FALSE(c.pass);
}

TEST_CASE("check_linear_feedback rejects radii indistinguishable from one") {
    const auto near = check_linear_feedback(LinearFeedback{2, vscalar(0.0), {scalar(1.0 - 1e-9)}, {}});
    CHECK_FALSE(near.pass);
    CHECK_THROWS_AS((void)check_linear_feedback(LinearFeedback{
                        2, vscalar(0.0), {(Eigen::MatrixXd(1, 1) << 0.999).finished(), scalar(0.0)}, {}}),
                    StabilityError);
}

TEST_CASE("property: companion contraction bound holds on random pairs") {
    Rng rng(34);
    const LinearFeedback m{3, Eigen::Vector2d(0.1, 0.2),
                           {(Eigen::MatrixXd(2, 2) << 0.9, 0.5, -0.4, 0.3).finished(),
                            (Eigen::MatrixXd(2, 2) << -0.2, 0.1, 0.1, 0.05).finished()},
                           {}};
    const auto fc = check_linear_feedback(m);
    REQUIRE(fc.pass);
    const Eigen::MatrixXd C = companion_matrix(m);
    Eigen::MatrixXd Ck = Eigen::MatrixXd::Identity(C.rows(), C.cols());
    for (int i = 0; i < *fc.k; ++i) {
        Ck = Ck * C;
    }
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd x(C.rows());
        Eigen::VectorXd xp(C.rows());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x[i] = 10.0 * rng.normal();
            xp[i] = 10.0 * rng.normal();
        }
        CHECK((Ck * x - Ck * xp).norm() <= *fc.kappa * (x - xp).norm() * (1.0 + 1e-12));
    }
}

TEST_CASE("property: companion radius agrees with the characteristic polynomial roots") {
    Rng rng(35);
    int checked = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const int p = 1 + rep % 3;
        std::vector<Eigen::MatrixXd> A;
        std::vector<double> coeffs{1.0};
        for (int i = 0; i < p; ++i) {
            const double a = 2.0 * rng.uniform() - 1.0;
            A.push_back(scalar(a));
            coeffs.push_back(-a);
        }
        const LinearFeedback lf{2, vscalar(0.0), A, {}};
        const double rho = spectral_radius(companion_matrix(lf));
        FeedbackCheck fc;
        try {
            fc = check_linear_feedback(lf);
        } catch (const StabilityError&) {
            CHECK(rho > 0.95);
            CHECK(rho < 1.0);
            continue;
        }
        CHECK(fc.rho == rho);
        double min_modulus = 1e300;
        bool degenerate = std::abs(coeffs.back()) < 1e-3;
        if (!degenerate) {
            for (const auto& z : oracle::polynomial_roots(coeffs)) {
                min_modulus = std::min(min_modulus, std::abs(z));
            }
        }
        if (degenerate || std::abs(fc.rho - 1.0) < 1e-6 || std::abs(min_modulus - 1.0) < 1e-6) {
            continue;
        }
        ++checked;
        CHECK((min_modulus > 1.0) == (fc.rho < 1.0));
        CHECK(fc.rho == doctest::Approx(1.0 / min_modulus).epsilon(1e-8));
    }
    CHECK(checked > 250);
}

TEST_CASE("check_nonlinear_contraction examples") {
    const std::vector<double> a1{0.5};
    const std::vector<double> b1{0.8};
    const auto c1 = check_nonlinear_contraction(a1, b1);
    CHECK(c1.alpha_sum == doctest::Approx(0.5));
    CHECK(c1.pass);

    const std::vector<double> a2{0.6, 0.5};
    const auto c2 = check_nonlinear_contraction(a2, b1);
    CHECK(c2.alpha_sum == doctest::Approx(1.1));
    CHECK_FALSE(c2.pass);

    const auto c3 = check_nonlinear_contraction(ThresholdBinary{0.1, 0.5, -0.3, 1.0});
    CHECK(c3.alpha_sum == doctest::Approx(0.5));
    CHECK(c3.pass);
    CHECK_FALSE(check_nonlinear_contraction(ThresholdBinary{0.1, 0.2, -1.3, 1.0}).pass);
}

TEST_CASE("check_summability examples") {
    const auto p = make_lipschitz_profile({0.5 * std::sqrt(2.0)});
    const auto s = check_summability(p);
    CHECK(s.pass);
    CHECK(s.value == doctest::Approx(0.5 * std::sqrt(2.0)));
    CHECK(check_summability(make_lipschitz_profile({0.0})).value == 0.0);

    const double C = 2.0;
    const double r = 0.6;
    const auto g = make_lipschitz_profile({0.5, 0.3}, GeometricTail{C, r});
    double partial = 0.5 + 2.0 * 0.3;
    for (int j = 3; j < 2000; ++j) {
        partial += j * C * std::pow(r, j);
    }
    const auto sg = check_summability(g);
    CHECK(sg.pass);
    CHECK(sg.value == doctest::Approx(partial).epsilon(1e-12));

    double tail = 0.0;
    for (int j = 5; j < 2000; ++j) {
        tail += C * std::pow(r, j);
    }
    CHECK(g.tail_sum(4) == doctest::Approx(tail).epsilon(1e-12));
    CHECK(g.tail_sum(1) == doctest::Approx(0.3 + C * std::pow(r, 3) / (1.0 - r)).epsilon(1e-12));

    CHECK_THROWS_AS((void)make_lipschitz_profile({-0.1}), std::invalid_argument);
    CHECK_THROWS_AS((void)make_lipschitz_profile({}, GeometricTail{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("contraction certificates for feedback models") {
    const LinearFeedback lf{2, vscalar(-0.4), {scalar(0.5)}, {scalar(0.8)}};
    const auto cert = contraction_certificate(lf);
    CHECK(cert.kappa == doctest::Approx(0.5));
    CHECK(cert.k == 1);
    CHECK(cert.offset_bound >= 0.4);
    CHECK(cert.offset_bound == doctest::Approx(1.2));
    CHECK(cert.input_sensitivity == doctest::Approx(0.8));
    CHECK(cert.stationary_bound() == doctest::Approx(2.4));
    CHECK(cert.composition_lipschitz(3) == doctest::Approx(0.125));

    const auto cc = coupling_constants(lf);
    REQUIRE(cc.gamma.tail_rate);
    CHECK(*cc.gamma.tail_rate == doctest::Approx(0.5));
    CHECK(cc.gamma.values.back() < 1e-17);
    for (std::size_t m = 1; m < cc.gamma.values.size(); ++m) {
        CHECK(cc.gamma.values[m] <= cc.gamma.values[m - 1]);
    }

    const auto tb = contraction_certificate(ThresholdBinary{0.1, 0.5, -0.3, 1.0});
    CHECK(tb.kappa == doctest::Approx(0.5));
    CHECK_THROWS_AS((void)contraction_certificate(ThresholdBinary{0.1, 1.5, -0.3, 1.0}), StabilityError);
    CHECK_THROWS_AS((void)contraction_certificate(LinearFeedback{2, vscalar(0.0), {scalar(1.2)}, {scalar(0.8)}}),
                    StabilityError);
    CHECK_THROWS_AS((void)contraction_certificate(TruncatedLinear{2, vscalar(0.0), {scalar(0.5)}}),
                    std::invalid_argument);
}

TEST_CASE("recommended burn-in follows the contraction rate") {
    const LinearFeedback lf{2, vscalar(-0.4), {scalar(0.5)}, {scalar(0.8)}};
    CHECK(recommended_burn_in(lf) == static_cast<std::size_t>(std::ceil(std::log(1e-10) / std::log(0.5))));
    CHECK(recommended_burn_in(TruncatedLinear{2, vscalar(0.0), {scalar(0.5)}}) == kDefaultBurnIn);
}
