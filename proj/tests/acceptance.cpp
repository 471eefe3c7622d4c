// Acceptance suite: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.

#include "catts/backward.hpp"
#include "catts/covariates.hpp"
#include "catts/inference.hpp"
#include "catts/mixing.hpp"
#include "catts/stability.hpp"
#include "cli_fixture.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace catts;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

Eigen::MatrixXd scalar(double a) { return Eigen::MatrixXd::Constant(1, 1, a); }
Eigen::VectorXd vscalar(double a) { return Eigen::VectorXd::Constant(1, a); }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Verdict gamma_star_oracle() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(1001);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        GammaProfile g;
        const int len = 1 + static_cast<int>(rng.uniform() * 12);
        for (int i = 0; i < len; ++i) {
            g.values.push_back(0.95 * rng.uniform());
        }
        if (rep % 2 == 1) {
            g.tail_rate = 0.9 * rng.uniform();
        }
        const auto gs = gamma_star(g, 12);
        for (std::size_t n = 0; n <= 12; ++n) {
            const double exact = oracle::gamma_star_by_paths([&](std::size_t m) { return g.at(m); }, n);
            worst = std::max(worst, std::abs(gs.values[n] - exact));
        }
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-12 && secs < 10.0, "max error " + fmt(worst) + ", " + fmt(secs) + " s"};
}

Verdict coupling_domination() {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<ModelSpec> models{
        TruncatedLinear{2, vscalar(0.0), {scalar(0.5)}},
        TruncatedLinear{3, Eigen::Vector2d(0.2, -0.1), {(Eigen::MatrixXd(2, 2) << 0.4, 0.1, -0.2, 0.3).finished()}},
        TruncatedLinear{2, vscalar(0.3), {scalar(0.6), scalar(-0.4)}},
        TruncatedLinear{3, Eigen::Vector2d(-0.3, 0.1),
                        {(Eigen::MatrixXd(2, 2) << 0.3, -0.2, 0.1, 0.2).finished(),
                         (Eigen::MatrixXd(2, 2) << 0.1, 0.0, -0.1, 0.2).finished()}},
        TruncatedLinear{4, Eigen::Vector3d(0.1, 0.0, -0.2), {Eigen::MatrixXd::Constant(3, 3, 0.15)}},
    };
    bool all = true;
    std::string detail;
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto& m = models[i];
        const int n_cat = n_categories(m);
        const auto lags = static_cast<std::size_t>(observation_lags(m));
        const bool stable = check_summability(lipschitz_profile(m)).pass;
        const auto x = reference_history(n_cat, lags);
        const std::vector<CategoryValue> y(lags, CategoryValue(1, n_cat));
        const auto exp = coupling_experiment(m, x, y, 20, 10000, 2000 + i);
        all = all && stable && exp.dominated;
        detail += (i ? ", " : "") + std::string("excess ") + fmt(exp.worst_excess);
    }
    const double secs = seconds_since(start);
    return {all && secs < 60.0, detail + ", " + fmt(secs) + " s"};
}

GammaStar geometric_gamma_star(double scale, double rate) {
    GammaProfile g;
    for (int m = 0; m < 60; ++m) {
        g.values.push_back(scale * std::pow(rate, m));
    }
    g.tail_rate = rate;
    return gamma_star(g, 120);
}

bool monotone_and_bounded(const GammaStar& gs) {
    bool ok = true;
    double prev = 1.0;
    for (std::size_t n = 0; n <= 120; ++n) {
        const double v = phi_bound(gs, n);
        ok = ok && v >= 0.0 && v <= 1.0 && v <= prev;
        prev = v;
    }
    return ok;
}

Verdict phi_consistency() {
    // gamma_m = 0.3 * 0.6^m: the bound is below one from n = 5 on
    const auto gs = geometric_gamma_star(0.3, 0.6);
    double min_drop = 1e300;
    for (std::size_t n = 10; n < 50; ++n) {
        min_drop = std::min(min_drop, std::log(phi_bound(gs, n)) - std::log(phi_bound(gs, n + 1)));
    }
    // gamma_m = 0.5 * 0.7^m: the bound sits at one until gamma* has decayed
    const auto slow = geometric_gamma_star(0.5, 0.7);
    std::size_t first_informative = 0;
    while (first_informative <= 120 && phi_bound(slow, first_informative) >= 1.0) {
        ++first_informative;
    }
    const bool ok = monotone_and_bounded(gs) && monotone_and_bounded(slow) && min_drop > 0.0;
    return {ok, "gamma_m = 0.3*0.6^m: smallest per-step drop of log phi on [10,50] " + fmt(min_drop) +
                    "; gamma_m = 0.5*0.7^m: phi < 1 from n = " + std::to_string(first_informative)};
}

Verdict backward_forgetting() {
    const LinearFeedback lf{2, vscalar(-0.4), {scalar(0.5)}, {scalar(0.8)}};
    const double rho = check_linear_feedback(lf).rho;
    const double tol = 1e-8;
    const auto path = simulate(lf, 3000, 100, 3001);
    std::vector<CategoryValue> past(path.y.rbegin(), path.y.rend());
    const auto a = stationary_logodds_backward(lf, past, vscalar(5.0), tol / 2.0);
    const auto b = stationary_logodds_backward(lf, past, vscalar(-5.0), tol / 2.0);
    const double gap = (a.stack - b.stack).norm();

    const InitialState high{{CategoryValue(1, 2)}, {LogOdds(vscalar(5.0))}};
    const InitialState low{{CategoryValue(2, 2)}, {LogOdds(vscalar(-5.0))}};
    const auto s1 = simulate(lf, 100000, 0, 3002, high);
    const auto s2 = simulate(lf, 100000, 0, 3002, low);
    double f1 = 0.0;
    double f2 = 0.0;
    for (std::size_t t = 0; t < s1.size(); ++t) {
        f1 += s1.y[t].index() == 1 ? 1.0 : 0.0;
        f2 += s2.y[t].index() == 1 ? 1.0 : 0.0;
    }
    const double diff = std::abs(f1 - f2) / 1e5;
    return {std::abs(rho - 0.5) < 1e-12 && gap <= tol && diff < 0.01,
            "depth " + std::to_string(a.depth) + ", gap " + fmt(gap) + ", marginal difference " + fmt(diff)};
}

Verdict stationary_oracle() {
    const TruncatedLinear tl{2, vscalar(0.3), {scalar(0.5)}};
    const Eigen::MatrixXd P = transition_matrix(tl);
    const Eigen::VectorXd pi = oracle::stationary_by_eigen(P);
    const std::size_t n = 100000;
    const auto path = simulate(tl, n, 1000, 4001);
    const HistorySpace space(2, 1);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(pi.size());
    for (std::size_t t = 0; t < n; ++t) {
        counts[static_cast<Eigen::Index>(space.encode(std::span(&path.y[t], 1)))] += 1.0;
    }
    bool within = true;
    double worst_z = 0.0;
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
        const double sigma = std::sqrt(pi[i] * (1.0 - pi[i]) / static_cast<double>(n));
        const double z = std::abs(counts[i] / static_cast<double>(n) - pi[i]) / sigma;
        worst_z = std::max(worst_z, z);
        within = within && z <= 3.0;
    }

    auto cl = CovariateLogistic::zeros(2, 1, 1);
    cl.intercept << 0.3;
    cl.gamma[0] << 0.5;
    cl.delta << 0.7;
    const std::vector<Eigen::VectorXd> z(5000, vscalar(0.0));
    const auto lim = backward_row_limit(TransitionFamily::from_model(cl), z, 1e-8, 5000);
    const double err = (lim.row.values() - pi).cwiseAbs().maxCoeff();
    return {within && err <= 1e-8, "largest |z| " + fmt(worst_z) + ", backward row error " + fmt(err)};
}

Verdict dobrushin_properties() {
    Rng rng(5001);
    auto u = [&] { return rng.uniform(); };
    int violations = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = 2 + rep % 6;
        const double zp = rep % 3 == 0 ? 0.3 : 0.0;
        const Eigen::MatrixXd P = oracle::random_stochastic(n, u, zp);
        const Eigen::MatrixXd Q = oracle::random_stochastic(n, u, zp);
        const double cP = dobrushin(P);
        if (dobrushin(P * Q) > cP * dobrushin(Q) + 1e-12) {
            ++violations;
        }
        if (cP > 1.0 - n * P.minCoeff() + 1e-12) {
            ++violations;
        }
        Eigen::VectorXd mu(n);
        Eigen::VectorXd nu(n);
        for (int i = 0; i < n; ++i) {
            mu[i] = u();
            nu[i] = u();
        }
        mu /= mu.sum();
        nu /= nu.sum();
        const Eigen::VectorXd muP = P.transpose() * mu;
        const Eigen::VectorXd nuP = P.transpose() * nu;
        if (oracle::l1(muP, nuP) > cP * oracle::l1(mu, nu) + 1e-12) {
            ++violations;
        }
    }
    return {violations == 0, std::to_string(violations) + " violations in 3000 checks"};
}

Verdict e1_structure() {
    auto m = CovariateLogistic::zeros(2, 2, 1);
    m.intercept << 0.2;
    m.gamma[0] << 0.6;
    m.gamma[1] << -0.4;
    m.delta << 0.9;
    Rng rng(6001);
    std::vector<Eigen::VectorXd> z;
    for (int i = 0; i < 20; ++i) {
        z.push_back(vscalar(2.0 * rng.normal()));
    }
    const auto fam = TransitionFamily::from_model(m);
    const auto r1 = e1_check(fam, z, 1);
    const auto r2 = e1_check(fam, z, 2);
    return {!r1.pass && r2.pass, "m=1 min entry " + fmt(r1.min_entry) + ", m=2 min entry " + fmt(r2.min_entry)};
}

Verdict gradient_correctness() {
    Rng rng(7001);
    double worst_g = 0.0;
    double worst_h = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int n_cat = 2 + rep % 2;
        const int q = 1 + (rep / 2) % 2;
        const int dz = 1 + (rep / 4) % 2;
        auto m = CovariateLogistic::zeros(n_cat, q, dz);
        Eigen::VectorXd theta(m.n_params());
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            theta[i] = 0.4 * rng.normal();
        }
        m = m.with_theta(theta);
        const auto data = simulate_joint(CovariateGenerator::iid_gaussian(dz), m, 300, 20, 7100 + rep);
        Eigen::VectorXd at(m.n_params());
        for (Eigen::Index i = 0; i < at.size(); ++i) {
            at[i] = 0.4 * rng.normal();
        }
        const auto sh = score_and_hessian(m, at, data);
        const auto g = oracle::fd_gradient([&](const Eigen::VectorXd& t) { return loglik(m, t, data); }, at);
        const auto h =
            oracle::fd_jacobian([&](const Eigen::VectorXd& t) { return score_and_hessian(m, t, data).gradient; }, at);
        worst_g = std::max(worst_g, (sh.gradient - g).norm() / g.norm());
        worst_h = std::max(worst_h, (sh.hessian - h).norm() / h.norm());
    }
    return {worst_g <= 1e-6 && worst_h <= 1e-4,
            "worst relative error: gradient " + fmt(worst_g) + ", Hessian " + fmt(worst_h)};
}

Verdict mle_recovery() {
    const auto start = std::chrono::steady_clock::now();
    auto m = CovariateLogistic::zeros(2, 1, 1);
    m.intercept << 0.3;
    m.gamma[0] << -0.5;
    m.delta << 0.8;
    const Eigen::VectorXd truth = m.theta();
    const auto gen = CovariateGenerator::gaussian_ar1(0.5, 1.0);
    int covered = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        const auto data = simulate_joint(gen, m, 5000, 100, derive_seed(9001, r));
        const auto fit = fit_newton(m, data);
        bool inside = fit.converged;
        for (Eigen::Index i = 0; i < truth.size(); ++i) {
            inside = inside && std::abs(fit.theta_hat[i] - truth[i]) <= 3.0 * fit.std_errors[i];
        }
        covered += inside ? 1 : 0;
    }
    const double secs = seconds_since(start);
    return {covered >= 95 && secs < 300.0, std::to_string(covered) + "/100 within 3 SE, " + fmt(secs) + " s"};
}

Verdict link_round_trip() {
    Rng rng(10001);
    double worst = 0.0;
    for (int rep = 0; rep < 10000; ++rep) {
        const int k = 1 + rep % 5;
        Eigen::VectorXd lambda(k);
        for (int i = 0; i < k; ++i) {
            lambda[i] = -20.0 + 40.0 * rng.uniform();
        }
        const LogOdds back = inverse_link(softmax_link(LogOdds(lambda)));
        worst = std::max(worst, (back.values() - lambda).lpNorm<Eigen::Infinity>());
    }
    return {worst <= 1e-10, "max error " + fmt(worst)};
}

Verdict cli_determinism() {
    const fixture::ScratchDir dir("acceptance_cli");
    const auto tl = dir.write("tl.json", fixture::kTruncated);
    const auto lf = dir.write("lf.json", fixture::kStableFeedback);
    const auto cl = dir.write("cl.json", fixture::kCovariate);
    const auto data = dir.path("data.csv");
    if (fixture::run_cli({"simulate", "--model", cl, "--n", "2000", "--generator", "ar1", "-o", data}).code != 0) {
        return {false, "could not simulate fit data"};
    }
    const std::vector<std::vector<std::string>> commands{
        {"simulate", "--model", lf, "--n", "500"},
        {"simulate", "--model", cl, "--n", "500", "--format", "json", "--generator", "shift"},
        {"check-stationarity", "--model", lf},
        {"check-stationarity", "--model", cl},
        {"mixing-bound", "--model", tl},
        {"coupling-demo", "--model", tl, "--reps", "2000"},
        {"fit", "--model", cl, "--data", data},
        {"stationary-dist", "--model", cl, "--generator", "ar1"},
        {"stationary-dist", "--model", tl},
    };
    int mismatches = 0;
    for (const auto& args : commands) {
        const auto a = fixture::run_cli(args);
        const auto b = fixture::run_cli(args);
        if (a.code != b.code || a.out != b.out || a.out.empty()) {
            ++mismatches;
        }
    }
    return {mismatches == 0,
            std::to_string(commands.size()) + " invocations, " + std::to_string(mismatches) + " differing"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"gamma* matches path enumeration", gamma_star_oracle},
        {"coupling time dominates the S chain", coupling_domination},
        {"phi-mixing bound consistency", phi_consistency},
        {"backward limit forgets its start", backward_forgetting},
        {"stationary distribution oracle", stationary_oracle},
        {"Dobrushin coefficient properties", dobrushin_properties},
        {"E1 holds at m = q", e1_structure},
        {"score and Hessian match finite differences", gradient_correctness},
        {"MLE recovery", mle_recovery},
        {"link round trip", link_round_trip},
        {"CLI determinism", cli_determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failures += v.pass ? 0 : 1;
        std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << i + 1 << ". " << criteria[i].first << " (" << v.detail
                  << ")\n"
                  << std::flush;
    }
    std::cout << criteria.size() - static_cast<std::size_t>(failures) << "/" << criteria.size() << " criteria passed\n";
    return failures == 0 ? 0 : 1;
}
