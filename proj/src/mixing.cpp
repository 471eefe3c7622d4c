#include "catts/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace catts {

namespace {

constexpr double kDistributionTolerance = 1e-12;

void require_finite_order(const ModelSpec& model) {
    const bool ok = std::holds_alternative<TruncatedLinear>(model) ||
                    (std::holds_alternative<CovariateLogistic>(model) && covariate_dim(model) == 0);
    if (!ok) {
        throw std::invalid_argument("coupling runs need a finite-order model without covariates");
    }
}

std::vector<double> step_distribution(const std::vector<double>& dist, const GammaProfile& gamma) {
    std::vector<double> next(dist.size() + 1, 0.0);
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double g = gamma.at(i);
        next[0] += dist[i] * g;
        next[i + 1] = dist[i] * (1.0 - g);
    }
    return next;
}

void check_mass(const std::vector<double>& dist) {
    double total = 0.0;
    for (double v : dist) {
        total += v;
    }
    if (std::abs(total - 1.0) > kDistributionTolerance) {
        throw std::logic_error("S-chain distribution lost mass: total " + std::to_string(total));
    }
}

}  // namespace

double GammaStar::at(std::size_t n) const {
    if (n < values.size()) {
        return values[n];
    }
    if (!tail_ratio) {
        throw std::out_of_range("gamma* index " + std::to_string(n) + " beyond n_max " + std::to_string(n_max()) +
                                " and no geometric tail is certified");
    }
    return values.back() * std::pow(*tail_ratio, static_cast<double>(n - n_max()));
}

std::vector<double> s_chain_distribution(const GammaProfile& gamma, std::size_t n) {
    validate(gamma);
    std::vector<double> dist{1.0};
    for (std::size_t t = 0; t < n; ++t) {
        dist = step_distribution(dist, gamma);
        check_mass(dist);
    }
    return dist;
}

GammaStar gamma_star(const GammaProfile& gamma, std::size_t n_max) {
    validate(gamma);
    GammaStar gs;
    gs.values.reserve(n_max + 1);
    std::vector<double> dist{1.0};
    gs.values.push_back(1.0);
    for (std::size_t t = 0; t < n_max; ++t) {
        dist = step_distribution(dist, gamma);
        check_mass(dist);
        gs.values.push_back(dist[0]);
    }
    if (gamma.tail_rate && n_max >= 1) {
        const double last = gs.values[n_max];
        const double prev = gs.values[n_max - 1];
        if (last == 0.0) {
            gs.tail_ratio = 0.0;
        } else if (prev > 0.0) {
            gs.tail_ratio = last / prev;
        }
    }
    return gs;
}

double phi_bound(const GammaStar& gs, std::size_t n) {
    if (!gs.tail_ratio) {
        throw NotSummableError("no summability certificate for gamma*: the gamma profile declares no geometric tail");
    }
    const double r = *gs.tail_ratio;
    if (!(r < 1.0)) {
        throw NotSummableError("gamma* does not decay (tail ratio " + std::to_string(r) + ")");
    }
    const std::size_t n_max = gs.n_max();
    double sum = 0.0;
    if (n <= n_max) {
        for (std::size_t j = n; j <= n_max; ++j) {
            sum += gs.values[j];
        }
        sum += gs.values[n_max] * r / (1.0 - r);
    } else {
        sum = gs.values[n_max] * std::pow(r, static_cast<double>(n - n_max)) / (1.0 - r);
    }
    return std::clamp(sum, 0.0, 1.0);
}

double block_bound(const GammaProfile& gamma, const GammaStar& gs, std::size_t n, std::size_t k) {
    validate(gamma);
    double survive = 1.0;
    double total = 0.0;
    for (std::size_t j = 0; j <= k; ++j) {
        total += survive * gs.at(n + k - j);
        survive *= 1.0 - gamma.at(j);
    }
    return total;
}

CoupledPair maximal_coupling_step(const ProbabilityVector& p, const ProbabilityVector& q, double u1, double u2) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("coupled distributions must live on the same space");
    }
    if (!(u1 >= 0.0 && u1 < 1.0) || !(u2 >= 0.0 && u2 < 1.0)) {
        throw std::invalid_argument("uniform draws must lie in [0, 1)");
    }
    const int n = static_cast<int>(p.size());
    const Eigen::VectorXd overlap = p.values().cwiseMin(q.values());
    const double w = overlap.sum();
    const double rest = 1.0 - w;
    // rest <= 0 only when p and q agree up to rounding.
    if (u1 < w || rest <= 0.0) {
        const auto j = sample_index(overlap / w, u2);
        const CategoryValue c(static_cast<int>(j) + 1, n);
        return CoupledPair{c, c};
    }
    const Eigen::VectorXd rp = (p.values() - overlap) / rest;
    const Eigen::VectorXd rq = (q.values() - overlap) / rest;
    return CoupledPair{CategoryValue(static_cast<int>(sample_index(rp, u2)) + 1, n),
                       CategoryValue(static_cast<int>(sample_index(rq, u2)) + 1, n)};
}

CouplingTrace coupled_run(const ModelSpec& model, std::span<const CategoryValue> x_past,
                          std::span<const CategoryValue> y_past, std::size_t n, Rng& rng) {
    require_finite_order(model);
    const auto lags = static_cast<std::size_t>(observation_lags(model));
    if (x_past.size() < lags || y_past.size() < lags) {
        throw std::invalid_argument("coupled pasts must cover all " + std::to_string(lags) + " lags");
    }

    CouplingTrace trace;
    trace.T.reserve(n + 1);
    std::size_t age = CouplingTrace::kNever;
    for (std::size_t j = std::min(x_past.size(), y_past.size()); j >= 1; --j) {
        if (x_past[j - 1] != y_past[j - 1]) {
            age = j - 1;
        }
    }

    std::vector<CategoryValue> hx(x_past.begin(), x_past.begin() + static_cast<std::ptrdiff_t>(lags));
    std::vector<CategoryValue> hy(y_past.begin(), y_past.begin() + static_cast<std::ptrdiff_t>(lags));
    trace.T.push_back(age);
    if (hx == hy) {
        trace.coupled_at = 0;
    }
    for (std::size_t t = 1; t <= n; ++t) {
        const double u1 = rng.uniform();
        const double u2 = rng.uniform();
        const bool merged = hx == hy;
        const ProbabilityVector px = softmax_link(eval_logodds(model, hx, {}));
        CoupledPair pair = merged ? CoupledPair{sample_category(px, u1), sample_category(px, u1)}
                                  : maximal_coupling_step(px, softmax_link(eval_logodds(model, hy, {})), u1, u2);
        if (pair.a != pair.b) {
            age = 0;
        } else if (age != CouplingTrace::kNever) {
            ++age;
        }
        trace.T.push_back(age);
        if (lags > 0) {
            std::move_backward(hx.begin(), hx.end() - 1, hx.end());
            std::move_backward(hy.begin(), hy.end() - 1, hy.end());
            hx.front() = pair.a;
            hy.front() = pair.b;
        }
        if (hx == hy && !trace.coupled_at) {
            trace.coupled_at = t;
        }
    }
    return trace;
}

CouplingExperiment coupling_experiment(const ModelSpec& model, std::span<const CategoryValue> x_past,
                                       std::span<const CategoryValue> y_past, std::size_t n, std::size_t reps,
                                       std::uint64_t seed) {
    require_finite_order(model);
    if (reps == 0) {
        throw std::invalid_argument("coupling experiment needs at least one replicate");
    }
    CouplingExperiment out;
    out.gamma = coupling_constants(model).gamma;

    std::vector<std::size_t> hits(n + 1, 0);
    for (std::size_t r = 0; r < reps; ++r) {
        Rng rng(derive_seed(seed, r));
        const auto trace = coupled_run(model, x_past, y_past, n, rng);
        const std::size_t t_n = trace.T.back();
        if (t_n <= n) {
            for (std::size_t k = t_n; k <= n; ++k) {
                ++hits[k];
            }
        }
    }

    const auto s_dist = s_chain_distribution(out.gamma, n);
    out.p_T_le_k.resize(n + 1);
    out.p_S_le_k.resize(n + 1);
    out.mc_sigma.resize(n + 1);
    out.dominated = true;
    out.worst_excess = -1.0;
    double cumulative = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        cumulative += s_dist[k];
        const double p_t = static_cast<double>(hits[k]) / static_cast<double>(reps);
        const double sigma = std::sqrt(p_t * (1.0 - p_t) / static_cast<double>(reps));
        out.p_T_le_k[k] = p_t;
        out.p_S_le_k[k] = std::min(1.0, cumulative);
        out.mc_sigma[k] = sigma;
        const double excess = p_t - out.p_S_le_k[k] - 3.0 * sigma;
        out.worst_excess = std::max(out.worst_excess, excess);
        if (excess > kDistributionTolerance) {
            out.dominated = false;
        }
    }
    return out;
}

}  // namespace catts
