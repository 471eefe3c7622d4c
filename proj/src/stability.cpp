#include "catts/stability.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace catts {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr int kMaxContractionPower = 64;
constexpr double kUnitRootMargin = 1e-8;
// Any kappa' >= kappa satisfies the contraction bound; this floor keeps C finite.
constexpr double kKappaFloor = 1e-6;
constexpr std::size_t kMaxGammaTerms = 10000;

/// Range of the affine map d_j + sum_l M_l[j, :] y_l over one-hot histories.
std::pair<Eigen::VectorXd, Eigen::VectorXd> affine_range(const Eigen::VectorXd& offset,
                                                         const std::vector<Eigen::MatrixXd>& lags) {
    Eigen::VectorXd lo = offset;
    Eigen::VectorXd hi = offset;
    for (const auto& A : lags) {
        for (Eigen::Index j = 0; j < A.rows(); ++j) {
            lo[j] += std::min(0.0, A.row(j).minCoeff());
            hi[j] += std::max(0.0, A.row(j).maxCoeff());
        }
    }
    return {lo, hi};
}

/// Largest column norm, i.e. sup over one-hot v of ||A v||.
double max_column_norm(const Eigen::MatrixXd& A) {
    double best = 0.0;
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
        best = std::max(best, A.col(c).norm());
    }
    return best;
}

/// sup over v != v' in E of ||A (v - v')||.
double max_onehot_difference(const Eigen::MatrixXd& A) {
    double best = max_column_norm(A);
    for (Eigen::Index a = 0; a < A.cols(); ++a) {
        for (Eigen::Index b = a + 1; b < A.cols(); ++b) {
            best = std::max(best, (A.col(a) - A.col(b)).norm());
        }
    }
    return best;
}

double eta_from_bounds(const Eigen::VectorXd& bound) {
    double denom = 1.0;
    for (Eigen::Index s = 0; s < bound.size(); ++s) {
        denom += std::exp(bound[s]);
    }
    double eta = 1.0 / denom;
    for (Eigen::Index j = 0; j < bound.size(); ++j) {
        eta = std::min(eta, std::exp(-bound[j]) / denom);
    }
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw StabilityError("lower probability bound eta underflows to zero; log-odds are effectively unbounded");
    }
    return eta;
}

GammaProfile gamma_from_profile(const LipschitzProfile& profile, double eta, double M) {
    GammaProfile gamma;
    const double cap = 1.0 - eta;
    if (!profile.tail) {
        for (std::size_t m = 0; m <= profile.delta.size(); ++m) {
            gamma.values.push_back(std::min(cap, M * profile.tail_sum(m) / eta));
        }
        gamma.tail_rate = 0.0;
        return gamma;
    }
    for (std::size_t m = 0; m < kMaxGammaTerms; ++m) {
        const double g = std::min(cap, M * profile.tail_sum(m) / eta);
        gamma.values.push_back(g);
        if (m >= profile.delta.size() && g < 1e-18) {
            break;
        }
    }
    gamma.tail_rate = profile.tail->rate;
    return gamma;
}

/// Category-lag profile of H_1 induced by a contraction certificate for an order-q observation input.
LipschitzProfile feedback_profile(const ContractionCertificate& cert, int q) {
    if (q == 0 || cert.C == 0.0) {
        return make_lipschitz_profile({});
    }
    const double r = std::pow(cert.kappa, 1.0 / cert.k);
    // Y_{t-i} enters the stacked inputs ybar_j for j in [i-q+1, i].
    std::vector<double> explicit_part;
    for (int i = 1; i < q; ++i) {
        double sum = 0.0;
        for (int j = 1; j <= i; ++j) {
            sum += std::pow(r, j);
        }
        explicit_part.push_back(cert.C * sum);
    }
    double scale = 0.0;
    for (int l = 0; l < q; ++l) {
        scale += std::pow(r, -l);
    }
    return make_lipschitz_profile(std::move(explicit_part), GeometricTail{cert.C * scale, r});
}

}  // namespace

double LipschitzProfile::tail_sum(std::size_t m) const {
    double sum = 0.0;
    for (std::size_t j = m + 1; j <= delta.size(); ++j) {
        sum += delta[j - 1];
    }
    if (tail && tail->rate > 0.0) {
        const double a = static_cast<double>(std::max(m, delta.size()) + 1);
        sum += tail->scale * std::pow(tail->rate, a) / (1.0 - tail->rate);
    }
    return sum;
}

LipschitzProfile make_lipschitz_profile(std::vector<double> delta, std::optional<GeometricTail> tail) {
    LipschitzProfile profile;
    for (double d : delta) {
        if (!(d >= 0.0) || !std::isfinite(d)) {
            throw std::invalid_argument("Lipschitz constants must be finite and nonnegative");
        }
    }
    double weighted = 0.0;
    for (std::size_t j = 1; j <= delta.size(); ++j) {
        weighted += static_cast<double>(j) * delta[j - 1];
    }
    if (tail) {
        if (!(tail->rate >= 0.0 && tail->rate < 1.0) || !(tail->scale >= 0.0)) {
            throw std::invalid_argument("geometric tail needs rate in [0, 1) and nonnegative scale");
        }
        if (tail->rate > 0.0) {
            const double r = tail->rate;
            const double a = static_cast<double>(delta.size() + 1);
            weighted += tail->scale * std::pow(r, a) * (a - (a - 1.0) * r) / ((1.0 - r) * (1.0 - r));
        }
    }
    profile.delta = std::move(delta);
    profile.tail = tail;
    profile.weighted_sum = weighted;
    return profile;
}

double GammaProfile::at(std::size_t m) const {
    if (values.empty()) {
        throw std::invalid_argument("empty gamma profile");
    }
    if (m < values.size()) {
        return values[m];
    }
    const double last = values.back();
    if (!tail_rate) {
        return last;
    }
    if (*tail_rate == 0.0) {
        return 0.0;
    }
    return last * std::pow(*tail_rate, static_cast<double>(m - (values.size() - 1)));
}

void validate(const GammaProfile& gamma) {
    if (gamma.values.empty()) {
        throw std::invalid_argument("gamma profile must hold at least gamma_0");
    }
    for (double g : gamma.values) {
        if (!(g >= 0.0 && g < 1.0)) {
            throw std::invalid_argument("gamma values must lie in [0, 1)");
        }
    }
    if (gamma.tail_rate && !(*gamma.tail_rate >= 0.0 && *gamma.tail_rate < 1.0)) {
        throw std::invalid_argument("gamma tail rate must lie in [0, 1)");
    }
}

double ContractionCertificate::composition_lipschitz(std::size_t s) const {
    const auto blocks = static_cast<double>(s / static_cast<std::size_t>(k));
    const auto rest = static_cast<double>(s % static_cast<std::size_t>(k));
    return std::pow(kappa, blocks) * std::pow(step_lipschitz, rest);
}

double ContractionCertificate::stationary_bound() const {
    double partial = 0.0;
    for (int r = 0; r < k; ++r) {
        partial += std::pow(step_lipschitz, r);
    }
    return offset_bound * partial / (1.0 - kappa);
}

LipschitzProfile lipschitz_profile(const ModelSpec& model) {
    const std::vector<Eigen::MatrixXd>* lags = nullptr;
    if (const auto* m = std::get_if<TruncatedLinear>(&model)) {
        lags = &m->A;
    } else if (const auto* m = std::get_if<CovariateLogistic>(&model)) {
        if (m->covariate_dim > 0) {
            throw std::invalid_argument("Lipschitz profile needs a covariate-free model");
        }
        lags = &m->gamma;
    } else {
        throw std::invalid_argument("feedback models have no finite Lipschitz profile; use check_linear_feedback "
                                    "or check_nonlinear_contraction");
    }
    validate(model);
    std::vector<double> delta;
    delta.reserve(lags->size());
    for (const auto& A : *lags) {
        delta.push_back(kSqrt2 * spectral_norm(A));
    }
    return make_lipschitz_profile(std::move(delta));
}

CouplingConstants coupling_constants(const ModelSpec& model) {
    validate(model);
    const int n = n_categories(model);
    CouplingConstants out;
    out.M = std::sqrt(static_cast<double>(n - 1)) / 4.0;

    if (std::holds_alternative<TruncatedLinear>(model) || std::holds_alternative<CovariateLogistic>(model)) {
        out.profile = lipschitz_profile(model);
        const auto [lo, hi] = [&] {
            if (const auto* m = std::get_if<TruncatedLinear>(&model)) {
                return affine_range(m->d, m->A);
            }
            const auto& m = std::get<CovariateLogistic>(model);
            return affine_range(m.intercept, m.gamma);
        }();
        const Eigen::VectorXd bound = lo.cwiseAbs().cwiseMax(hi.cwiseAbs());
        out.eta = eta_from_bounds(bound);
    } else {
        const auto cert = contraction_certificate(model);
        out.profile = feedback_profile(cert, observation_lags(model));
        out.eta = eta_from_bounds(Eigen::VectorXd::Constant(n - 1, cert.stationary_bound()));
        out.kappa = cert.kappa;
        out.k = cert.k;
        out.C = cert.C;
    }
    out.gamma = gamma_from_profile(out.profile, out.eta, out.M);
    return out;
}

Eigen::MatrixXd companion_matrix(const LinearFeedback& model) {
    const Eigen::Index k = model.n_categories - 1;
    const Eigen::Index p = model.p();
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(k * p, k * p);
    for (Eigen::Index i = 0; i < p; ++i) {
        C.block(0, i * k, k, k) = model.A[static_cast<std::size_t>(i)];
    }
    if (p > 1) {
        C.block(k, 0, k * (p - 1), k * (p - 1)).setIdentity();
    }
    return C;
}

double spectral_radius(const Eigen::MatrixXd& matrix) {
    if (matrix.size() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix, false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigenvalue computation did not converge");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm(const Eigen::MatrixXd& matrix) {
    if (matrix.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix);
    return svd.singularValues()[0];
}

FeedbackCheck check_linear_feedback(const LinearFeedback& model) {
    validate(ModelSpec{model});
    const Eigen::MatrixXd C = companion_matrix(model);
    FeedbackCheck out;
    out.rho = spectral_radius(C);
    out.pass = out.rho < 1.0 && std::abs(out.rho - 1.0) >= kUnitRootMargin;
    if (!out.pass) {
        return out;
    }
    Eigen::MatrixXd power = C;
    for (int k = 1; k <= kMaxContractionPower; ++k) {
        const double norm = spectral_norm(power);
        if (norm < 1.0) {
            out.k = k;
            out.kappa = norm;
            return out;
        }
        power = power * C;
    }
    throw StabilityError("spectral radius " + std::to_string(out.rho) +
                         " is too close to 1: no power k <= 64 of the companion matrix is a contraction");
}

ContractionCheck check_nonlinear_contraction(std::span<const double> alphas, std::span<const double> betas) {
    for (double a : alphas) {
        if (!(a >= 0.0)) {
            throw std::invalid_argument("contraction coefficients must be nonnegative");
        }
    }
    for (double b : betas) {
        if (!(b >= 0.0)) {
            throw std::invalid_argument("contraction coefficients must be nonnegative");
        }
    }
    ContractionCheck out;
    out.alpha_sum = std::accumulate(alphas.begin(), alphas.end(), 0.0);
    out.pass = out.alpha_sum < 1.0;
    return out;
}

ContractionCheck check_nonlinear_contraction(const ThresholdBinary& model) {
    const double alpha = std::max(std::abs(model.beta1), std::abs(model.beta2));
    const double beta = std::abs(model.alpha);
    return check_nonlinear_contraction(std::span<const double>(&alpha, 1), std::span<const double>(&beta, 1));
}

SummabilityCheck check_summability(const LipschitzProfile& profile) {
    // Finite profiles and geometric tails are always summable.
    return SummabilityCheck{true, profile.weighted_sum};
}

ContractionCertificate contraction_certificate(const ModelSpec& model) {
    validate(model);
    ContractionCertificate cert;
    if (const auto* m = std::get_if<LinearFeedback>(&model)) {
        const auto check = check_linear_feedback(*m);
        if (!check.pass) {
            throw StabilityError("companion matrix has spectral radius " + std::to_string(check.rho) + " >= 1");
        }
        cert.kappa = *check.kappa;
        cert.k = *check.k;
        cert.step_lipschitz = spectral_norm(companion_matrix(*m));
        cert.offset_bound = m->A0.norm();
        cert.input_sensitivity = 0.0;
        for (const auto& B : m->B) {
            cert.offset_bound += max_column_norm(B);
            cert.input_sensitivity += max_onehot_difference(B);
        }
    } else if (const auto* m = std::get_if<ThresholdBinary>(&model)) {
        const auto check = check_nonlinear_contraction(*m);
        if (!check.pass) {
            throw StabilityError("threshold model has max(|beta1|, |beta2|) = " + std::to_string(check.alpha_sum) +
                                 " >= 1");
        }
        cert.kappa = check.alpha_sum;
        cert.k = 1;
        cert.step_lipschitz = check.alpha_sum;
        cert.offset_bound = std::max(std::abs(m->d), std::abs(m->d + m->alpha));
        cert.input_sensitivity = std::abs(m->alpha);
    } else {
        throw std::invalid_argument("contraction certificates exist only for feedback models");
    }
    cert.kappa = std::max(cert.kappa, kKappaFloor);
    const double lip = std::max(1.0, cert.step_lipschitz);
    cert.C = cert.input_sensitivity * std::pow(lip, cert.k - 1) / cert.kappa;
    return cert;
}

std::size_t recommended_burn_in(const ModelSpec& model, double tol) {
    if (!(tol > 0.0 && tol < 1.0)) {
        throw std::invalid_argument("burn-in tolerance must lie in (0, 1)");
    }
    if (!has_feedback(model)) {
        return kDefaultBurnIn;
    }
    try {
        const auto cert = contraction_certificate(model);
        const double per_step = std::log(cert.kappa) / cert.k;
        return static_cast<std::size_t>(std::ceil(std::log(tol) / per_step));
    } catch (const StabilityError&) {
        return kDefaultBurnIn;
    }
}

}  // namespace catts
