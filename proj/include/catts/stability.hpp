#pragma once

#include "catts/models.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace catts {

/// A model fails a stationarity hypothesis, or a constant cannot be certified.
class StabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// delta_j = scale * rate^j for every lag j past the explicit part of a profile.
struct GeometricTail {
    double scale = 0.0;
    double rate = 0.0;
};

/**
 * @brief Lag-wise Lipschitz constants of the log-odds map g.
 *
 * ||g(x) - g(y)|| <= sum_j delta_j 1{x_j != y_j}, with delta[j - 1] holding
 * delta_j. Feedback models have infinitely many nonzero delta_j; those carry a
 * geometric tail.
 */
struct LipschitzProfile {
    std::vector<double> delta;
    std::optional<GeometricTail> tail;
    /// sum_j j delta_j, tail included.
    double weighted_sum = 0.0;

    /// sum_{j > m} delta_j.
    [[nodiscard]] double tail_sum(std::size_t m) const;
};

/// Builds a profile and fills weighted_sum. Throws on negative entries or a tail rate outside [0, 1).
[[nodiscard]] LipschitzProfile make_lipschitz_profile(std::vector<double> delta,
                                                      std::optional<GeometricTail> tail = std::nullopt);

/**
 * @brief Coupling sequence (gamma_0, ..., gamma_{m_max}).
 *
 * When tail_rate is set, gamma_m <= gamma_{m_max} * tail_rate^{m - m_max} past
 * the stored values (rate 0: exactly zero). Without it, lookups past the end
 * reuse the last stored value, which is still a valid coupling sequence.
 */
struct GammaProfile {
    std::vector<double> values;
    std::optional<double> tail_rate;

    [[nodiscard]] double at(std::size_t m) const;
};

/// Checks values in [0, 1) and gamma_0 < 1.
void validate(const GammaProfile& gamma);

/**
 * @brief Contraction data for a feedback model, G_y(x) = (f(x, y), x_1, ..., x_{p-1}).
 *
 * ||G_{y_1} o ... o G_{y_k}(x) - (same)(x')|| <= kappa ||x - x'||.
 */
struct ContractionCertificate {
    double kappa = 0.0;
    int k = 1;
    /// Lipschitz constant of one map G_y in x.
    double step_lipschitz = 0.0;
    /// sup_y ||G_y(0)||.
    double offset_bound = 0.0;
    /// sup_{y != y'} ||G_y(x) - G_{y'}(x)||.
    double input_sensitivity = 0.0;
    /// ||H(y) - H(y')|| <= C sum_j kappa^{j/k} 1{y_j != y'_j}.
    double C = 0.0;

    /// Lipschitz bound of a depth-s composition.
    [[nodiscard]] double composition_lipschitz(std::size_t s) const;
    /// sup over pasts of ||H||.
    [[nodiscard]] double stationary_bound() const;
};

struct CouplingConstants {
    double eta = 0.0;
    double M = 0.0;
    GammaProfile gamma;
    LipschitzProfile profile;
    std::optional<double> kappa;
    std::optional<int> k;
    std::optional<double> C;
};

struct FeedbackCheck {
    double rho = 0.0;
    bool pass = false;
    std::optional<double> kappa;
    std::optional<int> k;
};

struct ContractionCheck {
    double alpha_sum = 0.0;
    bool pass = false;
};

struct SummabilityCheck {
    bool pass = true;
    double value = 0.0;
};

/// delta_j = sqrt(2) ||A_j||_2. Defined for TruncatedLinear and covariate-free CovariateLogistic.
[[nodiscard]] LipschitzProfile lipschitz_profile(const ModelSpec& model);

/**
 * @brief eta, M and (gamma_m) for a finite-order model or a contracting feedback model.
 *
 * eta = min_j exp(-B_j) / (1 + sum_s exp(B_s)) with B_j = sup |g_j|,
 * M = sqrt(N-1)/4 and gamma_m = min(1 - eta, M sum_{j>m} delta_j / eta).
 */
[[nodiscard]] CouplingConstants coupling_constants(const ModelSpec& model);

/// Block companion matrix with A_1..A_p in the top block row and identities below.
[[nodiscard]] Eigen::MatrixXd companion_matrix(const LinearFeedback& model);
[[nodiscard]] double spectral_radius(const Eigen::MatrixXd& matrix);
[[nodiscard]] double spectral_norm(const Eigen::MatrixXd& matrix);

/// rho(companion) < 1, and the smallest k <= 64 with ||companion^k||_2 < 1.
[[nodiscard]] FeedbackCheck check_linear_feedback(const LinearFeedback& model);

[[nodiscard]] ContractionCheck check_nonlinear_contraction(std::span<const double> alphas,
                                                           std::span<const double> betas);
/// alphas = (max(|beta1|, |beta2|)), betas = (|alpha|).
[[nodiscard]] ContractionCheck check_nonlinear_contraction(const ThresholdBinary& model);

[[nodiscard]] SummabilityCheck check_summability(const LipschitzProfile& profile);

/// Certificate for LinearFeedback or ThresholdBinary; throws StabilityError when the check fails.
[[nodiscard]] ContractionCertificate contraction_certificate(const ModelSpec& model);

/// ceil(log(tol) / log(kappa^{1/k})) for contracting feedback models, kDefaultBurnIn otherwise.
[[nodiscard]] std::size_t recommended_burn_in(const ModelSpec& model, double tol = 1e-10);

}  // namespace catts
