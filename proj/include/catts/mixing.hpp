#pragma once

#include "catts/random.hpp"
#include "catts/stability.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace catts {

/// A mixing bound needs a summable gamma* sequence and none is certified.
class NotSummableError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/**
 * @brief gamma*_n = P(S_n = 0) for the return-time chain S driven by (gamma_m).
 *
 * S_0 = 0; from state i the chain moves to i + 1 with probability 1 - gamma_i
 * and back to 0 with probability gamma_i.
 */
struct GammaStar {
    std::vector<double> values;
    /// gamma*_{n} ~ gamma*_{n_max} * tail_ratio^{n - n_max} past the stored values.
    std::optional<double> tail_ratio;

    [[nodiscard]] std::size_t n_max() const { return values.size() - 1; }
    /// Stored value, or the geometric extrapolation. Throws std::out_of_range without a tail.
    [[nodiscard]] double at(std::size_t n) const;
};

/// Law of S_n as (P(S_n = 0), ..., P(S_n = n)), by exact forward recursion.
[[nodiscard]] std::vector<double> s_chain_distribution(const GammaProfile& gamma, std::size_t n);

/// gamma*_0..gamma*_{n_max}. The tail ratio gamma*_{n_max} / gamma*_{n_max - 1} is
/// attached only when the gamma profile declares a tail rate.
[[nodiscard]] GammaStar gamma_star(const GammaProfile& gamma, std::size_t n_max);

/// Upper bound sum_{j >= n} gamma*_j on the phi-mixing coefficient phi(n), clamped to [0, 1].
[[nodiscard]] double phi_bound(const GammaStar& gs, std::size_t n);

/// sum_{j=0}^{k} (prod_{m<j} (1 - gamma_m)) gamma*_{n+k-j}: the bound on how far two
/// coupled chains' laws of (Z_n, ..., Z_{n+k}) can differ.
[[nodiscard]] double block_bound(const GammaProfile& gamma, const GammaStar& gs, std::size_t n, std::size_t k);

struct CoupledPair {
    CategoryValue a;
    CategoryValue b;
};

/**
 * @brief Maximal coupling of p and q from two uniforms.
 *
 * With w = sum_x min(p_x, q_x): if u1 < w both draws come from min(p, q)/w
 * using u2; otherwise a and b come from the normalized residuals p - min and
 * q - min, both using u2. P(a = b) = w = 1 - ||p - q||_TV / 2 with
 * ||mu - nu||_TV = sum_x |mu(x) - nu(x)|.
 */
[[nodiscard]] CoupledPair maximal_coupling_step(const ProbabilityVector& p, const ProbabilityVector& q, double u1,
                                                double u2);

struct CouplingTrace {
    static constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

    /// T[n] = inf{m >= 0 : U_{n-m} != V_{n-m}}, kNever if the paths never disagreed.
    /// The pasts end at time 0, so T[0] comes from the pasts alone.
    std::vector<std::size_t> T;
    /// First time from which the conditional laws coincide for good (all lags agree).
    std::optional<std::size_t> coupled_at;
};

/// One coupled run of n steps (times 1..n) from pasts x_past, y_past (newest first, ending at time 0).
[[nodiscard]] CouplingTrace coupled_run(const ModelSpec& model, std::span<const CategoryValue> x_past,
                                        std::span<const CategoryValue> y_past, std::size_t n, Rng& rng);

struct CouplingExperiment {
    /// Index k = 0..n.
    std::vector<double> p_T_le_k;
    std::vector<double> p_S_le_k;
    std::vector<double> mc_sigma;
    bool dominated = false;
    /// max_k (P_T(k) - P_S(k) - 3 sigma_k); at most 1e-12 when dominated.
    double worst_excess = 0.0;
    GammaProfile gamma;
};

/**
 * @brief Monte-Carlo check that the coupling time dominates the S chain.
 *
 * Runs reps coupled chains (replicate r seeded with derive_seed(seed, r)),
 * estimates P(T_n <= k) and compares with the exact P(S_n <= k) for the
 * model's gamma sequence. dominated holds when every estimate is at most the
 * exact value plus three Monte-Carlo standard errors.
 */
[[nodiscard]] CouplingExperiment coupling_experiment(const ModelSpec& model, std::span<const CategoryValue> x_past,
                                                     std::span<const CategoryValue> y_past, std::size_t n,
                                                     std::size_t reps, std::uint64_t seed);

}  // namespace catts
