#include "catts/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace catts {

namespace {

constexpr std::size_t kStructuralLimit = 512;
constexpr std::size_t kJointE1Samples = 10;
constexpr std::size_t kJointE1States = 64;

Eigen::VectorXd covariate_at(std::span<const Eigen::VectorXd> z_path, std::size_t i) {
    return z_path.empty() ? Eigen::VectorXd() : z_path[i];
}

bool pattern_power_positive(const HistorySpace& space, int m) {
    const auto n = static_cast<Eigen::Index>(space.size());
    Eigen::MatrixXd pattern = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index u = 0; u < n; ++u) {
        for (int c = 1; c <= space.n_categories(); ++c) {
            pattern(u, static_cast<Eigen::Index>(space.shift(static_cast<std::size_t>(u), c))) = 1.0;
        }
    }
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < m; ++i) {
        power = (power * pattern).unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    }
    return power.minCoeff() > 0.0;
}

}  // namespace

TransitionFamily TransitionFamily::from_model(const ModelSpec& model) {
    validate(model);
    TransitionFamily family;
    int q = 0;
    if (const auto* tl = std::get_if<TruncatedLinear>(&model)) {
        q = tl->lag_order();
    } else if (const auto* cl = std::get_if<CovariateLogistic>(&model)) {
        q = cl->q;
    } else {
        throw std::invalid_argument("transition families are defined for truncated_linear and covariate_logistic");
    }
    if (q < 1) {
        throw std::invalid_argument("transition family needs at least one observation lag");
    }
    const HistorySpace space(catts::n_categories(model), q);
    family.state_dim = space.size();
    family.covariate_dim = catts::covariate_dim(model);
    family.logistic_order = q;
    if (family.covariate_dim == 0) {
        const Eigen::MatrixXd P = transition_matrix(model);
        family.eval = [P](const Eigen::VectorXd&) { return P; };
    } else {
        family.eval = [model](const Eigen::VectorXd& z) { return transition_matrix(model, z); };
    }
    return family;
}

TransitionFamily TransitionFamily::constant(Eigen::MatrixXd P) {
    require_stochastic(P);
    TransitionFamily family;
    family.state_dim = static_cast<std::size_t>(P.rows());
    family.eval = [P = std::move(P)](const Eigen::VectorXd&) { return P; };
    return family;
}

TransitionFamily TransitionFamily::indexed(std::vector<Eigen::MatrixXd> matrices) {
    if (matrices.empty()) {
        throw std::invalid_argument("indexed transition family needs at least one matrix");
    }
    for (const auto& P : matrices) {
        require_stochastic(P);
        if (P.rows() != matrices.front().rows()) {
            throw std::invalid_argument("indexed transition matrices must share one state space");
        }
    }
    TransitionFamily family;
    family.state_dim = static_cast<std::size_t>(matrices.front().rows());
    family.covariate_dim = 1;
    family.eval = [mats = std::move(matrices)](const Eigen::VectorXd& z) {
        if (z.size() < 1) {
            throw std::invalid_argument("indexed transition family needs a covariate");
        }
        const auto idx = std::lround(z[0]);
        if (idx < 0 || idx >= static_cast<long>(mats.size())) {
            throw std::out_of_range("covariate " + std::to_string(z[0]) + " indexes no transition matrix");
        }
        return mats[static_cast<std::size_t>(idx)];
    };
    return family;
}

void require_stochastic(const Eigen::MatrixXd& P, double tol) {
    if (P.rows() == 0 || P.rows() != P.cols()) {
        throw std::invalid_argument("transition matrix must be square and nonempty");
    }
    if (!P.allFinite() || P.minCoeff() < 0.0) {
        throw std::invalid_argument("transition matrix has negative or non-finite entries");
    }
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        const double s = P.row(i).sum();
        if (std::abs(s - 1.0) > tol) {
            throw std::invalid_argument("transition matrix row " + std::to_string(i) + " sums to " +
                                        std::to_string(s));
        }
    }
}

double dobrushin(const Eigen::MatrixXd& P) {
    require_stochastic(P);
    double worst = 0.0;
    for (Eigen::Index x = 0; x < P.rows(); ++x) {
        for (Eigen::Index y = x + 1; y < P.rows(); ++y) {
            worst = std::max(worst, 0.5 * (P.row(x) - P.row(y)).cwiseAbs().sum());
        }
    }
    return std::min(worst, 1.0);
}

E1Result e1_check(const TransitionFamily& family, std::span<const Eigen::VectorXd> z_samples, int m,
                  std::uint64_t seed) {
    if (m < 1) {
        throw std::invalid_argument("e1_check needs m >= 1");
    }
    if (z_samples.empty()) {
        throw std::invalid_argument("e1_check needs at least one covariate sample");
    }
    const std::size_t n_z = z_samples.size();
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(n_z);
    for (const auto& z : z_samples) {
        mats.push_back(family(z));
    }

    bool enumerate = true;
    std::size_t total = 1;
    for (int i = 0; i < m; ++i) {
        if (total > kMaxE1Tuples / n_z) {
            enumerate = false;
            break;
        }
        total *= n_z;
    }
    if (!enumerate) {
        total = kMaxE1Tuples;
    }

    Rng rng(seed);
    E1Result out;
    out.min_entry = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> tuple(static_cast<std::size_t>(m), 0);
    for (std::size_t t = 0; t < total; ++t) {
        if (enumerate) {
            std::size_t rest = t;
            for (auto& idx : tuple) {
                idx = rest % n_z;
                rest /= n_z;
            }
        } else {
            for (auto& idx : tuple) {
                idx = std::min(n_z - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_z)));
            }
        }
        Eigen::MatrixXd product = mats[tuple[0]];
        for (int i = 1; i < m; ++i) {
            product = product * mats[tuple[static_cast<std::size_t>(i)]];
        }
        out.min_entry = std::min(out.min_entry, product.minCoeff());
    }
    out.tuples_tested = total;
    out.pass = out.min_entry > 0.0;

    if (family.logistic_order) {
        const int q = *family.logistic_order;
        const auto n_cat = static_cast<int>(std::lround(std::pow(static_cast<double>(family.state_dim), 1.0 / q)));
        if (family.state_dim <= kStructuralLimit) {
            out.structural_pass = pattern_power_positive(HistorySpace(n_cat, q), m);
        } else {
            out.structural_pass = m >= q;
        }
        out.pass = out.pass && *out.structural_pass;
    }
    return out;
}

BackwardLimit backward_row_limit(const TransitionFamily& family, std::span<const Eigen::VectorXd> z_path, double tol,
                                 std::size_t max_depth, int block) {
    if (!(tol > 0.0)) {
        throw std::invalid_argument("backward_row_limit needs tol > 0");
    }
    if (block < 1) {
        throw std::invalid_argument("backward_row_limit needs block >= 1");
    }
    if (z_path.empty()) {
        throw std::invalid_argument("backward_row_limit needs a nonempty covariate path");
    }
    const auto m = static_cast<std::size_t>(block);
    const auto n = static_cast<Eigen::Index>(family.state_dim);
    const std::size_t available = std::min(max_depth, z_path.size());

    Eigen::MatrixXd product = Eigen::MatrixXd::Identity(n, n);
    double certificate = 1.0;
    std::size_t depth = 0;
    while (depth + m <= available) {
        Eigen::MatrixXd blk = Eigen::MatrixXd::Identity(n, n);
        const std::size_t last = z_path.size() - 1 - depth;
        for (std::size_t i = 0; i < m; ++i) {
            blk = blk * family(z_path[last + 1 - m + i]);
        }
        certificate *= dobrushin(blk);
        product = blk * product;
        depth += m;
        if (certificate <= tol / 2.0) {
            return BackwardLimit{ProbabilityVector(product.row(0).transpose()), depth, certificate};
        }
    }
    throw CertificateNotReached("backward product certificate " + std::to_string(certificate) + " after depth " +
                                    std::to_string(depth) + " did not reach tol/2 = " + std::to_string(tol / 2.0),
                                certificate);
}

CovariateGenerator CovariateGenerator::iid_gaussian(int dim) {
    if (dim < 1) {
        throw std::invalid_argument("covariate dimension must be >= 1");
    }
    return CovariateGenerator(Kind::IIDGaussian, dim);
}

CovariateGenerator CovariateGenerator::gaussian_ar1(double phi, double sigma, int dim) {
    if (dim < 1) {
        throw std::invalid_argument("covariate dimension must be >= 1");
    }
    if (!(std::abs(phi) < 1.0)) {
        throw std::invalid_argument("AR(1) covariates need |phi| < 1");
    }
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("AR(1) covariates need sigma > 0");
    }
    CovariateGenerator gen(Kind::GaussianAR1, dim);
    gen.phi_ = phi;
    gen.sigma_ = sigma;
    return gen;
}

CovariateGenerator CovariateGenerator::bernoulli_shift(int window, int dim) {
    if (dim < 1) {
        throw std::invalid_argument("covariate dimension must be >= 1");
    }
    if (window < 1) {
        throw std::invalid_argument("Bernoulli shift window must be >= 1");
    }
    CovariateGenerator gen(Kind::BernoulliShift, dim);
    gen.window_ = window;
    return gen;
}

CovariateGenerator CovariateGenerator::custom(CustomFn fn, int dim) {
    if (!fn) {
        throw std::invalid_argument("custom covariate generator needs a function");
    }
    CovariateGenerator gen(Kind::Custom, dim);
    gen.custom_ = std::move(fn);
    return gen;
}

std::vector<Eigen::VectorXd> CovariateGenerator::generate(std::size_t n, std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<Eigen::VectorXd> out;
    out.reserve(n);
    auto normals = [&] {
        Eigen::VectorXd v(dim_);
        for (int i = 0; i < dim_; ++i) {
            v[i] = rng.normal();
        }
        return v;
    };
    switch (kind_) {
        case Kind::IIDGaussian:
            for (std::size_t t = 0; t < n; ++t) {
                out.push_back(normals());
            }
            break;
        case Kind::GaussianAR1: {
            if (n == 0) {
                break;
            }
            Eigen::VectorXd z = normals() * (sigma_ / std::sqrt(1.0 - phi_ * phi_));
            out.push_back(z);
            for (std::size_t t = 1; t < n; ++t) {
                z = phi_ * z + sigma_ * normals();
                out.push_back(z);
            }
            break;
        }
        case Kind::BernoulliShift: {
            std::vector<Eigen::VectorXd> eps;
            const auto w = static_cast<std::size_t>(window_);
            for (std::size_t i = 0; i + 1 < w; ++i) {
                eps.push_back(normals());
            }
            const double scale = 1.0 / std::sqrt(static_cast<double>(w));
            for (std::size_t t = 0; t < n; ++t) {
                eps.push_back(normals());
                Eigen::VectorXd z = Eigen::VectorXd::Zero(dim_);
                for (std::size_t i = eps.size() - w; i < eps.size(); ++i) {
                    z += eps[i];
                }
                out.push_back(z * scale);
            }
            break;
        }
        case Kind::Custom: {
            out = custom_(n, rng);
            if (out.size() != n) {
                throw std::runtime_error("custom covariate generator returned " + std::to_string(out.size()) +
                                         " rows, expected " + std::to_string(n));
            }
            for (const auto& z : out) {
                if (z.size() != dim_) {
                    throw std::runtime_error("custom covariate generator returned a row of the wrong dimension");
                }
            }
            break;
        }
    }
    return out;
}

SeriesPath simulate_joint(const CovariateGenerator& gen, const CovariateLogistic& model, std::size_t n,
                          std::size_t burn_in, std::uint64_t seed, bool allow_uncertified) {
    validate(ModelSpec{model});
    if (!gen.mixing_certified() && !allow_uncertified) {
        throw std::invalid_argument("covariate generator has no mixing certificate; pass allow_uncertified to use it");
    }
    if (gen.dim() != model.covariate_dim) {
        throw std::invalid_argument("covariate generator dimension " + std::to_string(gen.dim()) +
                                    " does not match the model's " + std::to_string(model.covariate_dim));
    }
    const auto z = gen.generate(n + burn_in, derive_seed(seed, 0));
    if (model.q >= 1 && HistorySpace(model.n_categories, model.q).size() <= kJointE1States) {
        const auto family = TransitionFamily::from_model(ModelSpec{model});
        const std::size_t k = std::min(z.size(), kJointE1Samples);
        if (k > 0) {
            const auto e1 = e1_check(family, std::span(z).first(k), model.q, seed);
            if (!e1.pass) {
                throw std::domain_error("lagged-history chain fails the positivity condition at m = q");
            }
        }
    }
    auto path = simulate(ModelSpec{model}, n, burn_in, derive_seed(seed, 1), std::nullopt, z);
    path.seed = seed;
    return path;
}

double conditional_loglik(const TransitionFamily& family, std::span<const std::size_t> states,
                          std::span<const Eigen::VectorXd> z_path) {
    if (!z_path.empty() && z_path.size() != states.size()) {
        throw std::invalid_argument("covariate path must align with the state path");
    }
    if (z_path.empty() && family.covariate_dim != 0) {
        throw std::invalid_argument("transition family needs a covariate path");
    }
    double total = 0.0;
    for (std::size_t i = 1; i < states.size(); ++i) {
        const Eigen::MatrixXd P = family(covariate_at(z_path, i));
        const auto from = static_cast<Eigen::Index>(states[i - 1]);
        const auto to = static_cast<Eigen::Index>(states[i]);
        if (from >= P.rows() || to >= P.cols()) {
            throw std::out_of_range("state index outside the transition family's state space");
        }
        const double p = P(from, to);
        if (!(p > 0.0)) {
            throw ImpossiblePathError("transition " + std::to_string(from) + " -> " + std::to_string(to) +
                                      " at step " + std::to_string(i) + " has probability zero");
        }
        total += std::log(p);
    }
    return total;
}

std::vector<std::size_t> lagged_states(std::span<const CategoryValue> y, int n_categories, int q) {
    const HistorySpace space(n_categories, q);
    const auto lag = static_cast<std::size_t>(q);
    std::vector<std::size_t> out;
    if (y.size() < lag) {
        return out;
    }
    out.reserve(y.size() - lag + 1);
    std::vector<CategoryValue> window(lag, CategoryValue(n_categories, n_categories));
    for (std::size_t t = lag - 1; t < y.size(); ++t) {
        for (std::size_t s = 0; s < lag; ++s) {
            window[s] = y[t - s];
        }
        out.push_back(space.encode(window));
    }
    return out;
}

}  // namespace catts
