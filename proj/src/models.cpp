#include "catts/models.hpp"

#include "catts/random.hpp"

#include <algorithm>
#include <cmath>

namespace catts {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw std::invalid_argument(message);
    }
}

void require_square(const std::vector<Eigen::MatrixXd>& mats, Eigen::Index k, const char* name) {
    for (const auto& m : mats) {
        require(m.rows() == k && m.cols() == k,
                std::string(name) + " matrices must be " + std::to_string(k) + "x" + std::to_string(k));
        require(m.allFinite(), std::string(name) + " has non-finite entries");
    }
}

void require_history(std::span<const CategoryValue> y_history, int needed, int n_categories) {
    require(static_cast<int>(y_history.size()) >= needed,
            "observation history has " + std::to_string(y_history.size()) + " entries, model needs " +
                std::to_string(needed));
    for (int i = 0; i < needed; ++i) {
        require(y_history[i].n_categories() == n_categories, "history category count does not match model");
    }
}

LogOdds eval_impl(const ModelSpec& model, std::span<const CategoryValue> y_history,
                  std::span<const LogOdds> lambda_history, const Eigen::VectorXd* z) {
    const bool wants_z = covariate_dim(model) > 0;
    require(wants_z == (z != nullptr), wants_z ? "model requires a covariate" : "model takes no covariate");

    return std::visit(
        overloaded{
            [&](const TruncatedLinear& m) {
                require_history(y_history, m.lag_order(), m.n_categories);
                Eigen::VectorXd lambda = m.d;
                for (int j = 0; j < m.lag_order(); ++j) {
                    const int c = y_history[j].index();
                    if (c < m.n_categories) {
                        lambda += m.A[j].col(c - 1);
                    }
                }
                return LogOdds(std::move(lambda));
            },
            [&](const LinearFeedback& m) {
                require_history(y_history, m.q(), m.n_categories);
                require(static_cast<int>(lambda_history.size()) >= m.p(), "log-odds history shorter than p");
                Eigen::VectorXd lambda = m.A0;
                for (int i = 0; i < m.p(); ++i) {
                    require(lambda_history[i].n_categories() == m.n_categories, "log-odds history has wrong size");
                    lambda.noalias() += m.A[i] * lambda_history[i].values();
                }
                for (int i = 0; i < m.q(); ++i) {
                    const int c = y_history[i].index();
                    if (c < m.n_categories) {
                        lambda += m.B[i].col(c - 1);
                    }
                }
                return LogOdds(std::move(lambda));
            },
            [&](const ThresholdBinary& m) {
                require_history(y_history, 1, 2);
                require(!lambda_history.empty() && lambda_history[0].size() == 1,
                        "threshold model needs lambda_{t-1}");
                const double x = lambda_history[0][0];
                const double y = y_history[0].is_reference() ? 0.0 : 1.0;
                const double value =
                    m.d + m.beta1 * std::max(x, 0.0) + m.beta2 * std::min(x, 0.0) + m.alpha * y;
                return LogOdds(Eigen::VectorXd::Constant(1, value));
            },
            [&](const CovariateLogistic& m) {
                require_history(y_history, m.q, m.n_categories);
                Eigen::VectorXd lambda = m.intercept;
                for (int l = 0; l < m.q; ++l) {
                    const int c = y_history[l].index();
                    if (c < m.n_categories) {
                        lambda += m.gamma[l].col(c - 1);
                    }
                }
                if (m.covariate_dim > 0) {
                    require(z->size() == m.covariate_dim, "covariate has dimension " + std::to_string(z->size()) +
                                                              ", model expects " +
                                                              std::to_string(m.covariate_dim));
                    lambda.noalias() += m.delta * *z;
                }
                return LogOdds(std::move(lambda));
            },
        },
        model);
}

}  // namespace

CovariateLogistic CovariateLogistic::zeros(int n_categories, int q, int covariate_dim) {
    CovariateLogistic m;
    m.n_categories = n_categories;
    m.q = q;
    m.covariate_dim = covariate_dim;
    m.intercept = Eigen::VectorXd::Zero(n_categories - 1);
    m.gamma.assign(q, Eigen::MatrixXd::Zero(n_categories - 1, n_categories - 1));
    m.delta = Eigen::MatrixXd::Zero(n_categories - 1, covariate_dim);
    return m;
}

Eigen::VectorXd CovariateLogistic::theta() const {
    const int k = n_categories - 1;
    const int width = design_width();
    Eigen::VectorXd out(n_params());
    for (int j = 0; j < k; ++j) {
        auto block = out.segment(j * width, width);
        block[0] = intercept[j];
        for (int l = 0; l < q; ++l) {
            block.segment(1 + l * k, k) = gamma[l].row(j).transpose();
        }
        if (covariate_dim > 0) {
            block.tail(covariate_dim) = delta.row(j).transpose();
        }
    }
    return out;
}

CovariateLogistic CovariateLogistic::with_theta(const Eigen::VectorXd& theta) const {
    require(theta.size() == n_params(), "theta has " + std::to_string(theta.size()) + " entries, model has " +
                                            std::to_string(n_params()));
    const int k = n_categories - 1;
    const int width = design_width();
    CovariateLogistic m = zeros(n_categories, q, covariate_dim);
    for (int j = 0; j < k; ++j) {
        const auto block = theta.segment(j * width, width);
        m.intercept[j] = block[0];
        for (int l = 0; l < q; ++l) {
            m.gamma[l].row(j) = block.segment(1 + l * k, k).transpose();
        }
        if (covariate_dim > 0) {
            m.delta.row(j) = block.tail(covariate_dim).transpose();
        }
    }
    return m;
}

void validate(const ModelSpec& model) {
    std::visit(overloaded{
                   [](const TruncatedLinear& m) {
                       require(m.n_categories >= 2, "n_categories must be at least 2");
                       require(m.d.size() == m.n_categories - 1, "d must have N-1 entries");
                       require(m.d.allFinite(), "d has non-finite entries");
                       require(m.lag_order() >= 1, "truncated linear model needs at least one lag");
                       require_square(m.A, m.n_categories - 1, "A");
                   },
                   [](const LinearFeedback& m) {
                       require(m.n_categories >= 2, "n_categories must be at least 2");
                       require(m.A0.size() == m.n_categories - 1, "A0 must have N-1 entries");
                       require(m.A0.allFinite(), "A0 has non-finite entries");
                       require(m.p() >= 1, "feedback model needs p >= 1");
                       require_square(m.A, m.n_categories - 1, "A");
                       require_square(m.B, m.n_categories - 1, "B");
                   },
                   [](const ThresholdBinary& m) {
                       require(std::isfinite(m.d) && std::isfinite(m.beta1) && std::isfinite(m.beta2) &&
                                   std::isfinite(m.alpha),
                               "threshold parameters must be finite");
                   },
                   [](const CovariateLogistic& m) {
                       require(m.n_categories >= 2, "n_categories must be at least 2");
                       require(m.q >= 0, "q must be nonnegative");
                       require(m.covariate_dim >= 0, "covariate_dim must be nonnegative");
                       require(m.intercept.size() == m.n_categories - 1, "intercept must have N-1 entries");
                       require(m.intercept.allFinite(), "intercept has non-finite entries");
                       require(static_cast<int>(m.gamma.size()) == m.q, "gamma must hold q matrices");
                       require_square(m.gamma, m.n_categories - 1, "gamma");
                       require(m.delta.rows() == m.n_categories - 1 && m.delta.cols() == m.covariate_dim,
                               "delta must be (N-1) x covariate_dim");
                       require(m.delta.allFinite(), "delta has non-finite entries");
                   },
               },
               model);
}

int n_categories(const ModelSpec& model) {
    return std::visit(overloaded{
                          [](const ThresholdBinary&) { return 2; },
                          [](const auto& m) { return m.n_categories; },
                      },
                      model);
}

std::string family_name(const ModelSpec& model) {
    return std::visit(overloaded{
                          [](const TruncatedLinear&) { return std::string("truncated_linear"); },
                          [](const LinearFeedback&) { return std::string("linear_feedback"); },
                          [](const ThresholdBinary&) { return std::string("threshold_binary"); },
                          [](const CovariateLogistic&) { return std::string("covariate_logistic"); },
                      },
                      model);
}

int observation_lags(const ModelSpec& model) {
    return std::visit(overloaded{
                          [](const TruncatedLinear& m) { return m.lag_order(); },
                          [](const LinearFeedback& m) { return m.q(); },
                          [](const ThresholdBinary&) { return 1; },
                          [](const CovariateLogistic& m) { return m.q; },
                      },
                      model);
}

int logodds_lags(const ModelSpec& model) {
    return std::visit(overloaded{
                          [](const LinearFeedback& m) { return m.p(); },
                          [](const ThresholdBinary&) { return 1; },
                          [](const auto&) { return 0; },
                      },
                      model);
}

int covariate_dim(const ModelSpec& model) {
    if (const auto* m = std::get_if<CovariateLogistic>(&model)) {
        return m->covariate_dim;
    }
    return 0;
}

bool has_feedback(const ModelSpec& model) { return logodds_lags(model) > 0; }

LogOdds eval_logodds(const ModelSpec& model, std::span<const CategoryValue> y_history,
                     std::span<const LogOdds> lambda_history) {
    return eval_impl(model, y_history, lambda_history, nullptr);
}

LogOdds eval_logodds(const ModelSpec& model, std::span<const CategoryValue> y_history,
                     std::span<const LogOdds> lambda_history, const Eigen::VectorXd& z) {
    return eval_impl(model, y_history, lambda_history, &z);
}

Eigen::VectorXd design_row(const CovariateLogistic& model, std::span<const CategoryValue> y_history,
                           const Eigen::VectorXd* z) {
    require_history(y_history, model.q, model.n_categories);
    const int k = model.n_categories - 1;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(model.design_width());
    x[0] = 1.0;
    for (int l = 0; l < model.q; ++l) {
        const int c = y_history[l].index();
        if (c <= k) {
            x[1 + l * k + (c - 1)] = 1.0;
        }
    }
    if (model.covariate_dim > 0) {
        require(z != nullptr && z->size() == model.covariate_dim, "covariate dimension mismatch");
        x.tail(model.covariate_dim) = *z;
    } else {
        require(z == nullptr || z->size() == 0, "model takes no covariate");
    }
    return x;
}

InitialState default_initial_state(const ModelSpec& model) {
    const int n = n_categories(model);
    InitialState init;
    init.y_history = reference_history(n, static_cast<std::size_t>(observation_lags(model)));
    init.lambda_history.assign(static_cast<std::size_t>(logodds_lags(model)),
                               LogOdds(Eigen::VectorXd::Zero(n - 1)));
    return init;
}

SeriesPath simulate(const ModelSpec& model, std::size_t n, std::size_t burn_in, std::uint64_t seed,
                    const std::optional<InitialState>& init, std::span<const Eigen::VectorXd> z_path) {
    validate(model);
    const auto y_lags = static_cast<std::size_t>(observation_lags(model));
    const auto l_lags = static_cast<std::size_t>(logodds_lags(model));
    const bool uses_z = covariate_dim(model) > 0;
    const std::size_t total = n + burn_in;
    if (uses_z) {
        require(z_path.size() >= total, "covariate path has " + std::to_string(z_path.size()) +
                                            " rows, simulation needs " + std::to_string(total));
    }

    InitialState state = init ? *init : default_initial_state(model);
    require(state.y_history.size() >= y_lags, "initial observation history too short");
    require(state.lambda_history.size() >= l_lags, "initial log-odds history too short");
    std::vector<CategoryValue> y_hist(state.y_history.begin(), state.y_history.begin() + y_lags);
    std::vector<LogOdds> l_hist(state.lambda_history.begin(), state.lambda_history.begin() + l_lags);

    SeriesPath path;
    path.seed = seed;
    path.y.reserve(n);
    path.lambda.reserve(n);
    if (uses_z) {
        path.z.emplace();
        path.z->reserve(n);
    }

    Rng rng(seed);
    for (std::size_t t = 0; t < total; ++t) {
        LogOdds lambda = uses_z ? eval_logodds(model, y_hist, l_hist, z_path[t]) : eval_logodds(model, y_hist, l_hist);
        const CategoryValue y = sample_category(softmax_link(lambda), rng.uniform());
        if (t >= burn_in) {
            path.y.push_back(y);
            path.lambda.push_back(lambda);
            if (uses_z) {
                path.z->push_back(z_path[t]);
            }
        }
        if (!y_hist.empty()) {
            std::move_backward(y_hist.begin(), y_hist.end() - 1, y_hist.end());
            y_hist.front() = y;
        }
        if (!l_hist.empty()) {
            std::move_backward(l_hist.begin(), l_hist.end() - 1, l_hist.end());
            l_hist.front() = std::move(lambda);
        }
    }
    return path;
}

HistorySpace::HistorySpace(int n_categories, int q) : n_categories_(n_categories), q_(q), size_(1) {
    require(n_categories >= 2, "n_categories must be at least 2");
    require(q >= 1, "history order must be at least 1");
    for (int s = 0; s < q; ++s) {
        size_ *= static_cast<std::size_t>(n_categories);
        require(size_ <= kMaxStates, "state space N^q exceeds " + std::to_string(kMaxStates) + " states");
    }
}

std::size_t HistorySpace::encode(std::span<const CategoryValue> newest_first) const {
    require(static_cast<int>(newest_first.size()) >= q_, "history shorter than the state order");
    std::size_t index = 0;
    std::size_t weight = 1;
    for (int s = 0; s < q_; ++s) {
        require(newest_first[s].n_categories() == n_categories_, "category count mismatch");
        index += static_cast<std::size_t>(newest_first[s].index() - 1) * weight;
        weight *= static_cast<std::size_t>(n_categories_);
    }
    return index;
}

std::vector<CategoryValue> HistorySpace::decode(std::size_t index) const {
    require(index < size_, "state index out of range");
    std::vector<CategoryValue> out;
    out.reserve(q_);
    for (int s = 0; s < q_; ++s) {
        out.emplace_back(static_cast<int>(index % n_categories_) + 1, n_categories_);
        index /= static_cast<std::size_t>(n_categories_);
    }
    return out;
}

std::size_t HistorySpace::shift(std::size_t from, int next) const {
    const std::size_t keep = size_ / static_cast<std::size_t>(n_categories_);
    return static_cast<std::size_t>(next - 1) + static_cast<std::size_t>(n_categories_) * (from % keep);
}

namespace {

Eigen::MatrixXd transition_impl(const ModelSpec& model, const Eigen::VectorXd* z) {
    validate(model);
    require(std::holds_alternative<TruncatedLinear>(model) || std::holds_alternative<CovariateLogistic>(model),
            "transition matrices exist only for finite-order models without feedback");
    const int n_cat = n_categories(model);
    const int q = observation_lags(model);
    const HistorySpace space(n_cat, q);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(space.size(), space.size());
    for (std::size_t u = 0; u < space.size(); ++u) {
        const auto history = space.decode(u);
        const LogOdds lambda = z ? eval_logodds(model, history, {}, *z) : eval_logodds(model, history, {});
        const ProbabilityVector probs = softmax_link(lambda);
        for (int c = 1; c <= n_cat; ++c) {
            P(u, space.shift(u, c)) = probs[c - 1];
        }
    }
    return P;
}

}  // namespace

Eigen::MatrixXd transition_matrix(const ModelSpec& model) { return transition_impl(model, nullptr); }

Eigen::MatrixXd transition_matrix(const ModelSpec& model, const Eigen::VectorXd& z) {
    return transition_impl(model, &z);
}

}  // namespace catts
