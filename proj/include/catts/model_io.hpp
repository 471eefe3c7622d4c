#pragma once

#include "catts/models.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace catts::io {

/// Shortest decimal string that parses back to exactly the same double.
[[nodiscard]] std::string format_double(double value);

/**
 * Model documents carry a "family" tag and flat, row-major parameter arrays:
 *
 *   {"family": "truncated_linear", "n_categories": 2, "d": [0.3], "A": [[0.5]]}
 *   {"family": "linear_feedback", "n_categories": 2, "A0": [-0.4], "A": [[0.5]], "B": [[0.8]]}
 *   {"family": "threshold_binary", "d": 0.1, "beta1": 0.5, "beta2": -0.3, "alpha": 1.0}
 *   {"family": "covariate_logistic", "n_categories": 2, "q": 1, "covariate_dim": 1,
 *    "intercept": [0.3], "gamma": [[-0.5]], "delta": [0.8]}
 *
 * Each entry of "A", "B" and "gamma" is one (N-1)x(N-1) matrix, row-major.
 * "delta" is the (N-1) x covariate_dim matrix, row-major. Coefficients of a
 * covariate_logistic document may be omitted and default to zero, which is how
 * fit templates are written.
 */
[[nodiscard]] nlohmann::json to_json(const ModelSpec& model);
[[nodiscard]] ModelSpec model_from_json(const nlohmann::json& doc);

[[nodiscard]] ModelSpec load_model(const std::string& path);

/// CSV with header t,y,lambda_1..lambda_{N-1},z_1..z_{d_z}.
void write_path_csv(std::ostream& out, const SeriesPath& path);
/// Reads a path CSV. Columns other than y, lambda_* and z_* are ignored;
/// lambda columns are optional.
[[nodiscard]] SeriesPath read_path_csv(std::istream& in, int n_categories);

/// CSV with header t,z_1..z_{d_z}.
void write_covariates_csv(std::ostream& out, const std::vector<Eigen::VectorXd>& z);
[[nodiscard]] std::vector<Eigen::VectorXd> read_covariates_csv(std::istream& in);

}  // namespace catts::io
