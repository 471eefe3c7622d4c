#include "catts/model_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace catts::io {

namespace {

using nlohmann::json;

json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out.push_back(m(r, c));
        }
    }
    return out;
}

json matrices_json(const std::vector<Eigen::MatrixXd>& ms) {
    json out = json::array();
    for (const auto& m : ms) {
        out.push_back(matrix_json(m));
    }
    return out;
}

Eigen::VectorXd read_vector(const json& arr, Eigen::Index expected, const char* name) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != expected) {
        throw std::invalid_argument(std::string("'") + name + "' must be an array of " + std::to_string(expected) +
                                    " numbers");
    }
    Eigen::VectorXd v(expected);
    for (Eigen::Index i = 0; i < expected; ++i) {
        v[i] = arr.at(i).get<double>();
    }
    return v;
}

Eigen::MatrixXd read_matrix(const json& arr, Eigen::Index rows, Eigen::Index cols, const char* name) {
    const Eigen::VectorXd flat = read_vector(arr, rows * cols, name);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = flat[r * cols + c];
        }
    }
    return m;
}

std::vector<Eigen::MatrixXd> read_matrices(const json& arr, Eigen::Index k, const char* name) {
    if (!arr.is_array()) {
        throw std::invalid_argument(std::string("'") + name + "' must be an array of matrices");
    }
    std::vector<Eigen::MatrixXd> out;
    for (const auto& item : arr) {
        out.push_back(read_matrix(item, k, k, name));
    }
    return out;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) {
            field.pop_back();
        }
        fields.push_back(field);
    }
    return fields;
}

double parse_double(const std::string& text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    while (first != last && *first == ' ') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw std::invalid_argument("cannot parse number '" + text + "'");
    }
    return value;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw std::runtime_error("number formatting failed");
    }
    return std::string(buf, ptr);
}

json to_json(const ModelSpec& model) {
    json doc;
    doc["family"] = family_name(model);
    if (const auto* m = std::get_if<TruncatedLinear>(&model)) {
        doc["n_categories"] = m->n_categories;
        doc["d"] = vector_json(m->d);
        doc["A"] = matrices_json(m->A);
    } else if (const auto* m = std::get_if<LinearFeedback>(&model)) {
        doc["n_categories"] = m->n_categories;
        doc["A0"] = vector_json(m->A0);
        doc["A"] = matrices_json(m->A);
        doc["B"] = matrices_json(m->B);
    } else if (const auto* m = std::get_if<ThresholdBinary>(&model)) {
        doc["d"] = m->d;
        doc["beta1"] = m->beta1;
        doc["beta2"] = m->beta2;
        doc["alpha"] = m->alpha;
    } else if (const auto* m = std::get_if<CovariateLogistic>(&model)) {
        doc["n_categories"] = m->n_categories;
        doc["q"] = m->q;
        doc["covariate_dim"] = m->covariate_dim;
        doc["intercept"] = vector_json(m->intercept);
        doc["gamma"] = matrices_json(m->gamma);
        doc["delta"] = matrix_json(m->delta);
    }
    return doc;
}

ModelSpec model_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("family")) {
        throw std::invalid_argument("model document needs a 'family' field");
    }
    const auto family = doc.at("family").get<std::string>();
    ModelSpec model;
    try {
        if (family == "truncated_linear") {
            TruncatedLinear m;
            m.n_categories = doc.at("n_categories").get<int>();
            if (m.n_categories < 2) {
                throw std::invalid_argument("n_categories must be at least 2");
            }
            m.d = read_vector(doc.at("d"), m.n_categories - 1, "d");
            m.A = read_matrices(doc.at("A"), m.n_categories - 1, "A");
            model = std::move(m);
        } else if (family == "linear_feedback") {
            LinearFeedback m;
            m.n_categories = doc.at("n_categories").get<int>();
            if (m.n_categories < 2) {
                throw std::invalid_argument("n_categories must be at least 2");
            }
            m.A0 = read_vector(doc.at("A0"), m.n_categories - 1, "A0");
            m.A = read_matrices(doc.at("A"), m.n_categories - 1, "A");
            m.B = read_matrices(doc.value("B", json::array()), m.n_categories - 1, "B");
            model = std::move(m);
        } else if (family == "threshold_binary") {
            ThresholdBinary m;
            m.d = doc.at("d").get<double>();
            m.beta1 = doc.at("beta1").get<double>();
            m.beta2 = doc.at("beta2").get<double>();
            m.alpha = doc.at("alpha").get<double>();
            model = m;
        } else if (family == "covariate_logistic") {
            const int n = doc.at("n_categories").get<int>();
            const int q = doc.at("q").get<int>();
            const int dz = doc.value("covariate_dim", 0);
            if (n < 2 || q < 0 || dz < 0) {
                throw std::invalid_argument("covariate_logistic needs n_categories >= 2, q >= 0, covariate_dim >= 0");
            }
            auto m = CovariateLogistic::zeros(n, q, dz);
            if (doc.contains("intercept")) {
                m.intercept = read_vector(doc.at("intercept"), n - 1, "intercept");
            }
            if (doc.contains("gamma")) {
                m.gamma = read_matrices(doc.at("gamma"), n - 1, "gamma");
            }
            if (doc.contains("delta")) {
                m.delta = read_matrix(doc.at("delta"), n - 1, dz, "delta");
            }
            model = std::move(m);
        } else {
            throw std::invalid_argument("unknown model family '" + family + "'");
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed model document: ") + e.what());
    }
    validate(model);
    return model;
}

ModelSpec load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open model file '" + path + "'");
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(doc);
}

void write_path_csv(std::ostream& out, const SeriesPath& path) {
    const std::size_t k = path.lambda.empty() ? 0 : static_cast<std::size_t>(path.lambda.front().size());
    const std::size_t dz = (path.z && !path.z->empty()) ? static_cast<std::size_t>(path.z->front().size()) : 0;
    out << "t,y";
    for (std::size_t j = 1; j <= k; ++j) {
        out << ",lambda_" << j;
    }
    for (std::size_t j = 1; j <= dz; ++j) {
        out << ",z_" << j;
    }
    out << '\n';
    for (std::size_t t = 0; t < path.y.size(); ++t) {
        out << t << ',' << path.y[t].index();
        for (std::size_t j = 0; j < k; ++j) {
            out << ',' << format_double(path.lambda[t][static_cast<Eigen::Index>(j)]);
        }
        for (std::size_t j = 0; j < dz; ++j) {
            out << ',' << format_double((*path.z)[t][static_cast<Eigen::Index>(j)]);
        }
        out << '\n';
    }
}

SeriesPath read_path_csv(std::istream& in, int n_categories) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("data file is empty");
    }
    const auto header = split_line(line);
    int y_col = -1;
    std::vector<int> lambda_cols;
    std::vector<int> z_cols;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        const auto& name = header[c];
        if (name == "y") {
            y_col = c;
        } else if (name.rfind("lambda_", 0) == 0) {
            lambda_cols.push_back(c);
        } else if (name.rfind("z_", 0) == 0) {
            z_cols.push_back(c);
        }
    }
    if (y_col < 0) {
        throw std::invalid_argument("data file has no 'y' column");
    }
    if (!lambda_cols.empty() && static_cast<int>(lambda_cols.size()) != n_categories - 1) {
        throw std::invalid_argument("data file has " + std::to_string(lambda_cols.size()) +
                                    " lambda columns, expected " + std::to_string(n_categories - 1));
    }
    SeriesPath path;
    if (!z_cols.empty()) {
        path.z.emplace();
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto fields = split_line(line);
        if (fields.size() != header.size()) {
            throw std::invalid_argument("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                        " fields, header has " + std::to_string(header.size()));
        }
        const double y = parse_double(fields[y_col]);
        if (y != static_cast<int>(y)) {
            throw std::invalid_argument("row " + std::to_string(row) + ": y must be an integer category label");
        }
        path.y.emplace_back(static_cast<int>(y), n_categories);
        if (!lambda_cols.empty()) {
            Eigen::VectorXd lambda(static_cast<Eigen::Index>(lambda_cols.size()));
            for (std::size_t j = 0; j < lambda_cols.size(); ++j) {
                lambda[static_cast<Eigen::Index>(j)] = parse_double(fields[lambda_cols[j]]);
            }
            path.lambda.emplace_back(std::move(lambda));
        }
        if (!z_cols.empty()) {
            Eigen::VectorXd z(static_cast<Eigen::Index>(z_cols.size()));
            for (std::size_t j = 0; j < z_cols.size(); ++j) {
                z[static_cast<Eigen::Index>(j)] = parse_double(fields[z_cols[j]]);
            }
            path.z->push_back(std::move(z));
        }
    }
    return path;
}

void write_covariates_csv(std::ostream& out, const std::vector<Eigen::VectorXd>& z) {
    const Eigen::Index dz = z.empty() ? 0 : z.front().size();
    out << 't';
    for (Eigen::Index j = 1; j <= dz; ++j) {
        out << ",z_" << j;
    }
    out << '\n';
    for (std::size_t t = 0; t < z.size(); ++t) {
        out << t;
        for (Eigen::Index j = 0; j < dz; ++j) {
            out << ',' << format_double(z[t][j]);
        }
        out << '\n';
    }
}

std::vector<Eigen::VectorXd> read_covariates_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("covariate file is empty");
    }
    const auto header = split_line(line);
    std::vector<int> z_cols;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        if (header[c].rfind("z_", 0) == 0) {
            z_cols.push_back(c);
        }
    }
    if (z_cols.empty()) {
        throw std::invalid_argument("covariate file has no z_* columns");
    }
    std::vector<Eigen::VectorXd> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto fields = split_line(line);
        if (fields.size() != header.size()) {
            throw std::invalid_argument("covariate row " + std::to_string(row) + " has the wrong number of fields");
        }
        Eigen::VectorXd z(static_cast<Eigen::Index>(z_cols.size()));
        for (std::size_t j = 0; j < z_cols.size(); ++j) {
            z[static_cast<Eigen::Index>(j)] = parse_double(fields[z_cols[j]]);
        }
        out.push_back(std::move(z));
    }
    return out;
}

}  // namespace catts::io
