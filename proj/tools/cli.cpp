#include "cli.hpp"

#include "catts/backward.hpp"
#include "catts/covariates.hpp"
#include "catts/inference.hpp"
#include "catts/mixing.hpp"
#include "catts/model_io.hpp"
#include "catts/stability.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

namespace catts::cli {

namespace {

using Json = nlohmann::ordered_json;

/// Raised for conditions that the subcommand reports as a failed check (exit 1).
class CheckFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string model_file;
    std::string output;
    std::uint64_t seed = kDefaultSeed;
};

struct CovariateOptions {
    std::string file;
    std::string generator;
    double phi = 0.5;
    double sigma = 1.0;
    int window = 5;
    bool allow_uncertified = false;
};

Json to_json(const Eigen::VectorXd& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(v[i]);
    }
    return arr;
}

Json to_json(const std::vector<double>& v) {
    Json arr = Json::array();
    for (double x : v) {
        arr.push_back(x);
    }
    return arr;
}

void emit(const std::string& content, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw std::invalid_argument("cannot open output file " + path);
    }
    file << content;
    if (!file) {
        throw std::invalid_argument("failed writing output file " + path);
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open input file " + path);
    }
    return in;
}

std::vector<CategoryValue> parse_past(const std::string& text, int n_cat, std::size_t lags, bool reference) {
    std::vector<CategoryValue> out;
    if (text.empty()) {
        for (std::size_t i = 0; i < lags; ++i) {
            out.emplace_back(reference ? n_cat : 1, n_cat);
        }
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const int v = std::stoi(item, &used);
        if (used != item.size()) {
            throw std::invalid_argument("bad category '" + item + "' in past");
        }
        out.emplace_back(v, n_cat);
    }
    return out;
}

void add_covariate_options(CLI::App* sub, CovariateOptions& opts) {
    sub->add_option("--covariates", opts.file, "CSV of covariates (t,z_1..z_d)");
    sub->add_option("--generator", opts.generator, "Covariate generator when no CSV is given")
        ->check(CLI::IsMember({"iid", "ar1", "shift"}));
    sub->add_option("--phi", opts.phi, "AR(1) coefficient")->capture_default_str();
    sub->add_option("--sigma", opts.sigma, "AR(1) innovation scale")->capture_default_str();
    sub->add_option("--window", opts.window, "Window of the moving-average shift generator")->capture_default_str();
}

CovariateGenerator make_generator(const CovariateOptions& opts, int dim) {
    if (opts.generator == "iid") {
        return CovariateGenerator::iid_gaussian(dim);
    }
    if (opts.generator == "ar1") {
        return CovariateGenerator::gaussian_ar1(opts.phi, opts.sigma, dim);
    }
    if (opts.generator == "shift") {
        return CovariateGenerator::bernoulli_shift(opts.window, dim);
    }
    throw std::invalid_argument("this model needs covariates: pass --covariates FILE or --generator");
}

std::vector<Eigen::VectorXd> read_covariates(const std::string& path, int dim, std::size_t needed) {
    auto in = open_input(path);
    auto z = io::read_covariates_csv(in);
    if (z.size() < needed) {
        throw std::invalid_argument("covariate file has " + std::to_string(z.size()) + " rows, " +
                                    std::to_string(needed) + " needed");
    }
    for (const auto& row : z) {
        if (row.size() != dim) {
            throw std::invalid_argument("covariate file has rows of dimension " + std::to_string(row.size()) +
                                        ", model expects " + std::to_string(dim));
        }
    }
    return z;
}

std::string path_json(const SeriesPath& path) {
    Json doc;
    doc["seed"] = path.seed;
    Json y = Json::array();
    for (const auto& v : path.y) {
        y.push_back(v.index());
    }
    doc["y"] = std::move(y);
    Json lambda = Json::array();
    for (const auto& l : path.lambda) {
        lambda.push_back(to_json(l.values()));
    }
    doc["lambda"] = std::move(lambda);
    if (path.z) {
        Json z = Json::array();
        for (const auto& row : *path.z) {
            z.push_back(to_json(row));
        }
        doc["z"] = std::move(z);
    }
    return doc.dump(2) + "\n";
}

int cmd_simulate(const Common& c, std::size_t n, const std::optional<std::size_t>& burn_in_opt,
                 const std::string& format, const CovariateOptions& cov, std::ostream& out) {
    const ModelSpec model = io::load_model(c.model_file);
    const std::size_t burn_in = burn_in_opt ? *burn_in_opt : recommended_burn_in(model);
    SeriesPath path;
    const int dz = covariate_dim(model);
    if (dz > 0) {
        const auto& cl = std::get<CovariateLogistic>(model);
        if (!cov.file.empty()) {
            const auto z = read_covariates(cov.file, dz, n + burn_in);
            path = simulate(model, n, burn_in, c.seed, std::nullopt, z);
        } else {
            path = simulate_joint(make_generator(cov, dz), cl, n, burn_in, c.seed, cov.allow_uncertified);
        }
    } else {
        path = simulate(model, n, burn_in, c.seed);
    }
    if (format == "json") {
        emit(path_json(path), c.output, out);
    } else {
        std::ostringstream ss;
        io::write_path_csv(ss, path);
        emit(ss.str(), c.output, out);
    }
    return kExitOk;
}

int cmd_check(const Common& c, std::ostream& out) {
    const ModelSpec model = io::load_model(c.model_file);
    Json r;
    r["family"] = family_name(model);
    bool pass = false;
    bool coupling = true;
    if (const auto* lf = std::get_if<LinearFeedback>(&model)) {
        const auto fc = check_linear_feedback(*lf);
        pass = fc.pass;
        r["rho"] = fc.rho;
        if (fc.kappa) {
            r["kappa"] = *fc.kappa;
            r["k"] = *fc.k;
        }
    } else if (const auto* tb = std::get_if<ThresholdBinary>(&model)) {
        const auto cc = check_nonlinear_contraction(*tb);
        pass = cc.pass;
        r["alpha_sum"] = cc.alpha_sum;
        if (pass) {
            const auto cert = contraction_certificate(model);
            r["kappa"] = cert.kappa;
            r["k"] = cert.k;
        }
    } else if (covariate_dim(model) > 0) {
        coupling = false;
        const auto& cl = std::get<CovariateLogistic>(model);
        if (cl.q >= 1) {
            const auto family = TransitionFamily::from_model(model);
            const std::vector<Eigen::VectorXd> z{Eigen::VectorXd::Zero(cl.covariate_dim)};
            const auto e1 = e1_check(family, z, cl.q);
            pass = e1.pass;
            r["e1_m"] = cl.q;
            r["e1_min_entry"] = e1.min_entry;
        } else {
            pass = true;
        }
    } else {
        const auto sc = check_summability(lipschitz_profile(model));
        pass = sc.pass;
        r["weighted_sum"] = sc.value;
    }
    r["pass"] = pass;
    Json gamma = Json::array();
    if (pass && coupling) {
        const auto cc = coupling_constants(model);
        r["eta"] = cc.eta;
        gamma = to_json(cc.gamma.values);
        if (cc.profile.weighted_sum > 0.0 && !r.contains("weighted_sum")) {
            r["weighted_sum"] = cc.profile.weighted_sum;
        }
    }
    r["gamma"] = std::move(gamma);
    emit(r.dump(2) + "\n", c.output, out);
    return pass ? kExitOk : kExitCheckFailed;
}

int cmd_mixing(const Common& c, std::size_t n_max, const std::vector<std::size_t>& at, std::ostream& out) {
    const ModelSpec model = io::load_model(c.model_file);
    CouplingConstants cc;
    try {
        cc = coupling_constants(model);
    } catch (const StabilityError& e) {
        throw CheckFailed(e.what());
    }
    const auto gs = gamma_star(cc.gamma, n_max);
    Json r;
    r["gamma"] = to_json(cc.gamma.values);
    r["gamma_star"] = to_json(gs.values);
    Json phi = Json::object();
    try {
        for (std::size_t n : at) {
            phi[std::to_string(n)] = phi_bound(gs, n);
        }
    } catch (const NotSummableError& e) {
        throw CheckFailed(e.what());
    }
    r["phi_bound"] = std::move(phi);
    emit(r.dump(2) + "\n", c.output, out);
    return kExitOk;
}

int cmd_coupling(const Common& c, std::size_t n, std::size_t reps, const std::string& x_text,
                 const std::string& y_text, const std::string& format, std::ostream& out) {
    const ModelSpec model = io::load_model(c.model_file);
    const int n_cat = n_categories(model);
    const auto lags = static_cast<std::size_t>(observation_lags(model));
    const auto x_past = parse_past(x_text, n_cat, lags, true);
    const auto y_past = parse_past(y_text, n_cat, lags, false);
    const auto exp = coupling_experiment(model, x_past, y_past, n, reps, c.seed);
    if (format == "json") {
        Json r;
        r["dominated"] = exp.dominated;
        r["worst_excess"] = exp.worst_excess;
        r["P_T_le_k"] = to_json(exp.p_T_le_k);
        r["P_S_le_k"] = to_json(exp.p_S_le_k);
        r["mc_sigma"] = to_json(exp.mc_sigma);
        emit(r.dump(2) + "\n", c.output, out);
    } else {
        std::ostringstream ss;
        ss << "k,P_T_le_k,P_S_le_k\n";
        for (std::size_t k = 0; k <= n; ++k) {
            ss << k << ',' << io::format_double(exp.p_T_le_k[k]) << ',' << io::format_double(exp.p_S_le_k[k])
               << '\n';
        }
        emit(ss.str(), c.output, out);
    }
    return exp.dominated ? kExitOk : kExitCheckFailed;
}

int cmd_fit(const Common& c, const std::string& data_file, double tol, int max_iter, std::ostream& out,
            std::ostream& err) {
    const ModelSpec model = io::load_model(c.model_file);
    const auto* tmpl = std::get_if<CovariateLogistic>(&model);
    if (tmpl == nullptr) {
        throw std::invalid_argument("fit needs a covariate_logistic model template");
    }
    auto in = open_input(data_file);
    SeriesPath data = io::read_path_csv(in, tmpl->n_categories);
    if (tmpl->covariate_dim == 0) {
        data.z.reset();
    }
    FitResult fit;
    try {
        fit = fit_newton(*tmpl, data, std::nullopt, tol, max_iter);
    } catch (const SeparationError& e) {
        throw CheckFailed(e.what());
    } catch (const SingularHessianError& e) {
        throw CheckFailed(e.what());
    }
    for (const auto& w : fit.warnings) {
        err << "warning: " << w << '\n';
    }
    Json r;
    r["theta"] = to_json(fit.theta_hat);
    r["loglik"] = fit.loglik;
    r["se"] = to_json(fit.std_errors);
    r["converged"] = fit.converged;
    r["iterations"] = fit.iterations;
    r["gradient_norm"] = fit.gradient_norm;
    emit(r.dump(2) + "\n", c.output, out);
    return fit.converged ? kExitOk : kExitCheckFailed;
}

int cmd_stationary(const Common& c, double tol, std::size_t max_depth, int block, const CovariateOptions& cov,
                   std::ostream& out) {
    const ModelSpec model = io::load_model(c.model_file);
    const auto family = TransitionFamily::from_model(model);
    const int dz = covariate_dim(model);
    const int m = block > 0 ? block : *family.logistic_order;
    std::vector<Eigen::VectorXd> z;
    if (dz == 0) {
        z.assign(max_depth, Eigen::VectorXd());
    } else if (!cov.file.empty()) {
        z = read_covariates(cov.file, dz, 1);
    } else {
        const auto gen = make_generator(cov, dz);
        z = gen.generate(max_depth, derive_seed(c.seed, 0));
    }
    BackwardLimit limit{ProbabilityVector(Eigen::VectorXd::Ones(1)), 0, 1.0};
    try {
        limit = backward_row_limit(family, z, tol, max_depth, m);
    } catch (const CertificateNotReached& e) {
        throw CheckFailed(e.what());
    }
    Json r;
    r["row"] = to_json(limit.row.values());
    r["depth"] = limit.depth;
    r["certificate"] = limit.contraction_certificate;
    emit(r.dump(2) + "\n", c.output, out);
    return kExitOk;
}

void add_common(CLI::App* sub, Common& c, bool needs_seed) {
    sub->add_option("--model", c.model_file, "Model JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", c.output, "Output file (default: stdout)");
    if (needs_seed) {
        sub->add_option("--seed", c.seed, "Master seed")->capture_default_str();
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multinomial-logit categorical time series: simulation, stationarity checks, mixing bounds, "
                 "coupling, fitting",
                 "catts"};
    app.require_subcommand(1);

    Common common;
    CovariateOptions cov;

    auto* sim = app.add_subcommand("simulate", "Simulate a path (CSV or JSON)");
    add_common(sim, common, true);
    std::size_t sim_n = 1000;
    std::optional<std::size_t> sim_burn;
    std::string sim_format = "csv";
    sim->add_option("--n", sim_n, "Number of observations kept")->capture_default_str();
    sim->add_option("--burn-in", sim_burn, "Burn-in steps (default: derived from the contraction rate, else 1000)");
    sim->add_option("--format", sim_format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    add_covariate_options(sim, cov);
    sim->add_flag("--allow-uncertified", cov.allow_uncertified, "Accept a covariate source without a mixing certificate");

    auto* chk = app.add_subcommand("check-stationarity", "Check the stationarity conditions (JSON report)");
    add_common(chk, common, false);

    auto* mix = app.add_subcommand("mixing-bound", "gamma, gamma* and phi-mixing bounds (JSON report)");
    add_common(mix, common, false);
    std::size_t mix_n_max = 50;
    std::vector<std::size_t> mix_at{0, 1, 2, 5, 10, 20, 50};
    mix->add_option("--n-max", mix_n_max, "Number of gamma* terms computed exactly")->capture_default_str();
    mix->add_option("--at", mix_at, "Lags n at which phi_bound(n) is reported")->delimiter(',')->capture_default_str();

    auto* cpl = app.add_subcommand("coupling-demo", "Empirical coupling time against the S chain (CSV or JSON)");
    add_common(cpl, common, true);
    std::size_t cpl_n = 20;
    std::size_t cpl_reps = 10000;
    std::string cpl_x;
    std::string cpl_y;
    std::string cpl_format = "csv";
    cpl->add_option("--n", cpl_n, "Horizon")->capture_default_str();
    cpl->add_option("--reps", cpl_reps, "Replicates")->capture_default_str();
    cpl->add_option("--x-past", cpl_x, "First past, newest first, comma separated (default: reference category)");
    cpl->add_option("--y-past", cpl_y, "Second past, newest first, comma separated (default: category 1)");
    cpl->add_option("--format", cpl_format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    auto* fit = app.add_subcommand("fit", "Conditional MLE of a covariate_logistic template (JSON report)");
    add_common(fit, common, false);
    std::string fit_data;
    double fit_tol = 1e-8;
    int fit_iter = 100;
    fit->add_option("--data", fit_data, "Path CSV (t,y,...,z_1..z_d)")->required()->check(CLI::ExistingFile);
    fit->add_option("--tol", fit_tol, "Sup-norm tolerance on the score")->capture_default_str();
    fit->add_option("--max-iter", fit_iter, "Newton iteration cap")->capture_default_str();

    auto* sd = app.add_subcommand("stationary-dist", "Backward row limit of the lagged-history chain (JSON report)");
    add_common(sd, common, true);
    double sd_tol = 1e-8;
    std::size_t sd_depth = 10000;
    int sd_block = 0;
    sd->add_option("--tol", sd_tol, "Tolerance on the limit row")->capture_default_str();
    sd->add_option("--max-depth", sd_depth, "Largest number of matrices multiplied")->capture_default_str();
    sd->add_option("--block", sd_block, "Block length m (default: the model order q)");
    add_covariate_options(sd, cov);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (sim->parsed()) {
            return cmd_simulate(common, sim_n, sim_burn, sim_format, cov, out);
        }
        if (chk->parsed()) {
            return cmd_check(common, out);
        }
        if (mix->parsed()) {
            return cmd_mixing(common, mix_n_max, mix_at, out);
        }
        if (cpl->parsed()) {
            return cmd_coupling(common, cpl_n, cpl_reps, cpl_x, cpl_y, cpl_format, out);
        }
        if (fit->parsed()) {
            return cmd_fit(common, fit_data, fit_tol, fit_iter, out, err);
        }
        if (sd->parsed()) {
            return cmd_stationary(common, sd_tol, sd_depth, sd_block, cov, out);
        }
    } catch (const CheckFailed& e) {
        err << "check failed: " << e.what() << '\n';
        return kExitCheckFailed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    err << app.help();
    return kExitUsage;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run(args, std::cout, std::cerr);
}

}  // namespace catts::cli
