// Command-line front end: data ingestion, truncation/log transforms, the
// fit / regression / comparison workflows and the simulation study, with
// plot-ready CSV outputs and a JSON result document per run.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gldfit/dataset.hpp"
#include "gldfit/diagnostics.hpp"
#include "gldfit/fitting.hpp"
#include "gldfit/gld.hpp"
#include "gldfit/gpd.hpp"
#include "gldfit/hurdle.hpp"
#include "gldfit/regression.hpp"
#include "gldfit/simulation.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace gldfit;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitInternal = 4;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string input;
    std::string response;
    std::string covariates;      // comma list
    std::string zero_covariates; // comma list; defaults to covariates
    std::string parametrization = "both";
    std::optional<double> truncate;
    bool log_transform = false;
    std::uint64_t seed = 0;
    std::size_t replicates = 1000;
    double alpha = 0.05;
    std::string out_dir = ".";
    std::optional<double> gpd_threshold;
    unsigned threads = 1;
    // simulate-only
    std::string scenario = "hrs-symmetric";
    std::vector<std::size_t> sizes;
};

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(csv);
    while (std::getline(ss, item, ',')) {
        const auto t = gldfit::detail::trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::vector<Parametrization> parametrizations_of(const std::string& p) {
    if (p == "rs") return {Parametrization::RS};
    if (p == "fkml") return {Parametrization::FKML};
    if (p == "both") return {Parametrization::RS, Parametrization::FKML};
    throw InputError("unknown parametrization: " + p);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ordered_json json_double(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write: " + path.string());
        for (std::size_t j = 0; j < header.size(); ++j)
            out_ << (j ? "," : "") << header[j];
        out_ << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t j = 0; j < cells.size(); ++j)
            out_ << (j ? "," : "") << cells[j];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

void write_json(const fs::path& path, const ordered_json& doc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path.string());
    out << doc.dump(2) << "\n";
}

ordered_json params_json(const GldParams& p) {
    return {{"parametrization", to_string(p.parametrization)},
            {"lambda1", json_double(p.lambda1)},
            {"lambda2", json_double(p.lambda2)},
            {"lambda3", json_double(p.lambda3)},
            {"lambda4", json_double(p.lambda4)}};
}

ordered_json fit_json(const FitResult& f) {
    return {{"params", params_json(f.params)},
            {"loglik", json_double(f.loglik)},
            {"converged", f.converged},
            {"iterations", f.iterations},
            {"initializer", f.initializer == Initializer::Percentile ? "percentile" : "moments"},
            {"init_params", params_json(f.init_params)}};
}

ordered_json logistic_json(const LogisticFit& f, const std::vector<std::string>& names) {
    ordered_json coef = ordered_json::object();
    for (std::size_t j = 0; j < f.gamma.size(); ++j) {
        ordered_json entry = {{"estimate", json_double(f.gamma[j])}};
        if (j < f.std_errors.size()) {
            const double se = f.std_errors[j];
            const double z = f.gamma[j] / se;
            entry["std_error"] = json_double(se);
            entry["z_value"] = json_double(z);
            entry["p_value"] = json_double(2.0 * normal_cdf(-std::fabs(z)));
        }
        coef[names[j]] = entry;
    }
    return {{"coefficients", coef},
            {"deviance", json_double(f.deviance)},
            {"converged", f.converged},
            {"iterations", f.iterations}};
}

ordered_json regression_json(const RegressionFit& f, const std::vector<std::string>& names,
                             const std::optional<CoefficientCIs>& cis) {
    ordered_json beta = ordered_json::object();
    for (std::size_t j = 0; j < f.beta.size(); ++j) {
        ordered_json entry = {{"estimate", json_double(f.beta[j])}};
        if (cis && j < cis->coefficients.size()) {
            entry["lower"] = json_double(cis->coefficients[j].lower);
            entry["upper"] = json_double(cis->coefficients[j].upper);
        }
        beta[names[j]] = entry;
    }
    ordered_json out = {{"beta", beta},
                        {"lambda1_star", json_double(f.lambda1_star)},
                        {"lambda2", json_double(f.lambda2)},
                        {"lambda3", json_double(f.lambda3)},
                        {"lambda4", json_double(f.lambda4)},
                        {"parametrization", to_string(f.parametrization)},
                        {"loglik", json_double(f.loglik)},
                        {"converged", f.converged},
                        {"iterations", f.iterations}};
    if (cis) {
        out["ci"] = {{"alpha", cis->alpha},
                     {"replicates", cis->n_requested},
                     {"failed", cis->n_failed}};
    }
    return out;
}

ordered_json gpd_glm_json(const GpdGlmFit& f, const std::vector<std::string>& names) {
    ordered_json coef = ordered_json::object();
    auto entry_for = [&](std::size_t idx, double estimate) {
        ordered_json e = {{"estimate", json_double(estimate)}};
        if (f.se_ok) {
            e["std_error"] = json_double(f.std_errors[idx]);
            e["p_value"] = json_double(f.p_values[idx]);
        }
        return e;
    };
    coef["shape"] = entry_for(0, f.xi);
    for (std::size_t j = 0; j < f.beta.size(); ++j) coef[names[j]] = entry_for(j + 1, f.beta[j]);
    return {{"threshold", json_double(f.alpha)},
            {"coefficients", coef},
            {"loglik", json_double(f.loglik)},
            {"converged", f.converged},
            {"iterations", f.iterations}};
}

struct Run {
    Options opt;
    std::string command;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
    bool all_converged = true;

    fs::path out_path(const std::string& name) const {
        return fs::path(opt.out_dir) / name;
    }

    void note_convergence(bool converged) {
        if (!converged) all_converged = false;
    }

    void write_manifest(const ordered_json& extra_config = ordered_json::object()) const {
        const auto elapsed = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();
        ordered_json config = {{"input", opt.input},
                               {"response", opt.response},
                               {"covariates", opt.covariates},
                               {"zero_covariates", opt.zero_covariates},
                               {"parametrization", opt.parametrization},
                               {"truncate", opt.truncate ? json_double(*opt.truncate)
                                                         : ordered_json(nullptr)},
                               {"log", opt.log_transform},
                               {"seed", opt.seed},
                               {"replicates", opt.replicates},
                               {"alpha", opt.alpha},
                               {"gpd_threshold", opt.gpd_threshold
                                                     ? json_double(*opt.gpd_threshold)
                                                     : ordered_json(nullptr)},
                               {"threads", opt.threads},
                               {"out", opt.out_dir}};
        for (const auto& [k, v] : extra_config.items()) config[k] = v;
        const ordered_json doc = {{"command", command},
                                  {"version", kVersion},
                                  {"seed", opt.seed},
                                  {"config", config},
                                  {"wall_time_ms", elapsed}};
        write_json(out_path("manifest.json"), doc);
    }
};

Dataset load_dataset(const Options& opt) {
    if (opt.input.empty()) throw InputError("--input is required");
    if (opt.response.empty()) throw InputError("--response is required");
    // the zero part may use covariates the location part does not
    std::vector<std::string> columns = split_list(opt.covariates);
    for (const auto& name : split_list(opt.zero_covariates))
        if (std::find(columns.begin(), columns.end(), name) == columns.end())
            columns.push_back(name);
    try {
        Dataset raw = ingest(opt.input, opt.response, columns);
        return transform(std::move(raw), opt.truncate, opt.log_transform);
    } catch (const std::exception& e) {
        throw InputError(e.what());
    }
}

OptimizerConfig optimizer_config(const Options& opt) {
    OptimizerConfig cfg;
    cfg.seed = opt.seed;
    return cfg;
}

struct DensityModel {
    std::string name;
    std::function<double(double)> density;
    std::function<double(double)> quantile;
};

/// KDE curve, per-model fitted densities, distance table and QQ pairs for
/// the non-zero part of the data.
void write_density_diagnostics(Run& run, const std::vector<double>& data,
                               const std::vector<DensityModel>& models, ordered_json& result) {
    const BandwidthResult bw = sheather_jones_bandwidth(data);
    const KdeEstimate k(data, bw.value);
    const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
    const double lo = *mn - 3.0 * bw.value;
    const double hi = *mx + 3.0 * bw.value;

    std::vector<std::string> header = {"y", "kde"};
    for (const auto& m : models) header.push_back(m.name);
    CsvWriter density(run.out_path("density.csv"), header);
    const std::size_t grid_n = 512;
    for (std::size_t i = 0; i < grid_n; ++i) {
        const double y = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_n - 1);
        std::vector<std::string> cells = {format_double(y), format_double(k(y))};
        for (const auto& m : models) cells.push_back(format_double(m.density(y)));
        density.row(cells);
    }

    CsvWriter dist(run.out_path("distances.csv"), {"model", "global", "l2", "linf"});
    ordered_json dist_json = ordered_json::object();
    for (const auto& m : models) {
        const DistanceReport rep = density_distances(m.density, k, data);
        dist.row({m.name, format_double(rep.global), format_double(rep.l2),
                  format_double(rep.linf)});
        dist_json[m.name] = {{"global", json_double(rep.global)},
                             {"l2", json_double(rep.l2)},
                             {"linf", json_double(rep.linf)}};
        CsvWriter qq(run.out_path("qq_" + m.name + ".csv"), {"empirical", "theoretical"});
        for (const auto& [emp, theo] : qq_points(data, m.quantile))
            qq.row({format_double(emp), format_double(theo)});
    }
    result["diagnostics"] = {{"kde_bandwidth", json_double(bw.value)},
                             {"kde_bandwidth_fallback", bw.fallback},
                             {"distances", dist_json}};
}

/// Residual vectors, QQ pairs for both residual kinds, and a KDE-vs-fitted
/// distance row for the error residuals of one regression fit.
void write_residual_diagnostics(Run& run, const std::string& tag,
                                const std::vector<double>& error_resid,
                                const std::vector<double>& quantile_resid,
                                const std::vector<bool>& flags,
                                const std::function<double(double)>& error_density,
                                const std::function<double(double)>& error_quantile,
                                ordered_json& result) {
    CsvWriter res(run.out_path("residuals_" + tag + ".csv"),
                  {"error_residual", "quantile_residual", "out_of_support"});
    for (std::size_t i = 0; i < error_resid.size(); ++i)
        res.row({format_double(error_resid[i]), format_double(quantile_resid[i]),
                 flags[i] ? "1" : "0"});

    CsvWriter qq_err(run.out_path("qq_error_" + tag + ".csv"), {"empirical", "theoretical"});
    for (const auto& [emp, theo] : qq_points(error_resid, error_quantile))
        qq_err.row({format_double(emp), format_double(theo)});

    std::vector<double> finite_qr;
    for (std::size_t i = 0; i < quantile_resid.size(); ++i)
        if (!flags[i]) finite_qr.push_back(quantile_resid[i]);
    if (finite_qr.size() >= 2) {
        CsvWriter qq_norm(run.out_path("qq_normal_" + tag + ".csv"),
                          {"empirical", "theoretical"});
        for (const auto& [emp, theo] :
             qq_points(finite_qr, [](double u) { return normal_quantile(u); }))
            qq_norm.row({format_double(emp), format_double(theo)});
    }

    if (error_resid.size() >= 10) {
        const BandwidthResult bw = sheather_jones_bandwidth(error_resid);
        const KdeEstimate k(error_resid, bw.value);
        const DistanceReport rep = density_distances(error_density, k, error_resid);
        result["residual_diagnostics_" + tag] = {
            {"kde_bandwidth", json_double(bw.value)},
            {"kde_bandwidth_fallback", bw.fallback},
            {"distances",
             {{"global", json_double(rep.global)},
              {"l2", json_double(rep.l2)},
              {"linf", json_double(rep.linf)}}}};
    }
}

int cmd_fit(Run& run, bool hurdle) {
    const Dataset data = load_dataset(run.opt);
    const OptimizerConfig cfg = optimizer_config(run.opt);
    const HurdleSplit parts = split(data.response);
    const std::vector<double>& sample = hurdle ? parts.nonzero_values : data.response;

    ordered_json result = {{"command", run.command},
                           {"n", data.response.size()},
                           {"dropped_rows", data.dropped_rows}};
    if (hurdle) {
        result["lambda0"] =
            static_cast<double>(parts.zero_count) / static_cast<double>(data.response.size());
        result["zero_count"] = parts.zero_count;
        result["nonzero_count"] = parts.nonzero_values.size();
    }

    std::vector<DensityModel> models;
    ordered_json fits = ordered_json::object();
    for (const Parametrization par : parametrizations_of(run.opt.parametrization)) {
        const FitResult fit = nmle_fit(sample, par, cfg);
        run.note_convergence(fit.converged);
        fits[to_string(par)] = fit_json(fit);
        const GldParams params = fit.params;
        models.push_back({to_string(par), [params](double y) { return pdf(params, y); },
                          [params](double u) { return quantile(params, u); }});
    }
    result["fits"] = fits;
    if (sample.size() >= 10) write_density_diagnostics(run, sample, models, result);
    write_json(run.out_path("result.json"), result);
    run.write_manifest();
    return run.all_converged ? kExitOk : kExitNoConvergence;
}

int cmd_fit_gpd(Run& run) {
    const Dataset data = load_dataset(run.opt);
    const OptimizerConfig cfg = optimizer_config(run.opt);
    const HurdleSplit parts = split(data.response);
    if (parts.nonzero_values.empty()) throw std::runtime_error("no non-zero observations");
    const double threshold =
        run.opt.gpd_threshold
            ? *run.opt.gpd_threshold
            : *std::min_element(parts.nonzero_values.begin(), parts.nonzero_values.end());

    const HurdleGpdFit fit = hurdle_gpd_fit(data.response, threshold, cfg);
    ordered_json result = {{"command", run.command},
                           {"n", data.response.size()},
                           {"dropped_rows", data.dropped_rows},
                           {"lambda0", fit.lambda0},
                           {"zero_count", fit.zero_count},
                           {"threshold", json_double(threshold)}};
    if (fit.continuous) {
        run.note_convergence(fit.continuous->converged);
        result["gpd"] = {{"tau", json_double(fit.continuous->params.tau)},
                         {"xi", json_double(fit.continuous->params.xi)},
                         {"loglik", json_double(fit.continuous->loglik)},
                         {"converged", fit.continuous->converged},
                         {"iterations", fit.continuous->iterations}};
        const GpdParams params = fit.continuous->params;
        std::vector<DensityModel> models = {
            {"gpd", [params](double y) { return gpd_pdf(params, y); },
             [params](double u) { return gpd_quantile(params, u); }}};
        if (parts.nonzero_values.size() >= 10)
            write_density_diagnostics(run, parts.nonzero_values, models, result);
    } else {
        result["gpd"] = {{"error", fit.continuous_error}};
        run.note_convergence(false);
    }
    write_json(run.out_path("result.json"), result);
    run.write_manifest();
    return run.all_converged ? kExitOk : kExitNoConvergence;
}

int cmd_compare(Run& run) {
    const Dataset data = load_dataset(run.opt);
    const OptimizerConfig cfg = optimizer_config(run.opt);
    const HurdleSplit parts = split(data.response);
    if (parts.nonzero_values.size() < 10)
        throw std::runtime_error("compare needs at least 10 non-zero observations");
    const double threshold =
        run.opt.gpd_threshold
            ? *run.opt.gpd_threshold
            : *std::min_element(parts.nonzero_values.begin(), parts.nonzero_values.end());

    ordered_json result = {{"command", run.command},
                           {"n", data.response.size()},
                           {"dropped_rows", data.dropped_rows},
                           {"lambda0", static_cast<double>(parts.zero_count) /
                                           static_cast<double>(data.response.size())}};
    std::vector<DensityModel> models;
    ordered_json fits = ordered_json::object();
    for (const Parametrization par :
         {Parametrization::RS, Parametrization::FKML}) {
        const FitResult fit = nmle_fit(parts.nonzero_values, par, cfg);
        run.note_convergence(fit.converged);
        fits[to_string(par)] = fit_json(fit);
        const GldParams params = fit.params;
        models.push_back({to_string(par), [params](double y) { return pdf(params, y); },
                          [params](double u) { return quantile(params, u); }});
    }
    const GpdFitResult gpd = gpd_mle_fit(parts.nonzero_values, threshold, cfg);
    run.note_convergence(gpd.converged);
    fits["gpd"] = {{"threshold", json_double(threshold)},
                   {"tau", json_double(gpd.params.tau)},
                   {"xi", json_double(gpd.params.xi)},
                   {"loglik", json_double(gpd.loglik)},
                   {"converged", gpd.converged}};
    const GpdParams gp = gpd.params;
    models.push_back({"gpd", [gp](double y) { return gpd_pdf(gp, y); },
                      [gp](double u) { return gpd_quantile(gp, u); }});
    result["fits"] = fits;
    write_density_diagnostics(run, parts.nonzero_values, models, result);
    write_json(run.out_path("result.json"), result);
    run.write_manifest();
    return run.all_converged ? kExitOk : kExitNoConvergence;
}

int cmd_regress(Run& run, bool hurdle) {
    const Dataset data = load_dataset(run.opt);
    const OptimizerConfig cfg = optimizer_config(run.opt);
    const auto cov_names = split_list(run.opt.covariates);
    if (cov_names.empty()) throw InputError("--covariates is required for regression");
    std::vector<std::string> beta_names = {"intercept"};
    for (const auto& c : cov_names) beta_names.push_back(c);

    const std::size_t n = data.response.size();
    auto columns_named = [&data](const std::vector<std::string>& names) {
        std::vector<std::vector<double>> cols;
        for (const auto& name : names) {
            bool found = false;
            for (std::size_t k = 0; k < data.covariate_names.size(); ++k) {
                if (data.covariate_names[k] == name) {
                    cols.push_back(data.covariates[k]);
                    found = true;
                    break;
                }
            }
            if (!found) throw InputError("covariate not ingested: " + name);
        }
        return cols;
    };
    const Matrix W = make_design(columns_named(cov_names), n);

    ordered_json result = {{"command", run.command},
                           {"n", n},
                           {"dropped_rows", data.dropped_rows}};

    std::optional<LogisticFit> zero_fit;
    std::vector<std::string> zero_names;
    Matrix Wnz;
    std::vector<double> ynz;
    if (hurdle) {
        const auto zero_cov_names = run.opt.zero_covariates.empty()
                                        ? cov_names
                                        : split_list(run.opt.zero_covariates);
        zero_names = {"intercept"};
        for (const auto& c : zero_cov_names) zero_names.push_back(c);
        const Matrix Z = make_design(columns_named(zero_cov_names), n);
        std::vector<double> v(n);
        std::size_t nz = 0;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = (data.response[i] == 0.0) ? 1.0 : 0.0;
            nz += (data.response[i] != 0.0) ? 1 : 0;
        }
        try {
            zero_fit = logistic_fit(Z, v);
            run.note_convergence(zero_fit->converged);
            result["zero_part"] = logistic_json(*zero_fit, zero_names);
        } catch (const std::exception& e) {
            result["zero_part"] = {{"error", e.what()}};
        }
        Wnz = Matrix(nz, W.cols());
        std::size_t r = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (data.response[i] == 0.0) continue;
            for (std::size_t j = 0; j < W.cols(); ++j) Wnz(r, j) = W(i, j);
            ynz.push_back(data.response[i]);
            ++r;
        }
    } else {
        Wnz = W;
        ynz = data.response;
    }

    ordered_json fits = ordered_json::object();
    for (const Parametrization par : parametrizations_of(run.opt.parametrization)) {
        const RegressionFit fit = gld_regression_fit(Wnz, ynz, par, cfg);
        run.note_convergence(fit.converged);
        std::optional<CoefficientCIs> cis;
        if (fit.converged && run.opt.replicates > 0) {
            cis = simulate_coefficient_cis(fit, Wnz, cfg, run.opt.replicates, run.opt.alpha,
                                           run.opt.seed ^ 0xC1A0, run.opt.threads);
        }
        fits[to_string(par)] = regression_json(fit, beta_names, cis);

        const auto resid = regression_residuals(fit, Wnz, ynz);
        const GldParams errp = error_params(fit);
        write_residual_diagnostics(
            run, to_string(par), resid.error_residuals, resid.quantile_residuals,
            resid.out_of_support, [errp](double e) { return pdf(errp, e); },
            [errp](double u) { return quantile(errp, u); }, result);
    }
    result[hurdle ? "nonzero_part" : "fits"] = fits;
    write_json(run.out_path("result.json"), result);
    run.write_manifest();
    return run.all_converged ? kExitOk : kExitNoConvergence;
}

int cmd_hurdle_regress_gpd(Run& run) {
    const Dataset data = load_dataset(run.opt);
    const OptimizerConfig cfg = optimizer_config(run.opt);
    const auto cov_names = split_list(run.opt.covariates);
    if (cov_names.empty()) throw InputError("--covariates is required for regression");
    std::vector<std::string> beta_names = {"intercept"};
    for (const auto& c : cov_names) beta_names.push_back(c);
    std::vector<std::string> zero_names = beta_names;

    const std::size_t n = data.response.size();
    std::vector<std::vector<double>> xcols;
    for (const auto& name : cov_names) {
        for (std::size_t k = 0; k < data.covariate_names.size(); ++k)
            if (data.covariate_names[k] == name) xcols.push_back(data.covariates[k]);
    }
    const Matrix X = make_design(xcols, n);
    std::vector<double> nonzero;
    for (double y : data.response)
        if (y != 0.0) nonzero.push_back(y);
    if (nonzero.empty()) throw std::runtime_error("no non-zero observations");
    const double threshold = run.opt.gpd_threshold
                                 ? *run.opt.gpd_threshold
                                 : *std::min_element(nonzero.begin(), nonzero.end());

    const HurdleGpdGlmFit fit = hurdle_gpd_glm_fit(X, X, data.response, threshold, cfg);
    ordered_json result = {{"command", run.command},
                           {"n", n},
                           {"dropped_rows", data.dropped_rows},
                           {"threshold", json_double(threshold)}};
    if (fit.zero_part) {
        run.note_convergence(fit.zero_part->converged);
        result["zero_part"] = logistic_json(*fit.zero_part, zero_names);
    } else {
        result["zero_part"] = {{"error", fit.zero_error}};
    }
    run.note_convergence(fit.nonzero_part.converged);
    result["nonzero_part"] = gpd_glm_json(fit.nonzero_part, beta_names);

    // residual bundle on the non-zero rows
    Matrix Xnz(nonzero.size(), X.cols());
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (data.response[i] == 0.0) continue;
        for (std::size_t j = 0; j < X.cols(); ++j) Xnz(r, j) = X(i, j);
        ++r;
    }
    const auto resid = gpd_residuals(fit.nonzero_part, Xnz, nonzero);
    const GpdParams ref = gpd_error_residual_reference(fit.nonzero_part.xi);
    write_residual_diagnostics(
        run, "gpd", resid.error_residuals, resid.quantile_residuals, resid.boundary,
        [ref](double e) { return gpd_pdf(ref, e); },
        [ref](double u) { return gpd_quantile(ref, u); }, result);

    write_json(run.out_path("result.json"), result);
    run.write_manifest();
    return run.all_converged ? kExitOk : kExitNoConvergence;
}

int cmd_simulate(Run& run) {
    const Scenario scenario = parse_scenario(run.opt.scenario);
    std::vector<std::size_t> sizes = run.opt.sizes;
    if (sizes.empty()) sizes = {1000};

    ordered_json result = {{"command", run.command},
                           {"scenario", to_string(scenario)},
                           {"replicates", run.opt.replicates}};
    CsvWriter summary(run.out_path("summary.csv"),
                      {"scenario", "part", "coefficient", "target", "n", "replicates", "used",
                       "mean", "se", "p2.5", "p97.5"});
    ordered_json rows = ordered_json::array();
    for (const std::size_t n : sizes) {
        const StudyResult study = run_simulation_study(scenario, n, run.opt.replicates,
                                                       run.opt.seed, run.opt.threads,
                                                       optimizer_config(run.opt));
        for (const auto& cs : study.summary) {
            summary.row({to_string(scenario), cs.part, cs.name, format_double(cs.target),
                         std::to_string(n), std::to_string(study.replicates),
                         std::to_string(cs.used), format_double(cs.mean), format_double(cs.se),
                         format_double(cs.p025), format_double(cs.p975)});
            rows.push_back({{"part", cs.part},
                            {"coefficient", cs.name},
                            {"target", json_double(cs.target)},
                            {"n", n},
                            {"used", cs.used},
                            {"mean", json_double(cs.mean)},
                            {"se", json_double(cs.se)},
                            {"p2.5", json_double(cs.p025)},
                            {"p97.5", json_double(cs.p975)}});
        }
        if (study.nonzero_failures * 5 > study.replicates)
            run.note_convergence(false);
    }
    result["summary"] = rows;
    write_json(run.out_path("result.json"), result);
    run.write_manifest({{"scenario", run.opt.scenario}});
    return run.all_converged ? kExitOk : kExitNoConvergence;
}

void add_common_options(CLI::App* cmd, Options& opt, bool needs_input) {
    if (needs_input) {
        cmd->add_option("--input", opt.input, "input CSV file");
        cmd->add_option("--response", opt.response, "response column name");
        cmd->add_option("--covariates", opt.covariates, "comma-separated covariate columns");
        cmd->add_option("--zero-covariates", opt.zero_covariates,
                        "comma-separated covariates of the zero part");
        cmd->add_option("--truncate", [&opt](const std::vector<std::string>& vals) {
            opt.truncate = std::stod(vals[0]);
            return true;
        }, "treat responses below this value as zero")->expected(1);
        cmd->add_flag("--log", opt.log_transform, "log-transform non-zero responses");
        cmd->add_option("--gpd-threshold", [&opt](const std::vector<std::string>& vals) {
            opt.gpd_threshold = std::stod(vals[0]);
            return true;
        }, "known threshold of the Pareto part")->expected(1);
    }
    cmd->add_option("--parametrization", opt.parametrization, "rs, fkml or both");
    cmd->add_option("--seed", opt.seed, "master seed; fixes every random draw");
    cmd->add_option("--replicates", opt.replicates, "simulation replicates");
    cmd->add_option("--alpha", opt.alpha, "confidence level for intervals");
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--threads", opt.threads, "worker threads for replicate loops");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hurdle heavy-tailed model fitting"};
    app.require_subcommand(1);
    Options opt;

    CLI::App* c_fit = app.add_subcommand("fit", "fit a plain distribution to the response");
    CLI::App* c_fith = app.add_subcommand("fit-hurdle", "fit a hurdle distribution");
    CLI::App* c_fitg = app.add_subcommand("fit-gpd", "fit a hurdle Pareto baseline");
    CLI::App* c_reg = app.add_subcommand("regress", "location regression");
    CLI::App* c_hreg = app.add_subcommand("hurdle-regress", "two-part regression");
    CLI::App* c_hregg = app.add_subcommand("hurdle-regress-gpd", "two-part Pareto regression");
    CLI::App* c_cmp = app.add_subcommand("compare", "fit all families and compare densities");
    CLI::App* c_sim = app.add_subcommand("simulate", "run the simulation study");

    for (CLI::App* c : {c_fit, c_fith, c_fitg, c_reg, c_hreg, c_hregg, c_cmp})
        add_common_options(c, opt, true);
    add_common_options(c_sim, opt, false);
    c_sim->add_option("--scenario", opt.scenario,
                      "hrs-symmetric, hfkml-symmetric, hrs-skewed or hfkml-skewed");
    c_sim->add_option("--n", opt.sizes, "sample sizes to run");

    // regression intervals default to the documented 1000 replicates; the
    // simulate command wants an explicit count
    opt.replicates = 1000;

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    Run run;
    run.opt = opt;

    try {
        fs::create_directories(opt.out_dir);
        if (app.got_subcommand(c_fit)) {
            run.command = "fit";
            return cmd_fit(run, false);
        }
        if (app.got_subcommand(c_fith)) {
            run.command = "fit-hurdle";
            return cmd_fit(run, true);
        }
        if (app.got_subcommand(c_fitg)) {
            run.command = "fit-gpd";
            return cmd_fit_gpd(run);
        }
        if (app.got_subcommand(c_reg)) {
            run.command = "regress";
            return cmd_regress(run, false);
        }
        if (app.got_subcommand(c_hreg)) {
            run.command = "hurdle-regress";
            return cmd_regress(run, true);
        }
        if (app.got_subcommand(c_hregg)) {
            run.command = "hurdle-regress-gpd";
            return cmd_hurdle_regress_gpd(run);
        }
        if (app.got_subcommand(c_cmp)) {
            run.command = "compare";
            return cmd_compare(run);
        }
        if (app.got_subcommand(c_sim)) {
            run.command = "simulate";
            return cmd_simulate(run);
        }
        std::fprintf(stderr, "no command given\n");
        return kExitInput;
    } catch (const InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "fit error: %s\n", e.what());
        return kExitNoConvergence;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
}
