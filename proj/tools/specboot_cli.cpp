// Command-line front end: bootstrap summaries, sphericity tests, simulation
// campaigns, MP law solves, spectrum estimation, and kurtosis estimation.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "specboot/campaign.hpp"
#include "specboot/csv.hpp"
#include "specboot/models.hpp"
#include "specboot/pipeline.hpp"
#include "specboot/sphericity.hpp"

using json = nlohmann::json;
using namespace specboot;

namespace {

struct CommonOpts {
    std::uint64_t seed = 0;
    int replicates = 500;
    int workers = 1;
    std::string output = "json";
    std::string config_path;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--seed", c.seed, "Master RNG seed");
    cmd->add_option("-B,--replicates", c.replicates, "Bootstrap replicates");
    cmd->add_option("--workers", c.workers, "Worker threads");
    cmd->add_option("--output", c.output, "Output format")
        ->check(CLI::IsMember({"json", "table"}));
    cmd->add_option("--config", c.config_path, "JSON config file");
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw input_error(std::string("config parse error: ") + e.what());
    }
    return j;
}

std::vector<SpectralStatistic> parse_statistics(const std::string& csv_list) {
    std::vector<SpectralStatistic> out;
    std::stringstream ss(csv_list);
    std::string token;
    while (std::getline(ss, token, ',')) {
        auto stat = SpectralStatistic::parse(token);
        if (!stat) throw input_error("unknown statistic: " + token);
        out.push_back(*stat);
    }
    if (out.empty()) throw input_error("no statistics requested");
    return out;
}

Eigen::VectorXd parse_double_list(const std::string& csv_list) {
    std::vector<double> vals;
    std::stringstream ss(csv_list);
    std::string token;
    while (std::getline(ss, token, ',')) {
        try {
            vals.push_back(std::stod(token));
        } catch (...) {
            throw input_error("bad numeric list entry: " + token);
        }
    }
    if (vals.empty()) throw input_error("empty numeric list");
    return Eigen::Map<Eigen::VectorXd>(vals.data(), Eigen::Index(vals.size()));
}

void emit(const json& j, const std::string& format,
          const std::string& table_text) {
    if (format == "json")
        std::cout << j.dump(2) << "\n";
    else
        std::cout << table_text;
}

// ---------------------------------------------------------------- kurtosis

int cmd_kurtosis(const CommonOpts& common, const std::string& data_path,
                 bool standardize) {
    DataMatrix X = load_and_standardize(data_path, standardize);
    auto comps = estimate_moment_components(X);
    const double kappa = kappa_hat(X);

    json j{{"schema_version", kSchemaVersion},
           {"n", X.n()},
           {"p", X.p()},
           {"kappa_hat", kappa},
           {"tau_hat", comps.tau_hat},
           {"nu_hat", comps.nu_hat},
           {"omega_hat", comps.omega_hat}};
    std::ostringstream table;
    table << "n=" << X.n() << " p=" << X.p() << "\n"
          << "kappa_hat  " << kappa << "\n"
          << "tau_hat    " << comps.tau_hat << "\n"
          << "nu_hat     " << comps.nu_hat << "\n"
          << "omega_hat  " << comps.omega_hat << "\n";
    emit(j, common.output, table.str());
    return 0;
}

// -------------------------------------------------------- estimate-spectrum

int cmd_estimate_spectrum(const CommonOpts& common,
                          const std::string& data_path, bool standardize,
                          double truncation) {
    DataMatrix X = load_and_standardize(data_path, standardize);
    EmpiricalSpectralDistribution esd = esd_from_data(X);
    SpectrumEstParams params;
    if (!common.config_path.empty()) {
        json c = load_config(common.config_path);
        params.grid_atoms = c.value("grid_atoms", params.grid_atoms);
        params.max_iters = c.value("max_iters", params.max_iters);
        params.law_grid_points =
            c.value("law_grid_points", params.law_grid_points);
    }
    SpectrumEstimate est = estimate_lambda_tilde(esd, params, truncation);

    json j{{"schema_version", kSchemaVersion},
           {"n", X.n()},
           {"p", X.p()},
           {"gamma_n", esd.gamma_n},
           {"loss", est.loss_value},
           {"converged", est.converged},
           {"truncation_bound", est.truncation_bound},
           {"lambda_tilde", std::vector<double>(
                                est.lambda_tilde.data(),
                                est.lambda_tilde.data() + est.lambda_tilde.size())},
           {"sample_eigenvalues",
            std::vector<double>(esd.eigenvalues.data(),
                                esd.eigenvalues.data() + esd.p())}};
    std::ostringstream table;
    table << "n=" << X.n() << " p=" << X.p() << " gamma=" << esd.gamma_n
          << " loss=" << est.loss_value
          << " converged=" << (est.converged ? "yes" : "no") << "\n";
    table << "  j     sample     estimate\n";
    for (Eigen::Index k = 0; k < esd.p(); ++k)
        table << "  " << k + 1 << "  " << esd.eigenvalues[k] << "  "
              << est.lambda_tilde[k] << "\n";
    emit(j, common.output, table.str());
    return 0;
}

// --------------------------------------------------------------------- mp

int cmd_mp(const CommonOpts& common, double gamma, const std::string& atoms,
           int points, const std::string& probs) {
    PopulationSpectrum H =
        atoms.empty() ? PopulationSpectrum::point_mass(1.0)
                      : PopulationSpectrum::uniform(parse_double_list(atoms));
    MpGridSpec grid;
    if (points > 0) grid.n_points = points;
    MpLaw law = solve_mp_law(H, gamma, grid);

    json j{{"schema_version", kSchemaVersion},
           {"gamma", gamma},
           {"point_mass_at_zero", law.point_mass_at_zero}};
    j["support"] = json::array();
    for (const auto& iv : law.support)
        j["support"].push_back({{"lo", iv.lo}, {"hi", iv.hi}});
    j["grid"] = std::vector<double>(law.grid.data(),
                                    law.grid.data() + law.grid.size());
    j["density"] = std::vector<double>(law.density.data(),
                                       law.density.data() + law.density.size());
    if (!probs.empty()) {
        Eigen::VectorXd pr = parse_double_list(probs);
        Eigen::VectorXd q = mp_quantiles(law, pr);
        j["quantiles"] = json::array();
        for (Eigen::Index k = 0; k < pr.size(); ++k)
            j["quantiles"].push_back({{"prob", pr[k]}, {"value", q[k]}});
    }
    std::ostringstream table;
    table << "gamma=" << gamma << " mass_at_zero=" << law.point_mass_at_zero
          << "\n";
    for (const auto& iv : law.support)
        table << "support [" << iv.lo << ", " << iv.hi << "]\n";
    emit(j, common.output, table.str());
    return 0;
}

// -------------------------------------------------------------- bootstrap

int cmd_bootstrap(const CommonOpts& common, const std::string& data_path,
                  bool standardize, const std::string& model_name,
                  Eigen::Index n, Eigen::Index p, double entry_kappa,
                  const std::string& stats_list, bool with_theta,
                  bool with_clt) {
    std::optional<DataMatrix> X;
    if (!data_path.empty()) {
        X = load_and_standardize(data_path, standardize);
    } else {
        // synthetic draw from a named covariance model
        if (n < 2 || p < 1)
            throw input_error("synthetic mode needs --n >= 2 and --p >= 1");
        CovarianceModel model;
        if (model_name == "identity")
            model = CovarianceModel::identity(p);
        else if (model_name == "spiked")
            model = CovarianceModel::spiked(p);
        else if (model_name == "spread")
            model = CovarianceModel::spread(p);
        else
            throw input_error("unknown model: " + model_name +
                              " (identity|spiked|spread)");
        Xoshiro256pp stream = derive_stream(common.seed, 0xDA7A);
        CovarianceFixture fx = make_covariance(model, stream);
        X = sample_data(fx, resolve_pearson(entry_kappa), n, stream);
    }

    PipelineOptions opts;
    opts.B = common.replicates;
    opts.seed = common.seed;
    opts.workers = common.workers;
    opts.compute_theta = with_theta;
    opts.compute_clt = with_clt;
    std::vector<SpectralStatistic> stats = parse_statistics(stats_list);
    PipelineResult res = run_pipeline(*X, stats, opts);
    auto summaries = summarize(res.distribution, res.config, {0.05, 0.5},
                               /*scale_by_p=*/with_theta);

    json j{{"schema_version", kSchemaVersion},
           {"n", X->n()},
           {"p", X->p()},
           {"B", common.replicates},
           {"seed", common.seed},
           {"kappa_hat", res.kappa_hat},
           {"spectrum_loss", res.spectrum.loss_value},
           {"spectrum_converged", res.spectrum.converged}};
    j["statistics"] = json::array();
    std::ostringstream table;
    table << "n=" << X->n() << " p=" << X->p() << " B=" << common.replicates
          << " kappa_hat=" << res.kappa_hat << "\n";
    for (std::size_t s = 0; s < stats.size(); ++s) {
        json js{{"name", summaries[s].statistic},
                {"mean", summaries[s].mean},
                {"sd", summaries[s].sd}};
        js["quantiles"] = json::array();
        for (const auto& [prob, value] : summaries[s].quantiles)
            js["quantiles"].push_back({{"prob", prob}, {"value", value}});
        if (with_theta) {
            js["theta_tilde"] = res.theta_tilde[Eigen::Index(s)];
            js["bias"] =
                res.distribution.column(s).mean() - res.theta_tilde[Eigen::Index(s)];
        }
        if (with_clt && res.clt[s]) {
            js["formula_eta"] = res.clt[s]->eta_hat;
            js["formula_v"] = res.clt[s]->v_hat;
        }
        j["statistics"].push_back(js);
        table << "  " << summaries[s].statistic
              << "  mean=" << summaries[s].mean << " sd=" << summaries[s].sd
              << "\n";
    }
    emit(j, common.output, table.str());
    return 0;
}

// ------------------------------------------------------------------- test

int cmd_test(const CommonOpts& common, const std::string& data_path,
             bool standardize, const std::string& tests_list, double alpha) {
    DataMatrix X = load_and_standardize(data_path, standardize);
    std::vector<SpectralStatistic> tests;
    std::stringstream ss(tests_list);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token == "lrt") tests.push_back(SpectralStatistic::lrt());
        else if (token == "john") tests.push_back(SpectralStatistic::john());
        else if (token == "cn")
            tests.push_back(SpectralStatistic::condition_number());
        else throw input_error("unknown test: " + token + " (lrt|john|cn)");
    }
    if (tests.empty()) throw input_error("no tests requested");

    SphericityReport report = run_sphericity(X, tests, common.replicates,
                                             alpha, common.seed, common.workers);
    json j{{"schema_version", kSchemaVersion},
           {"n", report.n},
           {"p", report.p},
           {"B", report.B},
           {"alpha", report.alpha},
           {"seed", report.seed},
           {"kappa_hat", report.kappa_hat}};
    j["tests"] = json::array();
    std::ostringstream table;
    table << "n=" << report.n << " p=" << report.p
          << " kappa_hat=" << report.kappa_hat << " alpha=" << alpha << "\n";
    for (const auto& r : report.results) {
        j["tests"].push_back({{"name", r.test},
                              {"statistic", r.statistic},
                              {"critical_value", r.critical_value},
                              {"p_value", r.p_value},
                              {"reject", r.reject}});
        table << "  " << r.test << "  stat=" << r.statistic
              << " crit=" << r.critical_value << " p=" << r.p_value
              << (r.reject ? "  REJECT" : "  keep") << "\n";
    }
    emit(j, common.output, table.str());
    return 0;
}

// --------------------------------------------------------------- campaign

int cmd_campaign(const CommonOpts& common, const std::string& out_path) {
    if (common.config_path.empty())
        throw input_error("campaign requires --config");
    CampaignConfig cfg = parse_campaign_config(load_config(common.config_path));
    if (common.seed != 0) cfg.seed = common.seed;
    if (common.workers > 1) cfg.workers = common.workers;
    SimulationReport report = run_campaign(cfg);

    json j = report_to_json(report);
    const std::string table = report_to_table(report);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw input_error("cannot write output file: " + out_path);
        out << j.dump(2) << "\n";
    }
    emit(j, common.output, table);
    return report.any_failed() ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral bootstrap for covariance eigenvalue statistics"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string data_path, model_name = "identity", stats_list = "x";
    std::string atoms, probs, tests_list = "john", out_path;
    bool standardize = false, with_theta = false, with_clt = false;
    Eigen::Index n = 0, p = 0;
    double gamma = 0.5, alpha = 0.05, entry_kappa = 3.0, truncation = 2.0;
    int mp_points = 0;

    auto* kurt = app.add_subcommand("kurtosis", "Estimate entry kurtosis");
    add_common(kurt, common);
    kurt->add_option("--data", data_path, "CSV data file")->required();
    kurt->add_flag("--standardize", standardize, "Standardize columns");

    auto* spec = app.add_subcommand("estimate-spectrum",
                                    "Estimate the population spectrum");
    add_common(spec, common);
    spec->add_option("--data", data_path, "CSV data file")->required();
    spec->add_flag("--standardize", standardize, "Standardize columns");
    spec->add_option("--truncation", truncation,
                     "Truncation multiplier (> 1)");

    auto* mp = app.add_subcommand("mp", "Solve a Marchenko-Pastur law");
    add_common(mp, common);
    mp->add_option("--gamma", gamma, "Aspect ratio p/n")->required();
    mp->add_option("--atoms", atoms, "Population atoms, comma separated");
    mp->add_option("--points", mp_points, "Grid resolution");
    mp->add_option("--probs", probs, "Quantile levels, comma separated");

    auto* boot = app.add_subcommand("bootstrap", "Bootstrap a statistic");
    add_common(boot, common);
    boot->add_option("--data", data_path, "CSV data file");
    boot->add_flag("--standardize", standardize, "Standardize columns");
    boot->add_option("--model", model_name,
                     "Synthetic model (identity|spiked|spread)");
    boot->add_option("--n", n, "Synthetic sample size");
    boot->add_option("--p", p, "Synthetic dimension");
    boot->add_option("--kappa", entry_kappa, "Synthetic entry kurtosis");
    boot->add_option("--stats", stats_list,
                     "Statistics, comma separated (x, x^2, log, lrt, john, "
                     "condition_number, max_eig, topK_sum, spectral_gap)");
    boot->add_flag("--theta", with_theta,
                   "Center by the estimated-spectrum functional, scale by p");
    boot->add_flag("--clt", with_clt, "Attach contour-formula estimates");

    auto* tst = app.add_subcommand("test", "Bootstrap sphericity tests");
    add_common(tst, common);
    tst->add_option("--data", data_path, "CSV data file")->required();
    tst->add_flag("--standardize", standardize, "Standardize columns");
    tst->add_option("--tests", tests_list, "Tests (lrt,john,cn)");
    tst->add_option("--alpha", alpha, "Test level");

    auto* camp = app.add_subcommand("campaign", "Run a simulation campaign");
    add_common(camp, common);
    camp->add_option("--out", out_path, "Also write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*kurt) return cmd_kurtosis(common, data_path, standardize);
        if (*spec)
            return cmd_estimate_spectrum(common, data_path, standardize,
                                         truncation);
        if (*mp) return cmd_mp(common, gamma, atoms, mp_points, probs);
        if (*boot)
            return cmd_bootstrap(common, data_path, standardize, model_name, n,
                                 p, entry_kappa, stats_list, with_theta,
                                 with_clt);
        if (*tst) return cmd_test(common, data_path, standardize, tests_list,
                                  alpha);
        if (*camp) return cmd_campaign(common, out_path);
    } catch (const input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
