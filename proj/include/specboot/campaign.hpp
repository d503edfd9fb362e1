#pragma once

// Config-driven simulation campaigns reproducing the paper-style tables:
// per (covariance model, entry distribution, gamma) cell, a ground-truth
// row from direct simulation, a bootstrap row from full pipeline runs,
// and an optional contour-formula row.

#include <chrono>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "specboot/clt.hpp"
#include "specboot/common.hpp"
#include "specboot/models.hpp"
#include "specboot/mp_law.hpp"
#include "specboot/pipeline.hpp"

namespace specboot {

struct EntryDistribution {
    std::string label;
    double kappa = 3.0;
};

struct CampaignConfig {
    std::uint64_t seed = 0;
    Eigen::Index n = 500;
    std::vector<double> gammas;
    std::vector<CovarianceModel> models;  // p is set per gamma at run time
    std::vector<EntryDistribution> distributions;
    std::vector<SpectralStatistic> statistics;
    int r_truth = 2000;
    int r_boot = 50;
    int B = 300;
    bool formulas = false;
    int workers = 1;
    SpectrumEstParams spectrum_params;
    MonteCarloBlock theta_mc_fallback{8, 8, 3.0, 0};  // log f near 0
};

struct SummaryTriple {
    double mean = 0.0, sd = 0.0, q95 = 0.0;
};

struct CampaignCell {
    std::string model;
    std::string distribution;
    double gamma = 0.0;
    Eigen::Index p = 0;
    std::uint64_t cell_seed = 0;
    std::string error;  // nonempty marks a failed cell; no partial numbers

    // per statistic: population row, bootstrap row (mean of estimates with
    // replication sd), optional formula row
    std::vector<std::string> statistic_names;
    std::vector<SummaryTriple> population;
    std::vector<SummaryTriple> bootstrap_mean;
    std::vector<SummaryTriple> bootstrap_sd;
    std::vector<SummaryTriple> formula_mean;
    std::vector<SummaryTriple> formula_sd;
    int truth_count = 0, boot_count = 0;
    double seconds = 0.0;
};

struct SimulationReport {
    std::uint64_t master_seed = 0;
    std::string config_fingerprint;
    std::vector<CampaignCell> cells;
    bool any_failed() const {
        for (const auto& c : cells)
            if (!c.error.empty()) return true;
        return false;
    }
};

namespace detail {

inline SummaryTriple triple_of(const Eigen::VectorXd& v) {
    SummaryTriple t;
    t.mean = v.mean();
    t.sd = std::sqrt((v.array() - t.mean).square().sum() /
                     std::max<double>(1.0, double(v.size() - 1)));
    t.q95 = empirical_quantile(v, 0.95);
    return t;
}

inline std::string fingerprint(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace detail

CampaignConfig parse_campaign_config(const nlohmann::json& j);
SimulationReport run_campaign(const CampaignConfig& cfg);
nlohmann::json report_to_json(const SimulationReport& report);
std::string report_to_table(const SimulationReport& report);

// ---------------------------------------------------------------------------

inline CampaignConfig parse_campaign_config(const nlohmann::json& j) {
    CampaignConfig cfg;
    cfg.seed = j.value("seed", std::uint64_t(0));
    cfg.n = j.value("n", 500);
    if (cfg.n < 2) throw input_error("campaign config: n must be >= 2");
    for (double g : j.at("gammas")) cfg.gammas.push_back(g);

    for (const auto& jm : j.at("models")) {
        const std::string kind = jm.at("kind");
        CovarianceModel m;
        if (kind == "identity") {
            m.kind = CovarianceModel::Kind::Identity;
        } else if (kind == "spiked") {
            m.kind = CovarianceModel::Kind::Spiked;
            m.spike_count = jm.value("k", 10);
            m.spike_value = jm.value("value", 3.0);
            m.haar = jm.value("haar", true);
        } else if (kind == "spread") {
            m.kind = CovarianceModel::Kind::Spread;
        } else if (kind == "from_data") {
            m.kind = CovarianceModel::Kind::FromData;
            m.data_path = jm.at("path");
        } else {
            throw input_error("campaign config: unknown model kind " + kind);
        }
        cfg.models.push_back(m);
    }

    for (const auto& jd : j.at("distributions")) {
        EntryDistribution d;
        if (jd.is_string()) {
            const std::string name = jd;
            d.label = name;
            if (name == "gaussian") d.kappa = 3.0;
            else if (name == "beta66") d.kappa = 2.6;
            else if (name == "t9") d.kappa = 4.2;
            else if (name == "rademacher") d.kappa = 1.0;
            else throw input_error("unknown distribution label " + name);
        } else {
            d.label = jd.at("label");
            d.kappa = jd.at("kappa");
        }
        cfg.distributions.push_back(d);
    }

    for (const auto& js : j.at("statistics")) {
        auto stat = SpectralStatistic::parse(js.get<std::string>());
        if (!stat)
            throw input_error("unknown statistic " + js.get<std::string>());
        cfg.statistics.push_back(*stat);
    }

    cfg.r_truth = j.value("r_truth", 2000);
    cfg.r_boot = j.value("r_boot", 50);
    cfg.B = j.value("B", 300);
    cfg.formulas = j.value("formulas", false);
    cfg.workers = j.value("workers", 1);
    return cfg;
}

inline SimulationReport run_campaign(const CampaignConfig& cfg) {
    SimulationReport report;
    report.master_seed = cfg.seed;
    {
        std::ostringstream os;
        os << cfg.n << '|' << cfg.r_truth << '|' << cfg.r_boot << '|' << cfg.B;
        for (double g : cfg.gammas) os << '|' << g;
        for (const auto& m : cfg.models) os << '|' << m.name();
        for (const auto& d : cfg.distributions) os << '|' << d.label;
        for (const auto& s : cfg.statistics) os << '|' << s.name();
        report.config_fingerprint = detail::fingerprint(os.str());
    }

    const std::size_t n_stats = cfg.statistics.size();
    std::uint64_t cell_index = 0;
    for (const auto& model_template : cfg.models) {
        for (const auto& dist : cfg.distributions) {
            for (double gamma : cfg.gammas) {
                CampaignCell cell;
                cell.model = model_template.name();
                cell.distribution = dist.label;
                cell.gamma = gamma;
                cell.p = Eigen::Index(std::lround(gamma * double(cfg.n)));
                cell.cell_seed = derive_stream_key(cfg.seed, cell_index++);
                for (const auto& s : cfg.statistics)
                    cell.statistic_names.push_back(s.name());
                const auto t_start = std::chrono::steady_clock::now();
                try {
                    CovarianceModel model = model_template;
                    model.p = cell.p;
                    Xoshiro256pp model_stream = derive_stream(cell.cell_seed, 1);
                    CovarianceFixture fixture = make_covariance(model, model_stream);
                    const PearsonSpec entries = resolve_pearson(dist.kappa);
                    PopulationSpectrum true_spectrum =
                        PopulationSpectrum::uniform(fixture.eigenvalues);

                    // centering constants against which LSS fluctuate
                    std::vector<double> theta(n_stats, 0.0);
                    std::vector<bool> is_lss(n_stats, false);
                    for (std::size_t s = 0; s < n_stats; ++s) {
                        if (!cfg.statistics[s].is_lss()) continue;
                        is_lss[s] = true;
                        try {
                            theta[s] = theta_functional(true_spectrum, gamma,
                                                        cfg.statistics[s]);
                        } catch (const domain_error&) {
                            MonteCarloBlock mc = cfg.theta_mc_fallback;
                            mc.kappa = dist.kappa;
                            mc.seed = derive_stream_key(cell.cell_seed, 2, s);
                            theta[s] = theta_functional(true_spectrum, gamma,
                                                        cfg.statistics[s],
                                                        ThetaMethod::MonteCarlo,
                                                        mc);
                        }
                    }

                    // ground truth: R_truth direct realizations
                    Eigen::MatrixXd truth(cfg.r_truth, Eigen::Index(n_stats));
                    for (int r = 0; r < cfg.r_truth; ++r) {
                        Xoshiro256pp stream =
                            derive_stream(cell.cell_seed, 1000 + std::uint64_t(r));
                        DataMatrix X = sample_data(fixture, entries, cfg.n, stream);
                        Eigen::VectorXd evals = esd_from_data(X).eigenvalues;
                        for (std::size_t s = 0; s < n_stats; ++s)
                            truth(r, Eigen::Index(s)) =
                                evaluate_statistic(evals, cfg.statistics[s]);
                    }
                    for (std::size_t s = 0; s < n_stats; ++s) {
                        Eigen::VectorXd col = truth.col(Eigen::Index(s));
                        if (is_lss[s])
                            col = double(cell.p) * (col.array() - theta[s]);
                        else
                            col = (col.array() - col.mean()).matrix();
                        cell.population.push_back(detail::triple_of(col));
                    }
                    cell.truth_count = cfg.r_truth;

                    // bootstrap (and formula) estimates from R_boot pipelines
                    Eigen::MatrixXd bm(cfg.r_boot, Eigen::Index(n_stats)),
                        bs(cfg.r_boot, Eigen::Index(n_stats)),
                        fm(cfg.r_boot, Eigen::Index(n_stats)),
                        fs(cfg.r_boot, Eigen::Index(n_stats));
                    bool any_formula = false;
                    for (int r = 0; r < cfg.r_boot; ++r) {
                        Xoshiro256pp stream =
                            derive_stream(cell.cell_seed, 5000000 + std::uint64_t(r));
                        DataMatrix X = sample_data(fixture, entries, cfg.n, stream);
                        PipelineOptions opts;
                        opts.B = cfg.B;
                        opts.seed = derive_stream_key(cell.cell_seed, 3,
                                                      std::uint64_t(r));
                        opts.workers = cfg.workers;
                        opts.spectrum_params = cfg.spectrum_params;
                        opts.compute_clt = cfg.formulas;
                        PipelineResult res =
                            run_pipeline(X, cfg.statistics, opts);

                        // center bootstrap replicates per statistic kind
                        PopulationSpectrum h_tilde = PopulationSpectrum::uniform(
                            res.spectrum.lambda_tilde);
                        for (std::size_t s = 0; s < n_stats; ++s) {
                            Eigen::VectorXd col = res.distribution.column(s);
                            if (is_lss[s]) {
                                double th;
                                try {
                                    th = theta_functional(h_tilde,
                                                          res.esd.gamma_n,
                                                          cfg.statistics[s]);
                                } catch (const domain_error&) {
                                    MonteCarloBlock mc = cfg.theta_mc_fallback;
                                    mc.kappa = res.kappa_hat;
                                    mc.seed = derive_stream_key(cell.cell_seed, 4,
                                                                std::uint64_t(r));
                                    th = theta_functional(
                                        h_tilde, res.esd.gamma_n,
                                        cfg.statistics[s],
                                        ThetaMethod::MonteCarlo, mc);
                                }
                                col = double(cell.p) * (col.array() - th);
                            } else {
                                col = (col.array() - col.mean()).matrix();
                            }
                            SummaryTriple t = detail::triple_of(col);
                            bm(r, Eigen::Index(s)) = t.mean;
                            bs(r, Eigen::Index(s)) = t.sd;
                            fm(r, Eigen::Index(s)) = 0.0;
                            fs(r, Eigen::Index(s)) = 0.0;
                            if (cfg.formulas && res.clt[s]) {
                                fm(r, Eigen::Index(s)) = res.clt[s]->eta_hat;
                                fs(r, Eigen::Index(s)) =
                                    std::sqrt(res.clt[s]->v_hat);
                                any_formula = true;
                            }
                        }
                    }
                    for (std::size_t s = 0; s < n_stats; ++s) {
                        cell.bootstrap_mean.push_back(
                            detail::triple_of(bm.col(Eigen::Index(s))));
                        cell.bootstrap_sd.push_back(
                            detail::triple_of(bs.col(Eigen::Index(s))));
                        if (any_formula) {
                            cell.formula_mean.push_back(
                                detail::triple_of(fm.col(Eigen::Index(s))));
                            cell.formula_sd.push_back(
                                detail::triple_of(fs.col(Eigen::Index(s))));
                        }
                    }
                    cell.boot_count = cfg.r_boot;
                } catch (const std::exception& e) {
                    cell.error = e.what();
                    cell.population.clear();
                    cell.bootstrap_mean.clear();
                    cell.bootstrap_sd.clear();
                    cell.formula_mean.clear();
                    cell.formula_sd.clear();
                }
                cell.seconds = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - t_start)
                                   .count();
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

inline nlohmann::json report_to_json(const SimulationReport& report) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = report.master_seed;
    j["config_fingerprint"] = report.config_fingerprint;
    j["cells"] = nlohmann::json::array();
    auto triple = [](const SummaryTriple& t) {
        return nlohmann::json{{"mean", t.mean}, {"sd", t.sd}, {"q95", t.q95}};
    };
    for (const auto& c : report.cells) {
        nlohmann::json jc;
        jc["model"] = c.model;
        jc["distribution"] = c.distribution;
        jc["gamma"] = c.gamma;
        jc["p"] = c.p;
        jc["cell_seed"] = c.cell_seed;
        jc["seconds"] = c.seconds;
        if (!c.error.empty()) {
            jc["error"] = c.error;
        } else {
            jc["statistics"] = nlohmann::json::array();
            for (std::size_t s = 0; s < c.statistic_names.size(); ++s) {
                nlohmann::json js;
                js["name"] = c.statistic_names[s];
                js["population"] = triple(c.population[s]);
                js["population_count"] = c.truth_count;
                js["bootstrap_mean"] = triple(c.bootstrap_mean[s]);
                js["bootstrap_sd"] = triple(c.bootstrap_sd[s]);
                js["bootstrap_count"] = c.boot_count;
                if (s < c.formula_mean.size()) {
                    js["formula_mean"] = triple(c.formula_mean[s]);
                    js["formula_sd"] = triple(c.formula_sd[s]);
                    js["formula_count"] = c.boot_count;
                }
                jc["statistics"].push_back(js);
            }
        }
        j["cells"].push_back(jc);
    }
    return j;
}

inline std::string report_to_table(const SimulationReport& report) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    for (const auto& c : report.cells) {
        os << "== " << c.model << " / " << c.distribution
           << " / gamma=" << c.gamma << " (p=" << c.p << ")\n";
        if (!c.error.empty()) {
            os << "   FAILED: " << c.error << "\n";
            continue;
        }
        for (std::size_t s = 0; s < c.statistic_names.size(); ++s) {
            os << "   " << std::setw(14) << c.statistic_names[s]
               << "  population  mean=" << c.population[s].mean
               << " sd=" << c.population[s].sd
               << " q95=" << c.population[s].q95 << "  [" << c.truth_count
               << " reps]\n";
            os << "   " << std::setw(14) << ""
               << "  bootstrap   mean=" << c.bootstrap_mean[s].mean << " ("
               << c.bootstrap_mean[s].sd << ")"
               << " sd=" << c.bootstrap_sd[s].mean << " ("
               << c.bootstrap_sd[s].sd << ")  [" << c.boot_count << " runs]\n";
            if (s < c.formula_mean.size()) {
                os << "   " << std::setw(14) << ""
                   << "  formula     mean=" << c.formula_mean[s].mean << " ("
                   << c.formula_mean[s].sd << ")"
                   << " sd=" << c.formula_sd[s].mean << " ("
                   << c.formula_sd[s].sd << ")\n";
            }
        }
    }
    return os.str();
}

}  // namespace specboot
