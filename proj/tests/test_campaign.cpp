#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "specboot/campaign.hpp"
#include "specboot/pipeline.hpp"
#include "specboot/sphericity.hpp"

using namespace specboot;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
    const std::string path = "/tmp/specboot_" + name;
    std::ofstream out(path);
    out << body;
    return path;
}

DataMatrix gaussian_data(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                         double spike = 1.0, int spikes = 0) {
    Xoshiro256pp stream(seed);
    Eigen::VectorXd lam = Eigen::VectorXd::Ones(p);
    lam.head(spikes).setConstant(spike);
    DataMatrix Z = sample_matrix(resolve_pearson(3.0), n, p, stream);
    return DataMatrix(Z.values * lam.cwiseSqrt().asDiagonal());
}

}  // namespace

TEST_CASE("csv loading, standardization, and errors") {
    const std::string ok = write_temp(
        "ok.csv", "a,b,c\n1,2,3\n4,5,6\n7,8,10\n");
    DataMatrix raw = load_and_standardize(ok, false);
    REQUIRE(raw.n() == 3);
    REQUIRE(raw.p() == 3);
    CHECK(raw.values(2, 2) == doctest::Approx(10.0));

    DataMatrix std_mat = load_and_standardize(ok, true);
    for (Eigen::Index j = 0; j < 3; ++j) {
        CHECK(std_mat.values.col(j).mean() == doctest::Approx(0.0));
        CHECK((std_mat.values.col(j).array().square().sum() / 2.0) ==
              doctest::Approx(1.0));
    }

    const std::string ragged = write_temp("ragged.csv", "1,2\n3,4,5\n");
    CHECK_THROWS_WITH_AS(load_and_standardize(ragged, false),
                         doctest::Contains("ragged row 2"), input_error);

    const std::string alpha = write_temp("alpha.csv", "1,2\n3,x\n5,6\n");
    CHECK_THROWS_WITH_AS(load_and_standardize(alpha, false),
                         doctest::Contains("row 2, column 2"), input_error);

    const std::string constant = write_temp("const.csv", "1,5\n2,5\n3,5\n");
    CHECK_THROWS_AS(load_and_standardize(constant, true), input_error);
    CHECK_NOTHROW(load_and_standardize(constant, false));

    const std::string short_file = write_temp("short.csv", "h1,h2\n1,2\n");
    CHECK_THROWS_AS(load_and_standardize(short_file, false), input_error);
    CHECK_THROWS_AS(load_and_standardize("/tmp/specboot_missing_xyz.csv", false),
                    input_error);
}

TEST_CASE("csv write/load round trip") {
    Eigen::MatrixXd M(3, 2);
    M << 1.5, -2.25, 0.125, 3.75, 9.0, -0.5;
    const std::string path = "/tmp/specboot_rt.csv";
    write_csv(path, M);
    DataMatrix back = load_and_standardize(path, false);
    CHECK((back.values - M).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sphericity holds its level on spherical data") {
    DataMatrix X = gaussian_data(150, 50, 31);
    auto report = run_sphericity(
        X,
        {SpectralStatistic::lrt(), SpectralStatistic::john(),
         SpectralStatistic::condition_number()},
        300, 0.05, 7);
    CHECK(report.kappa_hat == doctest::Approx(3.0).epsilon(0.15));
    REQUIRE(report.results.size() == 3);
    for (const auto& r : report.results) {
        CHECK(r.p_value > 0.0);
        CHECK(r.p_value <= 1.0);
        CHECK(r.reject == (r.statistic > r.critical_value));
    }
}

TEST_CASE("sphericity rejects a strong alternative") {
    DataMatrix X = gaussian_data(150, 50, 32, 10.0, 5);
    auto report =
        run_sphericity(X, {SpectralStatistic::john()}, 300, 0.05, 8);
    REQUIRE(report.results.size() == 1);
    CHECK(report.results[0].reject);
    CHECK(report.results[0].p_value < 0.05);
}

TEST_CASE("sphericity guards") {
    DataMatrix wide = gaussian_data(30, 60, 33);
    CHECK_THROWS_AS(
        run_sphericity(wide, {SpectralStatistic::lrt()}, 50, 0.05, 1),
        domain_error);
    DataMatrix X = gaussian_data(40, 10, 34);
    CHECK_THROWS_AS(
        run_sphericity(X, {SpectralStatistic::lss(LssFunction::X)}, 50, 0.05, 1),
        parameter_error);
}

TEST_CASE("pipeline ties the stages together") {
    DataMatrix X = gaussian_data(120, 40, 35);
    PipelineOptions opts;
    opts.B = 80;
    opts.seed = 5;
    std::vector<SpectralStatistic> stats = {
        SpectralStatistic::lss(LssFunction::X), SpectralStatistic::john()};
    PipelineResult res = run_pipeline(X, stats, opts);

    CHECK(res.kappa_hat == doctest::Approx(3.0).epsilon(0.25));
    CHECK(res.spectrum.lambda_tilde.size() == 40);
    CHECK(res.distribution.replicates.rows() == 80);
    CHECK(res.distribution.replicates.cols() == 2);
    CHECK(res.config.centering == Centering::EmpiricalMean);

    // theta centering works for pure-LSS requests and is rejected otherwise
    PipelineOptions with_theta = opts;
    with_theta.compute_theta = true;
    PipelineResult lss_only = run_pipeline(
        X, {SpectralStatistic::lss(LssFunction::X)}, with_theta);
    REQUIRE(lss_only.theta_tilde.size() == 1);
    CHECK(lss_only.theta_tilde[0] ==
          doctest::Approx(lss_only.spectrum.lambda_tilde.mean()).epsilon(0.01));
    CHECK(lss_only.config.centering == Centering::ThetaTilde);
    CHECK_THROWS_AS(run_pipeline(X, stats, with_theta), parameter_error);

    // contour estimates attach to named LSS only
    PipelineOptions with_clt = opts;
    with_clt.compute_clt = true;
    PipelineResult res2 = run_pipeline(X, stats, with_clt);
    REQUIRE(res2.clt.size() == 2);
    CHECK(res2.clt[0].has_value());
    CHECK(!res2.clt[1].has_value());
    CHECK(res2.clt[0]->v_hat > 0.0);
}

TEST_CASE("campaign config parsing") {
    auto j = nlohmann::json::parse(R"({
        "seed": 9, "n": 120, "gammas": [0.25, 0.5],
        "models": [{"kind": "identity"}, {"kind": "spiked", "k": 4, "value": 2.5}],
        "distributions": ["gaussian", "t9", {"label": "custom", "kappa": 3.7}],
        "statistics": ["x", "john"],
        "r_truth": 50, "r_boot": 4, "B": 40, "formulas": true
    })");
    CampaignConfig cfg = parse_campaign_config(j);
    CHECK(cfg.seed == 9);
    CHECK(cfg.n == 120);
    REQUIRE(cfg.models.size() == 2);
    CHECK(cfg.models[1].spike_count == 4);
    REQUIRE(cfg.distributions.size() == 3);
    CHECK(cfg.distributions[1].kappa == doctest::Approx(4.2));
    CHECK(cfg.distributions[2].kappa == doctest::Approx(3.7));
    CHECK(cfg.formulas);

    auto bad = j;
    bad["distributions"] = {"cauchy"};
    CHECK_THROWS_AS(parse_campaign_config(bad), input_error);
    bad = j;
    bad["statistics"] = {"bogus"};
    CHECK_THROWS_AS(parse_campaign_config(bad), input_error);
    bad = j;
    bad["models"] = {{{"kind", "mystery"}}};
    CHECK_THROWS_AS(parse_campaign_config(bad), input_error);
}

TEST_CASE("small campaign runs end to end") {
    CampaignConfig cfg;
    cfg.seed = 77;
    cfg.n = 80;
    cfg.gammas = {0.5};
    cfg.models = {CovarianceModel::identity(0)};
    cfg.distributions = {{"gaussian", 3.0}};
    auto stat_x = SpectralStatistic::parse("x");
    auto stat_j = SpectralStatistic::parse("john");
    REQUIRE(stat_x);
    REQUIRE(stat_j);
    cfg.statistics = {*stat_x, *stat_j};
    cfg.r_truth = 150;
    cfg.r_boot = 3;
    cfg.B = 60;

    SimulationReport report = run_campaign(cfg);
    REQUIRE(report.cells.size() == 1);
    const CampaignCell& cell = report.cells[0];
    INFO(cell.error);
    REQUIRE(cell.error.empty());
    CHECK(cell.p == 40);
    CHECK(cell.truth_count == 150);
    CHECK(cell.boot_count == 3);
    REQUIRE(cell.population.size() == 2);
    REQUIRE(cell.bootstrap_sd.size() == 2);

    // bootstrap dispersion should be on the population scale
    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(cell.bootstrap_sd[s].mean >
              0.4 * cell.population[s].sd);
        CHECK(cell.bootstrap_sd[s].mean <
              2.5 * cell.population[s].sd);
    }

    // determinism of the whole report, timing aside
    SimulationReport again = run_campaign(cfg);
    nlohmann::json j1 = report_to_json(report), j2 = report_to_json(again);
    for (auto* jj : {&j1, &j2})
        for (auto& c : (*jj)["cells"]) c.erase("seconds");
    CHECK(j1.dump() == j2.dump());

    nlohmann::json j = report_to_json(report);
    CHECK(j.contains("schema_version"));
    CHECK(j["cells"][0]["statistics"].size() == 2);
    std::string table = report_to_table(report);
    CHECK(table.find("identity") != std::string::npos);
    CHECK(table.find("john") != std::string::npos);
}

TEST_CASE("campaign captures per-cell failures") {
    CampaignConfig cfg;
    cfg.seed = 1;
    cfg.n = 60;
    cfg.gammas = {0.5};
    CovarianceModel broken;
    broken.kind = CovarianceModel::Kind::FromData;
    broken.data_path = "/tmp/specboot_nonexistent.csv";
    cfg.models = {broken, CovarianceModel::identity(0)};
    cfg.distributions = {{"gaussian", 3.0}};
    cfg.statistics = {*SpectralStatistic::parse("x")};
    cfg.r_truth = 20;
    cfg.r_boot = 2;
    cfg.B = 30;

    SimulationReport report = run_campaign(cfg);
    REQUIRE(report.cells.size() == 2);
    CHECK(!report.cells[0].error.empty());
    CHECK(report.cells[0].population.empty());  // no partial numbers
    CHECK(report.cells[1].error.empty());
    CHECK(report.any_failed());

    nlohmann::json j = report_to_json(report);
    CHECK(j["cells"][0].contains("error"));
    std::string table = report_to_table(report);
    CHECK(table.find("FAILED") != std::string::npos);
}
