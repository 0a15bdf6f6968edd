#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pursuit/harness.hpp"

using namespace pursuit;

namespace {

const double inf = std::numeric_limits<double>::infinity();

std::filesystem::path fresh_dir(const char* tag) {
    auto dir = std::filesystem::temp_directory_path() / (std::string("pursuit_harness_") + tag);
    std::filesystem::remove_all(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_experiment_config(in);
}

} // namespace

TEST_CASE("experiment config parses the full key set") {
    ExperimentConfig cfg = parse(
        "# two sizes, mixed noise regimes\n"
        "base_seed = 42\n"
        "trials_per_cell = 3\n"
        "m = 8, 10\n"
        "n = 12\n"
        "k = 1, 2\n"
        "snr = inf, 16, 4.5   # noise-free plus two finite levels\n"
        "profile = equal, uniform:1:2\n"
        "sign_mode = random, positive\n"
        "noise_mode = gaussian, basis:1\n"
        "instance = gaussian\n"
        "\n"
        "diagnostics = off\n"
        "exact_delta = on\n"
        "cap = 50000\n"
        "threads = 2\n"
        "out_dir = run_out\n");

    CHECK(cfg.base_seed == 42);
    CHECK(cfg.trials_per_cell == 3);
    const std::vector<int> want_m{8, 10};
    const std::vector<int> want_n{12};
    const std::vector<int> want_k{1, 2};
    CHECK(cfg.m_list == want_m);
    CHECK(cfg.n_list == want_n);
    CHECK(cfg.k_list == want_k);
    REQUIRE(cfg.snr_list.size() == 3);
    CHECK(std::isinf(cfg.snr_list[0]));
    CHECK(cfg.snr_list[1] == 16.0);
    CHECK(cfg.snr_list[2] == 4.5);
    const std::vector<std::string> want_profiles{"equal", "uniform:1:2"};
    const std::vector<std::string> want_signs{"random", "positive"};
    const std::vector<std::string> want_noise{"gaussian", "basis:1"};
    CHECK(cfg.profile_list == want_profiles);
    CHECK(cfg.sign_list == want_signs);
    CHECK(cfg.noise_list == want_noise);
    CHECK_FALSE(cfg.diagnostics);
    CHECK(cfg.exact_delta);
    CHECK(cfg.cap == 50000);
    CHECK(cfg.threads == 2);
    CHECK(cfg.out_dir == "run_out");
    CHECK(cfg.raw.size() == 15); // one echo per key, comments dropped
}

TEST_CASE("experiment config rejects malformed input") {
    CHECK_THROWS_AS(parse("m = 4\nm = 5\n"), io_error);             // duplicate
    CHECK_THROWS_AS(parse("mm = 4\n"), io_error);                   // unknown key
    CHECK_THROWS_AS(parse("diagnostics = maybe\n"), io_error);      // bad switch
    CHECK_THROWS_AS(parse("base_seed 42\n"), io_error);             // missing '='
    CHECK_THROWS_AS(parse("snr = 0\n"), io_error);                  // nonpositive snr
    CHECK_THROWS_AS(parse("snr = -3\n"), io_error);
    CHECK_THROWS_AS(parse("threads = 0\n"), io_error);
    CHECK_THROWS_AS(parse("trials_per_cell = -1\n"), io_error);
    CHECK_THROWS_AS(parse("k = 1.5\n"), io_error);                  // int list wants ints
    CHECK_THROWS_AS(parse("profile = bogus\n"), io_error);
    CHECK_THROWS_AS(parse("noise_mode = basis\n"), io_error);       // index required
    CHECK_THROWS_AS(parse("instance = perturbed_identity\n"), io_error);
    CHECK_THROWS_AS(parse_experiment_config_file("/no/such/config.txt"), io_error);
}

TEST_CASE("cells expand in a fixed nesting order") {
    ExperimentConfig cfg;
    cfg.trials_per_cell = 1;
    cfg.m_list = {8, 10};
    cfg.n_list = {12};
    cfg.k_list = {1, 2};
    cfg.snr_list = {inf, 9.0};

    auto cells = expand_cells(cfg);
    REQUIRE(cells.size() == 8);
    // m is outermost, then n, k, snr
    CHECK(cells[0].m == 8);
    CHECK(cells[0].k == 1);
    CHECK(std::isinf(cells[0].snr_target));
    CHECK(cells[1].k == 1);
    CHECK(cells[1].snr_target == 9.0);
    CHECK(cells[2].k == 2);
    CHECK(std::isinf(cells[2].snr_target));
    CHECK(cells[3].k == 2);
    CHECK(cells[3].snr_target == 9.0);
    CHECK(cells[4].m == 10);
    CHECK(cells[7].m == 10);
    CHECK(cells[7].k == 2);
    CHECK(cells[0].profile_label == "equal");
    CHECK(cells[0].sign_label == "random");
    CHECK(cells[0].noise_label == "gaussian");
    CHECK(cells[0].instance_label == "gaussian");
}

TEST_CASE("cell validation happens at expansion time") {
    ExperimentConfig base;
    base.trials_per_cell = 1;
    base.m_list = {8};
    base.n_list = {12};
    base.k_list = {2};
    base.snr_list = {inf};

    SECTION("sparsity must fit the shape") {
        ExperimentConfig cfg = base;
        cfg.m_list = {4};
        cfg.k_list = {5};
        CHECK_THROWS_AS(expand_cells(cfg), input_domain_error);
    }
    SECTION("appendix instances are square") {
        ExperimentConfig cfg = base;
        cfg.instance_list = {"appendix_a:0.1"};
        CHECK_THROWS_AS(expand_cells(cfg), input_domain_error);
    }
    SECTION("appendix instances need one spare row") {
        ExperimentConfig cfg = base;
        cfg.m_list = {2};
        cfg.n_list = {2};
        cfg.instance_list = {"appendix_a"};
        CHECK_THROWS_AS(expand_cells(cfg), input_domain_error);
    }
    SECTION("perturbed identity is square") {
        ExperimentConfig cfg = base;
        cfg.instance_list = {"perturbed_identity:0.3"};
        CHECK_THROWS_AS(expand_cells(cfg), input_domain_error);
    }
    SECTION("exact delta work is capacity-checked up front") {
        ExperimentConfig cfg = base;
        cfg.m_list = {32};
        cfg.n_list = {32};
        cfg.k_list = {8}; // order 8 alone needs C(32,8) > 10^7 subsets
        CHECK_THROWS_AS(expand_cells(cfg), capacity_error);
        cfg.exact_delta = false;
        CHECK(expand_cells(cfg).size() == 1);
    }
}

TEST_CASE("trials are pure functions of their seed") {
    CellSpec spec;
    spec.m = 10;
    spec.n = 14;
    spec.k = 2;
    spec.snr_target = 25.0;
    TrialFlags flags;

    TrialRecord a = run_trial(spec, 3, 1, 7, 99, flags);
    TrialRecord b = run_trial(spec, 3, 1, 7, 99, flags);
    CHECK(detail::trial_csv_row(a) == detail::trial_csv_row(b));
    CHECK(a.outcome == "ok");
    CHECK(a.diagnostics_ran);
    CHECK(a.violations == 0);
    CHECK(a.deltas.size() == 4); // orders 1, k, k+1, 2k
    CHECK(a.seed == derive_seed(99, 7));

    TrialRecord c = run_trial(spec, 3, 1, 7, 100, flags);
    CHECK(detail::trial_csv_row(c) != detail::trial_csv_row(a));
}

TEST_CASE("appendix instances flow through the harness") {
    CellSpec spec;
    spec.m = 8;
    spec.n = 8;
    spec.k = 2;
    spec.snr_target = inf; // echoed only: the instance fixes its own noise
    spec.instance = InstanceKind::appendix_a(0.1);
    spec.instance_label = "appendix_a:0.1";
    TrialFlags flags;

    TrialRecord rec = run_trial(spec, 0, 0, 0, 17, flags);
    CHECK(rec.outcome == "ok");
    CHECK(rec.rho_error == 0.5); // the bumped basis direction steals one pick
    CHECK_FALSE(rec.exact);
    CHECK_THAT(rec.snr_actual, Catch::Matchers::WithinRel(2.0 / 1.21, 1e-14));
    CHECK(rec.mar == 1.0);
    CHECK(rec.kappa == 1.0);
    CHECK(rec.deltas.at(3) == 0.0); // identity blocks are perfectly conditioned

    spec.instance = InstanceKind::appendix_a(0.0);
    TrialRecord tie = run_trial(spec, 0, 0, 0, 17, flags);
    CHECK(tie.outcome == "ok");
    CHECK(tie.exact); // exact ties break toward the lowest index, which is in support
    CHECK(tie.rho_error == 0.0);
    CHECK(tie.snr_actual == 2.0);
}

TEST_CASE("experiment outputs are deterministic and thread-invariant") {
    auto make_cfg = [](const std::filesystem::path& dir, int threads) {
        ExperimentConfig cfg;
        cfg.base_seed = 7;
        cfg.trials_per_cell = 4;
        cfg.m_list = {8};
        cfg.n_list = {10};
        cfg.k_list = {2};
        cfg.snr_list = {inf, 16.0};
        cfg.threads = threads;
        cfg.out_dir = dir.string();
        cfg.raw = {{"base_seed", "7"}, {"trials_per_cell", "4"}};
        return cfg;
    };
    auto d1 = fresh_dir("serial_a");
    auto d2 = fresh_dir("serial_b");
    auto d4 = fresh_dir("threads");

    ExperimentResult r1 = run_experiment(make_cfg(d1, 1));
    ExperimentResult r2 = run_experiment(make_cfg(d2, 1));
    ExperimentResult r4 = run_experiment(make_cfg(d4, 4));

    const std::string trials1 = slurp(r1.trials_csv_path);
    CHECK(trials1 == slurp(r2.trials_csv_path));
    CHECK(trials1 == slurp(r4.trials_csv_path));
    const std::string cells1 = slurp(r1.cells_csv_path);
    CHECK(cells1 == slurp(r2.cells_csv_path));
    CHECK(cells1 == slurp(r4.cells_csv_path));

    CHECK(trials1.rfind(detail::trials_csv_header() + "\n", 0) == 0);
    CHECK(std::count(trials1.begin(), trials1.end(), '\n') == 9); // header + 8 trials
    CHECK(cells1.rfind(detail::cells_csv_header() + "\n", 0) == 0);
    CHECK(std::count(cells1.begin(), cells1.end(), '\n') == 3);

    CHECK(r1.records.size() == 8);
    CHECK(r1.total_errors == 0);
    CHECK(r1.total_violations == 0);

    auto manifest = nlohmann::json::parse(slurp(r1.manifest_path));
    CHECK(manifest["effective"]["base_seed"] == 7);
    CHECK(manifest["effective"]["threads"] == 1);
    CHECK(manifest["config"]["base_seed"] == "7");
    CHECK(manifest["cells"].size() == 2);
    CHECK(manifest["cells"][0]["trials"] == 4);
    CHECK(manifest["outputs"]["trials_csv"] == "trials.csv");
    CHECK(manifest["total_errors"] == 0);

    for (const auto& dir : {d1, d2, d4}) std::filesystem::remove_all(dir);
}

TEST_CASE("an empty grid still writes well-formed outputs") {
    auto dir = fresh_dir("empty");
    ExperimentConfig cfg;
    cfg.trials_per_cell = 0;
    cfg.out_dir = dir.string();

    ExperimentResult res = run_experiment(cfg);
    CHECK(res.records.empty());
    CHECK(res.total_errors == 0);
    CHECK(slurp(res.trials_csv_path) == detail::trials_csv_header() + "\n");
    CHECK(slurp(res.cells_csv_path) == detail::cells_csv_header() + "\n");
    auto manifest = nlohmann::json::parse(slurp(res.manifest_path));
    CHECK(manifest["cells"].empty());
    std::filesystem::remove_all(dir);
}

TEST_CASE("an unwritable output directory fails fast") {
    ExperimentConfig cfg;
    cfg.trials_per_cell = 1;
    cfg.m_list = {4};
    cfg.n_list = {4};
    cfg.k_list = {1};
    cfg.snr_list = {inf};
    cfg.out_dir = "/dev/null/sub"; // /dev/null is not a directory
    CHECK_THROWS_AS(run_experiment(cfg), io_error);
}

TEST_CASE("csv escaping quotes only when needed") {
    CHECK(detail::csv_escape("plain") == "plain");
    CHECK(detail::csv_escape("a,b") == "\"a,b\"");
    CHECK(detail::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(detail::csv_escape("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("sufficient-condition trials always recover") {
    // Whenever the sufficient verdict holds on a trial the solver must land
    // the full support. Mixed noise levels make the verdict flip both ways.
    auto dir = fresh_dir("soundness");
    ExperimentConfig cfg;
    cfg.base_seed = 2026;
    cfg.trials_per_cell = 10;
    cfg.m_list = {10};
    cfg.n_list = {10};
    cfg.k_list = {1, 2};
    cfg.snr_list = {4.0, 64.0, 1024.0};
    cfg.instance_list = {"perturbed_identity:0.3"};
    cfg.out_dir = dir.string();

    ExperimentResult res = run_experiment(cfg);
    REQUIRE(res.total_errors == 0);
    CHECK(res.total_violations == 0);

    int guaranteed = 0;
    for (const auto& rec : res.records) {
        const auto& suff = detail::verdict_of(rec.classification, ConditionId::Thm1Sufficient);
        if (suff.applicable && suff.holds) {
            ++guaranteed;
            CHECK(rec.exact);
        }
    }
    CHECK(guaranteed > 0); // the property must not hold vacuously
    std::filesystem::remove_all(dir);
}

TEST_CASE("recovery rate rises with snr on the identity sweep") {
    auto dir = fresh_dir("monotone");
    ExperimentConfig cfg;
    cfg.base_seed = 5;
    cfg.trials_per_cell = 40;
    cfg.m_list = {10};
    cfg.n_list = {10};
    cfg.k_list = {2};
    cfg.snr_list = {1.0, 16.0, 256.0};
    cfg.instance_list = {"perturbed_identity:0"};
    cfg.diagnostics = false;
    cfg.exact_delta = false;
    cfg.out_dir = dir.string();

    ExperimentResult res = run_experiment(cfg);
    REQUIRE(res.total_errors == 0);
    int exact_by_cell[3] = {0, 0, 0};
    for (const auto& rec : res.records)
        if (rec.exact) ++exact_by_cell[rec.cell_id];
    CHECK(exact_by_cell[0] <= exact_by_cell[1]);
    CHECK(exact_by_cell[1] <= exact_by_cell[2]);
    CHECK(exact_by_cell[2] == 40); // at snr 256 the identity never misses
    std::filesystem::remove_all(dir);
}

TEST_CASE("calibration corpus covers the floor and stays sane") {
    CalibrationResult cal = calibrate_c(3, 1);
    CHECK(cal.trials == 90); // 5 alphas x 2 sizes x 3 sparsities x 3 multipliers
    CHECK(cal.rows.size() == 90);
    CHECK(cal.zero_delta_trials == 18);
    CHECK(cal.zero_delta_failures == 0); // no error mass in the delta -> 0 limit
    CHECK(cal.c_star >= 0.0);
    CHECK(std::isfinite(cal.c_star));

    for (const auto& row : cal.rows) {
        if (row.alpha == 0.0) {
            CHECK(std::isinf(row.snr_target));
            CHECK(row.ratio == 0.0);
        } else if (row.delta_2k > 0.0) {
            // target sits at the requested multiple of the floor (kappa = 1)
            CHECK_THAT(row.snr_target,
                       Catch::Matchers::WithinRel(
                           row.floor_multiplier * std::pow(row.delta_2k, -1.5), 1e-12));
        }
    }

    std::string csv = calibration_csv(cal);
    CHECK(csv.rfind("alpha,n,k,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 91);
    CHECK(calibration_csv(calibrate_c(3, 1)) == csv); // seeded, so reproducible
    CHECK_THROWS_AS(calibrate_c(3, 0), input_domain_error);
}
