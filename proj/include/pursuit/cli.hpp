#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pursuit/conditions.hpp"
#include "pursuit/harness.hpp"
#include "pursuit/io.hpp"
#include "pursuit/metrics.hpp"
#include "pursuit/omp.hpp"
#include "pursuit/synth.hpp"
#include "pursuit/version.hpp"

namespace pursuit {

namespace detail {

inline std::string verdict_word(const ConditionVerdict& cv) {
    if (!cv.applicable) return "na";
    return cv.holds ? "holds" : "fail";
}

inline void print_verdicts(std::ostream& out, const ClassificationReport& rep) {
    out << "condition_id,holds,threshold,actual,margin\n";
    for (const auto& cv : rep.verdicts) {
        if (!cv.applicable) continue;
        out << to_string(cv.id) << ',' << (cv.holds ? "1" : "0") << ','
            << format_double(cv.threshold) << ',' << format_double(cv.actual) << ','
            << format_double(cv.margin) << '\n';
    }
    for (const auto& cv : rep.verdicts)
        out << to_string(cv.id) << '=' << verdict_word(cv) << '\n';
    out << "gap_region=" << (rep.gap_region ? "1" : "0") << '\n';
}

} // namespace detail

// Parses `args` (no program name) and runs one subcommand. Returns the
// process exit code: 0 success, 1 failure, 2 for an enumeration that would
// blow the subset cap.
inline int cli_dispatch(const std::vector<std::string>& args, std::ostream& out,
                        std::ostream& err) {
    CLI::App app{"sparse support recovery via orthogonal matching pursuit"};
    app.require_subcommand(1);

    // ---- run ----
    auto* run = app.add_subcommand("run", "run the pursuit loop on a measurement file pair");
    std::string run_matrix, run_y, run_trace_out;
    int run_iterations = 0;
    double run_residual_eps = -1.0, run_correlation_eps = -1.0;
    bool run_json = false;
    run->add_option("--matrix", run_matrix, "measurement matrix file")->required();
    run->add_option("--y", run_y, "observation vector file")->required();
    auto* opt_iter = run->add_option("--iterations", run_iterations, "stop after this many picks");
    auto* opt_res = run->add_option("--residual-eps", run_residual_eps,
                                    "stop once the residual norm drops to this");
    auto* opt_corr = run->add_option("--correlation-eps", run_correlation_eps,
                                     "stop once the peak residual correlation drops to this");
    run->add_option("--trace-out", run_trace_out, "write the iteration trace to this file");
    run->add_flag("--json", run_json, "machine-readable output");

    // ---- rip ----
    auto* rip = app.add_subcommand("rip", "exact restricted isometry constant of one order");
    std::string rip_matrix;
    int rip_order = 0;
    std::uint64_t rip_cap = default_subset_cap;
    bool rip_csv = false;
    rip->add_option("--matrix", rip_matrix, "measurement matrix file")->required();
    rip->add_option("--order", rip_order, "subset size")->required();
    rip->add_option("--cap", rip_cap, "refuse enumerations beyond this many subsets");
    rip->add_flag("--csv", rip_csv, "emit a full-precision csv row instead of the summary line");

    // ---- check ----
    auto* check = app.add_subcommand(
        "check", "classify an instance against the recovery conditions");
    std::string check_matrix, check_signal, check_noise;
    std::uint64_t check_cap = default_subset_cap;
    check->add_option("--matrix", check_matrix, "measurement matrix file")->required();
    check->add_option("--signal", check_signal, "dense signal vector file")->required();
    check->add_option("--noise", check_noise, "noise vector file (omit for noise-free)");
    check->add_option("--cap", check_cap, "skip constants whose enumeration exceeds this");

    // ---- counterexample ----
    auto* cx = app.add_subcommand(
        "counterexample", "build the identity-matrix instance that defeats the noise-free "
                          "intuition and run the pursuit on it");
    int cx_k = 0, cx_m = 0;
    double cx_eps = 0.0;
    std::string cx_out_dir;
    std::uint64_t cx_cap = default_subset_cap;
    cx->add_option("--k", cx_k, "sparsity level")->required();
    cx->add_option("--m", cx_m, "ambient dimension (default k + 1)");
    cx->add_option("--eps", cx_eps, "noise bump above the signal magnitude (default 0: tie)");
    cx->add_option("--out-dir", cx_out_dir, "write phi/x/v/y text files and a manifest here");
    cx->add_option("--cap", cx_cap, "subset cap for the exact constant");

    // ---- experiment ----
    auto* exp = app.add_subcommand("experiment", "run a seeded trial grid from a config file");
    std::string exp_config, exp_out_dir, exp_diag;
    std::optional<std::uint64_t> exp_seed, exp_cap;
    std::optional<int> exp_trials, exp_threads;
    exp->add_option("--config", exp_config, "key = value grid description")->required();
    exp->add_option("--out-dir", exp_out_dir, "override the configured output directory");
    exp->add_option("--seed", exp_seed, "override the configured base seed");
    exp->add_option("--trials", exp_trials, "override trials per cell");
    exp->add_option("--threads", exp_threads, "override worker thread count");
    exp->add_option("--cap", exp_cap, "override the subset enumeration cap");
    exp->add_option("--diagnostics", exp_diag, "override per-iteration checks: on|off")
        ->check(CLI::IsMember({"on", "off"}));

    // ---- calibrate-c ----
    auto* cal = app.add_subcommand(
        "calibrate-c", "estimate the error-rate constant on a controlled-isometry corpus");
    std::uint64_t cal_seed = 1;
    int cal_trials = 5;
    std::string cal_out_dir;
    cal->add_option("--seed", cal_seed, "base seed");
    cal->add_option("--trials", cal_trials, "trials per corpus cell");
    cal->add_option("--out-dir", cal_out_dir, "write calibration.csv here");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("pursuit");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        // CLI11 returns its own exit-code family; the documented contract is
        // 0 for help, 1 for every usage error.
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) {
            int rules = (opt_iter->count() ? 1 : 0) + (opt_res->count() ? 1 : 0) +
                        (opt_corr->count() ? 1 : 0);
            if (rules != 1) {
                err << "run: give exactly one of --iterations, --residual-eps, "
                       "--correlation-eps\n";
                return 1;
            }
            StoppingRule rule = opt_iter->count() ? StoppingRule::fixed_iterations(run_iterations)
                                : opt_res->count()
                                    ? StoppingRule::residual_norm(run_residual_eps)
                                    : StoppingRule::correlation_norm(run_correlation_eps);
            Matrix phi = read_matrix_file(run_matrix);
            Vector y = read_vector_file(run_y);

            RecoveryTrace trace;
            try {
                trace = omp_run(phi, y, rule);
            } catch (const omp_degenerate_error& e) {
                err << "run: " << e.what() << '\n';
                if (!run_trace_out.empty() && e.partial_trace) {
                    std::ofstream tf(run_trace_out);
                    tf << serialize_trace(*e.partial_trace);
                }
                return 1;
            }

            if (!run_trace_out.empty()) {
                std::ofstream tf(run_trace_out);
                if (!tf)
                    throw io_error("cannot open trace file '" + run_trace_out + "'");
                tf << serialize_trace(trace);
                if (!tf)
                    throw io_error("write failed on '" + run_trace_out + "'");
            }
            if (run_json) {
                nlohmann::json j;
                j["m"] = trace.m;
                j["n"] = trace.n;
                j["iterations"] = trace.iterations.size();
                j["stop_reason"] = to_string(trace.stop_reason);
                j["support"] = trace.final_support.values();
                std::vector<double> est(trace.final_estimate.data(),
                                        trace.final_estimate.data() + trace.final_estimate.size());
                j["estimate"] = est;
                j["residual_norm"] = trace.final_residual.norm();
                std::vector<int> ties;
                for (const auto& it : trace.iterations)
                    if (it.tie_detected) ties.push_back(it.k);
                j["tie_iterations"] = ties;
                out << j.dump(2) << '\n';
            } else {
                out << serialize_trace(trace);
            }
            return 0;
        }

        if (rip->parsed()) {
            Matrix phi = read_matrix_file(rip_matrix);
            RipEstimate est = exact_rip_constant(phi, rip_order, rip_cap);
            if (rip_csv) {
                out << "order,delta,witness,subsets_examined,saturated\n";
                out << est.to_csv_row() << ',' << (est.saturated ? "1" : "0") << '\n';
            } else {
                out << "order=" << est.order << " delta=" << format_double_brief(est.delta)
                    << " witness=" << est.witness.to_string()
                    << " subsets=" << est.subsets_examined
                    << (est.saturated ? " saturated" : "") << '\n';
            }
            return 0;
        }

        if (check->parsed()) {
            Matrix phi = read_matrix_file(check_matrix);
            Vector dense = read_vector_file(check_signal);
            SparseSignal x = SparseSignal::from_dense(dense);
            Vector v;
            if (check_noise.empty())
                v = Vector::Zero(phi.rows());
            else
                v = read_vector_file(check_noise);

            const int n = static_cast<int>(phi.cols());
            const int k = x.sparsity();
            std::vector<int> orders;
            std::vector<int> skipped;
            for (int order : {1, k, k + 1, 2 * k}) {
                if (order < 1 || order > n) continue;
                if (binomial_saturating(n, order) > check_cap)
                    skipped.push_back(order);
                else
                    orders.push_back(order);
            }
            std::map<int, double> deltas;
            for (const auto& [order, est] : rip_table(phi, orders, check_cap))
                deltas[order] = est.delta;

            ClassificationReport rep = classify_instance(phi, x, v, deltas);
            out << "m=" << phi.rows() << " n=" << n << " k=" << k << '\n';
            out << "SNR=" << format_double_brief(rep.metrics.snr) << '\n';
            out << "MAR=" << format_double_brief(rep.metrics.mar) << '\n';
            out << "kappa=" << format_double_brief(rep.metrics.kappa) << '\n';
            for (const auto& [order, delta] : deltas)
                out << "delta_" << order << '=' << format_double_brief(delta) << '\n';
            for (int order : skipped)
                out << "delta_" << order << "=skipped:capacity\n";
            detail::print_verdicts(out, rep);
            return 0;
        }

        if (cx->parsed()) {
            if (cx_m == 0) cx_m = cx_k + 1;
            AppendixInstance inst = appendix_a_instance(cx_k, cx_m, cx_eps);
            InstanceMetrics metrics = compute_instance_metrics(inst.phi, inst.x, inst.v);
            RipEstimate est = exact_rip_constant(inst.phi, cx_k + 1, cx_cap);

            RecoveryTrace trace =
                omp_run(inst.phi, inst.y, StoppingRule::fixed_iterations(cx_k));
            RecoveryReport rr =
                recovery_report(inst.x, trace.final_support, trace.final_estimate);
            bool tie = false;
            for (const auto& it : trace.iterations) tie = tie || it.tie_detected;

            out << "m=" << cx_m << " k=" << cx_k << " eps=" << format_double_brief(cx_eps)
                << '\n';
            out << "SNR=" << format_double(metrics.snr) << '\n';
            out << "MAR=" << format_double(metrics.mar) << '\n';
            out << "delta_k1=" << format_double(est.delta) << '\n';
            double thr = sufficient_snr_threshold(cx_k, est.delta, metrics.mar);
            out << "sufficient_sqrt_snr_threshold=" << format_double(thr) << '\n';
            out << "sqrt_snr=" << format_double(std::sqrt(metrics.snr)) << '\n';
            out << "first_pick=" << trace.iterations.front().selected_index << '\n';
            out << "tie_detected=" << (tie ? "1" : "0") << '\n';
            out << "support=" << trace.final_support.to_string() << '\n';
            out << "rho_error=" << format_double(rr.rho_error) << '\n';
            out << "exact_recovery=" << (rr.exact ? "1" : "0") << '\n';

            if (!cx_out_dir.empty()) {
                namespace fs = std::filesystem;
                std::error_code ec;
                fs::create_directories(cx_out_dir, ec);
                if (ec)
                    throw io_error("cannot create '" + cx_out_dir + "': " + ec.message());
                fs::path dir(cx_out_dir);
                write_matrix_file((dir / "phi.txt").string(), inst.phi);
                write_vector_file((dir / "x.txt").string(), inst.x.to_dense());
                write_vector_file((dir / "v.txt").string(), inst.v);
                write_vector_file((dir / "y.txt").string(), inst.y);
                std::ofstream mf(dir / "instance.txt");
                if (!mf)
                    throw io_error("cannot open instance manifest under '" + cx_out_dir + "'");
                mf << "kind=identity_tie\n";
                mf << "m=" << cx_m << "\nk=" << cx_k << "\neps=" << format_double(cx_eps)
                   << '\n';
                mf << "snr=" << format_double(metrics.snr) << '\n';
                mf << "mar=" << format_double(metrics.mar) << '\n';
                mf << "delta_k1=" << format_double(est.delta) << '\n';
                mf << "rho_error=" << format_double(rr.rho_error) << '\n';
                mf << "tie_detected=" << (tie ? "1" : "0") << '\n';
                if (!mf)
                    throw io_error("write failed on instance manifest");
                out << "wrote " << (dir / "phi.txt").string() << " x.txt v.txt y.txt "
                    << "instance.txt\n";
            }
            return 0;
        }

        if (exp->parsed()) {
            ExperimentConfig cfg = parse_experiment_config_file(exp_config);
            if (!exp_out_dir.empty()) cfg.out_dir = exp_out_dir;
            if (exp_seed) cfg.base_seed = *exp_seed;
            if (exp_trials) cfg.trials_per_cell = *exp_trials;
            if (exp_threads) cfg.threads = *exp_threads;
            if (exp_cap) cfg.cap = *exp_cap;
            if (!exp_diag.empty()) cfg.diagnostics = exp_diag == "on";

            ExperimentResult result = run_experiment(cfg);
            out << "cells=" << result.summaries.size() << " trials="
                << result.summaries.size() * static_cast<std::size_t>(cfg.trials_per_cell)
                << " errors=" << result.total_errors
                << " violations=" << result.total_violations << '\n';
            out << "trials_csv=" << result.trials_csv_path << '\n';
            out << "cells_csv=" << result.cells_csv_path << '\n';
            out << "manifest=" << result.manifest_path << '\n';
            return result.total_violations > 0 ? 1 : 0;
        }

        if (cal->parsed()) {
            CalibrationResult result = calibrate_c(cal_seed, cal_trials);
            out << "trials=" << result.trials << '\n';
            out << "zero_delta_trials=" << result.zero_delta_trials
                << " zero_delta_failures=" << result.zero_delta_failures << '\n';
            out << "recovery_failures=" << result.recovery_failures << '\n';
            out << "c_star=" << format_double(result.c_star) << '\n';
            if (!cal_out_dir.empty()) {
                namespace fs = std::filesystem;
                std::error_code ec;
                fs::create_directories(cal_out_dir, ec);
                if (ec)
                    throw io_error("cannot create '" + cal_out_dir + "': " + ec.message());
                fs::path csv = fs::path(cal_out_dir) / "calibration.csv";
                std::ofstream cf(csv);
                if (!cf)
                    throw io_error("cannot open '" + csv.string() + "'");
                cf << calibration_csv(result);
                if (!cf)
                    throw io_error("write failed on '" + csv.string() + "'");
                out << "calibration_csv=" << csv.string() << '\n';
            }
            return 0;
        }
    } catch (const capacity_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    err << "error: no subcommand handled\n";
    return 1;
}

} // namespace pursuit
