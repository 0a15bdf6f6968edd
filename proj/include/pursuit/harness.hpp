#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pursuit/conditions.hpp"
#include "pursuit/diagnostics.hpp"
#include "pursuit/io.hpp"
#include "pursuit/metrics.hpp"
#include "pursuit/omp.hpp"
#include "pursuit/synth.hpp"
#include "pursuit/version.hpp"

namespace pursuit {

// How a cell's measurement matrix is produced.
struct InstanceKind {
    enum class Kind { Gaussian, AppendixA, PerturbedIdentity };

    Kind kind = Kind::Gaussian;
    double param = 0.0; // AppendixA: eps; PerturbedIdentity: alpha

    static InstanceKind gaussian() { return {Kind::Gaussian, 0.0}; }
    static InstanceKind appendix_a(double eps) {
        if (!(eps >= 0.0) || !std::isfinite(eps))
            throw input_domain_error("InstanceKind: appendix eps must be nonnegative");
        return {Kind::AppendixA, eps};
    }
    // Square matrix whose Gram is I + alpha * S for a random symmetric S with
    // zero diagonal and unit spectral norm, so every RIP constant is <= alpha.
    static InstanceKind perturbed_identity(double alpha) {
        if (!(alpha >= 0.0 && alpha < 1.0))
            throw input_domain_error("InstanceKind: alpha must lie in [0, 1)");
        return {Kind::PerturbedIdentity, alpha};
    }
};

struct CellSpec {
    int m = 0, n = 0, k = 0;
    double snr_target = std::numeric_limits<double>::infinity(); // inf = noise-free
    SignalProfile profile = SignalProfile::equal();
    SignMode sign_mode = SignMode::RandomSigns;
    NoiseMode noise_mode = NoiseMode::isotropic_gaussian();
    InstanceKind instance = InstanceKind::gaussian();
    // labels echoed verbatim into CSV/manifest
    std::string profile_label = "equal";
    std::string sign_label = "random";
    std::string noise_label = "gaussian";
    std::string instance_label = "gaussian";
};

struct ExperimentConfig {
    std::uint64_t base_seed = 0;
    int trials_per_cell = 0;
    std::vector<int> m_list, n_list, k_list;
    std::vector<double> snr_list;
    std::vector<std::string> profile_list{"equal"};
    std::vector<std::string> sign_list{"random"};
    std::vector<std::string> noise_list{"gaussian"};
    std::vector<std::string> instance_list{"gaussian"};
    bool diagnostics = true;
    bool exact_delta = true;
    std::uint64_t cap = default_subset_cap;
    int threads = 1;
    std::string out_dir = "results";
    std::vector<std::pair<std::string, std::string>> raw; // as parsed, for the manifest
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

inline long long parse_int(const std::string& tok, const char* what) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw io_error(std::string(what) + ": bad integer '" + tok + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& tok, const char* what) {
    try {
        std::size_t used = 0;
        unsigned long long v = std::stoull(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw io_error(std::string(what) + ": bad unsigned integer '" + tok + "'");
    }
}

inline double parse_real(const std::string& tok, const char* what) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw io_error(std::string(what) + ": bad real '" + tok + "'");
    }
}

inline bool parse_switch(const std::string& tok, const char* what) {
    if (tok == "on" || tok == "true" || tok == "1") return true;
    if (tok == "off" || tok == "false" || tok == "0") return false;
    throw io_error(std::string(what) + ": expected on/off, got '" + tok + "'");
}

inline double parse_snr_token(const std::string& tok) {
    if (tok == "inf" || tok == "noise-free")
        return std::numeric_limits<double>::infinity();
    double v = parse_real(tok, "snr");
    if (!(v > 0.0))
        throw io_error("snr: values must be positive (or 'inf'/'noise-free')");
    return v;
}

inline SignalProfile parse_profile(const std::string& label) {
    auto parts = split(label, ':');
    if (parts.empty()) throw io_error("profile: empty token");
    if (parts[0] == "equal") {
        if (parts.size() == 1) return SignalProfile::equal();
        if (parts.size() == 2) return SignalProfile::equal(parse_real(parts[1], "profile"));
    } else if (parts[0] == "uniform" && parts.size() == 3) {
        return SignalProfile::uniform(parse_real(parts[1], "profile"),
                                      parse_real(parts[2], "profile"));
    } else if (parts[0] == "gaussian" && parts.size() == 2) {
        return SignalProfile::gaussian(parse_real(parts[1], "profile"));
    }
    throw io_error("profile: unknown spec '" + label +
                   "' (want equal[:V] | uniform:LO:HI | gaussian:SIGMA)");
}

inline SignMode parse_sign_mode(const std::string& label) {
    if (label == "positive") return SignMode::AllPositive;
    if (label == "random") return SignMode::RandomSigns;
    throw io_error("sign_mode: unknown value '" + label + "' (want positive | random)");
}

inline NoiseMode parse_noise_mode(const std::string& label) {
    auto parts = split(label, ':');
    if (!parts.empty()) {
        if (parts[0] == "gaussian" && parts.size() == 1) return NoiseMode::isotropic_gaussian();
        if (parts[0] == "basis" && parts.size() == 2)
            return NoiseMode::fixed_basis(static_cast<int>(parse_int(parts[1], "noise_mode")));
        if (parts[0] == "adversarial" && parts.size() == 1)
            return NoiseMode::adversarial_off_support();
    }
    throw io_error("noise_mode: unknown value '" + label +
                   "' (want gaussian | basis:IDX | adversarial)");
}

inline InstanceKind parse_instance(const std::string& label) {
    auto parts = split(label, ':');
    if (!parts.empty()) {
        if (parts[0] == "gaussian" && parts.size() == 1) return InstanceKind::gaussian();
        if (parts[0] == "appendix_a" && parts.size() <= 2)
            return InstanceKind::appendix_a(parts.size() == 2 ? parse_real(parts[1], "instance")
                                                              : 0.0);
        if (parts[0] == "perturbed_identity" && parts.size() == 2)
            return InstanceKind::perturbed_identity(parse_real(parts[1], "instance"));
    }
    throw io_error("instance: unknown value '" + label +
                   "' (want gaussian | appendix_a:EPS | perturbed_identity:ALPHA)");
}

} // namespace detail

// Flat key=value format, one pair per line, '#' starts a comment, commas make
// lists. Unknown and duplicate keys are errors: a silently ignored typo in an
// experiment spec costs hours.
inline ExperimentConfig parse_experiment_config(std::istream& in) {
    ExperimentConfig cfg;
    std::map<std::string, bool> seen;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw io_error("config: expected key = value, got '" + line + "'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (seen[key])
            throw io_error("config: duplicate key '" + key + "'");
        seen[key] = true;
        cfg.raw.emplace_back(key, value);

        auto ints = [&](std::vector<int>& dst) {
            dst.clear();
            for (const auto& tok : detail::split(value, ','))
                dst.push_back(static_cast<int>(detail::parse_int(tok, key.c_str())));
        };
        if (key == "base_seed") cfg.base_seed = detail::parse_u64(value, "base_seed");
        else if (key == "trials_per_cell")
            cfg.trials_per_cell = static_cast<int>(detail::parse_int(value, "trials_per_cell"));
        else if (key == "m") ints(cfg.m_list);
        else if (key == "n") ints(cfg.n_list);
        else if (key == "k") ints(cfg.k_list);
        else if (key == "snr") {
            cfg.snr_list.clear();
            for (const auto& tok : detail::split(value, ','))
                cfg.snr_list.push_back(detail::parse_snr_token(tok));
        } else if (key == "profile") cfg.profile_list = detail::split(value, ',');
        else if (key == "sign_mode") cfg.sign_list = detail::split(value, ',');
        else if (key == "noise_mode") cfg.noise_list = detail::split(value, ',');
        else if (key == "instance") cfg.instance_list = detail::split(value, ',');
        else if (key == "diagnostics") cfg.diagnostics = detail::parse_switch(value, "diagnostics");
        else if (key == "exact_delta") cfg.exact_delta = detail::parse_switch(value, "exact_delta");
        else if (key == "cap") cfg.cap = detail::parse_u64(value, "cap");
        else if (key == "threads")
            cfg.threads = static_cast<int>(detail::parse_int(value, "threads"));
        else if (key == "out_dir") cfg.out_dir = value;
        else
            throw io_error("config: unknown key '" + key + "'");
    }
    if (cfg.trials_per_cell < 0)
        throw io_error("config: trials_per_cell must be nonnegative");
    if (cfg.threads < 1)
        throw io_error("config: threads must be at least 1");
    return cfg;
}

inline ExperimentConfig parse_experiment_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open config file '" + path + "'");
    return parse_experiment_config(in);
}

// Cartesian product of the config lists, in a fixed nesting order
// (m, n, k, snr, profile, sign, noise, instance), validated per cell.
inline std::vector<CellSpec> expand_cells(const ExperimentConfig& cfg) {
    std::vector<CellSpec> cells;
    for (int m : cfg.m_list)
        for (int n : cfg.n_list)
            for (int k : cfg.k_list)
                for (double snr : cfg.snr_list)
                    for (const auto& profile : cfg.profile_list)
                        for (const auto& sign : cfg.sign_list)
                            for (const auto& noise : cfg.noise_list)
                                for (const auto& instance : cfg.instance_list) {
                                    CellSpec cell;
                                    cell.m = m;
                                    cell.n = n;
                                    cell.k = k;
                                    cell.snr_target = snr;
                                    cell.profile_label = profile;
                                    cell.profile = detail::parse_profile(profile);
                                    cell.sign_label = sign;
                                    cell.sign_mode = detail::parse_sign_mode(sign);
                                    cell.noise_label = noise;
                                    cell.noise_mode = detail::parse_noise_mode(noise);
                                    cell.instance_label = instance;
                                    cell.instance = detail::parse_instance(instance);
                                    cells.push_back(cell);
                                }

    for (const auto& cell : cells) {
        if (cell.m < 1 || cell.n < 1)
            throw input_domain_error("cell: dimensions must be positive");
        if (cell.k < 1 || cell.k > std::min(cell.m, cell.n))
            throw input_domain_error("cell: need 1 <= k <= min(m, n)");
        if (cell.instance.kind == InstanceKind::Kind::AppendixA) {
            if (cell.n != cell.m)
                throw input_domain_error("cell: appendix_a instances are square, set n = m");
            if (cell.m < cell.k + 1)
                throw input_domain_error("cell: appendix_a needs m >= k + 1");
        }
        if (cell.instance.kind == InstanceKind::Kind::PerturbedIdentity && cell.n != cell.m)
            throw input_domain_error("cell: perturbed_identity instances are square, set n = m");
        if (cfg.exact_delta) {
            for (int order : {1, cell.k, cell.k + 1, 2 * cell.k}) {
                if (order > cell.n) continue;
                std::uint64_t count = binomial_saturating(cell.n, order);
                if (count > cfg.cap)
                    throw capacity_error("cell: exact delta of order " + std::to_string(order) +
                                         " needs " + std::to_string(count) +
                                         " subsets, cap is " + std::to_string(cfg.cap));
            }
        }
    }
    return cells;
}

struct TrialRecord {
    int cell_id = 0;
    int trial_index = 0;
    std::uint64_t trial_ordinal = 0;
    std::uint64_t seed = 0;
    int m = 0, n = 0, k = 0;
    double snr_target = 0.0;
    double snr_actual = std::numeric_limits<double>::quiet_NaN();
    double mar = std::numeric_limits<double>::quiet_NaN();
    double kappa = std::numeric_limits<double>::quiet_NaN();
    std::map<int, double> deltas;
    double rho_error = std::numeric_limits<double>::quiet_NaN();
    double l2_distortion = std::numeric_limits<double>::quiet_NaN();
    bool exact = false;
    ClassificationReport classification;
    int violations = 0;
    bool diagnostics_ran = false;
    std::string outcome = "ok";
    double compute_seconds = 0.0;
};

namespace detail {

// Square root factor of I + alpha * S: symmetric S, zero diagonal, entries
// uniform on [-1,1], scaled to unit spectral norm. alpha = 0 short-circuits
// to the exact identity so the delta = 0 regime is exact, not 1e-16 fuzz.
inline Matrix perturbed_identity_matrix(int n, double alpha, std::uint64_t seed) {
    if (alpha == 0.0)
        return Matrix::Identity(n, n);
    CounterRng rng(seed);
    Matrix s = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            s(i, j) = s(j, i) = 2.0 * rng.next_uniform() - 1.0;
    auto [lo, hi] = symmetric_eigen_extremes(s);
    double norm = std::max(std::abs(lo), std::abs(hi));
    if (norm == 0.0)
        return Matrix::Identity(n, n);
    Matrix gram = Matrix::Identity(n, n) + (alpha / norm) * s;
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    return es.operatorSqrt();
}

} // namespace detail

struct TrialFlags {
    bool diagnostics = true;
    bool exact_delta = true;
    std::uint64_t cap = default_subset_cap;
};

// One cell trial, a pure function of (spec, ordinal, base_seed, flags).
// Library errors are recorded in `outcome`, never thrown: a sweep survives
// its degenerate corners and reports them.
inline TrialRecord run_trial(const CellSpec& spec, int cell_id, int trial_index,
                             std::uint64_t trial_ordinal, std::uint64_t base_seed,
                             const TrialFlags& flags) {
    const auto t0 = std::chrono::steady_clock::now();
    TrialRecord rec;
    rec.cell_id = cell_id;
    rec.trial_index = trial_index;
    rec.trial_ordinal = trial_ordinal;
    rec.seed = derive_seed(base_seed, trial_ordinal);
    rec.m = spec.m;
    rec.n = spec.n;
    rec.k = spec.k;
    rec.snr_target = spec.snr_target;

    try {
        const std::uint64_t matrix_seed = derive_seed(rec.seed, 1);
        const std::uint64_t signal_seed = derive_seed(rec.seed, 2);
        const std::uint64_t noise_seed = derive_seed(rec.seed, 3);

        Matrix phi;
        std::optional<SparseSignal> x;
        Vector v;
        switch (spec.instance.kind) {
            case InstanceKind::Kind::AppendixA: {
                auto inst = appendix_a_instance(spec.k, spec.m, spec.instance.param);
                phi = std::move(inst.phi);
                x = std::move(inst.x);
                v = std::move(inst.v);
                break;
            }
            case InstanceKind::Kind::PerturbedIdentity:
                phi = detail::perturbed_identity_matrix(spec.n, spec.instance.param, matrix_seed);
                break;
            case InstanceKind::Kind::Gaussian:
                phi = gaussian_matrix(spec.m, spec.n, matrix_seed);
                break;
        }
        if (!x)
            x = sparse_signal(spec.n, spec.k, spec.profile, spec.sign_mode, signal_seed);
        if (v.size() == 0) {
            if (std::isinf(spec.snr_target))
                v = Vector::Zero(spec.m);
            else
                v = noise_at_snr(phi, *x, spec.snr_target, spec.noise_mode, noise_seed);
        }
        const Vector y = phi * x->to_dense() + v;

        RecoveryTrace trace = omp_run(phi, y, StoppingRule::fixed_iterations(spec.k));

        InstanceMetrics metrics = compute_instance_metrics(phi, *x, v);
        rec.snr_actual = metrics.snr;
        rec.mar = metrics.mar;
        rec.kappa = metrics.kappa;

        RecoveryReport rr = recovery_report(*x, trace.final_support, trace.final_estimate);
        rec.rho_error = rr.rho_error;
        rec.l2_distortion = rr.l2_distortion;
        rec.exact = rr.exact;

        std::map<int, double> deltas;
        if (flags.exact_delta) {
            for (auto& [order, est] :
                 rip_table(phi, {1, spec.k, spec.k + 1, 2 * spec.k}, flags.cap))
                deltas[order] = est.delta;
            rec.deltas = deltas;
        }
        rec.classification = classify_instance(phi, *x, v, deltas);

        if (flags.diagnostics && deltas.count(1) && deltas.count(spec.k) &&
            deltas.count(spec.k + 1)) {
            DiagnosticsReport diag = verify_iteration_inequalities(phi, *x, v, trace, deltas);
            rec.violations = diag.violations;
            rec.diagnostics_ran = true;
        }
    } catch (const capacity_error& e) {
        rec.outcome = std::string("error:capacity: ") + e.what();
    } catch (const degenerate_system_error& e) {
        rec.outcome = std::string("error:degenerate: ") + e.what();
    } catch (const consistency_error& e) {
        rec.outcome = std::string("error:consistency: ") + e.what();
    } catch (const input_domain_error& e) {
        rec.outcome = std::string("error:input: ") + e.what();
    }

    rec.compute_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

struct CellSummary {
    int cell_id = 0;
    CellSpec spec;
    int trials = 0;
    int errors = 0;
    int exact_count = 0;
    double rho_sum = 0.0;
    double rho_max = 0.0;
    double distortion_sum = 0.0;
    // per condition: [holds, applicable], indexed like the verdict list
    std::map<std::string, std::pair<int, int>> condition_tallies;
    int gap_count = 0;
    int violation_total = 0;
    double wall_seconds = 0.0; // manifest only: timing never enters the CSVs
};

struct ExperimentResult {
    std::vector<CellSummary> summaries;
    std::vector<TrialRecord> records; // in trial-ordinal order
    long long total_violations = 0;
    long long total_errors = 0;
    std::string trials_csv_path, cells_csv_path, manifest_path;
};

namespace detail {

inline std::string csv_bool(bool v) { return v ? "1" : "0"; }

inline std::string csv_verdict(const ConditionVerdict& cv) {
    return cv.applicable ? csv_bool(cv.holds) : "na";
}

inline const ConditionVerdict& verdict_of(const ClassificationReport& rep, ConditionId id) {
    for (const auto& cv : rep.verdicts)
        if (cv.id == id) return cv;
    static const ConditionVerdict missing{};
    return missing;
}

// The leading columns through `violations` are the documented schema; the
// trailing ones are run bookkeeping.
inline std::string trials_csv_header() {
    return "trial_id,seed,m,n,k,snr_target,snr_actual,mar,kappa,"
           "delta_1,delta_k,delta_k1,delta_2k,rho_error,l2_distortion,"
           "thm1_sufficient,thm2_necessary,remark_snr_gt_k,thm3_snr_floor,rip_shape_thm1,"
           "gap_region,violations,cell_id,trial_index,exact_recovery,outcome";
}

inline std::string csv_delta(const TrialRecord& rec, int order) {
    auto it = rec.deltas.find(order);
    return it == rec.deltas.end() ? "na" : format_double(it->second);
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline std::string trial_csv_row(const TrialRecord& rec) {
    std::ostringstream os;
    os << rec.trial_ordinal << ',' << rec.seed << ',' << rec.m << ',' << rec.n << ','
       << rec.k << ',' << format_double(rec.snr_target) << ',' << format_double(rec.snr_actual)
       << ',' << format_double(rec.mar) << ',' << format_double(rec.kappa) << ','
       << csv_delta(rec, 1) << ',' << csv_delta(rec, rec.k) << ',' << csv_delta(rec, rec.k + 1)
       << ',' << csv_delta(rec, 2 * rec.k) << ',' << format_double(rec.rho_error) << ','
       << format_double(rec.l2_distortion) << ','
       << csv_verdict(verdict_of(rec.classification, ConditionId::Thm1Sufficient)) << ','
       << csv_verdict(verdict_of(rec.classification, ConditionId::Thm2Necessary)) << ','
       << csv_verdict(verdict_of(rec.classification, ConditionId::RemarkSnrGtK)) << ','
       << csv_verdict(verdict_of(rec.classification, ConditionId::Thm3SnrFloor)) << ','
       << csv_verdict(verdict_of(rec.classification, ConditionId::RipShapeThm1)) << ','
       << csv_bool(rec.classification.gap_region) << ',' << rec.violations << ','
       << rec.cell_id << ',' << rec.trial_index << ',' << csv_bool(rec.exact) << ','
       << csv_escape(rec.outcome);
    return os.str();
}

inline std::string cells_csv_header() {
    return "cell_id,m,n,k,snr_target,profile,sign_mode,noise_mode,instance,trials,errors,"
           "exact_recovery_rate,mean_rho_error,max_rho_error,mean_l2_distortion,"
           "thm1_holds,thm1_applicable,thm2_holds,thm2_applicable,remark_holds,"
           "remark_applicable,thm3_holds,thm3_applicable,rip_shape_holds,"
           "rip_shape_applicable,gap_count,violations";
}

inline std::string cell_csv_row(const CellSummary& cs) {
    const int ok = cs.trials - cs.errors;
    auto tally = [&](const char* name) {
        auto it = cs.condition_tallies.find(name);
        static const std::pair<int, int> zero{0, 0};
        const auto& t = it == cs.condition_tallies.end() ? zero : it->second;
        return std::to_string(t.first) + "," + std::to_string(t.second);
    };
    std::ostringstream os;
    os << cs.cell_id << ',' << cs.spec.m << ',' << cs.spec.n << ',' << cs.spec.k << ','
       << format_double(cs.spec.snr_target) << ',' << csv_escape(cs.spec.profile_label) << ','
       << cs.spec.sign_label << ',' << csv_escape(cs.spec.noise_label) << ','
       << csv_escape(cs.spec.instance_label) << ',' << cs.trials << ',' << cs.errors << ','
       << format_double(ok > 0 ? static_cast<double>(cs.exact_count) / ok : 0.0) << ','
       << format_double(ok > 0 ? cs.rho_sum / ok : 0.0) << ',' << format_double(cs.rho_max)
       << ',' << format_double(ok > 0 ? cs.distortion_sum / ok : 0.0) << ','
       << tally("THM1_SUFFICIENT") << ',' << tally("THM2_NECESSARY") << ','
       << tally("REMARK_SNR_GT_K") << ',' << tally("THM3_SNR_FLOOR") << ','
       << tally("RIP_SHAPE_THM1") << ',' << cs.gap_count << ',' << cs.violation_total;
    return os.str();
}

} // namespace detail

// Runs the whole grid and writes trials.csv, cells.csv, and manifest.json
// under cfg.out_dir. Worker threads race only on an atomic ordinal counter;
// every record lands in its own slot and the files are written in ordinal
// order afterwards, so serial and parallel runs emit identical bytes
// (timing lives only in the manifest).
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    const std::vector<CellSpec> cells = expand_cells(cfg);
    const auto run_start = std::chrono::steady_clock::now();

    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec)
        throw io_error("cannot create output directory '" + cfg.out_dir + "': " + ec.message());

    ExperimentResult result;
    result.trials_csv_path = (fs::path(cfg.out_dir) / "trials.csv").string();
    result.cells_csv_path = (fs::path(cfg.out_dir) / "cells.csv").string();
    result.manifest_path = (fs::path(cfg.out_dir) / "manifest.json").string();

    // Fail on an unwritable destination before burning compute.
    std::ofstream trials_out(result.trials_csv_path);
    std::ofstream cells_out(result.cells_csv_path);
    std::ofstream manifest_out(result.manifest_path);
    if (!trials_out || !cells_out || !manifest_out)
        throw io_error("cannot open output files under '" + cfg.out_dir + "'");

    const long long total =
        static_cast<long long>(cells.size()) * static_cast<long long>(cfg.trials_per_cell);
    std::vector<std::optional<TrialRecord>> slots(static_cast<std::size_t>(total));
    TrialFlags flags{cfg.diagnostics, cfg.exact_delta, cfg.cap};

    auto work = [&](long long ordinal) {
        const int cell_id = static_cast<int>(ordinal / cfg.trials_per_cell);
        const int trial_index = static_cast<int>(ordinal % cfg.trials_per_cell);
        slots[static_cast<std::size_t>(ordinal)] =
            run_trial(cells[static_cast<std::size_t>(cell_id)], cell_id, trial_index,
                      static_cast<std::uint64_t>(ordinal), cfg.base_seed, flags);
    };

    if (total > 0) {
        if (cfg.threads <= 1) {
            for (long long i = 0; i < total; ++i) work(i);
        } else {
            std::atomic<long long> next{0};
            std::vector<std::thread> workers;
            std::vector<std::exception_ptr> failures(static_cast<std::size_t>(cfg.threads));
            for (int t = 0; t < cfg.threads; ++t) {
                workers.emplace_back([&, t] {
                    try {
                        for (;;) {
                            long long i = next.fetch_add(1);
                            if (i >= total) break;
                            work(i);
                        }
                    } catch (...) {
                        failures[static_cast<std::size_t>(t)] = std::current_exception();
                    }
                });
            }
            for (auto& w : workers) w.join();
            for (auto& f : failures)
                if (f) std::rethrow_exception(f);
        }
    }

    std::vector<CellSummary> summaries(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        summaries[c].cell_id = static_cast<int>(c);
        summaries[c].spec = cells[c];
    }

    trials_out << detail::trials_csv_header() << '\n';
    for (long long i = 0; i < total; ++i) {
        const TrialRecord& rec = *slots[static_cast<std::size_t>(i)];
        trials_out << detail::trial_csv_row(rec) << '\n';

        CellSummary& cs = summaries[static_cast<std::size_t>(rec.cell_id)];
        ++cs.trials;
        cs.wall_seconds += rec.compute_seconds;
        if (rec.outcome != "ok") {
            ++cs.errors;
            ++result.total_errors;
            continue;
        }
        cs.exact_count += rec.exact ? 1 : 0;
        cs.rho_sum += rec.rho_error;
        cs.rho_max = std::max(cs.rho_max, rec.rho_error);
        cs.distortion_sum += rec.l2_distortion;
        cs.gap_count += rec.classification.gap_region ? 1 : 0;
        cs.violation_total += rec.violations;
        result.total_violations += rec.violations;
        for (const auto& cv : rec.classification.verdicts) {
            auto& tally = cs.condition_tallies[to_string(cv.id)];
            if (cv.applicable) {
                ++tally.second;
                if (cv.holds) ++tally.first;
            }
        }
        result.records.push_back(rec);
    }
    if (!trials_out)
        throw io_error("write failed on '" + result.trials_csv_path + "'");

    cells_out << detail::cells_csv_header() << '\n';
    for (const auto& cs : summaries)
        cells_out << detail::cell_csv_row(cs) << '\n';
    if (!cells_out)
        throw io_error("write failed on '" + result.cells_csv_path + "'");

    nlohmann::json manifest;
    manifest["library_version"] = library_version;
    nlohmann::json config_echo = nlohmann::json::object();
    for (const auto& [key, value] : cfg.raw) config_echo[key] = value;
    manifest["config"] = config_echo;
    manifest["effective"] = {
        {"base_seed", cfg.base_seed},     {"trials_per_cell", cfg.trials_per_cell},
        {"diagnostics", cfg.diagnostics}, {"exact_delta", cfg.exact_delta},
        {"cap", cfg.cap},                 {"threads", cfg.threads},
    };
    nlohmann::json cell_list = nlohmann::json::array();
    for (const auto& cs : summaries) {
        cell_list.push_back({
            {"cell_id", cs.cell_id},
            {"m", cs.spec.m},
            {"n", cs.spec.n},
            {"k", cs.spec.k},
            {"snr_target", format_double(cs.spec.snr_target)},
            {"profile", cs.spec.profile_label},
            {"sign_mode", cs.spec.sign_label},
            {"noise_mode", cs.spec.noise_label},
            {"instance", cs.spec.instance_label},
            {"trials", cs.trials},
            {"errors", cs.errors},
            {"compute_seconds", cs.wall_seconds},
        });
    }
    manifest["cells"] = cell_list;
    manifest["outputs"] = {{"trials_csv", "trials.csv"}, {"cells_csv", "cells.csv"}};
    manifest["total_violations"] = result.total_violations;
    manifest["total_errors"] = result.total_errors;
    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
    manifest_out << manifest.dump(2) << '\n';
    if (!manifest_out)
        throw io_error("write failed on '" + result.manifest_path + "'");

    result.summaries = std::move(summaries);
    return result;
}

// ---- Theorem-3 constant calibration ----

struct CalibrationRow {
    double alpha = 0.0;
    int n = 0, k = 0;
    double floor_multiplier = 1.0;
    int trial_index = 0;
    std::uint64_t seed = 0;
    double delta_2k = 0.0;
    double snr_target = 0.0; // inf in the delta = 0 cells
    double rho_error = 0.0;
    double ratio = 0.0; // rho / (kappa^2 sqrt(delta_2k)); 0 when delta = 0
};

struct CalibrationResult {
    std::vector<CalibrationRow> rows;
    double c_star = 0.0;          // max ratio over delta > 0 trials
    int trials = 0;
    int recovery_failures = 0;    // trials with rho > 0
    int zero_delta_trials = 0;
    int zero_delta_failures = 0;  // must stay 0: no error mass as delta -> 0
};

// Seeded corpus for estimating the error-rate constant: square
// perturbed-identity matrices whose exact delta_2K spans (0, alpha],
// equal-magnitude signals (kappa = 1), and target SNR set at configurable
// multiples of the kappa^2 delta^{-3/2} floor, exactly the regime the
// error-rate guarantee speaks about. alpha = 0 cells pin the delta -> 0
// limit: infinite floor means noise-free, and any support error there
// would sink the whole claim.
inline CalibrationResult calibrate_c(std::uint64_t base_seed, int trials_per_cell,
                                     std::uint64_t cap = default_subset_cap) {
    if (trials_per_cell < 1)
        throw input_domain_error("calibrate_c: trials_per_cell must be positive");
    const std::vector<double> alphas{0.0, 0.1, 0.25, 0.5, 0.8};
    const std::vector<int> sizes{10, 14};
    const std::vector<int> ks{1, 2, 3};
    const std::vector<double> multipliers{1.0, 1.5, 3.0};

    CalibrationResult result;
    std::uint64_t ordinal = 0;
    for (double alpha : alphas)
        for (int n : sizes)
            for (int k : ks)
                for (double mult : multipliers)
                    for (int trial = 0; trial < trials_per_cell; ++trial, ++ordinal) {
                        CalibrationRow row;
                        row.alpha = alpha;
                        row.n = n;
                        row.k = k;
                        row.floor_multiplier = mult;
                        row.trial_index = trial;
                        row.seed = derive_seed(base_seed, ordinal);

                        Matrix phi = detail::perturbed_identity_matrix(
                            n, alpha, derive_seed(row.seed, 1));
                        SparseSignal x = sparse_signal(n, k, SignalProfile::equal(),
                                                       SignMode::RandomSigns,
                                                       derive_seed(row.seed, 2));
                        row.delta_2k = exact_rip_constant(phi, 2 * k, cap).delta;

                        Vector v;
                        if (row.delta_2k == 0.0) {
                            // Infinite floor: only the noise-free regime qualifies.
                            row.snr_target = std::numeric_limits<double>::infinity();
                            v = Vector::Zero(n);
                        } else {
                            row.snr_target =
                                mult * theorem3_snr_floor(compute_kappa(x), row.delta_2k);
                            v = noise_at_snr(phi, x, row.snr_target,
                                             NoiseMode::isotropic_gaussian(),
                                             derive_seed(row.seed, 3));
                        }

                        Vector y = phi * x.to_dense() + v;
                        RecoveryTrace trace =
                            omp_run(phi, y, StoppingRule::fixed_iterations(k));
                        RecoveryReport rr = support_error_rate(x.support(), trace.final_support);
                        row.rho_error = rr.rho_error;

                        ++result.trials;
                        if (row.rho_error > 0.0) ++result.recovery_failures;
                        if (row.delta_2k == 0.0) {
                            ++result.zero_delta_trials;
                            if (row.rho_error > 0.0) ++result.zero_delta_failures;
                            row.ratio = 0.0;
                        } else {
                            double kappa = compute_kappa(x);
                            row.ratio =
                                row.rho_error / (kappa * kappa * std::sqrt(row.delta_2k));
                            result.c_star = std::max(result.c_star, row.ratio);
                        }
                        result.rows.push_back(row);
                    }
    return result;
}

inline std::string calibration_csv(const CalibrationResult& result) {
    std::ostringstream os;
    os << "alpha,n,k,floor_multiplier,trial_index,seed,delta_2k,snr_target,rho_error,ratio\n";
    for (const auto& row : result.rows)
        os << format_double(row.alpha) << ',' << row.n << ',' << row.k << ','
           << format_double(row.floor_multiplier) << ',' << row.trial_index << ',' << row.seed
           << ',' << format_double(row.delta_2k) << ',' << format_double(row.snr_target) << ','
           << format_double(row.rho_error) << ',' << format_double(row.ratio) << '\n';
    return os.str();
}

} // namespace pursuit
