#pragma once

// Named experiment recipes binding the engine modules into the memory,
// shift-scan, correlation-time, sensing, pulse-robustness, relaxation-limit,
// and sensitivity studies. Each scenario writes its curve CSVs plus fits.csv /
// summary.csv under <out_dir>/<name>/ and returns the summary rows; output is
// deterministic per seed (no timestamps).

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdd/analysis.hpp"
#include "cdd/config.hpp"
#include "cdd/csvio.hpp"
#include "cdd/dynamics.hpp"
#include "cdd/lindblad.hpp"
#include "cdd/protocol.hpp"

namespace cdd {

struct ScenarioOutput {
    std::vector<std::string> files;   // paths written, in write order
    std::vector<SummaryRow> summary;  // rows mirrored into summary.csv
};

namespace detail {

inline std::size_t effective_realizations(const RunConfig& run) {
    return run.full ? 2500 : run.n_realizations;
}

inline double resolved_tilde(const DriveConfig& d, double c) {
    return d.shift_policy == ShiftPolicy::explicit_value
               ? d.omega1_tilde
               : resolve_shift(d.omega1, d.omega2, d.shift_policy, c);
}

// Normalized coherence y(t): 2F-1 for axis envelopes, 3F-2 for the average
// (both start at 1, decay toward the statistical floor); fit A exp(-(t/T2)^b)
// over the prefix that stays clear of the floor. nullopt when too little of
// the decay window survives the cut.
inline std::optional<CoherenceFit> envelope_stretched_fit(const std::vector<double>& times,
                                                          const std::vector<double>& env,
                                                          bool avg_observable) {
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double y = avg_observable ? 3.0 * env[i] - 2.0 : 2.0 * env[i] - 1.0;
        if (!(y > 0.02)) break;
        ts.push_back(times[i]);
        ys.push_back(std::min(y, 1.0));
    }
    if (ts.size() < 8 || !(ts.front() > 0.0) || ts.back() < 5.0 * ts.front())
        return std::nullopt;
    return fit_stretched_exp(ts, ys);
}

}  // namespace detail

// Free / single-drive / SDD / CDD coherence times at the configured noise;
// envelope-threshold T2 per protocol plus stretched-exponential fits.
inline ScenarioOutput scenario_memory_compare(const ScenarioConfig& cfg) {
    const std::string dir = cfg.run.out_dir + "/memory_compare";
    const std::size_t nr = detail::effective_realizations(cfg.run);

    struct Leg {
        const char* name;
        ProtocolKind kind;
        double tilde;
        CoherenceObservable obs;
        double t_start, t_max;
    };
    const double w1 = cfg.drive.omega1;
    const double cdd_tilde = detail::resolved_tilde(cfg.drive, cfg.noise.c);
    const Leg legs[] = {
        {"free", ProtocolKind::free_evolution, w1, CoherenceObservable::env_avg, 20e-6,
         200e-6},
        {"single", ProtocolKind::single_drive, w1, CoherenceObservable::env_y, 60e-6, 1e-3},
        {"sdd", ProtocolKind::double_drive, w1, CoherenceObservable::env_avg, 1e-3, 8e-3},
        {"cdd", ProtocolKind::double_drive, cdd_tilde, CoherenceObservable::env_x, 6e-3,
         24e-3},
    };

    ScenarioOutput out;
    std::vector<FitRow> fits;
    for (const auto& leg : legs) {
        ProtocolSpec p;
        p.kind = leg.kind;
        p.drive = cfg.drive;
        p.drive.omega1_tilde = leg.tilde;
        p.noise = cfg.noise;
        double start = leg.t_start, cap = leg.t_max;
        if (cfg.run.duration > 0.0) start = cap = cfg.run.duration;
        const auto m = measure_coherence_time(p, leg.obs, nr, start, cap, cfg.run.workers,
                                              cfg.run.samples);

        const std::string raw_path = dir + "/" + leg.name + ".csv";
        const std::string env_path = dir + "/" + leg.name + "_env.csv";
        write_curve_csv(raw_path, m.raw);
        write_curve_csv(env_path, m.envelope);
        out.files.push_back(raw_path);
        out.files.push_back(env_path);

        FitRow fr{"memory_compare", leg.name, m.t2, 1.0, "threshold", 0.0};
        if (const auto fit = detail::envelope_stretched_fit(
                m.envelope.times, m.envelope.values,
                leg.obs == CoherenceObservable::env_avg)) {
            fr.t2_s = fit->t2;
            fr.beta = fit->beta;
            fr.method = fit->method;
            fr.residual = fit->rms_residual;
        }
        fits.push_back(fr);

        out.summary.push_back(
            {"memory_compare", std::string("t2_") + leg.name, m.t2, "s", "threshold"});
        out.summary.push_back({"memory_compare", std::string("t2_") + leg.name + "_reached",
                               m.reached ? 1.0 : 0.0, "", "flag"});
    }
    write_fits_csv(dir + "/fits.csv", fits);
    out.files.push_back(dir + "/fits.csv");
    return out;
}

// CDD T2 versus the second-drive frequency over the N/4-detuning grid;
// reports the argmax rather than asserting where it lands.
inline ScenarioOutput scenario_shift_scan(const ScenarioConfig& cfg) {
    const std::string dir = cfg.run.out_dir + "/shift_scan";
    const std::size_t nr = detail::effective_realizations(cfg.run);

    std::vector<int> n_list;
    for (int n = cfg.run.n_min; n <= cfg.run.n_max; ++n) n_list.push_back(n);
    const auto grid = shift_scan_grid(cfg.drive.omega1, cfg.drive.omega2, n_list);

    ScenarioOutput out;
    std::vector<std::vector<double>> rows;
    int best_n = n_list.front();
    double best_t2 = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ProtocolSpec p;
        p.kind = ProtocolKind::double_drive;
        p.drive = cfg.drive;
        p.drive.omega1_tilde = grid[i];
        p.noise = cfg.noise;
        double start = 1e-3, cap = 24e-3;
        if (cfg.run.duration > 0.0) start = cap = cfg.run.duration;
        const auto m = measure_coherence_time(p, CoherenceObservable::env_x, nr, start, cap,
                                              cfg.run.workers, cfg.run.samples);
        rows.push_back(
            {static_cast<double>(n_list[i]), grid[i], m.t2, m.reached ? 1.0 : 0.0});
        if (m.t2 > best_t2) {
            best_t2 = m.t2;
            best_n = n_list[i];
        }
    }
    write_table_csv(dir + "/scan.csv", {"n", "omega1_tilde_rad_s", "t2_s", "reached"}, rows);
    out.files.push_back(dir + "/scan.csv");
    out.summary.push_back(
        {"shift_scan", "argmax_n", static_cast<double>(best_n), "", "threshold"});
    out.summary.push_back({"shift_scan", "t2_at_argmax", best_t2, "s", "threshold"});
    return out;
}

// Single / SDD / CDD coherence across the paired (tau, delta) amplitude-noise
// table; reports per-row T2 and improvement ratios over the single drive.
inline ScenarioOutput scenario_corr_time_sweep(const ScenarioConfig& cfg) {
    const std::string dir = cfg.run.out_dir + "/corr_time_sweep";
    const std::size_t nr = detail::effective_realizations(cfg.run);

    // Matched correlation-time / relative-std pairs of the amplitude noise.
    const std::vector<double> taus = {0.5e-6, 5e-6, 25e-6, 50e-6, 100e-6, 500e-6};
    const std::vector<double> sigmas = {0.024, 0.0085, 0.0058, 0.0054, 0.0052, 0.0051};

    ProtocolSpec base;
    base.kind = ProtocolKind::double_drive;
    base.drive = cfg.drive;
    base.noise = cfg.noise;
    const auto rows =
        coherence_vs_correlation_time(base, taus, sigmas, nr, cfg.run.workers);

    std::vector<std::vector<double>> table;
    double best_ratio = -1.0, best_tau = 0.0;
    bool ordering_ok = true, all_reached = true;
    for (const auto& r : rows) {
        table.push_back({r.tau_omega, r.delta_omega, r.t2_single, r.t2_sdd, r.t2_cdd,
                         r.ratio_sdd, r.ratio_cdd, r.all_reached ? 1.0 : 0.0});
        if (r.ratio_cdd > best_ratio) {
            best_ratio = r.ratio_cdd;
            best_tau = r.tau_omega;
        }
        if (r.t2_cdd < r.t2_sdd) ordering_ok = false;
        all_reached = all_reached && r.all_reached;
    }
    write_table_csv(dir + "/rows.csv",
                    {"tau_omega_s", "delta_omega", "t2_single_s", "t2_sdd_s", "t2_cdd_s",
                     "ratio_sdd", "ratio_cdd", "all_reached"},
                    table);

    ScenarioOutput out;
    out.files.push_back(dir + "/rows.csv");
    out.summary.push_back(
        {"corr_time_sweep", "ratio_cdd_argmax_tau", best_tau, "s", "threshold"});
    out.summary.push_back(
        {"corr_time_sweep", "ratio_cdd_max", best_ratio, "", "threshold"});
    out.summary.push_back(
        {"corr_time_sweep", "cdd_ge_sdd_all", ordering_ok ? 1.0 : 0.0, "", "flag"});
    out.summary.push_back(
        {"corr_time_sweep", "all_reached", all_reached ? 1.0 : 0.0, "", "flag"});
    return out;
}

// Stroboscopic sensing run; fits the slow population oscillation and reports
// the effective signal amplitude g' and the attenuation g'/g0.
inline ScenarioOutput scenario_sensing(const ScenarioConfig& cfg) {
    const std::string dir = cfg.run.out_dir + "/sensing";
    if (!(cfg.run.g0 > 0.0)) throw std::invalid_argument("sensing: g0 must be > 0");

    ProtocolSpec p;
    p.kind = ProtocolKind::double_drive;
    p.drive = cfg.drive;
    p.drive.omega1_tilde = detail::resolved_tilde(cfg.drive, cfg.noise.c);
    p.noise = cfg.noise;

    SensingScheme s;
    s.kind = cfg.run.scheme;
    s.g0 = cfg.run.g0;
    s.phi0 = cfg.run.phi0;
    s.omega0 = cfg.run.omega0 > 0.0 ? cfg.run.omega0
                                    : resonant_signal_frequency(s.kind, p.drive);
    p.signal = s;
    // Default window: 2.5 periods of the slowest expected oscillation (g0/4).
    p.duration = cfg.run.duration > 0.0 ? cfg.run.duration : 20.0 * M_PI / cfg.run.g0;

    const auto curve = sensing_curve(p, detail::effective_realizations(cfg.run),
                                     cfg.run.strobe, cfg.run.workers);
    write_curve_csv(dir + "/curve.csv", curve);

    const auto fit = fit_oscillation(curve.times, curve.values, 0.05 * s.g0, 1.5 * s.g0);
    const auto params = sensing_params(s, p.drive);

    ScenarioOutput out;
    out.files.push_back(dir + "/curve.csv");
    out.summary.push_back({"sensing", "gprime", fit.omega, "rad/s", "oscillation_fit"});
    out.summary.push_back(
        {"sensing", "alpha_fit", fit.omega / s.g0, "", "oscillation_fit"});
    out.summary.push_back(
        {"sensing", "alpha_model", std::abs(params.alpha()), "", "closed_form"});
    out.summary.push_back({"sensing", "omega0", s.omega0, "rad/s", "input"});
    out.summary.push_back(
        {"sensing", "fit_residual", fit.rms_residual, "", "oscillation_fit"});
    return out;
}

// Quasi-static pulse-error robustness: conventional pi pulse vs the SDD and
// CDD composite schemes on a symmetric epsilon grid.
inline ScenarioOutput scenario_pulse_scan(const ScenarioConfig& cfg) {
    const std::string dir = cfg.run.out_dir + "/pulse_scan";
    const int n = cfg.run.eps_points;

    std::vector<std::vector<double>> rows;
    bool cdd_dominates = true;
    double f_min_cdd = 1.0;
    for (int i = 0; i < n; ++i) {
        const double eps =
            n == 1 ? 0.0 : -cfg.run.eps_max + 2.0 * cfg.run.eps_max * i / (n - 1);
        const double fc = pulse_fidelity(PulseKind::conventional, cfg.drive.omega1, eps);
        const double fs = pulse_fidelity(PulseKind::sdd, cfg.drive.omega1, eps);
        const double fd = pulse_fidelity(PulseKind::cdd, cfg.drive.omega1, eps);
        rows.push_back({eps, fc, fs, fd});
        if (std::abs(eps) > 1e-12 && (fd <= fs || fd <= fc)) cdd_dominates = false;
        f_min_cdd = std::min(f_min_cdd, fd);
    }
    write_table_csv(dir + "/scan.csv", {"eps", "f_conventional", "f_sdd", "f_cdd"}, rows);

    ScenarioOutput out;
    out.files.push_back(dir + "/scan.csv");
    out.summary.push_back(
        {"pulse_scan", "cdd_dominates", cdd_dominates ? 1.0 : 0.0, "", "flag"});
    out.summary.push_back({"pulse_scan", "f_min_cdd", f_min_cdd, "", "direct"});
    return out;
}

// Relaxation-limited coherence: driven-block coherence and spin-lock decay
// under the three-level Lindblad model, plus the dephasing times implied by
// the cited total/limit pairs.
inline ScenarioOutput scenario_lindblad_limit(const ScenarioConfig& cfg) {
    const std::string dir = cfg.run.out_dir + "/lindblad_limit";
    const auto& model = cfg.lindblad;
    const double duration = cfg.run.duration > 0.0 ? cfg.run.duration : 6e-3;
    const int n_pts = 120;
    std::vector<double> times;
    times.reserve(n_pts + 1);
    for (int i = 0; i <= n_pts; ++i)
        times.push_back(duration * static_cast<double>(i) / n_pts);

    const auto k_curve = evolve_lindblad(model, block_state({1.0, 0.0, 0.0}), true, times,
                                         LindbladObservable::coherence_block);
    const double dx = model.drive.omega1 - model.drive.omega1_tilde;
    const double we = std::sqrt(dx * dx + model.drive.omega2 * model.drive.omega2);
    const auto lock_curve =
        evolve_lindblad(model, block_state({dx / we, model.drive.omega2 / we, 0.0}), true,
                        times, LindbladObservable::lock_projection);

    std::vector<std::vector<double>> kt, lt;
    for (std::size_t i = 0; i < times.size(); ++i) {
        kt.push_back({k_curve.times[i], k_curve.values[i]});
        lt.push_back({lock_curve.times[i], lock_curve.values[i]});
    }
    write_table_csv(dir + "/coherence.csv", {"t_s", "value"}, kt);
    write_table_csv(dir + "/lock.csv", {"t_s", "value"}, lt);

    std::vector<double> k_norm(k_curve.values);
    for (auto& v : k_norm) v /= k_curve.values.front();
    const auto k_th = threshold_time(k_curve.times, k_norm, std::exp(-1.0));
    const auto l_th = threshold_time(lock_curve.times, lock_curve.values, std::exp(-1.0));

    ScenarioOutput out;
    out.files.push_back(dir + "/coherence.csv");
    out.files.push_back(dir + "/lock.csv");
    out.summary.push_back({"lindblad_limit", "t2_limit", k_th.time, "s", "threshold"});
    out.summary.push_back(
        {"lindblad_limit", "t2_limit_reached", k_th.reached ? 1.0 : 0.0, "", "flag"});
    out.summary.push_back({"lindblad_limit", "t1rho_lock", l_th.time, "s", "threshold"});
    out.summary.push_back(
        {"lindblad_limit", "t1rho_lock_reached", l_th.reached ? 1.0 : 0.0, "", "flag"});
    out.summary.push_back({"lindblad_limit", "t_phi_sdd",
                           relaxation_free_time(2.32e-3, 3.0e-3), "s", "closed_form"});
    out.summary.push_back({"lindblad_limit", "t_phi_cdd",
                           relaxation_free_time(2.798e-3, 3.35e-3), "s", "closed_form"});
    return out;
}

// Photon-shot-noise sensitivity for the three cited operating points.
inline ScenarioOutput scenario_sensitivity_report(const ScenarioConfig& cfg) {
    const std::string dir = cfg.run.out_dir + "/sensitivity_report";

    SensitivityInputs c1;  // contrast from (a-b) exp(-tau/T2rho), tau = T2rho/2
    c1.t2rho = 1.682e-3;
    c1.tau = 0.5 * c1.t2rho;
    SensitivityInputs c2;  // quoted contrast, memory-style readout
    c2.contrast_override = 0.125;
    c2.tau = 1.3e-3;
    SensitivityInputs c3;  // SDD comparison point with 3x time overhead
    c3.contrast_override = 0.146;
    c3.tau = 0.5 * 0.494e-3;
    c3.overhead_factor = 3.0;

    const char* names[] = {"cdd_t1rho", "cdd_quoted_contrast", "sdd_overhead"};
    const SensitivityInputs cases[] = {c1, c2, c3};

    ScenarioOutput out;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 3; ++i) {
        const auto r = sensitivity(cases[i]);
        rows.push_back(
            {static_cast<double>(i + 1), r.eta * 1e9, r.contrast, cases[i].tau, r.tau_opt});
        out.summary.push_back({"sensitivity_report", std::string("eta_") + names[i],
                               r.eta * 1e9, "nT/sqrt(Hz)", "closed_form"});
    }
    write_table_csv(dir + "/cases.csv",
                    {"case", "eta_nt_per_sqrt_hz", "contrast", "tau_s", "tau_opt_s"}, rows);
    out.files.push_back(dir + "/cases.csv");
    return out;
}

inline ScenarioOutput run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    ScenarioOutput out;
    try {
        switch (cfg.name) {
            case ScenarioName::memory_compare: out = scenario_memory_compare(cfg); break;
            case ScenarioName::shift_scan: out = scenario_shift_scan(cfg); break;
            case ScenarioName::corr_time_sweep: out = scenario_corr_time_sweep(cfg); break;
            case ScenarioName::sensing: out = scenario_sensing(cfg); break;
            case ScenarioName::pulse_scan: out = scenario_pulse_scan(cfg); break;
            case ScenarioName::lindblad_limit: out = scenario_lindblad_limit(cfg); break;
            case ScenarioName::sensitivity_report:
                out = scenario_sensitivity_report(cfg);
                break;
        }
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(scenario_name_str(cfg.name)) + ": " + e.what());
    }
    const std::string sum_path =
        cfg.run.out_dir + "/" + scenario_name_str(cfg.name) + "/summary.csv";
    write_summary_csv(sum_path, out.summary);
    out.files.push_back(sum_path);
    return out;
}

}  // namespace cdd
