// Command-line front end: scenario dispatch, curve fitting, sensitivity
// arithmetic, and the optimal-shift calculator. Exit codes: 0 success,
// 1 config/input error, 2 runtime or numerical error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdd/analysis.hpp"
#include "cdd/config.hpp"
#include "cdd/csvio.hpp"
#include "cdd/scenarios.hpp"

namespace {

constexpr double kTwoPiMHz = 2.0 * M_PI * 1e6;

// Section owning a bare (unqualified) override key; keys shared between
// [drive] and [lindblad] resolve to [drive] -- use lindblad.<key> otherwise.
std::string section_for_key(const std::string& key) {
    static const std::map<std::string, const char*> owners = {
        {"omega1", "drive"},        {"omega2", "drive"},
        {"omega1_tilde", "drive"},  {"shift", "drive"},
        {"tau_delta", "noise"},     {"t2_star", "noise"},
        {"sigma_delta", "noise"},   {"tau_eps", "noise"},
        {"delta_omega", "noise"},   {"c", "noise"},
        {"t1_0", "lindblad"},       {"gamma1", "lindblad"},
        {"gamma2", "lindblad"},     {"gamma2_ratio", "lindblad"},
        {"gamma_phi", "lindblad"},
    };
    const auto it = owners.find(key);
    return it != owners.end() ? it->second : "run";  // parser rejects unknowns
}

void print_summary(const std::vector<cdd::SummaryRow>& rows) {
    std::printf("%-20s %-28s %16s %-12s %12s  %s\n", "scenario", "quantity", "value",
                "unit", "MHz", "method");
    for (const auto& r : rows) {
        char mhz[24] = "";
        if (r.unit == "rad/s")
            std::snprintf(mhz, sizeof mhz, "%.6g", r.value / kTwoPiMHz);
        std::printf("%-20s %-28s %16.8g %-12s %12s  %s\n", r.scenario.c_str(),
                    r.quantity.c_str(), r.value, r.unit.c_str(), mhz, r.method.c_str());
    }
}

struct SimulateArgs {
    std::string scenario;
    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned workers = 0;
    bool workers_set = false;
    std::string out_dir;
    bool full = false;
};

cdd::ScenarioConfig load_config(const SimulateArgs& a) {
    std::string text;
    std::string origin = "<defaults>";
    if (!a.config_path.empty()) {
        std::ifstream in(a.config_path);
        if (!in) throw cdd::ConfigError(a.config_path, 0, "cannot open config file");
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
        origin = a.config_path;
    } else {
        text = cdd::serialize_config(cdd::ScenarioConfig{});
    }

    // Command-line settings win: append them after the base text so the
    // last-assignment-wins INI semantics apply them on re-parse.
    auto append = [&](const std::string& section, const std::string& kv) {
        text += "\n[" + section + "]\n" + kv + "\n";
    };
    if (!a.scenario.empty()) append("run", "scenario = " + a.scenario);
    for (const auto& ov : a.overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw cdd::ConfigError("<override>", 0, "expected key=value: '" + ov + "'");
        std::string key = cdd::detail::trim(ov.substr(0, eq));
        const std::string val = cdd::detail::trim(ov.substr(eq + 1));
        std::string section;
        const auto dot = key.find('.');
        if (dot != std::string::npos) {
            section = key.substr(0, dot);
            key = key.substr(dot + 1);
        } else {
            section = section_for_key(key);
        }
        append(section, key + " = " + val);
    }
    if (a.seed_set) append("run", "seed = " + std::to_string(a.seed));
    if (a.workers_set) append("run", "workers = " + std::to_string(a.workers));
    if (!a.out_dir.empty()) append("run", "out_dir = " + a.out_dir);
    if (a.full) append("run", "full = true");

    return cdd::parse_config_text(text, origin);
}

int cmd_simulate(const SimulateArgs& a) {
    const auto cfg = load_config(a);
    const auto result = cdd::run_scenario(cfg);
    print_summary(result.summary);
    for (const auto& f : result.files) std::printf("wrote %s\n", f.c_str());
    return 0;
}

int cmd_fit(const std::string& csv_path) {
    const auto curve = cdd::read_curve_csv(csv_path);
    // Use the positive, in-range prefix of the curve (fit model decays to 0).
    std::vector<double> ts, vs;
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
        if (!(curve.times[i] > 0.0)) continue;
        if (!(curve.values[i] > 0.0) || curve.values[i] > 1.05) break;
        ts.push_back(curve.times[i]);
        vs.push_back(curve.values[i]);
    }
    const auto fit = cdd::fit_stretched_exp(ts, vs, {}, cdd::FitAmplitude::free_fit);
    std::printf("%-14s %16s\n", "quantity", "value");
    std::printf("%-14s %16.8g\n", "t2_s", fit.t2);
    std::printf("%-14s %16.8g\n", "beta", fit.beta);
    std::printf("%-14s %16.8g\n", "rms_residual", fit.rms_residual);
    std::printf("%-14s %16s\n", "method", fit.method.c_str());
    std::printf("%-14s %16s\n", "converged", fit.converged ? "yes" : "no");
    return 0;
}

int cmd_sensitivity(const std::string& config_path, const std::string& out_dir) {
    SimulateArgs a;
    a.scenario = "sensitivity_report";
    a.config_path = config_path;
    a.out_dir = out_dir;
    return cmd_simulate(a);
}

int cmd_shift(const std::string& w1_raw, const std::string& w2_raw, const std::string& c_raw,
              bool bs) {
    const cdd::detail::ValueParser p{"<shift>", 0};
    const double w1 = p.frequency(w1_raw);
    const double w2 = p.frequency(w2_raw);
    const double c = p.plain(c_raw);

    const double exact = cdd::optimal_shift_exact(w1, w2, c);
    const double approx = cdd::optimal_shift_approx(w1, w2, c, false);
    const double approx_bs = cdd::optimal_shift_approx(w1, w2, c, true);
    const double chosen = bs ? approx_bs : exact;

    std::printf("%-18s %20s %14s\n", "quantity", "rad/s", "MHz");
    auto row = [](const char* name, double v) {
        std::printf("%-18s %20.10g %14.8g\n", name, v, v / kTwoPiMHz);
    };
    row("omega1", w1);
    row("omega2", w2);
    row("shift_exact", exact);
    row("shift_approx", approx);
    row("shift_approx_bs", approx_bs);
    row("omega1_tilde", chosen);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Correlated double-drive qubit simulator"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "run a named scenario");
    simulate->add_option("scenario", sim.scenario, "scenario name")->required();
    simulate->add_option("--config", sim.config_path, "INI config file");
    simulate->add_option("--override", sim.overrides,
                         "key=value or section.key=value (repeatable)");
    simulate->add_option("--seed", sim.seed, "RNG seed");
    simulate->add_option("--workers", sim.workers, "worker threads (default: DD_WORKERS)");
    simulate->add_option("--out", sim.out_dir, "output directory");
    simulate->add_flag("--full", sim.full, "restore the 2500-realization scale");

    std::string fit_csv;
    auto* fit = app.add_subcommand("fit", "stretched-exponential fit of a curve CSV");
    fit->add_option("csv", fit_csv, "input curve CSV (t_s,value[,stderr])")->required();

    std::string sens_config, sens_out;
    auto* sens = app.add_subcommand("sensitivity", "photon-shot-noise sensitivity report");
    sens->add_option("config", sens_config, "INI config file")->required();
    sens->add_option("--out", sens_out, "output directory");

    std::string w1_raw, w2_raw, c_raw;
    bool bs = false;
    auto* shift = app.add_subcommand("shift", "optimal second-drive frequency");
    shift->add_option("omega1", w1_raw, "first-drive Rabi frequency (e.g. 2MHz)")->required();
    shift->add_option("omega2", w2_raw, "second-drive Rabi frequency")->required();
    shift->add_option("c", c_raw, "cross-correlation in [-1, 1]")->required();
    shift->add_flag("--bs", bs, "apply the Bloch-Siegert quarter correction");

    try {
        app.parse(argc, argv);
        sim.seed_set = simulate->count("--seed") > 0;
        sim.workers_set = simulate->count("--workers") > 0;
        if (*simulate) return cmd_simulate(sim);
        if (*fit) return cmd_fit(fit_csv);
        if (*sens) return cmd_sensitivity(sens_config, sens_out);
        if (*shift) return cmd_shift(w1_raw, w2_raw, c_raw, bs);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const cdd::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
