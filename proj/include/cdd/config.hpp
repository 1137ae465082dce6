#pragma once

// Strict INI-style configuration: sections [drive], [noise], [lindblad],
// [run]; fail-closed on unknown keys/sections; frequency values carry unit
// suffixes (GHz/MHz/kHz/Hz -> x2pi rad/s), times s/ms/us/ns; plain rates 1/s.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cdd/dynamics.hpp"
#include "cdd/lindblad.hpp"
#include "cdd/noise.hpp"
#include "cdd/protocol.hpp"

namespace cdd {

enum class ScenarioName {
    memory_compare,
    shift_scan,
    corr_time_sweep,
    sensing,
    pulse_scan,
    lindblad_limit,
    sensitivity_report,
};

inline const char* scenario_name_str(ScenarioName n) {
    switch (n) {
        case ScenarioName::memory_compare: return "memory_compare";
        case ScenarioName::shift_scan: return "shift_scan";
        case ScenarioName::corr_time_sweep: return "corr_time_sweep";
        case ScenarioName::sensing: return "sensing";
        case ScenarioName::pulse_scan: return "pulse_scan";
        case ScenarioName::lindblad_limit: return "lindblad_limit";
        case ScenarioName::sensitivity_report: return "sensitivity_report";
    }
    return "unknown";
}

inline ScenarioName scenario_name_from(const std::string& s) {
    for (auto n : {ScenarioName::memory_compare, ScenarioName::shift_scan,
                   ScenarioName::corr_time_sweep, ScenarioName::sensing,
                   ScenarioName::pulse_scan, ScenarioName::lindblad_limit,
                   ScenarioName::sensitivity_report})
        if (s == scenario_name_str(n)) return n;
    throw std::invalid_argument("unknown scenario '" + s + "'");
}

struct RunConfig {
    std::size_t n_realizations = 500;
    unsigned workers = 0;  // 0: DD_WORKERS env, then hardware
    std::string out_dir = "out";
    double duration = 0.0;  // [s]; 0 -> scenario default
    int samples = 400;
    bool full = false;  // restore the paper's 2500 realizations
    // sensing
    SensingKind scheme = SensingKind::low_attenuation;
    double g0 = 2.0 * M_PI * 94e3;  // [rad/s]
    double omega0 = 0.0;            // [rad/s]; 0 -> resonant carrier
    double phi0 = 0.0;              // [rad]
    StrobeMode strobe = StrobeMode::drive1;
    // pulse scan
    double eps_max = 0.1;
    int eps_points = 41;
    // shift scan
    int n_min = 0, n_max = 8;
};

struct ScenarioConfig {
    ScenarioName name = ScenarioName::memory_compare;
    DriveConfig drive;
    NoiseConfig noise;
    LindbladModel lindblad;
    RunConfig run;

    ScenarioConfig() {
        // Note-4 memory defaults: make acceptance runs zero-config.
        drive.omega1 = 2.0 * M_PI * 2.0e6;
        drive.omega2 = 0.1 * drive.omega1;
        drive.omega1_tilde = 0.0;
        drive.shift_policy = ShiftPolicy::correlated;
        noise.delta.tau = 25e-6;
        noise.delta.sigma = std::sqrt(2.0) / 3.6e-6;  // T2* = 3.6 us
        noise.eps.tau = 500e-6;
        noise.eps.sigma = 0.005;
        noise.c = 1.0;
        noise.seed = 12345;
        // Relaxation-limit defaults: measured rates and experimental drive.
        lindblad.gamma1 = 1.0 / (3.0 * 5.41e-3);
        lindblad.gamma2 = 1.87 * lindblad.gamma1;
        lindblad.gamma_phi = 360.0;
        lindblad.drive.omega1 = 2.0 * M_PI * 4.470e6;
        lindblad.drive.omega2 = 2.0 * M_PI * 0.9e6;
        lindblad.drive.omega1_tilde = 2.0 * M_PI * 4.6965e6;
        lindblad.drive.shift_policy = ShiftPolicy::explicit_value;
    }

    void validate() const {
        drive.validate();
        noise.validate();
        lindblad.validate();
        if (run.n_realizations < 1)
            throw std::invalid_argument("run: realizations must be >= 1");
        if (run.samples < 8) throw std::invalid_argument("run: samples must be >= 8");
        if (!(run.eps_max > 0.0) || run.eps_max > 0.5)
            throw std::invalid_argument("run: eps_max must lie in (0, 0.5]");
        if (run.eps_points < 2) throw std::invalid_argument("run: eps_points must be >= 2");
        if (run.n_min > run.n_max) throw std::invalid_argument("run: n_min > n_max");
        if (run.out_dir.empty()) throw std::invalid_argument("run: out_dir empty");
    }
};

class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string& origin, std::size_t line, const std::string& msg)
        : std::runtime_error(origin + ":" + std::to_string(line) + ": " + msg),
          line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct ValueParser {
    const std::string& origin;
    std::size_t line;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(origin, line, msg);
    }

    double number_with_suffix(const std::string& raw, std::string& suffix) const {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(raw, &used);
        } catch (const std::exception&) {
            fail("not a number: '" + raw + "'");
        }
        suffix = trim(raw.substr(used));
        return v;
    }

    // GHz/MHz/kHz/Hz are multiplied by 2pi; bare numbers are rad/s.
    double frequency(const std::string& raw) const {
        std::string suf;
        const double v = number_with_suffix(raw, suf);
        if (suf.empty() || suf == "rad/s") return v;
        if (suf == "GHz") return v * 2.0 * M_PI * 1e9;
        if (suf == "MHz") return v * 2.0 * M_PI * 1e6;
        if (suf == "kHz") return v * 2.0 * M_PI * 1e3;
        if (suf == "Hz") return v * 2.0 * M_PI;
        fail("bad frequency unit '" + suf + "' (use GHz|MHz|kHz|Hz|rad/s)");
    }

    double time(const std::string& raw) const {
        std::string suf;
        const double v = number_with_suffix(raw, suf);
        if (suf.empty() || suf == "s") return v;
        if (suf == "ms") return v * 1e-3;
        if (suf == "us") return v * 1e-6;
        if (suf == "ns") return v * 1e-9;
        fail("bad time unit '" + suf + "' (use s|ms|us|ns)");
    }

    double plain(const std::string& raw) const {
        std::string suf;
        const double v = number_with_suffix(raw, suf);
        if (!suf.empty()) fail("unexpected unit '" + suf + "' on dimensionless value");
        return v;
    }

    std::uint64_t count(const std::string& raw) const {
        if (!raw.empty() && raw[0] == '-') fail("expected a non-negative integer");
        try {
            std::size_t used = 0;
            const auto v = std::stoull(raw, &used);
            if (used != raw.size()) fail("trailing characters on integer");
            return v;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("not an integer: '" + raw + "'");
        }
    }

    bool boolean(const std::string& raw) const {
        if (raw == "true" || raw == "1" || raw == "yes") return true;
        if (raw == "false" || raw == "0" || raw == "no") return false;
        fail("not a boolean: '" + raw + "'");
    }
};

inline void apply_drive_key(DriveConfig& d, const std::string& key, const std::string& val,
                            const ValueParser& p) {
    if (key == "omega1") d.omega1 = p.frequency(val);
    else if (key == "omega2") d.omega2 = p.frequency(val);
    else if (key == "omega1_tilde") {
        d.omega1_tilde = p.frequency(val);
        d.shift_policy = ShiftPolicy::explicit_value;
    } else if (key == "shift") {
        if (val == "resonant") d.shift_policy = ShiftPolicy::resonant;
        else if (val == "correlated") d.shift_policy = ShiftPolicy::correlated;
        else if (val == "correlated_bs") d.shift_policy = ShiftPolicy::correlated_bs;
        else p.fail("bad shift policy '" + val + "'");
    } else p.fail("unknown key '" + key + "'");
}

}  // namespace detail

inline ScenarioConfig parse_config_text(const std::string& text,
                                        const std::string& origin = "<config>") {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    bool saw_t2_star = false, saw_sigma_delta = false;

    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        detail::ValueParser p{origin, lineno};

        if (s.front() == '[') {
            if (s.back() != ']') p.fail("malformed section header");
            section = s.substr(1, s.size() - 2);
            if (section != "drive" && section != "noise" && section != "lindblad" &&
                section != "run")
                p.fail("unknown section [" + section + "]");
            continue;
        }

        const auto eq = s.find('=');
        if (eq == std::string::npos) p.fail("expected key = value");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string val = detail::trim(s.substr(eq + 1));
        if (key.empty()) p.fail("empty key");
        if (val.empty()) p.fail("empty value for '" + key + "'");
        if (section.empty()) p.fail("key '" + key + "' before any section");

        if (section == "drive") {
            detail::apply_drive_key(cfg.drive, key, val, p);
        } else if (section == "noise") {
            if (key == "tau_delta") cfg.noise.delta.tau = p.time(val);
            else if (key == "t2_star") {
                if (saw_sigma_delta) p.fail("give either t2_star or sigma_delta, not both");
                saw_t2_star = true;
                const double t2s = p.time(val);
                if (!(t2s > 0.0)) p.fail("t2_star must be > 0");
                cfg.noise.delta.sigma = std::sqrt(2.0) / t2s;
            } else if (key == "sigma_delta") {
                if (saw_t2_star) p.fail("give either t2_star or sigma_delta, not both");
                saw_sigma_delta = true;
                cfg.noise.delta.sigma = p.frequency(val);
            } else if (key == "tau_eps") cfg.noise.eps.tau = p.time(val);
            else if (key == "delta_omega") cfg.noise.eps.sigma = p.plain(val);
            else if (key == "c") {
                cfg.noise.c = p.plain(val);
                if (std::abs(cfg.noise.c) > 1.0)
                    p.fail("c out of range: require |c| <= 1");
            } else if (key == "seed") cfg.noise.seed = p.count(val);
            else p.fail("unknown key '" + key + "'");
        } else if (section == "lindblad") {
            if (key == "t1_0") {
                const double t1 = p.time(val);
                if (!(t1 > 0.0)) p.fail("t1_0 must be > 0");
                cfg.lindblad.gamma1 = 1.0 / (3.0 * t1);
            } else if (key == "gamma1") cfg.lindblad.gamma1 = p.plain(val);
            else if (key == "gamma2") cfg.lindblad.gamma2 = p.plain(val);
            else if (key == "gamma2_ratio")
                cfg.lindblad.gamma2 = p.plain(val) * cfg.lindblad.gamma1;
            else if (key == "gamma_phi") cfg.lindblad.gamma_phi = p.plain(val);
            else if (key == "omega1" || key == "omega2" || key == "omega1_tilde" ||
                     key == "shift")
                detail::apply_drive_key(cfg.lindblad.drive, key, val, p);
            else p.fail("unknown key '" + key + "'");
        } else {  // [run]
            if (key == "scenario") {
                try {
                    cfg.name = scenario_name_from(val);
                } catch (const std::exception& e) {
                    p.fail(e.what());
                }
            } else if (key == "realizations")
                cfg.run.n_realizations = static_cast<std::size_t>(p.count(val));
            else if (key == "seed") cfg.noise.seed = p.count(val);
            else if (key == "workers") cfg.run.workers = static_cast<unsigned>(p.count(val));
            else if (key == "out_dir") cfg.run.out_dir = val;
            else if (key == "duration") cfg.run.duration = p.time(val);
            else if (key == "samples") cfg.run.samples = static_cast<int>(p.count(val));
            else if (key == "full") cfg.run.full = p.boolean(val);
            else if (key == "scheme") {
                if (val == "low") cfg.run.scheme = SensingKind::low_attenuation;
                else if (val == "high") cfg.run.scheme = SensingKind::high_attenuation;
                else p.fail("bad scheme '" + val + "' (low|high)");
            } else if (key == "g0") cfg.run.g0 = p.frequency(val);
            else if (key == "omega0") cfg.run.omega0 = p.frequency(val);
            else if (key == "phi0") cfg.run.phi0 = p.plain(val);
            else if (key == "strobe") {
                if (val == "drive1") cfg.run.strobe = StrobeMode::drive1;
                else if (val == "drive2") cfg.run.strobe = StrobeMode::drive2;
                else if (val == "none") cfg.run.strobe = StrobeMode::none;
                else p.fail("bad strobe '" + val + "' (drive1|drive2|none)");
            } else if (key == "eps_max") cfg.run.eps_max = p.plain(val);
            else if (key == "eps_points") cfg.run.eps_points = static_cast<int>(p.count(val));
            else if (key == "n_min") cfg.run.n_min = static_cast<int>(p.count(val));
            else if (key == "n_max") cfg.run.n_max = static_cast<int>(p.count(val));
            else p.fail("unknown key '" + key + "'");
        }
    }

    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ConfigError(origin, 0, e.what());
    }
    return cfg;
}

inline ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

// Canonical serialization; parse(serialize(cfg)) reproduces cfg bit-exactly
// (frequencies emitted in rad/s, times in s: unit factors are 1).
inline std::string serialize_config(const ScenarioConfig& cfg) {
    std::ostringstream out;
    auto g17 = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    auto shift_str = [](ShiftPolicy p) {
        switch (p) {
            case ShiftPolicy::resonant: return "resonant";
            case ShiftPolicy::correlated: return "correlated";
            case ShiftPolicy::correlated_bs: return "correlated_bs";
            case ShiftPolicy::explicit_value: return "explicit";
        }
        return "resonant";
    };
    auto emit_drive = [&](const DriveConfig& d) {
        out << "omega1 = " << g17(d.omega1) << "rad/s\n";
        out << "omega2 = " << g17(d.omega2) << "rad/s\n";
        if (d.shift_policy == ShiftPolicy::explicit_value)
            out << "omega1_tilde = " << g17(d.omega1_tilde) << "rad/s\n";
        else
            out << "shift = " << shift_str(d.shift_policy) << '\n';
    };

    out << "[drive]\n";
    emit_drive(cfg.drive);
    out << "\n[noise]\n";
    out << "tau_delta = " << g17(cfg.noise.delta.tau) << "s\n";
    out << "sigma_delta = " << g17(cfg.noise.delta.sigma) << "rad/s\n";
    out << "tau_eps = " << g17(cfg.noise.eps.tau) << "s\n";
    out << "delta_omega = " << g17(cfg.noise.eps.sigma) << '\n';
    out << "c = " << g17(cfg.noise.c) << '\n';
    out << "seed = " << cfg.noise.seed << '\n';
    out << "\n[lindblad]\n";
    out << "gamma1 = " << g17(cfg.lindblad.gamma1) << '\n';
    out << "gamma2 = " << g17(cfg.lindblad.gamma2) << '\n';
    out << "gamma_phi = " << g17(cfg.lindblad.gamma_phi) << '\n';
    emit_drive(cfg.lindblad.drive);
    out << "\n[run]\n";
    out << "scenario = " << scenario_name_str(cfg.name) << '\n';
    out << "realizations = " << cfg.run.n_realizations << '\n';
    out << "workers = " << cfg.run.workers << '\n';
    out << "out_dir = " << cfg.run.out_dir << '\n';
    out << "duration = " << g17(cfg.run.duration) << "s\n";
    out << "samples = " << cfg.run.samples << '\n';
    out << "full = " << (cfg.run.full ? "true" : "false") << '\n';
    out << "scheme = "
        << (cfg.run.scheme == SensingKind::low_attenuation ? "low" : "high") << '\n';
    out << "g0 = " << g17(cfg.run.g0) << "rad/s\n";
    out << "omega0 = " << g17(cfg.run.omega0) << "rad/s\n";
    out << "phi0 = " << g17(cfg.run.phi0) << '\n';
    out << "strobe = "
        << (cfg.run.strobe == StrobeMode::drive1   ? "drive1"
            : cfg.run.strobe == StrobeMode::drive2 ? "drive2"
                                                   : "none")
        << '\n';
    out << "eps_max = " << g17(cfg.run.eps_max) << '\n';
    out << "eps_points = " << cfg.run.eps_points << '\n';
    out << "n_min = " << cfg.run.n_min << '\n';
    out << "n_max = " << cfg.run.n_max << '\n';
    return out.str();
}

}  // namespace cdd
