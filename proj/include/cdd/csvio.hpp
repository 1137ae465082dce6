#pragma once

// Deterministic CSV emit/ingest. No timestamps, %.17g round-trip formatting,
// LF newlines: reruns with identical inputs produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdd/dynamics.hpp"

namespace cdd {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct FitRow {
    std::string scenario;
    std::string protocol;
    double t2_s = 0.0;
    double beta = 0.0;
    std::string method;  // "stretched_exp" or "threshold"
    double residual = 0.0;
};

struct SummaryRow {
    std::string scenario;
    std::string quantity;
    double value = 0.0;
    std::string unit;
    std::string method;
};

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);  // binary: LF on every platform
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

}  // namespace detail

inline void write_curve_csv(const std::filesystem::path& path, const FidelityCurve& c) {
    auto out = detail::open_out(path);
    out << "t_s,value,stderr\n";
    for (std::size_t i = 0; i < c.times.size(); ++i)
        out << fmt_g17(c.times[i]) << ',' << fmt_g17(c.values[i]) << ','
            << fmt_g17(c.std_err[i]) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline void write_fits_csv(const std::filesystem::path& path,
                           const std::vector<FitRow>& rows) {
    auto out = detail::open_out(path);
    out << "scenario,protocol,t2_s,beta,method,residual\n";
    for (const auto& r : rows)
        out << r.scenario << ',' << r.protocol << ',' << fmt_g17(r.t2_s) << ','
            << fmt_g17(r.beta) << ',' << r.method << ',' << fmt_g17(r.residual) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline void write_summary_csv(const std::filesystem::path& path,
                              const std::vector<SummaryRow>& rows) {
    auto out = detail::open_out(path);
    out << "scenario,quantity,value,unit,method\n";
    for (const auto& r : rows)
        out << r.scenario << ',' << r.quantity << ',' << fmt_g17(r.value) << ',' << r.unit
            << ',' << r.method << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Generic numeric table writer (header plus %.17g cells), used by scans.
inline void write_table_csv(const std::filesystem::path& path,
                            const std::vector<std::string>& header,
                            const std::vector<std::vector<double>>& rows) {
    auto out = detail::open_out(path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? ',' : '\n');
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("write_table_csv: ragged row");
        for (std::size_t i = 0; i < row.size(); ++i)
            out << fmt_g17(row[i]) << (i + 1 < row.size() ? ',' : '\n');
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Reads a curve CSV (t_s,value[,stderr]); used by the `fit` subcommand.
inline FidelityCurve read_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    FidelityCurve c;
    std::string line;
    std::size_t lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {  // tolerate arbitrary header names, require >= 2 columns
            header = false;
            continue;
        }
        std::istringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument("trailing junk");
            } catch (const std::exception&) {
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                         ": bad numeric cell '" + cell + "'");
            }
        }
        if (vals.size() < 2)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": need at least t,value columns");
        c.times.push_back(vals[0]);
        c.values.push_back(vals[1]);
        c.std_err.push_back(vals.size() > 2 ? vals[2] : 0.0);
    }
    if (c.times.empty()) throw std::runtime_error(path.string() + ": empty curve");
    return c;
}

}  // namespace cdd
