#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "maserrx/errors.hpp"
#include "maserrx/lindblad.hpp"
#include "maserrx/meanfield.hpp"

namespace maserrx {

/// Floating-point CSV cell, 9 significant digits.
inline std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    bool empty() const { return rows.empty() || columns.empty(); }
    void add_row(std::initializer_list<double> vals) { rows.emplace_back(vals); }
};

inline std::string table_to_csv(const Table& table) {
    std::ostringstream o;
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        o << (c ? "," : "") << table.columns[c];
    o << "\n";
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw IoError("table row width does not match the header");
        for (std::size_t c = 0; c < row.size(); ++c)
            o << (c ? "," : "") << format_g9(row[c]);
        o << "\n";
    }
    return o.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// FNV-1a 64-bit content digest, hex encoded.
inline std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Mean-field trace as a table: t_s, re_a, im_a, photon_number, then
/// re_sminus_k, im_sminus_k, sz_k per subensemble.
inline Table trace_to_table(const TimeTrace& trace) {
    Table t;
    const std::size_t K = trace.states.empty() ? 0 : trace.states[0].n_subensembles();
    t.columns = {"t_s", "re_a", "im_a", "photon_number"};
    for (std::size_t k = 0; k < K; ++k) {
        t.columns.push_back("re_sminus_" + std::to_string(k));
        t.columns.push_back("im_sminus_" + std::to_string(k));
        t.columns.push_back("sz_" + std::to_string(k));
    }
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::vector<double> row;
        row.reserve(t.columns.size());
        const auto& s = trace.states[i];
        row.push_back(trace.t[i]);
        row.push_back(s.a.real());
        row.push_back(s.a.imag());
        row.push_back(trace.photon_number[i]);
        for (std::size_t k = 0; k < K; ++k) {
            row.push_back(s.s_minus[k].real());
            row.push_back(s.s_minus[k].imag());
            row.push_back(s.s_z[k]);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Oracle trace: same schema with one subensemble plus the Fock-tail column.
inline Table lindblad_trace_to_table(const LindbladTrace& trace) {
    Table t;
    t.columns = {"t_s",         "re_a", "im_a", "photon_number",
                 "re_sminus_0", "im_sminus_0", "sz_0", "fock_tail"};
    for (std::size_t i = 0; i < trace.size(); ++i) {
        t.rows.push_back({trace.t[i], trace.a_expect[i].real(),
                          trace.a_expect[i].imag(), trace.photon_number[i],
                          trace.s_minus_collective[i].real(),
                          trace.s_minus_collective[i].imag(),
                          trace.s_z_collective[i], trace.fock_tail[i]});
    }
    return t;
}

}  // namespace maserrx
