#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "maserrx/model.hpp"

namespace maserrx {

namespace detail {

inline std::string trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return "";
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse number '" + s + "' for " + where);
    }
}

inline bool parse_bool(const std::string& s, const std::string& where) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("cannot parse boolean '" + s + "' for " + where);
}

// "off_hz:weight" entries separated by spaces or commas; "default" or the
// empty string selects the built-in table.
inline std::vector<LinePoint> parse_lineshape(const std::string& value,
                                              const std::string& where) {
    if (value.empty() || value == "default") return {};
    std::vector<LinePoint> pts;
    std::string token;
    std::stringstream ss(value);
    std::string normalized = value;
    for (auto& c : normalized)
        if (c == ',') c = ' ';
    std::stringstream s2(normalized);
    while (s2 >> token) {
        auto colon = token.find(':');
        if (colon == std::string::npos)
            throw ConfigError("lineshape entry '" + token + "' needs offset:weight (" +
                              where + ")");
        LinePoint p;
        p.offset = kTwoPi * parse_double(token.substr(0, colon), where);
        p.weight = parse_double(token.substr(colon + 1), where);
        pts.push_back(p);
    }
    if (pts.empty()) throw ConfigError("lineshape has no entries (" + where + ")");
    return pts;
}

inline std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Applies one key to the config. Frequencies (omega_*, lineshape offsets)
/// are given in Hz at this boundary and converted to rad/s internally.
/// Returns false for an unknown section/key.
inline bool set_config_key(ReceiverConfig& cfg, const std::string& section,
                           const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    const std::string where = section + "." + key;
    if (section == "cavity") {
        if (key == "omega_c") cfg.cavity.omega_c = kTwoPi * parse_double(value, where);
        else if (key == "q_loaded") cfg.cavity.q_loaded = parse_double(value, where);
        else if (key == "v_m") cfg.cavity.v_m = parse_double(value, where);
        else if (key == "coupling_fraction")
            cfg.cavity.coupling_fraction = parse_double(value, where);
        else return false;
        return true;
    }
    if (section == "spins") {
        if (key == "omega_s_center")
            cfg.spins.omega_s_center = kTwoPi * parse_double(value, where);
        else if (key == "n_spins") cfg.spins.n_spins = parse_double(value, where);
        else if (key == "g_single") cfg.spins.g_single = parse_double(value, where);
        else if (key == "gamma_par") cfg.spins.gamma_par = parse_double(value, where);
        else if (key == "gamma_perp") cfg.spins.gamma_perp = parse_double(value, where);
        else if (key == "initial_sz") cfg.spins.initial_sz = parse_double(value, where);
        else if (key == "lineshape")
            cfg.spins.lineshape = detail::parse_lineshape(value, where);
        else return false;
        return true;
    }
    if (section == "drive") {
        if (key == "omega_in") cfg.drive.omega_in = kTwoPi * parse_double(value, where);
        else if (key == "power_in") {
            cfg.drive.power_in = parse_double(value, where);
            cfg.drive.authoritative = DriveInput::power;
        } else if (key == "amplitude") {
            cfg.drive.amplitude = parse_double(value, where);
            if (cfg.drive.amplitude > 0.0)
                cfg.drive.authoritative = DriveInput::amplitude;
        } else if (key == "phase") cfg.drive.phase = parse_double(value, where);
        else if (key == "pulse_start")
            cfg.drive.pulse_start = parse_double(value, where);
        else if (key == "pulse_duration")
            cfg.drive.pulse_duration = parse_double(value, where);
        else if (key == "seed_s_minus")
            cfg.drive.seed_s_minus = parse_double(value, where);
        else return false;
        return true;
    }
    if (section == "sim") {
        if (key == "t_end") cfg.sim.t_end = parse_double(value, where);
        else if (key == "dt") cfg.sim.dt = parse_double(value, where);
        else if (key == "adaptive") cfg.sim.adaptive = parse_bool(value, where);
        else if (key == "tolerance") cfg.sim.tolerance = parse_double(value, where);
        else if (key == "output_stride")
            cfg.sim.output_stride = static_cast<int>(parse_double(value, where));
        else return false;
        return true;
    }
    if (section == "noise") {
        if (key == "sigma") cfg.noise.sigma = parse_double(value, where);
        else if (key == "seed")
            cfg.noise.seed = static_cast<std::uint64_t>(parse_double(value, where));
        else return false;
        return true;
    }
    if (section == "detector") {
        if (key == "slope_mv_per_db")
            cfg.detector.slope_mv_per_db = parse_double(value, where);
        else if (key == "reference_dbm")
            cfg.detector.reference_dbm = parse_double(value, where);
        else if (key == "floor_dbm")
            cfg.detector.floor_dbm = parse_double(value, where);
        else return false;
        return true;
    }
    return false;
}

/// Parses the sectioned key = value format. '#' and ';' start comments.
/// Unknown keys are errors. The result is finalized but not validated.
inline ReceiverConfig parse_config(const std::string& text,
                                   const std::string& origin = "<string>") {
    ReceiverConfig cfg;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": key outside any section");
        if (!set_config_key(cfg, section, key, value))
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": unknown key " + section + "." + key);
    }
    finalize_config(cfg);
    return cfg;
}

inline ReceiverConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

/// "section.key=value" override, applied before validation.
inline void apply_override(ReceiverConfig& cfg, const std::string& spec) {
    auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + spec + "' must look like section.key=value");
    std::string path = detail::trim(spec.substr(0, eq));
    std::string value = detail::trim(spec.substr(eq + 1));
    auto dot = path.find('.');
    if (dot == std::string::npos)
        throw ConfigError("override key '" + path + "' must look like section.key");
    std::string section = path.substr(0, dot);
    std::string key = path.substr(dot + 1);
    if (!set_config_key(cfg, section, key, value))
        throw ConfigError("override references unknown key " + path);
}

/// Canonical text form; frequencies back in Hz. Only the authoritative
/// drive input carries its value so a reload resolves the same way.
inline std::string serialize_config(const ReceiverConfig& cfg) {
    using detail::format_full;
    std::ostringstream o;
    o << "# maser receiver configuration (frequencies in Hz, rates in 1/s)\n";
    o << "\n[cavity]\n";
    o << "omega_c = " << format_full(cfg.cavity.omega_c / kTwoPi) << "\n";
    o << "q_loaded = " << format_full(cfg.cavity.q_loaded) << "\n";
    o << "v_m = " << format_full(cfg.cavity.v_m) << "\n";
    o << "coupling_fraction = " << format_full(cfg.cavity.coupling_fraction) << "\n";
    o << "\n[spins]\n";
    o << "omega_s_center = " << format_full(cfg.spins.omega_s_center / kTwoPi) << "\n";
    o << "n_spins = " << format_full(cfg.spins.n_spins) << "\n";
    o << "g_single = " << format_full(cfg.spins.g_single) << "\n";
    o << "gamma_par = " << format_full(cfg.spins.gamma_par) << "\n";
    o << "gamma_perp = " << format_full(cfg.spins.gamma_perp) << "\n";
    o << "initial_sz = " << format_full(cfg.spins.initial_sz) << "\n";
    o << "lineshape =";
    for (const auto& p : cfg.spins.lineshape)
        o << " " << format_full(p.offset / kTwoPi) << ":" << format_full(p.weight);
    o << "\n";
    o << "\n[drive]\n";
    o << "omega_in = " << format_full(cfg.drive.omega_in / kTwoPi) << "\n";
    if (cfg.drive.authoritative == DriveInput::power) {
        o << "power_in = " << format_full(cfg.drive.power_in) << "\n";
        o << "amplitude = 0  # derived: " << format_full(cfg.drive.amplitude) << "\n";
    } else {
        o << "amplitude = " << format_full(cfg.drive.amplitude) << "\n";
        o << "# power_in derived: " << format_full(cfg.drive.power_in) << "\n";
    }
    o << "phase = " << format_full(cfg.drive.phase) << "\n";
    o << "pulse_start = " << format_full(cfg.drive.pulse_start) << "\n";
    o << "pulse_duration = " << format_full(cfg.drive.pulse_duration) << "\n";
    o << "seed_s_minus = " << format_full(cfg.drive.seed_s_minus) << "\n";
    o << "\n[sim]\n";
    o << "t_end = " << format_full(cfg.sim.t_end) << "\n";
    o << "dt = " << format_full(cfg.sim.dt) << "\n";
    o << "adaptive = " << (cfg.sim.adaptive ? "true" : "false") << "\n";
    o << "tolerance = " << format_full(cfg.sim.tolerance) << "\n";
    o << "output_stride = " << cfg.sim.output_stride << "\n";
    o << "\n[noise]\n";
    o << "sigma = " << format_full(cfg.noise.sigma) << "\n";
    o << "seed = " << cfg.noise.seed << "\n";
    o << "\n[detector]\n";
    o << "slope_mv_per_db = " << format_full(cfg.detector.slope_mv_per_db) << "\n";
    o << "reference_dbm = " << format_full(cfg.detector.reference_dbm) << "\n";
    o << "floor_dbm = " << format_full(cfg.detector.floor_dbm) << "\n";
    return o.str();
}

}  // namespace maserrx
