#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "maserrx/constants.hpp"
#include "maserrx/errors.hpp"

namespace maserrx {

/// kappa_c from the loaded quality factor. FWHM bandwidth in Hz is the
/// returned rate divided by 2*pi.
inline double kappa_from_q(double omega_c, double q_loaded) {
    if (omega_c <= 0.0) throw DomainError("kappa_from_q: omega_c must be > 0");
    if (q_loaded <= 0.0) throw DomainError("kappa_from_q: q_loaded must be > 0");
    return omega_c / q_loaded;
}

struct CavityParams {
    double omega_c = kTwoPi * 1.4492e9;  // rad/s
    double q_loaded = 1857.0;
    double v_m = 5.4e-7;                 // m^3, magnetic mode volume
    double coupling_fraction = 0.35;     // share of kappa_c at the i/o port

    // Derived, never stored.
    double kappa_c() const { return kappa_from_q(omega_c, q_loaded); }
};

struct LinePoint {
    double offset = 0.0;  // rad/s from omega_s_center
    double weight = 0.0;  // fraction of n_spins, table sums to 1
};

// Ensemble defaults are illustrative: the paper never states its spin count
// or single-spin coupling. n_spins sits at 99.5% of the self-oscillation
// threshold for the default cavity, the strongest amplification the
// receiver protocol allows.
struct SpinEnsembleParams {
    double omega_s_center = kTwoPi * 1.4492e9;  // rad/s
    double n_spins = 3.06e15;                   // effective two-level spin count
    double g_single = 0.0;                      // rad/s; 0 = derive from cavity
    double gamma_par = 5.0e3;                   // rad/s, longitudinal
    double gamma_perp = 2.5e6;                  // rad/s, transverse (packet width)
    double initial_sz = 0.8095;                 // T_X/T_Z population imbalance
    std::vector<LinePoint> lineshape;           // empty = broadened default

    // Collective coupling for the whole ensemble, never stored.
    double g_eff() const { return g_single * std::sqrt(n_spins); }
};

enum class DriveInput { amplitude, power };

struct DriveParams {
    double omega_in = kTwoPi * 1.4492e9;  // rad/s
    double amplitude = 0.0;               // rad/s * sqrt(photon), eta of the field equation
    double power_in = 2.089e-9;           // W at the cavity port (-56.8 dBm)
    DriveInput authoritative = DriveInput::power;
    double phase = 0.0;                   // rad, constant drive phase
    double pulse_start = 1.0e-6;          // s
    double pulse_duration = 5.0e-6;       // s
    double seed_s_minus = 0.0;            // initial coherence seed
};

struct SimParams {
    double t_end = 1.6e-5;     // s
    double dt = 1.0e-9;        // s, integration step (initial step when adaptive)
    bool adaptive = false;
    double tolerance = 1.0e-9; // relative, step-doubling control
    int output_stride = 4;     // samples stored every stride-th step
};

struct NoiseParams {
    double sigma = 1.0;        // mV on the detector trace
    std::uint64_t seed = 12345;
};

struct DetectorParams {
    double slope_mv_per_db = 22.0;  // AD8317-style log detector
    double reference_dbm = 0.0;
    double floor_dbm = -200.0;      // keeps log of zero power finite
};

struct ReceiverConfig {
    PhysicalConstants constants;
    CavityParams cavity;
    SpinEnsembleParams spins;
    DriveParams drive;
    SimParams sim;
    NoiseParams noise;
    DetectorParams detector;
};

/// Default inhomogeneous line: 21 points on a 1 MHz grid spanning +-10 MHz,
/// weights from a left-skewed normal (alpha=-2, scale=4 MHz) shifted so the
/// mode sits at zero offset. The heavier low-frequency tail mirrors the
/// second-order-hyperfine asymmetry of the zero-field transition.
inline std::vector<LinePoint> default_lineshape() {
    static const double kWeights[21] = {
        2.02279786353156289e-03, 4.18254953135200561e-03, 8.12430492394905501e-03,
        1.48247372369774422e-02, 2.54118285549586598e-02, 4.09148931386963885e-02,
        6.18378834991894707e-02, 8.75169771316075956e-02, 1.15142961630554930e-01,
        1.38574777845239333e-01, 1.48505818329388556e-01, 1.36896851457532359e-01,
        1.04741230253287035e-01, 6.44633888214654199e-02, 3.11376959919015713e-02,
        1.15915889728518684e-02, 3.28262088930525442e-03, 7.00628039881492221e-04,
        1.11957791874989083e-04, 1.33298136733995088e-05, 1.17828278164589006e-06};
    std::vector<LinePoint> table(21);
    double sum = 0.0;
    for (int k = 0; k < 21; ++k) {
        table[k].offset = kTwoPi * 1.0e6 * (k - 10);
        table[k].weight = kWeights[k];
        sum += kWeights[k];
    }
    table[10].weight += 1.0 - sum;  // exact unit normalization
    return table;
}

/// Single-spin coupling that makes the intracavity field per unit input
/// power agree with the conversion-factor relation B1 = C*sqrt(P) at the
/// configured port coupling.
inline double derive_g_single(const PhysicalConstants& c, const CavityParams& cav) {
    if (cav.coupling_fraction <= 0.0)
        throw DomainError("derive_g_single: coupling_fraction must be > 0");
    return 0.25 * c.abs_gamma_e_rad_per_s_t() *
           std::sqrt(c.mu0() * c.hbar() * cav.omega_c /
                     (cav.v_m * cav.coupling_fraction));
}

/// Fills derived fields: the default lineshape when none is given, g_single
/// from the cavity when zero, and whichever of amplitude/power_in is not
/// authoritative. Idempotent.
inline void finalize_config(ReceiverConfig& cfg) {
    if (cfg.spins.lineshape.empty()) cfg.spins.lineshape = default_lineshape();
    if (cfg.spins.g_single == 0.0)
        cfg.spins.g_single = derive_g_single(cfg.constants, cfg.cavity);
    const double kappa = cfg.cavity.kappa_c();
    const double hw = cfg.constants.hbar() * cfg.drive.omega_in;
    if (cfg.drive.authoritative == DriveInput::power) {
        cfg.drive.amplitude =
            std::sqrt(cfg.cavity.coupling_fraction * kappa * cfg.drive.power_in / hw);
    } else {
        cfg.drive.power_in = cfg.drive.amplitude * cfg.drive.amplitude * hw /
                             (cfg.cavity.coupling_fraction * kappa);
    }
}

struct ConfigViolation {
    std::string path;    // e.g. "sim.dt"
    std::string reason;
};

/// Checks every invariant and returns the complete list of violations
/// (empty when the config is valid). Does not modify the config.
inline std::vector<ConfigViolation> validate_config(const ReceiverConfig& cfg) {
    std::vector<ConfigViolation> v;
    auto bad = [&v](const std::string& path, const std::string& reason) {
        v.push_back({path, reason});
    };

    if (cfg.cavity.omega_c <= 0.0) bad("cavity.omega_c", "must be > 0");
    if (cfg.cavity.q_loaded <= 0.0) bad("cavity.q_loaded", "must be > 0");
    if (cfg.cavity.v_m <= 0.0) bad("cavity.v_m", "must be > 0");
    if (cfg.cavity.coupling_fraction < 0.0 || cfg.cavity.coupling_fraction > 1.0)
        bad("cavity.coupling_fraction", "must lie in [0, 1]");

    if (cfg.spins.omega_s_center <= 0.0) bad("spins.omega_s_center", "must be > 0");
    if (cfg.spins.n_spins < 1.0) bad("spins.n_spins", "must be >= 1");
    if (cfg.spins.g_single < 0.0) bad("spins.g_single", "must be >= 0");
    if (cfg.spins.gamma_par < 0.0) bad("spins.gamma_par", "must be >= 0");
    if (cfg.spins.gamma_perp < 0.0) bad("spins.gamma_perp", "must be >= 0");
    if (std::abs(cfg.spins.initial_sz) > 1.0)
        bad("spins.initial_sz", "must lie in [-1, 1]");
    if (cfg.spins.lineshape.empty()) {
        bad("spins.lineshape", "must have at least one point");
    } else {
        double sum = 0.0;
        bool nonneg = true;
        for (const auto& p : cfg.spins.lineshape) {
            if (p.weight < 0.0) nonneg = false;
            sum += p.weight;
        }
        if (!nonneg) bad("spins.lineshape", "weights must be nonnegative");
        if (std::abs(sum - 1.0) > 1.0e-12)
            bad("spins.lineshape",
                "weights must sum to 1 within 1e-12 (got " + std::to_string(sum) + ")");
    }

    if (cfg.drive.omega_in <= 0.0) bad("drive.omega_in", "must be > 0");
    if (cfg.drive.amplitude < 0.0) bad("drive.amplitude", "must be >= 0");
    if (cfg.drive.power_in < 0.0) bad("drive.power_in", "must be >= 0");
    if (cfg.drive.pulse_duration < 0.0) bad("drive.pulse_duration", "must be >= 0");

    if (cfg.sim.dt <= 0.0) bad("sim.dt", "must be > 0");
    if (cfg.sim.t_end <= cfg.sim.dt) bad("sim.t_end", "must exceed sim.dt");
    if (cfg.sim.adaptive && cfg.sim.tolerance <= 0.0)
        bad("sim.tolerance", "must be > 0 when adaptive");
    if (cfg.sim.output_stride < 1) bad("sim.output_stride", "must be >= 1");

    if (cfg.noise.sigma < 0.0) bad("noise.sigma", "must be >= 0");
    if (cfg.detector.slope_mv_per_db <= 0.0)
        bad("detector.slope_mv_per_db", "must be > 0");

    return v;
}

/// Throws ConfigError listing every violation.
inline void ensure_valid(const ReceiverConfig& cfg) {
    auto violations = validate_config(cfg);
    if (violations.empty()) return;
    std::string msg = "invalid configuration:";
    for (const auto& x : violations) msg += "\n  " + x.path + ": " + x.reason;
    throw ConfigError(msg);
}

struct Subensemble {
    double delta = 0.0;    // rad/s offset from omega_s_center
    double n_spins = 0.0;  // weight_k * total spins
    double g_eff = 0.0;    // g_single * sqrt(n_spins)
};

/// Splits the ensemble across the lineshape table. Total spin number is
/// conserved exactly: sum_k n_k = n_spins up to rounding of the weights.
inline std::vector<Subensemble> build_spin_ensemble(const SpinEnsembleParams& spins) {
    if (spins.lineshape.empty())
        throw DomainError("build_spin_ensemble: lineshape is empty");
    std::vector<Subensemble> out;
    out.reserve(spins.lineshape.size());
    for (const auto& p : spins.lineshape) {
        Subensemble s;
        s.delta = p.offset;
        s.n_spins = p.weight * spins.n_spins;
        s.g_eff = spins.g_single * std::sqrt(s.n_spins);
        out.push_back(s);
    }
    return out;
}

}  // namespace maserrx
