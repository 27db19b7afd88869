#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "maserrx/integrate.hpp"
#include "maserrx/model.hpp"

namespace maserrx {

/// Rotating-frame expectation values at one instant: the cavity amplitude
/// and one (s_minus, s_z) pair per spin subensemble.
struct MeanFieldState {
    std::complex<double> a{0.0, 0.0};
    std::vector<std::complex<double>> s_minus;
    std::vector<double> s_z;

    std::size_t n_subensembles() const { return s_z.size(); }
};

/// Uniformly sampled record of a run.
struct TimeTrace {
    std::vector<double> t;                  // s, strictly increasing
    std::vector<MeanFieldState> states;
    std::vector<double> photon_number;      // |a|^2 per sample
    ReceiverConfig meta;                    // generating config

    std::size_t size() const { return t.size(); }
    double sample_interval() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
};

/// Drive field eta(t): constant complex amplitude inside the pulse window,
/// zero outside.
inline std::complex<double> drive_waveform(const DriveParams& drive, double t) {
    if (t >= drive.pulse_start && t < drive.pulse_start + drive.pulse_duration)
        return std::polar(drive.amplitude, drive.phase);
    return {0.0, 0.0};
}

namespace detail {

// Precomputed coefficient tables for the packed ODE system. Layout of the
// packed vector: [Re a, Im a, (Re s-, Im s-) x K, s_z x K].
struct MeanFieldSystem {
    double kappa_half = 0.0;
    double delta_c = 0.0;
    double gamma_perp = 0.0;
    double gamma_par = 0.0;
    std::vector<double> delta_s;   // per subensemble, rad/s
    std::vector<double> g;         // collective coupling per subensemble
    std::vector<double> four_g_over_n;
    DriveParams drive;

    static MeanFieldSystem from_config(const ReceiverConfig& cfg) {
        MeanFieldSystem sys;
        sys.kappa_half = 0.5 * cfg.cavity.kappa_c();
        sys.delta_c = cfg.cavity.omega_c - cfg.drive.omega_in;
        sys.gamma_perp = cfg.spins.gamma_perp;
        sys.gamma_par = cfg.spins.gamma_par;
        sys.drive = cfg.drive;
        for (const auto& sub : build_spin_ensemble(cfg.spins)) {
            sys.delta_s.push_back(cfg.spins.omega_s_center + sub.delta -
                                  cfg.drive.omega_in);
            sys.g.push_back(sub.g_eff);
            sys.four_g_over_n.push_back(sub.n_spins > 0.0
                                            ? 4.0 * sub.g_eff / sub.n_spins
                                            : 0.0);
        }
        return sys;
    }

    std::size_t n_sub() const { return g.size(); }
    std::size_t dim() const { return 2 + 3 * n_sub(); }

    Eigen::VectorXd rhs(double t, const Eigen::VectorXd& y) const {
        const std::size_t K = n_sub();
        Eigen::VectorXd dy(y.size());
        const double ar = y[0], ai = y[1];
        const std::complex<double> eta = drive_waveform(drive, t);

        double sum_g_sr = 0.0, sum_g_si = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            sum_g_sr += g[k] * y[2 + 2 * k];
            sum_g_si += g[k] * y[3 + 2 * k];
        }
        dy[0] = -kappa_half * ar + delta_c * ai + sum_g_si + eta.real();
        dy[1] = -kappa_half * ai - delta_c * ar - sum_g_sr + eta.imag();

        for (std::size_t k = 0; k < K; ++k) {
            const double sr = y[2 + 2 * k], si = y[3 + 2 * k];
            const double sz = y[2 + 2 * K + k];
            dy[2 + 2 * k] = -gamma_perp * sr + delta_s[k] * si - g[k] * sz * ai;
            dy[3 + 2 * k] = -gamma_perp * si - delta_s[k] * sr + g[k] * sz * ar;
            dy[2 + 2 * K + k] =
                -gamma_par * sz - four_g_over_n[k] * (si * ar - sr * ai);
        }
        return dy;
    }
};

inline Eigen::VectorXd pack_state(const MeanFieldState& s) {
    const std::size_t K = s.n_subensembles();
    Eigen::VectorXd y(2 + 3 * K);
    y[0] = s.a.real();
    y[1] = s.a.imag();
    for (std::size_t k = 0; k < K; ++k) {
        y[2 + 2 * k] = s.s_minus[k].real();
        y[3 + 2 * k] = s.s_minus[k].imag();
        y[2 + 2 * K + k] = s.s_z[k];
    }
    return y;
}

inline MeanFieldState unpack_state(const Eigen::VectorXd& y, std::size_t K) {
    MeanFieldState s;
    s.a = {y[0], y[1]};
    s.s_minus.resize(K);
    s.s_z.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        s.s_minus[k] = {y[2 + 2 * k], y[3 + 2 * k]};
        s.s_z[k] = y[2 + 2 * K + k];
    }
    return s;
}

}  // namespace detail

/// Fresh pre-pulse state: empty cavity, optional coherence seed, every
/// subensemble polarized to initial_sz (the pump pulse is treated as an
/// instantaneous re-initialization at t = 0).
inline MeanFieldState initial_state(const ReceiverConfig& cfg) {
    MeanFieldState s;
    const std::size_t K = cfg.spins.lineshape.size();
    s.s_minus.assign(K, {cfg.drive.seed_s_minus, 0.0});
    s.s_z.assign(K, cfg.spins.initial_sz);
    return s;
}

/// Time derivative of the coupled cavity/spin expectation values:
///   d<a>/dt    = -(kappa/2 + i Dc) <a> - i sum_k g_k <S-_k> + eta(t)
///   d<S-_k>/dt = -(gperp + i Ds_k) <S-_k> + i g_k <Sz_k> <a>
///   d<Sz_k>/dt = -gpar <Sz_k> + (2 i g_k / N_k)(<S-_k><a>* - <S+_k><a>)
inline MeanFieldState meanfield_derivative(const MeanFieldState& state,
                                           const ReceiverConfig& cfg, double t) {
    auto sys = detail::MeanFieldSystem::from_config(cfg);
    if (state.n_subensembles() != sys.n_sub() ||
        state.s_minus.size() != state.s_z.size())
        throw DomainError("meanfield_derivative: state does not match ensemble");
    return detail::unpack_state(sys.rhs(t, detail::pack_state(state)), sys.n_sub());
}

/// Integrates the mean-field equations over [0, t_end] with classical RK4
/// (step-doubling control between output samples when sim.adaptive is set).
/// Samples are stored every sim.output_stride internal steps so the output
/// grid stays uniform.
inline TimeTrace integrate_meanfield(const ReceiverConfig& cfg,
                                     const MeanFieldState& initial) {
    auto sys = detail::MeanFieldSystem::from_config(cfg);
    if (initial.n_subensembles() != sys.n_sub() ||
        initial.s_minus.size() != initial.s_z.size())
        throw DomainError("integrate_meanfield: initial state does not match ensemble");

    // dt must resolve the fastest rotation/decay scale
    const double dt = cfg.sim.dt;
    struct Scale {
        const char* name;
        double value;
    };
    double max_delta_s = 0.0;
    for (double d : sys.delta_s) max_delta_s = std::max(max_delta_s, std::abs(d));
    const Scale scales[] = {{"detuning", std::max(std::abs(sys.delta_c), max_delta_s)},
                            {"g_eff", cfg.spins.g_eff()},
                            {"kappa_c", cfg.cavity.kappa_c()}};
    for (const auto& s : scales) {
        if (dt * s.value >= 0.1)
            throw ConfigError("sim.dt too large: dt * " + std::string(s.name) + " = " +
                              std::to_string(dt * s.value) + " (must stay below 0.1)");
    }

    const std::size_t stride = static_cast<std::size_t>(cfg.sim.output_stride);
    const double out_dt = dt * static_cast<double>(stride);
    const std::size_t n_out =
        static_cast<std::size_t>(std::floor(cfg.sim.t_end / out_dt + 1.0e-9)) + 1;

    TimeTrace trace;
    trace.meta = cfg;
    trace.t.reserve(n_out);
    trace.states.reserve(n_out);
    trace.photon_number.reserve(n_out);

    Eigen::VectorXd y = detail::pack_state(initial);
    auto f = [&sys](double t, const Eigen::VectorXd& v) { return sys.rhs(t, v); };

    double t = 0.0;
    double h = dt;
    for (std::size_t i = 0; i < n_out; ++i) {
        if (i > 0) {
            const double t_target = static_cast<double>(i) * out_dt;
            try {
                if (cfg.sim.adaptive) {
                    adaptive_advance(y, t, t_target, h, cfg.sim.tolerance, f);
                } else {
                    for (std::size_t s = 0; s < stride; ++s) {
                        y = rk4_step(y, t, dt, f);
                        t += dt;
                    }
                    t = t_target;  // remove accumulated rounding
                }
            } catch (const NumericalError&) {
                throw NumericalError("mean-field integration diverged",
                                     trace.t.empty() ? 0.0 : trace.t.back());
            }
            if (!y.allFinite())
                throw NumericalError("mean-field integration produced non-finite values",
                                     trace.t.empty() ? 0.0 : trace.t.back());
        }
        trace.t.push_back(t);
        trace.states.push_back(detail::unpack_state(y, sys.n_sub()));
        trace.photon_number.push_back(y[0] * y[0] + y[1] * y[1]);
    }
    return trace;
}

struct ConservedQuantities {
    double excitation = 0.0;              // |<a>|^2 + sum_k (N_k/2) <Sz_k>
    std::vector<double> spin_length;      // <Sz_k>^2 + (4/N_k) |<S-_k>|^2
};

/// Diagnostics that are exact constants of the lossless undriven equations.
inline ConservedQuantities conserved_quantities(const MeanFieldState& state,
                                                const std::vector<double>& n_spins) {
    if (n_spins.size() != state.n_subensembles() ||
        state.s_minus.size() != state.s_z.size())
        throw DomainError("conserved_quantities: dimension mismatch");
    ConservedQuantities q;
    q.excitation = std::norm(state.a);
    q.spin_length.resize(n_spins.size());
    for (std::size_t k = 0; k < n_spins.size(); ++k) {
        q.excitation += 0.5 * n_spins[k] * state.s_z[k];
        q.spin_length[k] = state.s_z[k] * state.s_z[k] +
                           4.0 / n_spins[k] * std::norm(state.s_minus[k]);
    }
    return q;
}

/// Largest real part over the eigenvalues of the zero-field Jacobian with
/// every <Sz> pinned at initial_sz. Positive means the undriven receiver
/// self-oscillates from any coherence seed; for a single resonant
/// subensemble the sign flips exactly at g_eff^2 * sz0 = (kappa_c/2) * gperp.
inline double linear_growth_rate(const ReceiverConfig& cfg) {
    auto sys = detail::MeanFieldSystem::from_config(cfg);
    const std::size_t K = sys.n_sub();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(K + 1, K + 1);
    m(0, 0) = std::complex<double>(-sys.kappa_half, -sys.delta_c);
    for (std::size_t k = 0; k < K; ++k) {
        m(0, k + 1) = std::complex<double>(0.0, -sys.g[k]);
        m(k + 1, 0) = std::complex<double>(0.0, sys.g[k] * cfg.spins.initial_sz);
        m(k + 1, k + 1) = std::complex<double>(-sys.gamma_perp, -sys.delta_s[k]);
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, false);
    double max_re = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
        max_re = std::max(max_re, solver.eigenvalues()[i].real());
    return max_re;
}

}  // namespace maserrx
