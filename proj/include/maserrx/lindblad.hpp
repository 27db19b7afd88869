#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "maserrx/meanfield.hpp"
#include "maserrx/model.hpp"

namespace maserrx {

using SparseCd = Eigen::SparseMatrix<std::complex<double>>;

/// Truncated Fock (x) spin-register density operator. Basis ordering is
/// Fock index major, spin bitmask minor; a set bit means the spin is in
/// the upper level.
struct DensityMatrix {
    int dim_fock = 0;
    int n_spins = 0;
    Eigen::MatrixXcd data;

    int dim() const { return dim_fock * (1 << n_spins); }
    double trace_real() const { return data.trace().real(); }
    double hermiticity_error() const {
        return (data - data.adjoint()).cwiseAbs().maxCoeff();
    }
    /// Population of the top Fock level; nonzero values flag truncation.
    double fock_tail() const {
        const int S = 1 << n_spins;
        double tail = 0.0;
        for (int b = 0; b < S; ++b) {
            const int i = (dim_fock - 1) * S + b;
            tail += data(i, i).real();
        }
        return tail;
    }
};

/// Sparse operator set for the driven spin-cavity Hamiltonian
///   H = Dc a'a + (Ds/2) sum_j sz_j + sum_j g_j (sm_j a' + sp_j a)
///     + i (eta a' - eta* a),
/// all in angular-frequency units.
struct LindbladOperators {
    int dim_fock = 0;
    int n_spins = 0;
    double delta_c = 0.0;
    double delta_s = 0.0;
    double g = 0.0;
    SparseCd a, a_dag, n_photon;
    std::vector<SparseCd> sigma_z, sigma_minus, sigma_plus, excited_proj;
    SparseCd h0;  // drive-free part

    SparseCd hamiltonian(std::complex<double> eta) const {
        const std::complex<double> i1(0.0, 1.0);
        return SparseCd(h0 + i1 * eta * a_dag - i1 * std::conj(eta) * a);
    }
};

inline LindbladOperators build_operators(int dim_fock, int n_spins,
                                         const ReceiverConfig& cfg,
                                         std::size_t memory_cap_bytes = 512u << 20) {
    if (dim_fock < 2) throw DomainError("build_operators: dim_fock must be >= 2");
    if (n_spins < 1 || n_spins > 4)
        throw DomainError("build_operators: n_spins must lie in 1..4");
    const int S = 1 << n_spins;
    const std::size_t D = static_cast<std::size_t>(dim_fock) * S;
    if (D * D * sizeof(std::complex<double>) > memory_cap_bytes)
        throw ResourceError("build_operators: dimension " + std::to_string(D) +
                            " exceeds the memory cap");

    LindbladOperators ops;
    ops.dim_fock = dim_fock;
    ops.n_spins = n_spins;
    ops.delta_c = cfg.cavity.omega_c - cfg.drive.omega_in;
    ops.delta_s = cfg.spins.omega_s_center - cfg.drive.omega_in;
    ops.g = cfg.spins.g_single;

    using T = Eigen::Triplet<std::complex<double>>;
    const int dim = static_cast<int>(D);

    std::vector<T> ta;
    for (int f = 1; f < dim_fock; ++f)
        for (int b = 0; b < S; ++b)
            ta.emplace_back((f - 1) * S + b, f * S + b, std::sqrt(double(f)));
    ops.a.resize(dim, dim);
    ops.a.setFromTriplets(ta.begin(), ta.end());
    ops.a_dag = ops.a.adjoint();
    ops.n_photon = ops.a_dag * ops.a;

    for (int j = 0; j < n_spins; ++j) {
        const int bit = 1 << j;
        std::vector<T> tz, tm, tp, te;
        for (int f = 0; f < dim_fock; ++f) {
            for (int b = 0; b < S; ++b) {
                const int i = f * S + b;
                if (b & bit) {
                    tz.emplace_back(i, i, 1.0);
                    tm.emplace_back(f * S + (b & ~bit), i, 1.0);  // lowers spin j
                    te.emplace_back(i, i, 1.0);
                } else {
                    tz.emplace_back(i, i, -1.0);
                    tp.emplace_back(f * S + (b | bit), i, 1.0);
                }
            }
        }
        SparseCd z(dim, dim), m(dim, dim), p(dim, dim), e(dim, dim);
        z.setFromTriplets(tz.begin(), tz.end());
        m.setFromTriplets(tm.begin(), tm.end());
        p.setFromTriplets(tp.begin(), tp.end());
        e.setFromTriplets(te.begin(), te.end());
        ops.sigma_z.push_back(std::move(z));
        ops.sigma_minus.push_back(std::move(m));
        ops.sigma_plus.push_back(std::move(p));
        ops.excited_proj.push_back(std::move(e));
    }

    SparseCd h = SparseCd(ops.delta_c * ops.n_photon);
    for (int j = 0; j < n_spins; ++j) {
        h += SparseCd(0.5 * ops.delta_s * ops.sigma_z[j]);
        h += SparseCd(ops.g * (ops.sigma_minus[j] * ops.a_dag +
                               ops.sigma_plus[j] * ops.a));
    }
    ops.h0 = h;
    return ops;
}

/// Master-equation right-hand side:
///   drho/dt = -i [H, rho]
///           + kappa (a rho a' - (a'a rho + rho a'a)/2)
///           + gpar sum_j (sz_j rho sz_j - rho)
///           + gperp sum_j (2 sm_j rho sp_j - sp_j sm_j rho - rho sp_j sm_j).
/// The sigma_z channel is pure dephasing; the collapse channel relaxes each
/// spin at 2*gperp in population and gperp in coherence.
inline Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho,
                                     const LindbladOperators& ops,
                                     std::complex<double> eta, double kappa,
                                     double gamma_par, double gamma_perp) {
    const std::complex<double> i1(0.0, 1.0);
    const SparseCd h = ops.hamiltonian(eta);
    Eigen::MatrixXcd d = -i1 * (h * rho - rho * h);

    if (kappa > 0.0) {
        Eigen::MatrixXcd n_rho = ops.n_photon * rho;
        d += kappa * (ops.a * rho * ops.a_dag -
                      0.5 * (n_rho + n_rho.adjoint()));
    }
    for (int j = 0; j < ops.n_spins; ++j) {
        if (gamma_par > 0.0)
            d += gamma_par * (ops.sigma_z[j] * rho * ops.sigma_z[j] - rho);
        if (gamma_perp > 0.0) {
            Eigen::MatrixXcd p_rho = ops.excited_proj[j] * rho;
            d += gamma_perp * (2.0 * (ops.sigma_minus[j] * rho * ops.sigma_plus[j]) -
                               p_rho - p_rho.adjoint());
        }
    }
    return d;
}

/// Vacuum cavity with each spin in the diagonal mixed state of polarization
/// sz (population (1+sz)/2 in the upper level).
inline DensityMatrix initial_density(int dim_fock, int n_spins, double sz) {
    if (std::abs(sz) > 1.0) throw DomainError("initial_density: |sz| must be <= 1");
    DensityMatrix rho;
    rho.dim_fock = dim_fock;
    rho.n_spins = n_spins;
    const int S = 1 << n_spins;
    rho.data = Eigen::MatrixXcd::Zero(dim_fock * S, dim_fock * S);
    const double pe = 0.5 * (1.0 + sz);
    for (int b = 0; b < S; ++b) {
        double p = 1.0;
        for (int j = 0; j < n_spins; ++j) p *= (b & (1 << j)) ? pe : 1.0 - pe;
        rho.data(b, b) = p;  // Fock index 0 block
    }
    return rho;
}

/// Truncated coherent state |alpha> in the cavity, spins all in the lower
/// level; renormalized after truncation.
inline DensityMatrix coherent_density(int dim_fock, int n_spins,
                                      std::complex<double> alpha) {
    DensityMatrix rho;
    rho.dim_fock = dim_fock;
    rho.n_spins = n_spins;
    const int S = 1 << n_spins;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim_fock * S);
    std::complex<double> amp(1.0, 0.0);
    for (int f = 0; f < dim_fock; ++f) {
        psi[f * S] = amp;
        amp *= alpha / std::sqrt(double(f + 1));
    }
    psi.normalize();
    rho.data = psi * psi.adjoint();
    return rho;
}

/// Expectation traces of the oracle, sampled like a mean-field run and
/// using the same collective-operator normalizations.
struct LindbladTrace {
    std::vector<double> t;
    std::vector<std::complex<double>> a_expect;       // <a>
    std::vector<double> photon_number;                // <a'a>
    std::vector<std::complex<double>> s_minus_collective;  // (1/sqrt(N)) sum <sm_j>
    std::vector<double> s_z_collective;               // (1/N) sum <sz_j>
    std::vector<double> fock_tail;
    int dim_fock = 0;

    std::size_t size() const { return t.size(); }
};

namespace detail {

inline std::complex<double> expect(const SparseCd& op, const Eigen::MatrixXcd& rho) {
    return (op * rho).trace();
}

}  // namespace detail

/// RK4 evolution of the full master equation. Fails with a truncation
/// error when the top Fock level gets populated beyond tail_limit and with
/// a step-size error when the trace drifts beyond 1e-6.
inline LindbladTrace evolve_lindblad(const DensityMatrix& rho0,
                                     const ReceiverConfig& cfg, double t_end,
                                     double dt, double tail_limit = 1.0e-8,
                                     std::size_t memory_cap_bytes = 512u << 20) {
    if (std::abs(rho0.trace_real() - 1.0) > 1.0e-10)
        throw DomainError("evolve_lindblad: initial state must have unit trace");
    auto ops = build_operators(rho0.dim_fock, rho0.n_spins, cfg, memory_cap_bytes);
    const double kappa = cfg.cavity.kappa_c();
    const double gpar = cfg.spins.gamma_par;
    const double gperp = cfg.spins.gamma_perp;
    const double root_n = std::sqrt(double(rho0.n_spins));

    const std::size_t stride = static_cast<std::size_t>(cfg.sim.output_stride);
    const double out_dt = dt * static_cast<double>(stride);
    const std::size_t n_out =
        static_cast<std::size_t>(std::floor(t_end / out_dt + 1.0e-9)) + 1;

    LindbladTrace trace;
    trace.dim_fock = rho0.dim_fock;
    Eigen::MatrixXcd rho = rho0.data;

    auto f = [&](double t, const Eigen::MatrixXcd& r) {
        return lindblad_rhs(r, ops, drive_waveform(cfg.drive, t), kappa, gpar, gperp);
    };

    double t = 0.0;
    for (std::size_t i = 0; i < n_out; ++i) {
        if (i > 0) {
            for (std::size_t s = 0; s < stride; ++s) {
                rho = rk4_step(rho, t, dt, f);
                t += dt;
            }
            t = static_cast<double>(i) * out_dt;
        }
        DensityMatrix probe{rho0.dim_fock, rho0.n_spins, rho};
        if (!rho.allFinite())
            throw NumericalError("evolve_lindblad: non-finite state; reduce dt", t);
        const double tail = probe.fock_tail();
        if (tail > tail_limit)
            throw TruncationError(
                "evolve_lindblad: Fock tail " + std::to_string(tail) + " at t = " +
                    std::to_string(t) + "; increase dim_fock",
                2 * rho0.dim_fock);
        const double tr = probe.trace_real();
        if (std::abs(tr - 1.0) > 1.0e-6)
            throw NumericalError(
                "evolve_lindblad: trace drift " + std::to_string(tr - 1.0) +
                    "; reduce dt",
                t);

        trace.t.push_back(t);
        trace.a_expect.push_back(detail::expect(ops.a, rho));
        trace.photon_number.push_back(detail::expect(ops.n_photon, rho).real());
        std::complex<double> sm(0.0, 0.0);
        double sz = 0.0;
        for (int j = 0; j < ops.n_spins; ++j) {
            sm += detail::expect(ops.sigma_minus[j], rho);
            sz += detail::expect(ops.sigma_z[j], rho).real();
        }
        trace.s_minus_collective.push_back(sm / root_n);
        trace.s_z_collective.push_back(sz / double(rho0.n_spins));
        trace.fock_tail.push_back(tail);
    }
    return trace;
}

/// Doubles the Fock cutoff until the tail criterion is met (or the memory
/// cap refuses a larger space).
inline LindbladTrace evolve_lindblad_auto(int dim_fock_start, int n_spins,
                                          double initial_sz,
                                          const ReceiverConfig& cfg, double t_end,
                                          double dt, double tail_limit = 1.0e-8,
                                          std::size_t memory_cap_bytes = 512u << 20) {
    int dim = std::max(2, dim_fock_start);
    for (;;) {
        try {
            return evolve_lindblad(initial_density(dim, n_spins, initial_sz), cfg,
                                   t_end, dt, tail_limit, memory_cap_bytes);
        } catch (const TruncationError& e) {
            dim = e.suggested_dim_fock;
        }
    }
}

}  // namespace maserrx
