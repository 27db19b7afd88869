#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "maserrx/analysis.hpp"
#include "maserrx/calibration.hpp"
#include "maserrx/config_io.hpp"
#include "maserrx/io.hpp"
#include "maserrx/lindblad.hpp"
#include "maserrx/meanfield.hpp"

namespace maserrx {

using scenario_json = nlohmann::ordered_json;

/// One composed experiment: figure-ready tables, a metrics record, and the
/// exact configuration that produced them.
struct ScenarioResult {
    std::string name;
    std::vector<std::pair<std::string, Table>> tables;
    scenario_json summary;
    std::string config_echo;
};

/// Runs fn(0..n-1) on up to `threads` workers; callers write results into
/// preallocated slots so assembly order is deterministic.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
    const int nw = std::max(1, threads);
    if (nw == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min<std::size_t>(nw, n); ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// The receiver must stay below the self-oscillation threshold: an undriven
/// inverted ensemble may not grow a coherence seed.
inline void require_below_threshold(const ReceiverConfig& cfg) {
    const double rate = linear_growth_rate(cfg);
    if (rate > 0.0)
        throw ScenarioError(
            "configuration self-oscillates (growth rate " + std::to_string(rate) +
            " 1/s with no input); lower q_loaded or g_eff");
}

// ---------------------------------------------------------------------------
// Default sweep protocols
// ---------------------------------------------------------------------------

/// Drive powers spanning -14.98 dBm to 6.67 dBm, linear in dBm.
inline std::vector<double> default_rabi_powers(int n = 8) {
    std::vector<double> p;
    for (int i = 0; i < n; ++i) {
        const double dbm = -14.98 + (6.67 - (-14.98)) * i / double(n - 1);
        p.push_back(1.0e-3 * std::pow(10.0, dbm / 10.0));
    }
    return p;
}

/// Log-spaced fields from 10 nT to 10 uT.
inline std::vector<double> default_b1_list_nt(int n = 12) {
    std::vector<double> b;
    for (int i = 0; i < n; ++i)
        b.push_back(std::pow(10.0, 1.0 + 3.0 * i / double(n - 1)));
    return b;
}

/// Input frequencies at the tabulated lineshape offsets.
inline std::vector<double> default_gain_freqs_hz(const ReceiverConfig& cfg) {
    std::vector<double> f;
    for (const auto& p : cfg.spins.lineshape)
        f.push_back((cfg.spins.omega_s_center + p.offset) / kTwoPi);
    std::sort(f.begin(), f.end());
    return f;
}

/// Detunings -4 MHz .. +4 MHz in 100 kHz steps (includes zero).
inline std::vector<double> default_detunings_hz(double span_hz = 4.0e6,
                                                double step_hz = 1.0e5) {
    std::vector<double> d;
    const int n = static_cast<int>(std::llround(span_hz / step_hz));
    for (int i = -n; i <= n; ++i) d.push_back(step_hz * i);
    return d;
}

// ---------------------------------------------------------------------------
// Rabi calibration
// ---------------------------------------------------------------------------

namespace detail {

/// Nutation frequency of a sampled oscillation via linear-interpolated zero
/// crossings; empty when fewer than three crossings are present.
inline std::optional<double> zero_crossing_frequency(const std::vector<double>& t,
                                                     const std::vector<double>& x) {
    std::vector<double> crossings;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if ((x[i - 1] < 0.0 && x[i] >= 0.0) || (x[i - 1] > 0.0 && x[i] <= 0.0)) {
            const double frac = x[i - 1] / (x[i - 1] - x[i]);
            crossings.push_back(t[i - 1] + frac * (t[i] - t[i - 1]));
        }
    }
    if (crossings.size() < 3) return std::nullopt;
    const double span = crossings.back() - crossings.front();
    if (span <= 0.0) return std::nullopt;
    // two crossings per cycle
    return 0.5 * static_cast<double>(crossings.size() - 1) / span;
}

}  // namespace detail

/// Simulated trEPR calibration: drives the resonant packet at each power,
/// reads the nutation frequency of <Sz>, and fits Omega vs sqrt(P) through
/// the origin. The probe regime collapses the lineshape to the line center,
/// switches spin losses off (the bare nutation is the observable), and caps
/// the spin count so the ensemble does not load the cavity.
inline ScenarioResult run_rabi_calibration(const ReceiverConfig& cfg,
                                           const std::vector<double>& powers_w,
                                           int threads = 1, int n_cycles = 32) {
    if (powers_w.size() < 3)
        throw ScenarioError("run_rabi_calibration: need at least 3 powers");
    ensure_valid(cfg);

    const auto c_theory = conversion_factor_theory(
        cfg.cavity.q_loaded, cfg.cavity.v_m, cfg.cavity.omega_c, cfg.constants.mu0());
    const double kappa = cfg.cavity.kappa_c();

    struct Point {
        double power = 0.0;
        std::optional<double> rabi_hz;
    };
    std::vector<Point> points(powers_w.size());

    parallel_for(powers_w.size(), threads, [&](std::size_t i) {
        ReceiverConfig run = cfg;
        run.spins.lineshape = {{0.0, 1.0}};
        run.spins.n_spins = std::min(run.spins.n_spins, 1.0e9);
        run.spins.gamma_par = 0.0;
        run.spins.gamma_perp = 0.0;
        run.drive.omega_in = run.cavity.omega_c;
        run.spins.omega_s_center = run.cavity.omega_c;
        run.drive.power_in = powers_w[i];
        run.drive.authoritative = DriveInput::power;
        run.noise.sigma = 0.0;

        // expected nutation rate sets the record length
        const double b1_mt =
            b1_power_convert(c_theory, powers_w[i], ConvertDirection::power_to_field);
        const double omega_hz =
            1.0e6 * rabi_frequency_mhz(b1_mt, run.constants.gamma_e_mhz_per_mt());
        const double t_settle = 10.0 / kappa;
        run.drive.pulse_start = 0.0;
        run.sim.t_end = t_settle + n_cycles / omega_hz;
        run.drive.pulse_duration = run.sim.t_end;
        run.sim.dt = 0.02 / std::max(kappa, kTwoPi * omega_hz);
        const double n_steps = run.sim.t_end / run.sim.dt;
        run.sim.output_stride = std::max(1, static_cast<int>(n_steps / 65536.0));
        finalize_config(run);

        const auto trace = integrate_meanfield(run, initial_state(run));
        std::vector<double> ts, sz;
        for (std::size_t s = 0; s < trace.size(); ++s) {
            if (trace.t[s] < t_settle) continue;
            ts.push_back(trace.t[s]);
            sz.push_back(trace.states[s].s_z[0]);
        }
        points[i] = {powers_w[i], detail::zero_crossing_frequency(ts, sz)};
    });

    RabiDataset data;
    Table tab;
    tab.columns = {"power_w", "sqrt_power_sqrtW", "rabi_MHz", "sigma_MHz", "included"};
    scenario_json warnings = scenario_json::array();
    for (const auto& p : points) {
        const double sq = std::sqrt(p.power);
        if (p.rabi_hz) {
            data.points.push_back({sq, *p.rabi_hz * 1.0e-6, 0.0});
            tab.add_row({p.power, sq, *p.rabi_hz * 1.0e-6, 0.0, 1.0});
        } else {
            tab.add_row({p.power, sq, 0.0, 0.0, 0.0});
            warnings.push_back("no detectable nutation at P = " +
                               std::to_string(p.power) + " W; point excluded");
        }
    }
    if (data.points.size() < 2)
        throw ScenarioError("run_rabi_calibration: too few detectable nutations");

    const auto fit = fit_rabi_slope(data, cfg.constants.gamma_e_mhz_per_mt());

    ScenarioResult res;
    res.name = "rabi_calibration";
    res.tables.emplace_back("rabi_points", std::move(tab));
    res.summary = {
        {"slope_mhz_per_sqrt_w", fit.slope_mhz_per_sqrt_w},
        {"slope_sigma", fit.slope_sigma},
        {"r_squared", fit.r_squared},
        {"c_fit_mt_per_sqrt_w", fit.conversion.c_value},
        {"c_fit_uncertainty", fit.conversion.uncertainty},
        {"c_theory_mt_per_sqrt_w", c_theory.c_value},
        {"c_fit_over_theory", fit.conversion.c_value / c_theory.c_value},
        {"n_powers", powers_w.size()},
        {"n_fitted", data.points.size()},
        {"warnings", warnings},
    };
    res.config_echo = serialize_config(cfg);
    return res;
}

// ---------------------------------------------------------------------------
// Response curve and gain sweep
// ---------------------------------------------------------------------------

struct ResponseGainParams {
    std::vector<double> b1_list_nt;   // response sweep fields
    std::vector<double> freq_list_hz; // gain sweep input frequencies
    double b1_gain_nt = 49.23;        // field held fixed across the gain sweep
    double delta_f_hz = 5.0e8;        // equivalent noise bandwidth
    int repeats = 3;                  // single-shot repetitions per field
};

namespace detail {

/// Shrinks dt (raising output_stride to keep the sample grid) until the
/// fastest detuning/coupling/decay scale is resolved.
inline void adjust_step_for_scales(ReceiverConfig& cfg) {
    double scale = std::max(cfg.cavity.kappa_c(), cfg.spins.g_eff());
    scale = std::max(scale, std::abs(cfg.cavity.omega_c - cfg.drive.omega_in));
    for (const auto& p : cfg.spins.lineshape)
        scale = std::max(scale, std::abs(cfg.spins.omega_s_center + p.offset -
                                         cfg.drive.omega_in));
    if (cfg.sim.dt * scale < 0.1) return;
    const double out_dt = cfg.sim.dt * cfg.sim.output_stride;
    const double dt_max = 0.05 / scale;
    const int stride = static_cast<int>(std::ceil(out_dt / dt_max));
    cfg.sim.output_stride = stride;
    cfg.sim.dt = out_dt / stride;
}

inline double envelope_fwhm(const std::vector<double>& t,
                            const std::vector<double>& power) {
    const auto peak = std::max_element(power.begin(), power.end());
    if (peak == power.end() || *peak <= 0.0) return 0.0;
    const double half = 0.5 * *peak;
    const std::size_t ip = static_cast<std::size_t>(peak - power.begin());
    std::size_t lo = ip, hi = ip;
    while (lo > 0 && power[lo] > half) --lo;
    while (hi + 1 < power.size() && power[hi] > half) ++hi;
    return t[hi] - t[lo];
}

}  // namespace detail

/// Receiver response S(B1) with saturation fit and responsivity, plus the
/// amplification gain versus input frequency with the cavity retuned to
/// follow the input (the drive field is held near-constant by recomputing
/// the input power from the retuned conversion factor).
inline ScenarioResult run_response_and_gain(const ReceiverConfig& cfg,
                                            const ResponseGainParams& params,
                                            int threads = 1) {
    if (params.b1_list_nt.empty() || params.freq_list_hz.empty())
        throw ScenarioError("run_response_and_gain: empty sweep list");
    ensure_valid(cfg);
    require_below_threshold(cfg);

    const auto c_center = conversion_factor_theory(
        cfg.cavity.q_loaded, cfg.cavity.v_m, cfg.cavity.omega_c, cfg.constants.mu0());

    std::vector<double> b1(params.b1_list_nt);
    std::sort(b1.begin(), b1.end());

    // --- response at line center ---
    struct ResponseRow {
        double s_mean = 0.0, s_sigma = 0.0, sigma_noise = 0.0;
    };
    std::vector<ResponseRow> rows(b1.size());

    parallel_for(b1.size(), threads, [&](std::size_t i) {
        ReceiverConfig run = cfg;
        run.drive.power_in = b1_power_convert(c_center, b1[i] * 1.0e-6,
                                              ConvertDirection::field_to_power);
        run.drive.authoritative = DriveInput::power;
        finalize_config(run);
        const auto trace = integrate_meanfield(run, initial_state(run));
        const auto window = masing_window(trace.t, run.drive);

        double sum = 0.0, sum2 = 0.0;
        double sigma_noise = 0.0;
        const int reps = std::max(1, params.repeats);
        for (int r = 0; r < reps; ++r) {
            ReceiverConfig shot = run;
            shot.noise.seed = NoiseSource::derive_seed(cfg.noise.seed, i * 1024 + r);
            const auto det = detector_chain(trace, shot);
            double peak = -1.0e300;
            for (std::size_t s = window.begin; s < window.end; ++s)
                peak = std::max(peak, det.voltage_mv[s]);
            sum += peak;
            sum2 += peak * peak;
            if (r == 0 && window.begin >= 2) {
                double m = 0.0, m2 = 0.0;
                for (std::size_t s = 0; s < window.begin; ++s) {
                    m += det.voltage_mv[s];
                    m2 += det.voltage_mv[s] * det.voltage_mv[s];
                }
                m /= double(window.begin);
                sigma_noise = std::sqrt(std::max(0.0, m2 / double(window.begin) - m * m));
            }
        }
        const double mean = sum / reps;
        const double var = std::max(0.0, sum2 / reps - mean * mean);
        rows[i] = {mean, std::sqrt(var), sigma_noise};
    });

    ResponseCurve curve;
    for (std::size_t i = 0; i < b1.size(); ++i)
        curve.points.push_back({b1[i], rows[i].s_mean, rows[i].s_sigma});

    ResponsivityResult resp;
    bool fit_ok = true;
    std::string fit_note;
    try {
        resp = responsivity_curve(curve);
    } catch (const FitError& e) {
        fit_ok = false;
        fit_note = e.what();
        resp.m_s.assign(b1.size(), 0.0);
    }

    const double sigma_s =
        std::max_element(rows.begin(), rows.end(), [](auto& a, auto& b) {
            return a.sigma_noise < b.sigma_noise;
        })->sigma_noise;

    Table response_tab;
    response_tab.columns = {"b1_nt", "s_mv", "sigma_mv", "m_s_mv_per_nt",
                            "eta_ft_per_sqrt_hz"};
    double eta_best = 0.0;
    for (std::size_t i = 0; i < b1.size(); ++i) {
        double eta = 0.0;
        if (fit_ok && resp.m_s[i] > 0.0 && sigma_s > 0.0) {
            eta = sensitivity_estimate(SensitivityMethod::responsivity,
                                       {sigma_s, resp.m_s[i], 0.0, 0.0,
                                        params.delta_f_hz})
                      .eta_ft_per_sqrt_hz;
            if (eta_best == 0.0 || eta < eta_best) eta_best = eta;
        }
        response_tab.add_row({b1[i], rows[i].s_mean, rows[i].s_sigma,
                              fit_ok ? resp.m_s[i] : 0.0, eta});
    }

    // --- gain versus input frequency, cavity retuned per point ---
    struct GainRow {
        double gain_db = 0.0, p_in = 0.0, p_out = 0.0, stretch = 0.0;
    };
    std::vector<GainRow> grows(params.freq_list_hz.size());

    parallel_for(params.freq_list_hz.size(), threads, [&](std::size_t i) {
        ReceiverConfig run = cfg;
        const double omega = kTwoPi * params.freq_list_hz[i];
        run.cavity.omega_c = omega;
        run.drive.omega_in = omega;
        const auto c_point =
            conversion_factor_theory(run.cavity.q_loaded, run.cavity.v_m, omega,
                                     run.constants.mu0());
        run.drive.power_in = b1_power_convert(c_point, params.b1_gain_nt * 1.0e-6,
                                              ConvertDirection::field_to_power);
        run.drive.authoritative = DriveInput::power;
        run.noise.sigma = 0.0;
        finalize_config(run);
        detail::adjust_step_for_scales(run);
        require_below_threshold(run);

        const auto trace = integrate_meanfield(run, initial_state(run));
        const auto det = detector_chain(trace, run);
        const double p_peak = *std::max_element(det.power_w.begin(), det.power_w.end());
        grows[i].p_in = run.drive.power_in;
        grows[i].p_out = p_peak;
        grows[i].gain_db = gain_db(p_peak, run.drive.power_in);
        grows[i].stretch =
            detail::envelope_fwhm(det.t, det.power_w) / run.drive.pulse_duration;
    });

    Table gain_tab;
    gain_tab.columns = {"freq_hz", "offset_hz", "gain_db", "p_in_w", "p_out_w",
                        "pulse_stretch"};
    double peak_gain = -1.0e300, peak_freq = 0.0, center_stretch = 0.0;
    for (std::size_t i = 0; i < params.freq_list_hz.size(); ++i) {
        const double off = params.freq_list_hz[i] - cfg.spins.omega_s_center / kTwoPi;
        gain_tab.add_row({params.freq_list_hz[i], off, grows[i].gain_db,
                          grows[i].p_in, grows[i].p_out, grows[i].stretch});
        if (grows[i].gain_db > peak_gain) {
            peak_gain = grows[i].gain_db;
            peak_freq = params.freq_list_hz[i];
        }
        if (std::abs(off) < 0.5) center_stretch = grows[i].stretch;
    }

    ScenarioResult res;
    res.name = "response_and_gain";
    res.tables.emplace_back("response", std::move(response_tab));
    res.tables.emplace_back("gain", std::move(gain_tab));
    res.summary = {
        {"c_mt_per_sqrt_w", c_center.c_value},
        {"sigma_s_mv", sigma_s},
        {"fit_converged", fit_ok},
        {"fit_a_mv", fit_ok ? resp.fit.a : 0.0},
        {"fit_b_sat_nt", fit_ok ? resp.fit.b_sat : 0.0},
        {"fit_s0_mv", fit_ok ? resp.fit.s0 : 0.0},
        {"fit_note", fit_note},
        {"eta_best_ft_per_sqrt_hz", eta_best},
        {"delta_f_hz", params.delta_f_hz},
        {"b1_gain_nt", params.b1_gain_nt},
        {"peak_gain_db", peak_gain},
        {"peak_gain_freq_hz", peak_freq},
        {"pulse_stretch_at_center", center_stretch},
    };
    res.config_echo = serialize_config(cfg);
    return res;
}

// ---------------------------------------------------------------------------
// Heterodyne sweep
// ---------------------------------------------------------------------------

/// Detuned-input sweep with the cavity fixed on the spin resonance. Each
/// point runs receiver-on (pumped inversion) and receiver-off (no inversion,
/// identical drive and noise) and reports the beat and the enhancement
/// figure of merit at the expected beat bin.
inline ScenarioResult run_heterodyne_sweep(const ReceiverConfig& cfg,
                                           const std::vector<double>& detunings_hz,
                                           int threads = 1) {
    if (detunings_hz.empty())
        throw ScenarioError("run_heterodyne_sweep: empty detuning list");
    for (double d : detunings_hz)
        if (std::abs(d) > 1.0e7)
            throw ScenarioError("run_heterodyne_sweep: |detuning| must stay within 10 MHz");
    ensure_valid(cfg);
    require_below_threshold(cfg);

    struct Point {
        bool found = false;
        double f_beat = 0.0, amplitude = 0.0;
        double eps_db = 0.0;
        bool eps_valid = false;
        double p_out_peak = 0.0;
        std::vector<double> env_norm;
    };
    std::vector<Point> pts(detunings_hz.size());
    std::vector<double> env_t;

    parallel_for(detunings_hz.size(), threads, [&](std::size_t i) {
        ReceiverConfig on = cfg;
        on.drive.omega_in = cfg.cavity.omega_c - kTwoPi * detunings_hz[i];
        on.noise.seed = NoiseSource::derive_seed(cfg.noise.seed, i);
        finalize_config(on);
        detail::adjust_step_for_scales(on);
        ReceiverConfig off = on;
        off.spins.initial_sz = 0.0;  // no pump, no inversion

        const auto trace_on = integrate_meanfield(on, initial_state(on));
        const auto trace_off = integrate_meanfield(off, initial_state(off));
        const auto window = masing_window(trace_on.t, on.drive);

        Point p;
        if (auto beat = beat_frequency(trace_on)) {
            p.found = true;
            // the envelope carries |detuning|; the sign is the drive's
            p.f_beat = std::copysign(beat->freq_hz, detunings_hz[i]);
            p.amplitude = beat->amplitude;
        }

        const auto det_on = detector_chain(trace_on, on);
        const auto det_off = detector_chain(trace_off, off);
        const double rate = uniform_sample_rate(det_on.t);
        std::vector<double> seg_on(det_on.voltage_mv.begin() + window.begin,
                                   det_on.voltage_mv.begin() + window.end);
        std::vector<double> seg_off(det_off.voltage_mv.begin() + window.begin,
                                    det_off.voltage_mv.begin() + window.end);
        const auto spec_on = fft_spectrum(seg_on, rate, FftWindow::hann);
        const auto spec_off = fft_spectrum(seg_off, rate, FftWindow::hann);
        try {
            p.eps_db = enhancement_merit(spec_on, spec_off, detunings_hz[i]);
            p.eps_valid = true;
        } catch (const DomainError&) {
            p.eps_valid = false;
        }
        p.p_out_peak = *std::max_element(det_on.power_w.begin(), det_on.power_w.end());
        p.env_norm = log_envelope_normalized(std::vector<double>(
            trace_on.photon_number.begin() + window.begin,
            trace_on.photon_number.begin() + window.end));
        if (i == 0)
            env_t.assign(trace_on.t.begin() + window.begin,
                         trace_on.t.begin() + window.end);
        pts[i] = std::move(p);
    });

    Table beats;
    beats.columns = {"detuning_hz", "found", "f_beat_hz", "beat_amplitude",
                     "epsilon_db", "epsilon_valid", "p_out_peak_w"};
    std::vector<double> fit_x, fit_y;
    double eps_pos = 0.0, eps_neg = 0.0, eps_zero = 0.0;
    int n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < detunings_hz.size(); ++i) {
        const auto& p = pts[i];
        beats.add_row({detunings_hz[i], p.found ? 1.0 : 0.0, p.f_beat, p.amplitude,
                       p.eps_db, p.eps_valid ? 1.0 : 0.0, p.p_out_peak});
        if (p.found && std::abs(detunings_hz[i]) >= 3.0e5) {
            fit_x.push_back(detunings_hz[i]);
            fit_y.push_back(p.f_beat);
        }
        if (p.eps_valid) {
            if (detunings_hz[i] > 0.0) {
                eps_pos += p.eps_db;
                ++n_pos;
            } else if (detunings_hz[i] < 0.0) {
                eps_neg += p.eps_db;
                ++n_neg;
            } else {
                eps_zero = p.eps_db;
            }
        }
    }

    scenario_json beat_fit = nullptr;
    if (fit_x.size() >= 2) {
        const auto line = fit_line(fit_x, fit_y);
        beat_fit = {{"slope", line.slope},
                    {"intercept_hz", line.intercept},
                    {"r_squared", line.r_squared},
                    {"n_points", fit_x.size()}};
    }

    Table env_map;
    env_map.columns = {"t_s"};
    for (std::size_t i = 0; i < detunings_hz.size(); ++i)
        env_map.columns.push_back("env_" + std::to_string(static_cast<long long>(
                                                detunings_hz[i])) + "hz");
    for (std::size_t s = 0; s < env_t.size(); ++s) {
        std::vector<double> row;
        row.push_back(env_t[s]);
        for (const auto& p : pts)
            row.push_back(s < p.env_norm.size() ? p.env_norm[s] : 0.0);
        env_map.rows.push_back(std::move(row));
    }

    ScenarioResult res;
    res.name = "heterodyne_sweep";
    res.tables.emplace_back("beats", std::move(beats));
    res.tables.emplace_back("envelope_map", std::move(env_map));
    res.summary = {
        {"beat_fit", beat_fit},
        {"epsilon_mean_positive_db", n_pos ? eps_pos / n_pos : 0.0},
        {"epsilon_mean_negative_db", n_neg ? eps_neg / n_neg : 0.0},
        {"epsilon_on_resonance_db", eps_zero},
        {"drive_power_w", cfg.drive.power_in},
        {"n_detunings", detunings_hz.size()},
    };
    res.config_echo = serialize_config(cfg);
    return res;
}

// ---------------------------------------------------------------------------
// Oracle comparison
// ---------------------------------------------------------------------------

/// Mean-field versus exact master equation on identical few-spin parameters.
/// The documented comparison window is the first collective Rabi period
/// pi/g_eff (or t_end when shorter); inside it the factorized equations
/// track the exact |<a>|^2 in the linear-response regime.
inline ScenarioResult run_oracle_comparison(const ReceiverConfig& cfg,
                                            int dim_fock_start = 8) {
    ensure_valid(cfg);
    const double n = cfg.spins.n_spins;
    if (n > 4.0 || n != std::floor(n))
        throw ScenarioError("run_oracle_comparison: n_spins must be an integer <= 4");
    if (cfg.spins.gamma_par != 0.0)
        throw ScenarioError(
            "run_oracle_comparison: gamma_par must be 0 (the oracle's sigma_z channel "
            "is pure dephasing, not <Sz> decay)");

    ReceiverConfig run = cfg;
    run.spins.lineshape = {{0.0, 1.0}};  // homogeneous comparison
    run.noise.sigma = 0.0;
    finalize_config(run);

    const auto mf = integrate_meanfield(run, initial_state(run));
    const auto oracle = evolve_lindblad_auto(dim_fock_start, static_cast<int>(n),
                                             run.spins.initial_sz, run,
                                             run.sim.t_end, run.sim.dt);

    const std::size_t m = std::min(mf.size(), oracle.size());
    const double g_eff = run.spins.g_eff();
    const double window_t =
        (g_eff > 0.0) ? std::min(run.sim.t_end, std::numbers::pi / g_eff)
                      : run.sim.t_end;

    Table tab;
    tab.columns = {"t_s",  "mf_a2", "or_a2", "or_photon",
                   "mf_sz", "or_sz", "abs_err_a2"};
    double err_sum = 0.0, ref_sum = 0.0, ref_max = 0.0, err_max = 0.0;
    double sz_err_max = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double mf_a2 = mf.photon_number[i];
        const double or_a2 = std::norm(oracle.a_expect[i]);
        const double err = std::abs(mf_a2 - or_a2);
        tab.add_row({mf.t[i], mf_a2, or_a2, oracle.photon_number[i],
                     mf.states[i].s_z[0], oracle.s_z_collective[i], err});
        if (mf.t[i] <= window_t) {
            err_sum += err;
            ref_sum += std::abs(or_a2);
            ref_max = std::max(ref_max, std::abs(or_a2));
            err_max = std::max(err_max, err);
            sz_err_max = std::max(
                sz_err_max, std::abs(mf.states[i].s_z[0] - oracle.s_z_collective[i]));
        }
    }
    const double tare = (ref_sum > 0.0) ? err_sum / ref_sum : 0.0;
    const double max_rel = (ref_max > 0.0) ? err_max / ref_max : 0.0;

    ScenarioResult res;
    res.name = "oracle_comparison";
    res.tables.emplace_back("comparison", std::move(tab));
    res.summary = {
        {"n_spins", n},
        {"g_eff_rad_s", g_eff},
        {"window_s", window_t},
        {"time_avg_rel_err_a2", tare},
        {"max_rel_err_a2", max_rel},
        {"max_abs_err_sz", sz_err_max},
        {"dim_fock", oracle.dim_fock},
    };
    res.config_echo = serialize_config(run);
    return res;
}

}  // namespace maserrx
