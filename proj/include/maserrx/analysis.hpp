#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "maserrx/calibration.hpp"
#include "maserrx/errors.hpp"
#include "maserrx/fft.hpp"
#include "maserrx/fit.hpp"
#include "maserrx/meanfield.hpp"
#include "maserrx/rng.hpp"

namespace maserrx {

// ---------------------------------------------------------------------------
// Detector chain
// ---------------------------------------------------------------------------

struct DetectorTrace {
    std::vector<double> t;           // s
    std::vector<double> voltage_mv;  // AC-coupled log-detector output
    std::vector<double> power_w;     // envelope power at the port, noise-free
    double dc_offset_mv = 0.0;       // mean removed by the AC coupling
};

inline double watts_to_dbm(double p_w, double floor_dbm) {
    if (p_w <= 0.0) return floor_dbm;
    return std::max(10.0 * std::log10(p_w / 1.0e-3), floor_dbm);
}

inline double dbm_to_watts(double dbm) { return 1.0e-3 * std::pow(10.0, dbm / 10.0); }

/// Converts a field trace to the log-detector domain:
///   P_out(t) = coupling_fraction * kappa_c * hbar * omega_in * |<a>|^2
///   V(t)     = slope * (P_dBm(t) - reference_dBm), mean-subtracted,
/// plus optional white Gaussian noise of noise.sigma mV. Zero-power samples
/// are floored at detector.floor_dbm before the log.
inline DetectorTrace detector_chain(const TimeTrace& trace, const ReceiverConfig& cfg) {
    if (trace.size() == 0) throw DomainError("detector_chain: empty trace");
    DetectorTrace out;
    out.t = trace.t;
    out.power_w.resize(trace.size());
    out.voltage_mv.resize(trace.size());

    const double photon_to_watt =
        cfg.cavity.coupling_fraction * cfg.cavity.kappa_c() *
        cfg.constants.hbar() * cfg.drive.omega_in;
    double mean = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out.power_w[i] = photon_to_watt * trace.photon_number[i];
        const double dbm = watts_to_dbm(out.power_w[i], cfg.detector.floor_dbm);
        out.voltage_mv[i] =
            cfg.detector.slope_mv_per_db * (dbm - cfg.detector.reference_dbm);
        mean += out.voltage_mv[i];
    }
    mean /= static_cast<double>(trace.size());
    for (auto& v : out.voltage_mv) v -= mean;
    out.dc_offset_mv = mean;

    if (cfg.noise.sigma > 0.0) {
        NoiseSource rng(cfg.noise.seed);
        for (auto& v : out.voltage_mv) v += rng.gaussian(cfg.noise.sigma);
    }
    return out;
}

/// Power gain in dB.
inline double gain_db(double p_out, double p_in) {
    if (p_out <= 0.0 || p_in <= 0.0)
        throw DomainError("gain_db: powers must be > 0");
    return 10.0 * std::log10(p_out / p_in);
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

struct Spectrum {
    std::vector<double> freq;       // Hz, uniform grid from 0
    std::vector<double> amplitude;  // see fft_spectrum for the normalization
    double resolution = 0.0;        // Hz
};

enum class FftWindow { none, hann };

/// One-sided magnitude spectrum of a real uniformly sampled record.
/// resolution = sample_rate / n. Normalization: a unit sinusoid on an exact
/// bin peaks at amplitude 1.0 (interior bins carry 2|X_k|/n, the DC and
/// Nyquist bins |X_k|/n). The hann option divides by the window's coherent
/// gain of 0.5 so sinusoid peaks keep their scale.
inline Spectrum fft_spectrum(const std::vector<double>& values, double sample_rate,
                             FftWindow window = FftWindow::none) {
    const std::size_t n = values.size();
    if (n < 16) throw DomainError("fft_spectrum: need at least 16 samples");
    if (sample_rate <= 0.0) throw DomainError("fft_spectrum: sample rate must be > 0");

    std::vector<std::complex<double>> x(n);
    if (window == FftWindow::hann) {
        for (std::size_t i = 0; i < n; ++i) {
            const double w =
                0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) /
                                      static_cast<double>(n)));
            x[i] = values[i] * w / 0.5;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) x[i] = values[i];
    }
    fft(x);

    Spectrum spec;
    spec.resolution = sample_rate / static_cast<double>(n);
    const std::size_t half = n / 2;  // bins 0..half inclusive when n even
    spec.freq.resize(half + 1);
    spec.amplitude.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        spec.freq[k] = spec.resolution * static_cast<double>(k);
        const double scale =
            (k == 0 || (n % 2 == 0 && k == half)) ? 1.0 : 2.0;
        spec.amplitude[k] = scale * std::abs(x[k]) / static_cast<double>(n);
    }
    return spec;
}

/// Validates that a time grid is uniform before spectral analysis.
inline double uniform_sample_rate(const std::vector<double>& t) {
    if (t.size() < 2) throw DomainError("uniform_sample_rate: need >= 2 samples");
    const double dt = t[1] - t[0];
    if (dt <= 0.0) throw DomainError("uniform_sample_rate: non-increasing grid");
    for (std::size_t i = 2; i < t.size(); ++i) {
        const double d = t[i] - t[i - 1];
        if (std::abs(d - dt) > 1.0e-6 * dt)
            throw DomainError("uniform_sample_rate: non-uniform time grid");
    }
    return 1.0 / dt;
}

struct BeatPeak {
    double freq_hz = 0.0;
    double amplitude = 0.0;
};

/// Dominant spectral peak of an envelope record away from DC. The record
/// is mean-subtracted; bins below min_freq_hz are skipped because the
/// burst shape itself occupies the first few bins (a beat is resolvable
/// only above roughly one cycle per record, the paper's 200 kHz bound for
/// 5 us bursts). Defaults to three resolution bins. The peak is refined by
/// parabolic interpolation on neighboring log magnitudes and reported only
/// when it rises at least 3x above the median spectral floor.
inline std::optional<BeatPeak> beat_frequency(const std::vector<double>& envelope,
                                              double sample_rate,
                                              double min_freq_hz = -1.0) {
    if (envelope.size() < 16)
        throw DomainError("beat_frequency: record too short");
    double mean = 0.0;
    for (double v : envelope) mean += v;
    mean /= static_cast<double>(envelope.size());
    std::vector<double> centered(envelope.size());
    for (std::size_t i = 0; i < envelope.size(); ++i) centered[i] = envelope[i] - mean;

    const Spectrum spec = fft_spectrum(centered, sample_rate, FftWindow::hann);
    if (min_freq_hz < 0.0) min_freq_hz = 2.0 * spec.resolution;
    const std::size_t first =
        std::max<std::size_t>(1, static_cast<std::size_t>(
                                     std::ceil(min_freq_hz / spec.resolution)));
    if (first + 2 >= spec.amplitude.size()) return std::nullopt;

    // pick by prominence over a local median so the burst's own smooth
    // low-frequency skirt does not mask a narrow beat line
    const std::size_t nbins = spec.amplitude.size();
    auto local_median = [&](std::size_t k) {
        const std::size_t w = 8;
        std::vector<double> nb;
        for (std::size_t j = (k > w ? k - w : 1); j < std::min(nbins, k + w + 1); ++j)
            if (j + 1 < k || j > k + 1) nb.push_back(spec.amplitude[j]);
        std::nth_element(nb.begin(), nb.begin() + nb.size() / 2, nb.end());
        return nb[nb.size() / 2];
    };
    std::size_t peak = first;
    double best_score = -1.0;
    for (std::size_t k = first; k + 1 < nbins; ++k) {
        if (spec.amplitude[k] < spec.amplitude[k - 1] ||
            spec.amplitude[k] < spec.amplitude[k + 1])
            continue;
        const double score = spec.amplitude[k] / (local_median(k) + 1.0e-300);
        if (score > best_score) {
            best_score = score;
            peak = k;
        }
    }

    std::vector<double> floor(spec.amplitude.begin() + static_cast<long>(first),
                              spec.amplitude.end());
    std::nth_element(floor.begin(), floor.begin() + floor.size() / 2, floor.end());
    const double median = floor[floor.size() / 2];
    if (best_score < 3.0 || !(spec.amplitude[peak] > 3.0 * median))
        return std::nullopt;

    // parabolic refinement on log amplitudes
    double delta = 0.0;
    if (peak > 1 && peak + 1 < spec.amplitude.size()) {
        const double eps = 1.0e-300;
        const double lm = std::log(spec.amplitude[peak - 1] + eps);
        const double l0 = std::log(spec.amplitude[peak] + eps);
        const double lp = std::log(spec.amplitude[peak + 1] + eps);
        const double denom = lm - 2.0 * l0 + lp;
        if (denom < 0.0) delta = 0.5 * (lm - lp) / denom;
        delta = std::clamp(delta, -0.5, 0.5);
    }
    BeatPeak out;
    out.freq_hz = (static_cast<double>(peak) + delta) * spec.resolution;
    out.amplitude = spec.amplitude[peak];
    return out;
}

/// Index window [begin, end) of the samples inside the masing window,
/// i.e. from pulse onset to the end of the record.
struct SampleWindow {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

inline SampleWindow masing_window(const std::vector<double>& t, const DriveParams& d) {
    SampleWindow w;
    w.end = t.size();
    w.begin = w.end;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= d.pulse_start) {
            w.begin = i;
            break;
        }
    }
    return w;
}

/// Window where drive and maser field coexist: the beat lives here. Runs
/// from pulse onset to 1.5x the pulse length (clipped to the record).
inline SampleWindow beat_window(const std::vector<double>& t, const DriveParams& d) {
    SampleWindow w = masing_window(t, d);
    const double t_stop = d.pulse_start + 1.5 * d.pulse_duration;
    for (std::size_t i = w.begin; i < w.end; ++i) {
        if (t[i] > t_stop) {
            w.end = i;
            break;
        }
    }
    return w;
}

/// Beat search on the photon-number envelope of a mean-field run,
/// restricted to the beat window.
inline std::optional<BeatPeak> beat_frequency(const TimeTrace& trace) {
    const auto w = beat_window(trace.t, trace.meta.drive);
    if (w.size() < 16) throw DomainError("beat_frequency: beat window too short");
    std::vector<double> env(trace.photon_number.begin() + static_cast<long>(w.begin),
                            trace.photon_number.begin() + static_cast<long>(w.end));
    return beat_frequency(env, uniform_sample_rate(trace.t));
}

/// lg of the photon number, min-max normalized to [0, 1]; the display
/// transform used for envelope maps.
inline std::vector<double> log_envelope_normalized(const std::vector<double>& photon,
                                                   double floor = 1.0e-30) {
    std::vector<double> out(photon.size());
    for (std::size_t i = 0; i < photon.size(); ++i)
        out[i] = std::log10(std::max(photon[i], floor));
    const auto [mn, mx] = std::minmax_element(out.begin(), out.end());
    const double lo = *mn, span = *mx - *mn;
    for (auto& v : out) v = (span > 0.0) ? (v - lo) / span : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// SNR and sensitivity
// ---------------------------------------------------------------------------

struct SnrEstimate {
    double snr_p = 0.0;  // power ratio
    double snr_b = 0.0;  // field ratio, sqrt(snr_p)
};

/// Peak power in the signal window over mean power in the noise window,
/// for an amplitude-like trace (power = sample^2).
inline SnrEstimate snr_estimate(const std::vector<double>& amplitude,
                                SampleWindow noise_win, SampleWindow signal_win) {
    if (noise_win.size() == 0 || signal_win.size() == 0 ||
        noise_win.end > amplitude.size() || signal_win.end > amplitude.size())
        throw DomainError("snr_estimate: empty or out-of-range window");
    const bool disjoint =
        noise_win.end <= signal_win.begin || signal_win.end <= noise_win.begin;
    if (!disjoint) throw DomainError("snr_estimate: windows must be disjoint");

    double noise_power = 0.0;
    for (std::size_t i = noise_win.begin; i < noise_win.end; ++i)
        noise_power += amplitude[i] * amplitude[i];
    noise_power /= static_cast<double>(noise_win.size());
    if (noise_power <= 0.0) throw DomainError("snr_estimate: zero noise power");

    double peak_power = 0.0;
    for (std::size_t i = signal_win.begin; i < signal_win.end; ++i)
        peak_power = std::max(peak_power, amplitude[i] * amplitude[i]);

    SnrEstimate e;
    e.snr_p = peak_power / noise_power;
    e.snr_b = std::sqrt(e.snr_p);
    return e;
}

struct ResponsePoint {
    double b1_nt = 0.0;   // nT
    double response = 0.0;  // detector units (mV)
    double sigma = 0.0;   // detector units
};

struct SaturationFit {
    double a = 0.0;      // amplitude of the saturating term
    double b_sat = 0.0;  // nT, saturation scale
    double s0 = 0.0;     // offset
    double residual_norm = 0.0;
    int iterations = 0;
};

struct ResponseCurve {
    std::vector<ResponsePoint> points;  // b1 strictly increasing
    SaturationFit fit;
};

/// Fits S(B1) = A (1 - exp(-B1/B_sat)) + S0 and returns the analytic
/// derivative dS/dB1 at every tabulated field.
struct ResponsivityResult {
    SaturationFit fit;
    std::vector<double> m_s;  // detector units per nT, at each input b1
};

inline ResponsivityResult responsivity_curve(const ResponseCurve& data,
                                             int max_iterations = 400) {
    const std::size_t n = data.points.size();
    if (n < 4) throw DomainError("responsivity_curve: need at least 4 points");
    for (std::size_t i = 1; i < n; ++i)
        if (!(data.points[i].b1_nt > data.points[i - 1].b1_nt))
            throw DomainError("responsivity_curve: b1 must be strictly increasing");

    std::vector<double> w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        if (data.points[i].sigma > 0.0) w[i] = 1.0 / data.points[i].sigma;

    auto model = [&](const Eigen::VectorXd& p, double b) {
        return p[0] * (1.0 - std::exp(-b / p[1])) + p[2];
    };
    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        for (std::size_t i = 0; i < n; ++i)
            r[static_cast<int>(i)] =
                w[i] * (model(p, data.points[i].b1_nt) - data.points[i].response);
    };
    auto jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& J) {
        for (std::size_t i = 0; i < n; ++i) {
            const double b = data.points[i].b1_nt;
            const double e = std::exp(-b / p[1]);
            J(static_cast<int>(i), 0) = w[i] * (1.0 - e);
            J(static_cast<int>(i), 1) = w[i] * (-p[0] * e * b / (p[1] * p[1]));
            J(static_cast<int>(i), 2) = w[i];
        }
    };

    double s_min = data.points[0].response, s_max = data.points[0].response;
    for (const auto& p : data.points) {
        s_min = std::min(s_min, p.response);
        s_max = std::max(s_max, p.response);
    }
    Eigen::VectorXd p0(3);
    p0 << std::max(s_max - s_min, 1.0e-12),
        0.5 * (data.points.front().b1_nt + data.points.back().b1_nt), s_min;

    auto lm = levenberg_marquardt(p0, residuals, jacobian, static_cast<int>(n),
                                  max_iterations);
    if (!lm.converged)
        throw FitError("responsivity_curve: no convergence after " +
                       std::to_string(lm.iterations) +
                       " iterations, residual norm " +
                       std::to_string(lm.residual_norm));

    ResponsivityResult out;
    out.fit.a = lm.params[0];
    out.fit.b_sat = lm.params[1];
    out.fit.s0 = lm.params[2];
    out.fit.residual_norm = lm.residual_norm;
    out.fit.iterations = lm.iterations;
    out.m_s.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.m_s[i] = out.fit.a / out.fit.b_sat *
                     std::exp(-data.points[i].b1_nt / out.fit.b_sat);
    return out;
}

enum class SensitivityMethod { responsivity, snr };

struct SensitivityInputs {
    // responsivity method
    double sigma_s = 0.0;      // detector units
    double m_s_per_nt = 0.0;   // detector units per nT
    // snr method
    double b_test_nt = 0.0;    // nT
    double snr_b = 0.0;
    // shared
    double delta_f_hz = 0.0;   // equivalent noise bandwidth
};

struct SensitivityReport {
    double eta_ft_per_sqrt_hz = 0.0;
    SensitivityMethod method = SensitivityMethod::snr;
    SensitivityInputs inputs;  // echoed for provenance
};

/// eta = sigma_s / (m_s sqrt(2 df)) or eta = B_test / (SNR_B sqrt(2 df)),
/// reported in fT/sqrt(Hz).
inline SensitivityReport sensitivity_estimate(SensitivityMethod method,
                                              const SensitivityInputs& in) {
    if (in.delta_f_hz <= 0.0)
        throw DomainError("sensitivity_estimate: delta_f must be > 0");
    const double root = std::sqrt(2.0 * in.delta_f_hz);
    SensitivityReport rep;
    rep.method = method;
    rep.inputs = in;
    double eta_nt;
    if (method == SensitivityMethod::responsivity) {
        if (in.sigma_s <= 0.0 || in.m_s_per_nt <= 0.0)
            throw DomainError("sensitivity_estimate: sigma_s and m_s must be > 0");
        eta_nt = in.sigma_s / (in.m_s_per_nt * root);
    } else {
        if (in.b_test_nt <= 0.0 || in.snr_b <= 0.0)
            throw DomainError("sensitivity_estimate: B_test and SNR_B must be > 0");
        eta_nt = in.b_test_nt / (in.snr_b * root);
    }
    rep.eta_ft_per_sqrt_hz = eta_nt * 1.0e6;  // nT -> fT
    return rep;
}

/// Heterodyne enhancement figure of merit: the ratio of on/off spectral
/// amplitudes at the bin nearest |delta_omega|, in dB. Amplitude ratios use
/// 20 log10 by default; set power_db for 10 log10.
inline double enhancement_merit(const Spectrum& on, const Spectrum& off,
                                double delta_omega_hz, bool power_db = false) {
    if (on.freq.size() != off.freq.size() ||
        std::abs(on.resolution - off.resolution) > 1.0e-9 * on.resolution)
        throw DomainError("enhancement_merit: spectra must share one grid");
    const double target = std::abs(delta_omega_hz);
    if (target > on.freq.back() + 0.5 * on.resolution)
        throw DomainError("enhancement_merit: delta_omega outside the grid");
    std::size_t k = static_cast<std::size_t>(
        std::llround(target / on.resolution));
    k = std::min(k, on.freq.size() - 1);

    double off_max = 0.0;
    for (double a : off.amplitude) off_max = std::max(off_max, a);
    if (off.amplitude[k] <= 1.0e-12 * off_max || off.amplitude[k] <= 0.0)
        throw DomainError("enhancement_merit: off-state amplitude below spectral floor");

    const double factor = power_db ? 10.0 : 20.0;
    return factor * std::log10(on.amplitude[k] / off.amplitude[k]);
}

}  // namespace maserrx
