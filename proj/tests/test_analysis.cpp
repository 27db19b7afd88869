#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "maserrx/analysis.hpp"

using namespace maserrx;
using Catch::Approx;

namespace {

// Brute-force DFT, the reference for the fast transform.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n, {0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -kTwoPi * double(k) * double(j) / double(n);
            out[k] += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
    return out;
}

// Minimal flat-envelope trace for the detector chain.
TimeTrace flat_trace(std::size_t n, double dt, double photon, const ReceiverConfig& cfg) {
    TimeTrace tr;
    tr.meta = cfg;
    for (std::size_t i = 0; i < n; ++i) {
        tr.t.push_back(dt * double(i));
        MeanFieldState s;
        s.a = std::sqrt(photon);
        s.s_minus = {{0.0, 0.0}};
        s.s_z = {0.0};
        tr.states.push_back(s);
        tr.photon_number.push_back(photon);
    }
    return tr;
}

ReceiverConfig detector_config() {
    ReceiverConfig cfg;
    finalize_config(cfg);
    cfg.noise.sigma = 0.0;
    cfg.detector.reference_dbm = 0.0;
    cfg.detector.floor_dbm = -200.0;
    return cfg;
}

}  // namespace

TEST_CASE("fft agrees with the brute-force DFT for mixed lengths") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t n : {8u, 12u, 16u, 27u, 64u, 100u}) {
        std::vector<std::complex<double>> x(n);
        for (auto& v : x) v = {g(rng), g(rng)};
        auto fast = x;
        fft(fast);
        const auto slow = naive_dft(x);
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(fast[k] - slow[k]));
        INFO("n = " << n);
        CHECK(worst < 1e-9 * std::sqrt(double(n)));

        fft(fast, true);  // inverse round trip
        double rt = 0.0;
        for (std::size_t k = 0; k < n; ++k) rt = std::max(rt, std::abs(fast[k] - x[k]));
        CHECK(rt < 1e-12 * std::sqrt(double(n)));
    }
}

TEST_CASE("fft_spectrum: unit sinusoid on a 5 us record peaks at its frequency") {
    const double rate = 1.0e8;  // 10 ns sampling
    const std::size_t n = 500;  // 5 us, non-power-of-two
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(kTwoPi * 1.0e6 * double(i) / rate);
    const auto spec = fft_spectrum(x, rate);
    CHECK(spec.resolution == Approx(2.0e5));
    std::size_t peak = 1;
    for (std::size_t k = 2; k < spec.amplitude.size(); ++k)
        if (spec.amplitude[k] > spec.amplitude[peak]) peak = k;
    CHECK(std::abs(spec.freq[peak] - 1.0e6) <= spec.resolution);
    CHECK(spec.amplitude[peak] == Approx(1.0).margin(0.01));  // exact bin: 1 MHz = 5*res
}

TEST_CASE("fft_spectrum: constant input has no non-DC content") {
    std::vector<double> x(64, 3.7);
    const auto spec = fft_spectrum(x, 1.0e6);
    CHECK(spec.amplitude[0] == Approx(3.7));
    for (std::size_t k = 1; k < spec.amplitude.size(); ++k)
        CHECK(spec.amplitude[k] < 1e-10);
}

TEST_CASE("fft_spectrum: two tones give two peaks") {
    const double rate = 1.6e7;
    const std::size_t n = 1024;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) / rate;
        x[i] = std::sin(kTwoPi * 1.0e6 * t) + 0.5 * std::sin(kTwoPi * 3.0e6 * t);
    }
    const auto spec = fft_spectrum(x, rate);
    const auto bin = [&](double f) {
        return static_cast<std::size_t>(std::llround(f / spec.resolution));
    };
    CHECK(spec.amplitude[bin(1.0e6)] == Approx(1.0).margin(0.01));
    CHECK(spec.amplitude[bin(3.0e6)] == Approx(0.5).margin(0.01));
    for (std::size_t k = 1; k < spec.amplitude.size(); ++k) {
        if (std::abs(double(k) - 1.0e6 / spec.resolution) < 2) continue;
        if (std::abs(double(k) - 3.0e6 / spec.resolution) < 2) continue;
        CHECK(spec.amplitude[k] < 0.02);
    }
}

TEST_CASE("fft_spectrum: Parseval consistency under the documented scaling") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t n : {64u, 250u}) {
        std::vector<double> x(n);
        double energy = 0.0;
        for (auto& v : x) {
            v = g(rng);
            energy += v * v;
        }
        const auto spec = fft_spectrum(x, 1.0e6);
        // one-sided amplitudes: E = n (a0^2 + sum_mid a_k^2 / 2 + a_nyq^2)
        double acc = spec.amplitude[0] * spec.amplitude[0];
        const std::size_t last = spec.amplitude.size() - 1;
        for (std::size_t k = 1; k < last; ++k)
            acc += 0.5 * spec.amplitude[k] * spec.amplitude[k];
        if (n % 2 == 0)
            acc += spec.amplitude[last] * spec.amplitude[last];
        else
            acc += 0.5 * spec.amplitude[last] * spec.amplitude[last];
        CHECK(double(n) * acc == Approx(energy).epsilon(1e-6));
    }
}

TEST_CASE("fft_spectrum input validation") {
    CHECK_THROWS_AS(fft_spectrum(std::vector<double>(8, 1.0), 1e6), DomainError);
    CHECK_THROWS_AS(fft_spectrum(std::vector<double>(64, 1.0), 0.0), DomainError);
    std::vector<double> bad_t = {0.0, 1.0, 2.0, 3.5};
    CHECK_THROWS_AS(uniform_sample_rate(bad_t), DomainError);
    std::vector<double> good_t = {0.0, 1.0e-6, 2.0e-6};
    CHECK(uniform_sample_rate(good_t) == Approx(1.0e6));
}

TEST_CASE("beat_frequency finds a tone riding a decaying envelope") {
    const double rate = 5.0e7;
    const std::size_t n = 600;  // 12 us
    std::vector<double> env(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) / rate;
        const double burst = std::exp(-t / 6.0e-6);
        env[i] = burst * (1.0 + 0.4 * std::cos(kTwoPi * 2.1e6 * t));
    }
    const auto beat = beat_frequency(env, rate);
    REQUIRE(beat.has_value());
    CHECK(beat->freq_hz == Approx(2.1e6).margin(rate / double(n)));

    // featureless envelope: nothing to report
    std::vector<double> flat(n);
    for (std::size_t i = 0; i < n; ++i)
        flat[i] = std::exp(-double(i) / rate / 6.0e-6);
    CHECK(!beat_frequency(flat, rate).has_value());
}

TEST_CASE("detector chain: reference power reads zero after AC coupling") {
    auto cfg = detector_config();
    // photon number chosen so P_out = 1 mW
    const double photon_to_watt = cfg.cavity.coupling_fraction * cfg.cavity.kappa_c() *
                                  cfg.constants.hbar() * cfg.drive.omega_in;
    const auto tr = flat_trace(64, 1e-9, 1.0e-3 / photon_to_watt, cfg);
    const auto det = detector_chain(tr, cfg);
    CHECK(det.power_w[10] == Approx(1.0e-3).epsilon(1e-12));
    for (double v : det.voltage_mv) CHECK(v == Approx(0.0).margin(1e-9));
    CHECK(det.dc_offset_mv == Approx(0.0).margin(1e-9));
}

TEST_CASE("detector chain: a 10 dB power step is a 220 mV voltage step") {
    auto cfg = detector_config();
    const double photon_to_watt = cfg.cavity.coupling_fraction * cfg.cavity.kappa_c() *
                                  cfg.constants.hbar() * cfg.drive.omega_in;
    auto tr = flat_trace(100, 1e-9, 1.0e-3 / photon_to_watt, cfg);
    for (std::size_t i = 50; i < 100; ++i)
        tr.photon_number[i] *= 10.0;  // +10 dB
    const auto det = detector_chain(tr, cfg);
    CHECK(det.voltage_mv[80] - det.voltage_mv[20] == Approx(220.0).epsilon(1e-9));
}

TEST_CASE("detector chain: configured noise has the configured deviation") {
    auto cfg = detector_config();
    cfg.noise.sigma = 1.0;
    cfg.noise.seed = 777;
    const auto tr = flat_trace(100000, 1e-9, 1.0, cfg);
    const auto det = detector_chain(tr, cfg);
    double mean = 0.0, m2 = 0.0;
    for (double v : det.voltage_mv) mean += v;
    mean /= double(det.voltage_mv.size());
    for (double v : det.voltage_mv) m2 += (v - mean) * (v - mean);
    const double sd = std::sqrt(m2 / double(det.voltage_mv.size()));
    CHECK(sd == Approx(1.0).epsilon(0.05));
}

TEST_CASE("detector chain: zero power is floored, not infinite") {
    auto cfg = detector_config();
    auto tr = flat_trace(64, 1e-9, 0.0, cfg);
    const auto det = detector_chain(tr, cfg);
    for (double v : det.voltage_mv) CHECK(std::isfinite(v));
    CHECK(watts_to_dbm(0.0, -200.0) == -200.0);
    CHECK(watts_to_dbm(1.0e-3, -200.0) == Approx(0.0).margin(1e-12));
    CHECK(dbm_to_watts(-30.0) == Approx(1.0e-6).epsilon(1e-12));
}

TEST_CASE("gain_db endpoints") {
    CHECK(gain_db(50.12, 1.0) == Approx(17.0).margin(0.001));
    CHECK(gain_db(3.3e-7, 3.3e-7) == 0.0);
    CHECK(gain_db(0.5, 1.0) == Approx(-3.0103).margin(0.001));
    CHECK_THROWS_AS(gain_db(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(gain_db(1.0, -2.0), DomainError);
}

TEST_CASE("snr_estimate: power and field ratios") {
    std::vector<double> amp(300, 1.0);               // unit noise amplitude
    amp[250] = std::sqrt(161.4);                     // peak power 161.4
    const auto snr = snr_estimate(amp, {0, 200}, {200, 300});
    CHECK(snr.snr_p == Approx(161.4));
    CHECK(snr.snr_b == Approx(12.70).margin(0.01));

    std::vector<double> unit(100, 1.0);
    const auto one = snr_estimate(unit, {0, 50}, {50, 100});
    CHECK(one.snr_p == Approx(1.0));
    CHECK(one.snr_b == Approx(1.0));
}

TEST_CASE("snr_estimate: Monte-Carlo pulse of amplitude 10 sigma") {
    const double sigma = 0.35;
    double sum_snr_b = 0.0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        NoiseSource rng(1000 + s);
        std::vector<double> amp(2005);
        for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = rng.gaussian(sigma);
        for (std::size_t i = 2000; i < 2005; ++i) amp[i] += 10.0 * sigma;
        sum_snr_b += snr_estimate(amp, {0, 2000}, {2000, 2005}).snr_b;
    }
    CHECK(sum_snr_b / seeds == Approx(10.0).epsilon(0.15));
}

TEST_CASE("snr_estimate window validation") {
    std::vector<double> amp(100, 1.0);
    CHECK_THROWS_AS(snr_estimate(amp, {0, 60}, {50, 100}), DomainError);  // overlap
    CHECK_THROWS_AS(snr_estimate(amp, {0, 0}, {50, 100}), DomainError);   // empty
    CHECK_THROWS_AS(snr_estimate(amp, {0, 50}, {50, 200}), DomainError);  // range
    std::vector<double> silent(100, 0.0);
    silent[80] = 1.0;
    CHECK_THROWS_AS(snr_estimate(silent, {0, 50}, {50, 100}), DomainError);
}

TEST_CASE("responsivity fit recovers the generating saturation model") {
    ResponseCurve curve;
    const double a = 1.0, b_sat = 50.0, s0 = 0.0;
    curve.points.push_back({1.0e-6, 0.0, 0.0});  // essentially zero field
    for (double b : {5.0, 12.0, 25.0, 50.0, 90.0, 150.0, 260.0})
        curve.points.push_back({b, a * (1.0 - std::exp(-b / b_sat)) + s0, 0.0});
    curve.points[0].response = a * (1.0 - std::exp(-1.0e-6 / b_sat));
    const auto res = responsivity_curve(curve);
    CHECK(res.fit.a == Approx(1.0).epsilon(1e-7));
    CHECK(res.fit.b_sat == Approx(50.0).epsilon(1e-7));
    CHECK(res.fit.s0 == Approx(0.0).margin(1e-8));
    CHECK(res.m_s.front() == Approx(0.02).margin(1e-6));  // A/B_sat at zero field
}

TEST_CASE("responsivity: flat in the linear regime, collapsed when saturated") {
    ResponseCurve lin;
    for (double b : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0})
        lin.points.push_back({b, 2.0 * (1.0 - std::exp(-b / 50.0)), 0.0});
    const auto rl = responsivity_curve(lin);
    const auto [mn, mx] = std::minmax_element(rl.m_s.begin(), rl.m_s.end());
    CHECK((*mx - *mn) / *mx < 0.02);

    ResponseCurve sat;
    for (double b : {10.0, 50.0, 100.0, 150.0, 250.0})
        sat.points.push_back({b, 2.0 * (1.0 - std::exp(-b / 50.0)), 0.0});
    const auto rs = responsivity_curve(sat);
    const double m0 = rs.fit.a / rs.fit.b_sat;
    CHECK(rs.m_s.back() < 0.01 * m0);  // 5 B_sat deep into the limiter
}

TEST_CASE("responsivity fit input validation and non-convergence") {
    ResponseCurve few;
    few.points = {{1.0, 0.1, 0.0}, {2.0, 0.2, 0.0}, {3.0, 0.3, 0.0}};
    CHECK_THROWS_AS(responsivity_curve(few), DomainError);

    ResponseCurve unsorted;
    unsorted.points = {{1.0, 0.1, 0.0}, {3.0, 0.3, 0.0}, {2.0, 0.2, 0.0}, {4.0, 0.4, 0.0}};
    CHECK_THROWS_AS(responsivity_curve(unsorted), DomainError);

    ResponseCurve wild;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 1; i <= 8; ++i) wild.points.push_back({double(i), g(rng), 0.0});
    CHECK_THROWS_AS(responsivity_curve(wild, 1), FitError);
}

TEST_CASE("sensitivity estimate endpoints and identities") {
    const auto snr_rep = sensitivity_estimate(
        SensitivityMethod::snr, {0.0, 0.0, 2.47, 12.7, 5.0e8});
    CHECK(snr_rep.eta_ft_per_sqrt_hz == Approx(6.15).margin(0.01));
    CHECK(snr_rep.eta_ft_per_sqrt_hz == Approx(6.14).margin(0.02));

    const auto doubled = sensitivity_estimate(
        SensitivityMethod::snr, {0.0, 0.0, 2.47, 25.4, 5.0e8});
    CHECK(doubled.eta_ft_per_sqrt_hz ==
          Approx(0.5 * snr_rep.eta_ft_per_sqrt_hz).epsilon(1e-12));

    // responsivity-mode with sigma_s/m_s = B_test/SNR_B gives the same eta
    const auto resp_rep = sensitivity_estimate(
        SensitivityMethod::responsivity, {2.47 / 12.7, 1.0, 0.0, 0.0, 5.0e8});
    CHECK(resp_rep.eta_ft_per_sqrt_hz ==
          Approx(snr_rep.eta_ft_per_sqrt_hz).epsilon(1e-12));

    CHECK_THROWS_AS(
        sensitivity_estimate(SensitivityMethod::snr, {0.0, 0.0, 0.0, 12.7, 5e8}),
        DomainError);
    CHECK_THROWS_AS(
        sensitivity_estimate(SensitivityMethod::responsivity, {1.0, 1.0, 0.0, 0.0, 0.0}),
        DomainError);
}

TEST_CASE("enhancement figure of merit") {
    Spectrum on, off;
    on.resolution = off.resolution = 1.0e5;
    for (int k = 0; k <= 50; ++k) {
        on.freq.push_back(1.0e5 * k);
        off.freq.push_back(1.0e5 * k);
        on.amplitude.push_back(1.0);
        off.amplitude.push_back(1.0);
    }
    on.amplitude[40] = 10.0;  // 4 MHz line, ratio 10
    CHECK(enhancement_merit(on, off, 4.0e6) == Approx(20.0));
    CHECK(enhancement_merit(on, off, 4.0e6, true) == Approx(10.0));
    CHECK(enhancement_merit(on, off, -4.0e6) == Approx(20.0));  // magnitude bin
    CHECK(enhancement_merit(off, off, 2.0e6) == Approx(0.0));

    off.amplitude[30] = 0.0;
    CHECK_THROWS_AS(enhancement_merit(on, off, 3.0e6), DomainError);
    Spectrum coarse = off;
    coarse.resolution = 2.0e5;
    CHECK_THROWS_AS(enhancement_merit(on, coarse, 1.0e6), DomainError);
    CHECK_THROWS_AS(enhancement_merit(on, off, 9.0e6), DomainError);
}

TEST_CASE("normalized log envelope spans [0, 1]") {
    std::vector<double> photon = {0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0};
    const auto norm = log_envelope_normalized(photon);
    CHECK(norm.front() == 0.0);
    CHECK(norm.back() == 1.0);
    for (double v : norm) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}
