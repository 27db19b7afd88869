#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "maserrx/model.hpp"

using namespace maserrx;

TEST_CASE("kappa_from_q reproduces the cavity bandwidths") {
    // receiver cavity: 1.4492 GHz at Q = 1857 -> 780.4 kHz FWHM
    const double k1 = kappa_from_q(kTwoPi * 1.4492e9, 1857.0);
    CHECK(k1 / kTwoPi == Catch::Approx(780.4e3).epsilon(1e-3));
    // calibration cavity: 1.4494 GHz at Q = 1706 -> 849.6 kHz
    const double k2 = kappa_from_q(kTwoPi * 1.4494e9, 1706.0);
    CHECK(k2 / kTwoPi == Catch::Approx(849.6e3).epsilon(1e-3));
}

TEST_CASE("kappa_from_q scalings and domain") {
    const double w = kTwoPi * 1.0e9;
    CHECK(kappa_from_q(w, 2000.0) == Catch::Approx(0.5 * kappa_from_q(w, 1000.0)));
    CHECK(kappa_from_q(2.0 * w, 1000.0) == Catch::Approx(2.0 * kappa_from_q(w, 1000.0)));
    // strictly monotone decreasing in Q
    double prev = kappa_from_q(w, 100.0);
    for (double q = 200.0; q <= 1000.0; q += 100.0) {
        const double k = kappa_from_q(w, q);
        CHECK(k < prev);
        prev = k;
    }
    CHECK_THROWS_AS(kappa_from_q(0.0, 1000.0), DomainError);
    CHECK_THROWS_AS(kappa_from_q(w, -1.0), DomainError);
}

TEST_CASE("build_spin_ensemble splits and conserves the spin count") {
    SpinEnsembleParams spins;
    spins.g_single = 0.1;

    SECTION("degenerate line") {
        spins.n_spins = 1.0e14;
        spins.lineshape = {{0.0, 1.0}};
        const auto subs = build_spin_ensemble(spins);
        REQUIRE(subs.size() == 1);
        CHECK(subs[0].n_spins == Catch::Approx(1.0e14));
        CHECK(subs[0].g_eff == Catch::Approx(0.1 * std::sqrt(1.0e14)));
    }

    SECTION("even split") {
        spins.n_spins = 1.0e14;
        spins.lineshape = {{-kTwoPi * 1.0e6, 0.5}, {kTwoPi * 1.0e6, 0.5}};
        const auto subs = build_spin_ensemble(spins);
        REQUIRE(subs.size() == 2);
        CHECK(subs[0].n_spins == Catch::Approx(5.0e13));
        CHECK(subs[1].n_spins == Catch::Approx(5.0e13));
        CHECK(subs[0].delta == Catch::Approx(-kTwoPi * 1.0e6));
    }

    SECTION("skewed table sums back to N") {
        spins.n_spins = 1.0e14;
        spins.lineshape = {{-2.0, 0.1}, {-1.0, 0.2}, {0.0, 0.4}, {1.0, 0.2}, {2.0, 0.1}};
        const auto subs = build_spin_ensemble(spins);
        double total = 0.0;
        for (const auto& s : subs) total += s.n_spins;
        CHECK(std::abs(total - spins.n_spins) < 1.0);  // within one spin
        CHECK(std::abs(total - spins.n_spins) <= 1e-12 * spins.n_spins);
    }

    SECTION("empty lineshape is an error") {
        spins.lineshape.clear();
        CHECK_THROWS_AS(build_spin_ensemble(spins), DomainError);
    }
}

TEST_CASE("spin number conservation holds for random tables") {
    SpinEnsembleParams spins;
    spins.g_single = 0.05;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(u(rng) * 20);
        std::vector<double> w(n);
        double sum = 0.0;
        for (auto& x : w) {
            x = u(rng) + 1e-6;
            sum += x;
        }
        spins.lineshape.clear();
        for (int k = 0; k < n; ++k)
            spins.lineshape.push_back({kTwoPi * 1e6 * (k - n / 2), w[k] / sum});
        spins.n_spins = 1.0e12 * (1.0 + u(rng) * 1000.0);
        const auto subs = build_spin_ensemble(spins);
        double total = 0.0;
        for (const auto& s : subs) total += s.n_spins;
        CHECK(std::abs(total - spins.n_spins) <= 1e-12 * spins.n_spins);
    }
}

TEST_CASE("default lineshape is normalized, 21 points, mode at zero") {
    const auto table = default_lineshape();
    REQUIRE(table.size() == 21);
    double sum = 0.0;
    std::size_t argmax = 0;
    for (std::size_t k = 0; k < table.size(); ++k) {
        CHECK(table[k].weight >= 0.0);
        sum += table[k].weight;
        if (table[k].weight > table[argmax].weight) argmax = k;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    CHECK(table[argmax].offset == 0.0);
    // left-skewed: heavier low-frequency tail
    CHECK(table[10 - 4].weight > table[10 + 4].weight);
}

TEST_CASE("validate_config accepts the hardware default configuration") {
    ReceiverConfig cfg;
    finalize_config(cfg);
    const auto violations = validate_config(cfg);
    for (const auto& v : violations)
        INFO(v.path << ": " << v.reason);
    CHECK(violations.empty());
    CHECK(cfg.cavity.q_loaded == 1857.0);
    CHECK(cfg.cavity.omega_c == Catch::Approx(kTwoPi * 1.4492e9));
    CHECK(cfg.constants.gamma_e_mhz_per_mt() == -28.0);
}

TEST_CASE("validate_config reports every violation with its field path") {
    ReceiverConfig cfg;
    finalize_config(cfg);
    cfg.sim.dt = 0.0;
    cfg.spins.lineshape = {{0.0, 0.45}, {1.0, 0.45}};  // sums to 0.9
    const auto violations = validate_config(cfg);
    REQUIRE(violations.size() >= 2);
    bool saw_dt = false, saw_lineshape = false;
    for (const auto& v : violations) {
        if (v.path == "sim.dt") saw_dt = true;
        if (v.path == "spins.lineshape") saw_lineshape = true;
    }
    CHECK(saw_dt);
    CHECK(saw_lineshape);
}

TEST_CASE("validate_config is idempotent") {
    ReceiverConfig cfg;
    finalize_config(cfg);
    cfg.spins.initial_sz = 1.5;
    const auto first = validate_config(cfg);
    const auto second = validate_config(cfg);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].path == second[i].path);
        CHECK(first[i].reason == second[i].reason);
    }
}

TEST_CASE("finalize_config derives the non-authoritative drive input") {
    ReceiverConfig cfg;
    cfg.drive.power_in = 2.0e-9;
    cfg.drive.authoritative = DriveInput::power;
    finalize_config(cfg);
    const double eta = cfg.drive.amplitude;
    CHECK(eta > 0.0);
    // round trip through the amplitude-authoritative direction
    ReceiverConfig cfg2 = cfg;
    cfg2.drive.authoritative = DriveInput::amplitude;
    cfg2.drive.power_in = 0.0;
    finalize_config(cfg2);
    CHECK(cfg2.drive.power_in == Catch::Approx(2.0e-9).epsilon(1e-12));
}

TEST_CASE("physical constants are fixed and signed as expected") {
    PhysicalConstants c;
    CHECK(c.mu0() == Catch::Approx(4.0 * std::numbers::pi * 1.0e-7));
    CHECK(c.gamma_e_mhz_per_mt() < 0.0);
    CHECK(c.abs_gamma_e_rad_per_s_t() == Catch::Approx(28.0 * kTwoPi * 1.0e9));
    CHECK_THROWS_AS(PhysicalConstants(28.0), DomainError);
}
