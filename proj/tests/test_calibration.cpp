#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "maserrx/calibration.hpp"

using namespace maserrx;
using Catch::Approx;

TEST_CASE("theory conversion factor matches the calibration cavity") {
    // Q = 1706 cavity at 1.4494 GHz, 0.54 mL mode volume -> 0.94 mT/sqrt(W)
    const auto c = conversion_factor_theory(1706.0, 5.4e-7, kTwoPi * 1.4494e9);
    CHECK(c.c_value == Approx(0.94).margin(0.01));
    CHECK(c.source == ConversionSource::theory);
    CHECK(c.uncertainty == 0.0);
}

TEST_CASE("theory conversion factor scales as sqrt(Q) and 1/sqrt(Vm)") {
    const double w = kTwoPi * 1.45e9;
    const auto base = conversion_factor_theory(1000.0, 5.0e-7, w);
    CHECK(conversion_factor_theory(4000.0, 5.0e-7, w).c_value ==
          Approx(2.0 * base.c_value));
    CHECK(conversion_factor_theory(1000.0, 2.0e-6, w).c_value ==
          Approx(0.5 * base.c_value));
    CHECK_THROWS_AS(conversion_factor_theory(0.0, 5.0e-7, w), DomainError);
    CHECK_THROWS_AS(conversion_factor_theory(1000.0, -1.0, w), DomainError);
}

TEST_CASE("rescaling carries C between the two cavity settings") {
    ConversionFactor c0{1.05, ConversionSource::rabi_fit, 0.03};
    const auto c1 = rescale_conversion_factor(c0, 1706.0, kTwoPi * 1.4494e9, 1857.0,
                                              kTwoPi * 1.4492e9);
    CHECK(c1.c_value == Approx(1.10).margin(0.005));
    CHECK(c1.source == ConversionSource::rescaled);
    CHECK(c1.uncertainty == Approx(0.03 * c1.c_value / 1.05).epsilon(1e-12));

    // identity and 4x Q
    const auto same = rescale_conversion_factor(c0, 1706.0, 1.0, 1706.0, 1.0);
    CHECK(same.c_value == Approx(1.05));
    const auto quad = rescale_conversion_factor(c0, 1000.0, 1.0, 4000.0, 1.0);
    CHECK(quad.c_value == Approx(2.10));
    CHECK_THROWS_AS(rescale_conversion_factor(c0, 0.0, 1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("rescaled theory equals theory recomputed at the new cavity") {
    const double vm = 5.4e-7;
    const double q0 = 1706.0, w0 = kTwoPi * 1.4494e9;
    const double q1 = 1857.0, w1 = kTwoPi * 1.4492e9;
    const auto direct = conversion_factor_theory(q1, vm, w1);
    const auto carried =
        rescale_conversion_factor(conversion_factor_theory(q0, vm, w0), q0, w0, q1, w1);
    CHECK(carried.c_value == Approx(direct.c_value).epsilon(1e-12));
}

TEST_CASE("rabi slope fit: exact data recovers the slope and C") {
    RabiDataset data;
    for (double sq : {0.01, 0.02, 0.05, 0.08})
        data.points.push_back({sq, 20.86 * sq, 0.0});
    const auto fit = fit_rabi_slope(data, -28.0);
    CHECK(fit.slope_mhz_per_sqrt_w == Approx(20.86).epsilon(1e-10));
    CHECK(fit.conversion.c_value == Approx(20.86 * std::sqrt(2.0) / 28.0).epsilon(1e-10));
    // the quoted 1.05 mT/sqrt(W) is consistent within the paper's rounding
    CHECK(fit.conversion.c_value == Approx(1.05).epsilon(0.01));
    CHECK(fit.r_squared == Approx(1.0));

    RabiDataset two;
    two.points.push_back({1.0, 20.86, 0.0});
    two.points.push_back({2.0, 41.72, 0.0});
    CHECK(fit_rabi_slope(two, -28.0).slope_mhz_per_sqrt_w == Approx(20.86));
}

TEST_CASE("rabi slope fit: noisy data stays inside its own 3-sigma band") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> noise(0.0, 0.5);
    const std::vector<double> sq = {0.01, 0.02, 0.03, 0.05, 0.07, 0.09};
    int covered = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        RabiDataset data;
        for (double x : sq) data.points.push_back({x, 20.86 * x + noise(rng), 0.5});
        const auto fit = fit_rabi_slope(data, -28.0);
        if (std::abs(fit.slope_mhz_per_sqrt_w - 20.86) <= 3.0 * fit.slope_sigma)
            ++covered;
    }
    CHECK(covered >= static_cast<int>(0.98 * trials));
}

TEST_CASE("rabi slope fit error paths") {
    RabiDataset empty;
    CHECK_THROWS_AS(fit_rabi_slope(empty, -28.0), FitError);
    RabiDataset same_x;
    same_x.points = {{0.5, 10.0, 0.0}, {0.5, 11.0, 0.0}};
    CHECK_THROWS_AS(fit_rabi_slope(same_x, -28.0), FitError);
    RabiDataset mixed;
    mixed.points = {{0.1, 2.0, 0.5}, {0.2, 4.0, 0.0}};
    CHECK_THROWS_AS(fit_rabi_slope(mixed, -28.0), FitError);
    RabiDataset ok;
    ok.points = {{0.1, 2.0, 0.0}, {0.2, 4.0, 0.0}};
    CHECK_THROWS_AS(fit_rabi_slope(ok, 0.0), FitError);
}

TEST_CASE("field/power conversion endpoints") {
    ConversionFactor c{1.10, ConversionSource::rescaled, 0.03};
    // 2.47 nT test field in mT
    const double p = b1_power_convert(c, 2.47e-6, ConvertDirection::field_to_power);
    CHECK(p == Approx(5.04e-12).epsilon(1e-3));
    CHECK(b1_power_convert(c, 0.0, ConvertDirection::power_to_field) == 0.0);

    ConversionFactor c105{1.05, ConversionSource::rabi_fit, 0.0};
    const double b1 = b1_power_convert(c105, 1.0, ConvertDirection::power_to_field);
    CHECK(b1 == Approx(1.05));
    CHECK(rabi_frequency_mhz(b1, -28.0) == Approx(20.79).margin(0.005));
    CHECK_THROWS_AS(b1_power_convert(c, -1.0, ConvertDirection::power_to_field),
                    DomainError);
}

TEST_CASE("field/power round trip is the identity") {
    ConversionFactor c{0.974, ConversionSource::theory, 0.0};
    for (double p : {1e-12, 5.04e-12, 2.1e-9, 1e-3, 1.0}) {
        const double b = b1_power_convert(c, p, ConvertDirection::power_to_field);
        const double back = b1_power_convert(c, b, ConvertDirection::field_to_power);
        CHECK(back == Approx(p).epsilon(1e-12));
    }
}
