#include <catch2/catch_amalgamated.hpp>

#include "maserrx/config_io.hpp"

using namespace maserrx;

namespace {

const char* kSample = R"(# sample
[cavity]
omega_c = 1.4492e9
q_loaded = 1857
v_m = 5.4e-7
coupling_fraction = 0.35

[spins]
omega_s_center = 1.4492e9
n_spins = 2e15
gamma_par = 3e4
gamma_perp = 2.5e6
initial_sz = 0.8095
lineshape = -1e6:0.25 0:0.5 1e6:0.25

[drive]
omega_in = 1.4492e9
power_in = 2.089e-9
pulse_start = 1e-6
pulse_duration = 5e-6

[sim]
t_end = 1.6e-5
dt = 1e-9
output_stride = 8

[noise]
sigma = 1.0
seed = 42

[detector]
slope_mv_per_db = 22
reference_dbm = 0
floor_dbm = -88
)";

}  // namespace

TEST_CASE("parse_config reads the sectioned format with Hz at the boundary") {
    const auto cfg = parse_config(kSample);
    CHECK(cfg.cavity.omega_c == Catch::Approx(kTwoPi * 1.4492e9));
    CHECK(cfg.cavity.q_loaded == 1857.0);
    CHECK(cfg.spins.n_spins == 2e15);
    REQUIRE(cfg.spins.lineshape.size() == 3);
    CHECK(cfg.spins.lineshape[0].offset == Catch::Approx(-kTwoPi * 1e6));
    CHECK(cfg.spins.lineshape[1].weight == 0.5);
    CHECK(cfg.drive.power_in == 2.089e-9);
    CHECK(cfg.drive.amplitude > 0.0);  // derived by finalize
    CHECK(cfg.noise.seed == 42);
    CHECK(cfg.detector.floor_dbm == -88.0);
    CHECK(validate_config(cfg).empty());
}

TEST_CASE("parse_config derives g_single when absent") {
    const auto cfg = parse_config(kSample);
    CHECK(cfg.spins.g_single > 0.0);
    CHECK(cfg.spins.g_single ==
          Catch::Approx(derive_g_single(cfg.constants, cfg.cavity)));
}

TEST_CASE("unknown keys and malformed lines are config errors") {
    CHECK_THROWS_AS(parse_config("[cavity]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[nosuch]\nomega_c = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("omega_c = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[cavity]\nomega_c 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[cavity]\nomega_c = abc\n"), ConfigError);
}

TEST_CASE("overrides hit existing keys and reject unknown ones") {
    auto cfg = parse_config(kSample);
    apply_override(cfg, "drive.power_in=5e-12");
    CHECK(cfg.drive.power_in == 5e-12);
    apply_override(cfg, "sim.adaptive=true");
    CHECK(cfg.sim.adaptive);
    CHECK_THROWS_AS(apply_override(cfg, "drive.nosuch=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "power_in=1"), ConfigError);
}

TEST_CASE("serialize and reparse is a fixed point of the canonical form") {
    auto cfg = parse_config(kSample);
    const auto text1 = serialize_config(cfg);
    const auto cfg2 = parse_config(text1);
    const auto text2 = serialize_config(cfg2);
    CHECK(text1 == text2);
    CHECK(cfg2.cavity.omega_c == cfg.cavity.omega_c);
    CHECK(cfg2.spins.lineshape.size() == cfg.spins.lineshape.size());
    CHECK(cfg2.drive.power_in == cfg.drive.power_in);
}

TEST_CASE("amplitude-authoritative drive survives the round trip") {
    auto cfg = parse_config(kSample);
    apply_override(cfg, "drive.amplitude=1e6");
    finalize_config(cfg);
    CHECK(cfg.drive.authoritative == DriveInput::amplitude);
    CHECK(cfg.drive.power_in > 0.0);
    const auto cfg2 = parse_config(serialize_config(cfg));
    CHECK(cfg2.drive.authoritative == DriveInput::amplitude);
    CHECK(cfg2.drive.amplitude == cfg.drive.amplitude);
}
