// maserrx - simulator and analysis toolkit for a maser-based microwave
// receiver. Subcommands run single integrations or the composed sweep
// experiments and write CSV/JSON datasets plus a digest manifest.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maserrx/analysis.hpp"
#include "maserrx/calibration.hpp"
#include "maserrx/config_io.hpp"
#include "maserrx/emit.hpp"
#include "maserrx/lindblad.hpp"
#include "maserrx/meanfield.hpp"
#include "maserrx/scenarios.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitUsage = 64;

struct CommonArgs {
    std::string config_path;
    std::string output_dir = "out";
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file")->required();
    cmd->add_option("--output", args.output_dir, "output directory");
    cmd->add_option("--override", args.overrides,
                    "section.key=value override, repeatable");
    cmd->add_option("--seed", args.seed, "RNG seed for every stochastic component")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--threads", args.threads,
                    "worker threads for sweeps (env RECEIVER_SIM_THREADS)");
}

int resolve_threads(const CommonArgs& args) {
    if (args.threads > 0) return args.threads;
    if (const char* env = std::getenv("RECEIVER_SIM_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

maserrx::ReceiverConfig load_effective(const CommonArgs& args) {
    auto cfg = maserrx::load_config(args.config_path);
    for (const auto& o : args.overrides) maserrx::apply_override(cfg, o);
    if (args.seed_set) cfg.noise.seed = args.seed;
    maserrx::finalize_config(cfg);
    return cfg;
}

int run_validate(const CommonArgs& args) {
    auto cfg = load_effective(args);
    const auto violations = maserrx::validate_config(cfg);
    if (!violations.empty()) {
        std::cerr << "configuration invalid:\n";
        for (const auto& v : violations)
            std::cerr << "  " << v.path << ": " << v.reason << "\n";
        return kExitConfig;
    }
    const double kappa = cfg.cavity.kappa_c();
    const auto c = maserrx::conversion_factor_theory(
        cfg.cavity.q_loaded, cfg.cavity.v_m, cfg.cavity.omega_c, cfg.constants.mu0());
    const double growth = maserrx::linear_growth_rate(cfg);
    std::cout << "configuration valid\n"
              << "  kappa_c        = " << kappa << " rad/s ("
              << kappa / maserrx::kTwoPi / 1.0e3 << " kHz FWHM)\n"
              << "  g_single       = " << cfg.spins.g_single << " rad/s\n"
              << "  g_eff          = " << cfg.spins.g_eff() << " rad/s\n"
              << "  C_theory       = " << c.c_value << " mT/sqrt(W)\n"
              << "  drive eta      = " << cfg.drive.amplitude << " rad/s\n"
              << "  drive power    = " << cfg.drive.power_in << " W\n"
              << "  growth rate    = " << growth << " 1/s ("
              << (growth > 0.0 ? "self-oscillating" : "below threshold") << ")\n";
    return kExitOk;
}

int run_simulate(const CommonArgs& args) {
    auto cfg = load_effective(args);
    maserrx::ensure_valid(cfg);
    const auto trace = maserrx::integrate_meanfield(cfg, maserrx::initial_state(cfg));
    const auto det = maserrx::detector_chain(trace, cfg);

    maserrx::ScenarioResult res;
    res.name = "simulate";
    res.tables.emplace_back("trace", maserrx::trace_to_table(trace));
    maserrx::Table dtab;
    dtab.columns = {"t_s", "voltage_mv", "power_w"};
    for (std::size_t i = 0; i < det.t.size(); ++i)
        dtab.add_row({det.t[i], det.voltage_mv[i], det.power_w[i]});
    res.tables.emplace_back("detector", std::move(dtab));

    double p_peak = 0.0;
    for (double p : det.power_w) p_peak = std::max(p_peak, p);
    res.summary = {{"samples", trace.size()},
                   {"t_end_s", trace.t.back()},
                   {"peak_power_out_w", p_peak},
                   {"power_in_w", cfg.drive.power_in}};
    if (cfg.drive.power_in > 0.0 && p_peak > 0.0)
        res.summary["peak_gain_db"] = maserrx::gain_db(p_peak, cfg.drive.power_in);
    res.config_echo = maserrx::serialize_config(cfg);
    maserrx::emit_outputs(res, args.output_dir);
    std::cout << "simulate: " << trace.size() << " samples -> "
              << (std::filesystem::path(args.output_dir) / res.name).string() << "\n";
    return kExitOk;
}

int run_oracle(const CommonArgs& args, int dim_fock) {
    auto cfg = load_effective(args);
    maserrx::ensure_valid(cfg);
    if (cfg.spins.n_spins > 4 || cfg.spins.n_spins != std::floor(cfg.spins.n_spins))
        throw maserrx::ScenarioError("oracle: spins.n_spins must be an integer <= 4");
    const auto trace = maserrx::evolve_lindblad_auto(
        dim_fock, static_cast<int>(cfg.spins.n_spins), cfg.spins.initial_sz, cfg,
        cfg.sim.t_end, cfg.sim.dt);

    maserrx::ScenarioResult res;
    res.name = "oracle";
    res.tables.emplace_back("oracle_trace", maserrx::lindblad_trace_to_table(trace));
    res.summary = {{"samples", trace.size()},
                   {"dim_fock", trace.dim_fock},
                   {"final_photon_number", trace.photon_number.back()}};
    res.config_echo = maserrx::serialize_config(cfg);
    maserrx::emit_outputs(res, args.output_dir);
    std::cout << "oracle: dim_fock " << trace.dim_fock << ", " << trace.size()
              << " samples\n";
    return kExitOk;
}

int run_calibrate(const CommonArgs& args, double min_dbm, double max_dbm, int points) {
    auto cfg = load_effective(args);
    std::vector<double> powers;
    for (int i = 0; i < points; ++i) {
        const double dbm = min_dbm + (max_dbm - min_dbm) * i / double(points - 1);
        powers.push_back(1.0e-3 * std::pow(10.0, dbm / 10.0));
    }
    const auto res =
        maserrx::run_rabi_calibration(cfg, powers, resolve_threads(args));
    maserrx::emit_outputs(res, args.output_dir);
    std::cout << "calibrate: slope "
              << res.summary["slope_mhz_per_sqrt_w"].get<double>()
              << " MHz/sqrt(W), C "
              << res.summary["c_fit_mt_per_sqrt_w"].get<double>()
              << " mT/sqrt(W) (theory "
              << res.summary["c_theory_mt_per_sqrt_w"].get<double>() << ")\n";
    return kExitOk;
}

int run_gain_sweep(const CommonArgs& args, double b1_gain_nt) {
    auto cfg = load_effective(args);
    maserrx::ResponseGainParams params;
    params.b1_list_nt = maserrx::default_b1_list_nt();
    params.freq_list_hz = maserrx::default_gain_freqs_hz(cfg);
    params.b1_gain_nt = b1_gain_nt;
    const auto res =
        maserrx::run_response_and_gain(cfg, params, resolve_threads(args));
    maserrx::emit_outputs(res, args.output_dir);
    std::cout << "gain-sweep: peak " << res.summary["peak_gain_db"].get<double>()
              << " dB at " << res.summary["peak_gain_freq_hz"].get<double>()
              << " Hz\n";
    return kExitOk;
}

int run_sensitivity(const CommonArgs& args, double b_test_nt, double delta_f_hz) {
    auto cfg = load_effective(args);
    maserrx::ResponseGainParams params;
    params.b1_list_nt = maserrx::default_b1_list_nt();
    params.freq_list_hz = maserrx::default_gain_freqs_hz(cfg);
    params.delta_f_hz = delta_f_hz;
    auto res = maserrx::run_response_and_gain(cfg, params, resolve_threads(args));

    // single-shot run at the test field
    const auto c = maserrx::conversion_factor_theory(
        cfg.cavity.q_loaded, cfg.cavity.v_m, cfg.cavity.omega_c, cfg.constants.mu0());
    maserrx::ReceiverConfig shot = cfg;
    shot.drive.power_in = maserrx::b1_power_convert(
        c, b_test_nt * 1.0e-6, maserrx::ConvertDirection::field_to_power);
    shot.drive.authoritative = maserrx::DriveInput::power;
    maserrx::finalize_config(shot);
    const auto trace = maserrx::integrate_meanfield(shot, maserrx::initial_state(shot));
    const auto det = maserrx::detector_chain(trace, shot);
    const auto window = maserrx::masing_window(det.t, shot.drive);

    // invert the log detector back to a linear field amplitude
    std::vector<double> amplitude(det.t.size());
    for (std::size_t i = 0; i < det.t.size(); ++i) {
        const double dbm = (det.voltage_mv[i] + det.dc_offset_mv) /
                               shot.detector.slope_mv_per_db +
                           shot.detector.reference_dbm;
        amplitude[i] = std::sqrt(maserrx::dbm_to_watts(dbm));
    }
    const auto snr = maserrx::snr_estimate(amplitude, {0, window.begin}, window);
    const auto report = maserrx::sensitivity_estimate(
        maserrx::SensitivityMethod::snr,
        {0.0, 0.0, b_test_nt, snr.snr_b, delta_f_hz});

    nlohmann::ordered_json sens;
    sens["snr_method"] = {{"b_test_nt", b_test_nt},
                          {"snr_p", snr.snr_p},
                          {"snr_b", snr.snr_b},
                          {"delta_f_hz", delta_f_hz},
                          {"eta_ft_per_sqrt_hz", report.eta_ft_per_sqrt_hz}};
    sens["responsivity_method"] = {
        {"sigma_s_mv", res.summary["sigma_s_mv"]},
        {"delta_f_hz", delta_f_hz},
        {"eta_best_ft_per_sqrt_hz", res.summary["eta_best_ft_per_sqrt_hz"]}};
    res.summary["sensitivity"] = sens;
    res.name = "sensitivity";
    maserrx::emit_outputs(res, args.output_dir);
    std::cout << "sensitivity: SNR_P " << snr.snr_p << ", SNR_B " << snr.snr_b
              << ", eta " << report.eta_ft_per_sqrt_hz << " fT/sqrt(Hz)\n";
    return kExitOk;
}

int run_heterodyne_cmd(const CommonArgs& args, double span_hz, double step_hz) {
    auto cfg = load_effective(args);
    const auto res = maserrx::run_heterodyne_sweep(
        cfg, maserrx::default_detunings_hz(span_hz, step_hz), resolve_threads(args));
    maserrx::emit_outputs(res, args.output_dir);
    std::cout << "heterodyne: " << res.summary["n_detunings"].get<std::size_t>()
              << " detunings";
    if (!res.summary["beat_fit"].is_null())
        std::cout << ", beat slope "
                  << res.summary["beat_fit"]["slope"].get<double>();
    std::cout << "\n";
    return kExitOk;
}

int run_compare_oracle(const CommonArgs& args, int dim_fock) {
    auto cfg = load_effective(args);
    const auto res = maserrx::run_oracle_comparison(cfg, dim_fock);
    maserrx::emit_outputs(res, args.output_dir);
    std::cout << "compare-oracle: time-averaged relative error "
              << res.summary["time_avg_rel_err_a2"].get<double>() << " over "
              << res.summary["window_s"].get<double>() << " s\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"maser microwave receiver simulator"};
    app.require_subcommand(1);

    CommonArgs args;
    int dim_fock = 8;
    double min_dbm = -14.98, max_dbm = 6.67;
    int points = 8;
    double b1_gain_nt = 49.23;
    double b_test_nt = 2.47;
    double delta_f_hz = 5.0e8;
    double span_hz = 4.0e6, step_hz = 1.0e5;

    auto* validate = app.add_subcommand("validate", "check a config, print derived values");
    add_common(validate, args);

    auto* simulate = app.add_subcommand("simulate", "integrate one mean-field run");
    add_common(simulate, args);

    auto* oracle = app.add_subcommand("oracle", "evolve the exact master equation");
    add_common(oracle, args);
    oracle->add_option("--dim-fock", dim_fock, "starting Fock cutoff");

    auto* calibrate = app.add_subcommand("calibrate", "Rabi calibration sweep");
    add_common(calibrate, args);
    calibrate->add_option("--min-dbm", min_dbm, "lowest drive power, dBm");
    calibrate->add_option("--max-dbm", max_dbm, "highest drive power, dBm");
    calibrate->add_option("--points", points, "number of powers");

    auto* sensitivity =
        app.add_subcommand("sensitivity", "response curve, responsivity, SNR, eta");
    add_common(sensitivity, args);
    sensitivity->add_option("--b-test", b_test_nt, "single-shot test field, nT");
    sensitivity->add_option("--delta-f", delta_f_hz, "noise bandwidth, Hz");

    auto* gain = app.add_subcommand("gain-sweep", "gain versus input frequency");
    add_common(gain, args);
    gain->add_option("--b1", b1_gain_nt, "input field for the sweep, nT");

    auto* heterodyne = app.add_subcommand("heterodyne", "detuned-input beat sweep");
    add_common(heterodyne, args);
    heterodyne->add_option("--span", span_hz, "detuning span, Hz");
    heterodyne->add_option("--step", step_hz, "detuning step, Hz");

    auto* compare = app.add_subcommand("compare-oracle",
                                       "mean-field versus master equation");
    add_common(compare, args);
    compare->add_option("--dim-fock", dim_fock, "starting Fock cutoff");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (validate->parsed()) return run_validate(args);
        if (simulate->parsed()) return run_simulate(args);
        if (oracle->parsed()) return run_oracle(args, dim_fock);
        if (calibrate->parsed()) return run_calibrate(args, min_dbm, max_dbm, points);
        if (sensitivity->parsed()) return run_sensitivity(args, b_test_nt, delta_f_hz);
        if (gain->parsed()) return run_gain_sweep(args, b1_gain_nt);
        if (heterodyne->parsed()) return run_heterodyne_cmd(args, span_hz, step_hz);
        if (compare->parsed()) return run_compare_oracle(args, dim_fock);
    } catch (const maserrx::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
