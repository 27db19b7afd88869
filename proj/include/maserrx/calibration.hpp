#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "maserrx/constants.hpp"
#include "maserrx/errors.hpp"
#include "maserrx/fit.hpp"

namespace maserrx {

enum class ConversionSource { theory, rabi_fit, rescaled };

/// Proportionality between the cavity magnetic field and the square root
/// of the input microwave power, B1 = C * sqrt(P).
struct ConversionFactor {
    double c_value = 0.0;      // mT per sqrt(W)
    ConversionSource source = ConversionSource::theory;
    double uncertainty = 0.0;  // mT per sqrt(W)
};

inline const char* to_string(ConversionSource s) {
    switch (s) {
        case ConversionSource::theory: return "theory";
        case ConversionSource::rabi_fit: return "rabi_fit";
        case ConversionSource::rescaled: return "rescaled";
    }
    return "?";
}

/// C = sqrt(2 mu0 Q_L / (V_m omega0)), evaluated in mT/sqrt(W).
inline ConversionFactor conversion_factor_theory(double q_loaded, double v_m,
                                                 double omega0,
                                                 double mu0 = PhysicalConstants::kMu0) {
    if (q_loaded <= 0.0 || v_m <= 0.0 || omega0 <= 0.0 || mu0 <= 0.0)
        throw DomainError("conversion_factor_theory: inputs must be > 0");
    ConversionFactor c;
    c.c_value = std::sqrt(2.0 * mu0 * q_loaded / (v_m * omega0)) * 1.0e3;  // T -> mT
    c.source = ConversionSource::theory;
    c.uncertainty = 0.0;
    return c;
}

/// Carries a measured conversion factor to a retuned cavity through
/// C proportional to sqrt(Q_L / omega_c).
inline ConversionFactor rescale_conversion_factor(const ConversionFactor& c0,
                                                  double q0, double omega0,
                                                  double q1, double omega1) {
    if (q0 <= 0.0 || q1 <= 0.0 || omega0 <= 0.0 || omega1 <= 0.0)
        throw DomainError("rescale_conversion_factor: inputs must be > 0");
    const double factor = std::sqrt((q1 / q0) * (omega0 / omega1));
    ConversionFactor c;
    c.c_value = c0.c_value * factor;
    c.uncertainty = c0.uncertainty * factor;
    c.source = ConversionSource::rescaled;
    return c;
}

/// One measured nutation frequency at a drive level.
struct RabiPoint {
    double sqrt_power = 0.0;  // sqrt(W)
    double rabi_mhz = 0.0;    // MHz
    double sigma_mhz = 0.0;   // MHz, 0 = unweighted
};

struct RabiDataset {
    std::vector<RabiPoint> points;
};

struct RabiFit {
    double slope_mhz_per_sqrt_w = 0.0;
    double slope_sigma = 0.0;
    double r_squared = 1.0;
    ConversionFactor conversion;
};

/// Weighted line through the origin on (sqrt(P), Omega); the conversion
/// factor follows from Omega = |gamma_e| C sqrt(P) / sqrt(2).
inline RabiFit fit_rabi_slope(const RabiDataset& data, double gamma_e_mhz_per_mt) {
    if (gamma_e_mhz_per_mt == 0.0)
        throw FitError("fit_rabi_slope: gamma_e must be nonzero");
    std::vector<double> x, y, s;
    for (const auto& p : data.points) {
        if (p.sqrt_power < 0.0)
            throw DomainError("fit_rabi_slope: sqrt_power must be >= 0");
        if (p.sigma_mhz < 0.0) throw DomainError("fit_rabi_slope: sigma must be >= 0");
        x.push_back(p.sqrt_power);
        y.push_back(p.rabi_mhz);
        s.push_back(p.sigma_mhz);
    }
    auto line = fit_line_through_origin(x, y, s);
    RabiFit fit;
    fit.slope_mhz_per_sqrt_w = line.slope;
    fit.slope_sigma = line.slope_sigma;
    fit.r_squared = line.r_squared;
    fit.conversion.c_value =
        line.slope * std::sqrt(2.0) / std::abs(gamma_e_mhz_per_mt);
    fit.conversion.uncertainty =
        line.slope_sigma * std::sqrt(2.0) / std::abs(gamma_e_mhz_per_mt);
    fit.conversion.source = ConversionSource::rabi_fit;
    return fit;
}

enum class ConvertDirection { power_to_field, field_to_power };

/// B1 = C sqrt(P) or P = (B1/C)^2. Powers in W, fields in mT.
inline double b1_power_convert(const ConversionFactor& c, double value,
                               ConvertDirection direction) {
    if (c.c_value <= 0.0) throw DomainError("b1_power_convert: C must be > 0");
    if (value < 0.0) throw DomainError("b1_power_convert: value must be >= 0");
    if (direction == ConvertDirection::power_to_field)
        return c.c_value * std::sqrt(value);
    const double ratio = value / c.c_value;
    return ratio * ratio;
}

/// Nutation frequency for a given field, Omega = |gamma_e| B1 / sqrt(2), MHz.
inline double rabi_frequency_mhz(double b1_mt, double gamma_e_mhz_per_mt) {
    if (b1_mt < 0.0) throw DomainError("rabi_frequency_mhz: field must be >= 0");
    return std::abs(gamma_e_mhz_per_mt) * b1_mt / std::sqrt(2.0);
}

}  // namespace maserrx
