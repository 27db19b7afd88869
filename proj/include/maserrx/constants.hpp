#pragma once

#include <numbers>

#include "maserrx/errors.hpp"

namespace maserrx {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Fundamental constants plus the gyromagnetic ratio of the sensing spin.
///
/// mu0 and hbar are fixed at construction; the gyromagnetic ratio is
/// negative by convention (the spin precesses against the field).
class PhysicalConstants {
  public:
    static constexpr double kMu0 = 4.0 * std::numbers::pi * 1.0e-7;  // H/m
    static constexpr double kHbarDefault = 1.054571817e-34;          // J*s

    explicit PhysicalConstants(double gamma_e_mhz_per_mt = -28.0,
                               double hbar = kHbarDefault)
        : hbar_(hbar), gamma_e_mhz_per_mt_(gamma_e_mhz_per_mt) {
        if (hbar_ <= 0.0) throw DomainError("hbar must be positive");
        if (gamma_e_mhz_per_mt_ >= 0.0)
            throw DomainError("gamma_e must be negative (MHz/mT convention)");
    }

    double mu0() const { return kMu0; }
    double hbar() const { return hbar_; }

    /// Gyromagnetic ratio as configured, MHz/mT (negative).
    double gamma_e_mhz_per_mt() const { return gamma_e_mhz_per_mt_; }

    /// |gamma_e| in angular units, rad/s per tesla.
    double abs_gamma_e_rad_per_s_t() const {
        // 1 MHz/mT = 2*pi*1e6 rad/s per 1e-3 T
        return -gamma_e_mhz_per_mt_ * kTwoPi * 1.0e9;
    }

  private:
    double hbar_;
    double gamma_e_mhz_per_mt_;
};

}  // namespace maserrx
