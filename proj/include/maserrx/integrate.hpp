#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "maserrx/errors.hpp"

namespace maserrx {

/// One classical fourth-order Runge-Kutta step. State must support the
/// usual vector-space expressions (Eigen vectors and matrices do).
template <class State, class Rhs>
State rk4_step(const State& y, double t, double h, Rhs&& f) {
    State k1 = f(t, y);
    State k2 = f(t + 0.5 * h, State(y + 0.5 * h * k1));
    State k3 = f(t + 0.5 * h, State(y + 0.5 * h * k2));
    State k4 = f(t + h, State(y + h * k3));
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Advances y from t to t_target with step-doubling error control:
/// each trial compares one h-step against two h/2-steps; the pair is
/// accepted when the discrepancy stays below tol relative to the state
/// norm, and h adapts with the standard fourth-order exponent.
template <class State, class Rhs>
void adaptive_advance(State& y, double& t, double t_target, double& h,
                      double tol, Rhs&& f) {
    constexpr double kShrinkLimit = 0.2;
    constexpr double kGrowLimit = 2.0;
    constexpr double kSafety = 0.9;
    while (t < t_target) {
        double step = std::min(h, t_target - t);
        State full = rk4_step(y, t, step, f);
        State half = rk4_step(y, t, 0.5 * step, f);
        half = rk4_step(half, t + 0.5 * step, 0.5 * step, f);
        double scale = std::max(1.0, half.norm());
        double err = (full - half).norm() / (15.0 * scale);
        if (err <= tol || step < 1.0e-6 * h) {
            // accept the two half steps (one order better than the full step)
            y = half;
            t += step;
            double grow = (err > 0.0) ? kSafety * std::pow(tol / err, 0.2) : kGrowLimit;
            h = step * std::clamp(grow, kShrinkLimit, kGrowLimit);
        } else {
            h = step * std::clamp(kSafety * std::pow(tol / err, 0.2),
                                  kShrinkLimit, 1.0);
        }
        if (!std::isfinite(y.norm()))
            throw NumericalError("adaptive integration diverged", t);
    }
}

}  // namespace maserrx
