#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "maserrx/errors.hpp"

namespace maserrx {

struct LineThroughOriginFit {
    double slope = 0.0;
    double slope_sigma = 0.0;  // standard error of the slope
    double r_squared = 1.0;
};

/// Weighted least squares of y = slope * x. Weights are inverse variances;
/// pass sigma <= 0 for every point to use equal weights. Requires at least
/// two distinct abscissae.
inline LineThroughOriginFit fit_line_through_origin(const std::vector<double>& x,
                                                    const std::vector<double>& y,
                                                    const std::vector<double>& sigma = {}) {
    const std::size_t n = x.size();
    if (n != y.size() || (!sigma.empty() && sigma.size() != n))
        throw FitError("fit_line_through_origin: length mismatch");
    if (n < 2) throw FitError("fit_line_through_origin: need at least 2 points");

    bool distinct = false;
    for (std::size_t i = 1; i < n; ++i)
        if (x[i] != x[0]) distinct = true;
    if (!distinct) throw FitError("fit_line_through_origin: need 2 distinct abscissae");

    bool weighted = false;
    for (double s : sigma)
        if (s > 0.0) weighted = true;
    if (weighted) {
        for (double s : sigma)
            if (s <= 0.0)
                throw FitError("fit_line_through_origin: mixed zero/positive sigmas");
    }

    double sxx = 0.0, sxy = 0.0, sw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
        sw += w;
    }
    if (sxx <= 0.0 || sw <= 0.0)
        throw FitError("fit_line_through_origin: degenerate weights");

    LineThroughOriginFit fit;
    fit.slope = sxy / sxx;

    double ss_res = 0.0, ss_tot = 0.0, ybar = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
        ybar += w * y[i];
        wsum += w;
    }
    ybar /= wsum;
    for (std::size_t i = 0; i < n; ++i) {
        double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
        double r = y[i] - fit.slope * x[i];
        ss_res += w * r * r;
        ss_tot += w * (y[i] - ybar) * (y[i] - ybar);
    }
    fit.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;

    if (weighted) {
        fit.slope_sigma = std::sqrt(1.0 / sxx);
    } else {
        double var = (n > 1) ? ss_res / static_cast<double>(n - 1) : 0.0;
        fit.slope_sigma = std::sqrt(var / sxx);
    }
    return fit;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
};

/// Ordinary least squares of y = slope * x + intercept.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw FitError("fit_line: need >= 2 matched points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw FitError("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0;
    const double ybar = sy / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        ss_res += r * r;
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    f.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

struct LmResult {
    Eigen::VectorXd params;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Levenberg-Marquardt over a residual vector r(p) with analytic Jacobian.
/// model(p, r) fills residuals; jacobian(p, J) fills dr/dp.
inline LmResult levenberg_marquardt(
    const Eigen::VectorXd& p0,
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& residuals,
    const std::function<void(const Eigen::VectorXd&, Eigen::MatrixXd&)>& jacobian,
    int n_residuals, int max_iter = 200, double tol = 1.0e-12) {
    const int np = static_cast<int>(p0.size());
    LmResult out;
    out.params = p0;

    Eigen::VectorXd r(n_residuals);
    Eigen::MatrixXd J(n_residuals, np);
    residuals(out.params, r);
    double cost = r.squaredNorm();
    double lambda = 1.0e-3;

    for (int it = 0; it < max_iter; ++it) {
        out.iterations = it + 1;
        jacobian(out.params, J);
        Eigen::MatrixXd JtJ = J.transpose() * J;
        Eigen::VectorXd g = J.transpose() * r;

        bool stepped = false;
        for (int tries = 0; tries < 30 && !stepped; ++tries) {
            Eigen::MatrixXd A = JtJ;
            A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1.0e-12);
            Eigen::VectorXd delta = A.ldlt().solve(-g);
            Eigen::VectorXd p_try = out.params + delta;
            Eigen::VectorXd r_try(n_residuals);
            residuals(p_try, r_try);
            double cost_try = r_try.squaredNorm();
            if (cost_try < cost) {
                double rel = (cost - cost_try) / std::max(cost, 1.0e-300);
                out.params = p_try;
                r = r_try;
                cost = cost_try;
                lambda = std::max(lambda * 0.3, 1.0e-12);
                stepped = true;
                if (rel < tol || delta.norm() < tol * (1.0 + out.params.norm())) {
                    out.converged = true;
                    out.residual_norm = std::sqrt(cost);
                    return out;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped) {
            // no downhill step found at any damping: local minimum
            out.converged = true;
            break;
        }
    }
    out.residual_norm = std::sqrt(cost);
    return out;
}

}  // namespace maserrx
