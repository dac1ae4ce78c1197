#pragma once

#include "lplab/fem_oracle.hpp"
#include "lplab/twoscale_kernel.hpp"

#include <vector>

namespace lplab {

struct KernelRateOptions {
    double box = 16.0;
    double h = 1.0 / 64.0;
    Vec3 pole{0.3, 0.2, 0.0};
    std::vector<double> near_radii{1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2};
    std::vector<double> far_radii{2.5, 3.0, 4.0, 5.0};
    int n_angles = 64;
};

struct RateSample {
    double r = 0.0;
    double residual = 0.0;  // max over the circle of radius r
};

struct KernelRateReport {
    std::vector<RateSample> near;
    std::vector<RateSample> far;
    double near_slope = 0.0;
    double far_slope = 0.0;
    double near_order = 0.0;  // 2 - d
    double far_order = 0.0;   // 1 - d
    double flux = 0.0;        // pole flux of the reference
};

/// Least squares slope of log(residual) against log(r).
double loglog_slope(const std::vector<RateSample>& samples);

/// Residuals of the two-scale kernel regimes (eps = 1, d = 2) against an FEM
/// reference fundamental solution:
///   near  |Gamma_ref(X) - Theta(X - Y; A(X)) - c|, c the bounded part at the pole
///   far   |grad Gamma_ref(X) - (I - grad chi(X)) grad Gamma_A0(X - Y)|
KernelRateReport kernel_rates(std::shared_ptr<const CorrectorField> corrector,
                              const HomogenizedMatrix& a0, const KernelRateOptions& options = {});

}  // namespace lplab
