#include "lplab/kernel_rates.hpp"

#include <cmath>
#include <numbers>

namespace lplab {

double loglog_slope(const std::vector<RateSample>& samples) {
    require(samples.size() >= 2, "slope fit needs at least two samples");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& s : samples) {
        require(s.r > 0.0 && s.residual > 0.0, "slope fit needs positive samples");
        const double x = std::log(s.r), y = std::log(s.residual);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(samples.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

KernelRateReport kernel_rates(std::shared_ptr<const CorrectorField> corrector,
                              const HomogenizedMatrix& a0, const KernelRateOptions& options) {
    require(corrector != nullptr, "kernel rates need a corrector");
    require(corrector->dim() == 2, "kernel rates are implemented for d = 2");
    require(options.n_angles > 0, "n_angles must be positive");
    const CoefficientField& field = corrector->field();
    const TwoScaleKernel kernel(corrector, a0, 1.0);
    for (double r : options.far_radii)
        require(r > kernel.r_far() && r < 0.5 * options.box, "far radii must lie in (2 eps, box / 2)");
    for (double r : options.near_radii) require(r > 0.0, "near radii must be positive");

    const Vec3& y = options.pole;
    ReferenceGreen ref([&field](const Vec3& x) { return field.eval(x); }, a0.a0, y, options.box,
                       options.h, true);
    const double c = ref.remainder(y);
    const ConstKernel far(2, a0.a0);

    KernelRateReport out;
    out.near_order = 0.0;
    out.far_order = -1.0;
    auto circle = [&](double r, int k) {
        const double t = 2.0 * std::numbers::pi * (k + 0.5) / options.n_angles;
        return Vec3(y + r * Vec3(std::cos(t), std::sin(t), 0.0));
    };
    for (double r : options.near_radii) {
        double m = 0.0;
        for (int k = 0; k < options.n_angles; ++k) {
            const Vec3 x = circle(r, k);
            const double theta = ConstKernel(2, field.eval(x)).theta(x, y);
            m = std::max(m, std::abs(ref.value(x) - theta - c));
        }
        out.near.push_back({r, m});
    }
    for (double r : options.far_radii) {
        double m = 0.0;
        for (int k = 0; k < options.n_angles; ++k) {
            const Vec3 x = circle(r, k);
            const Vec3 model = kernel.anchor(x).factor * far.grad(x, y);
            m = std::max(m, (ref.gradient(x) - model).norm());
        }
        out.far.push_back({r, m});
    }
    out.near_slope = loglog_slope(out.near);
    out.far_slope = loglog_slope(out.far);
    out.flux = ref.flux(0.5);
    return out;
}

}  // namespace lplab
