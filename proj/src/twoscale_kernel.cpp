#include "lplab/twoscale_kernel.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace lplab {

namespace {

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string matrix_key(const Mat3& m) {
    std::string s;
    for (int i = 0; i < 9; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g,", m.data()[i]);
        s += buf;
    }
    return s;
}

}  // namespace

std::string ConstKernelModel::id() const {
    return "const:d" + std::to_string(dim()) + ":" + hex(fnv1a(matrix_key(kernel_.matrix())));
}

std::shared_ptr<const KernelModel> ConstKernelModel::rescaled(double rho) const {
    require(rho > 0.0, "rescaling factor must be positive");
    return std::make_shared<ConstKernelModel>(dim(), kernel_.matrix());
}

TwoScaleKernel::TwoScaleKernel(std::shared_ptr<const CorrectorField> corr, HomogenizedMatrix a0,
                               double eps)
    : corr_(std::move(corr)), a0_(std::move(a0)), eps_(eps),
      far_(corr_ ? corr_->dim() : 2, a0_.a0) {
    require(corr_ != nullptr, "two-scale kernel needs a corrector");
    require(eps > 0.0, "epsilon must be positive");
    if (a0_.field_fingerprint != corr_->field().fingerprint())
        throw InvalidArgument("homogenized matrix belongs to a different coefficient field");
}

double TwoScaleKernel::blend(double r) const {
    double t = (r - eps_) / eps_;
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * (3.0 - 2.0 * t);
}

double TwoScaleKernel::gamma(const Vec3& x, const Vec3& y) const {
    const double r = (x - y).norm();
    if (r == 0.0) throw SingularEvaluation("kernel evaluated at coincident points");
    const double s = blend(r);
    double value = 0.0;
    if (s < 1.0) {
        const int d = dim();
        ConstKernel kx(d, coefficient(x)), ky(d, coefficient(y));
        double near = kx.theta(x, y) + ky.theta(x, y);
        if (d == 2) {
            // Rescaling the cell-scale kernel shifts the log by ln(eps) / (2 pi sqrt(det E))
            // differently for E = A and E = A0; match the two regimes at |X - Y| ~ eps.
            const double l = std::log(eps_) / (2.0 * std::numbers::pi);
            near += l * (1.0 / kx.sqrt_det() + 1.0 / ky.sqrt_det() - 2.0 / far_.sqrt_det());
        }
        value += (1.0 - s) * 0.5 * near;
    }
    if (s > 0.0) value += s * far_.theta(x, y);
    return value;
}

KernelAnchor TwoScaleKernel::anchor(const Vec3& x) const {
    KernelAnchor at;
    at.x = x;
    at.a = coefficient(x);
    if (!corr_->is_zero()) {
        Mat3 j = corr_->eval(x / eps_).jacobian;
        at.factor = Mat3::Identity() - j;
    }
    return at;
}

Vec3 TwoScaleKernel::grad_x(const KernelAnchor& at, const Vec3& y) const {
    const double r = (at.x - y).norm();
    if (r == 0.0) throw SingularEvaluation("kernel gradient evaluated at coincident points");
    const double s = blend(r);
    Vec3 g = Vec3::Zero();
    if (s < 1.0) g += (1.0 - s) * ConstKernel(dim(), at.a).grad(at.x, y);
    if (s > 0.0) g += s * (at.factor * far_.grad(at.x, y));
    return g;
}

double TwoScaleKernel::blend_derivative(double r) const {
    double t = (r - eps_) / eps_;
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 6.0 * t * (1.0 - t) / eps_;
}

Mat3 TwoScaleKernel::grad_x_dy(const KernelAnchor& at, const Vec3& y) const {
    const Vec3 z = y - at.x;
    const double r = z.norm();
    if (r == 0.0) throw SingularEvaluation("kernel hessian evaluated at coincident points");
    const double s = blend(r);
    Mat3 h = Mat3::Zero();
    if (s < 1.0) h += (1.0 - s) * ConstKernel(dim(), at.a).mixed_hessian(at.x, y);
    if (s > 0.0) h += s * (at.factor * far_.mixed_hessian(at.x, y));
    const double ds = blend_derivative(r);
    if (ds != 0.0) {
        const Vec3 jump = at.factor * far_.grad(at.x, y) - ConstKernel(dim(), at.a).grad(at.x, y);
        h += (ds / r) * jump * z.transpose();
    }
    return h;
}

Vec3 TwoScaleKernel::near_residual_pi(const Vec3& x, const Vec3& y) const {
    KernelAnchor at = anchor(x);
    if ((x - y).norm() <= r_near()) return Vec3::Zero();
    return grad_x(at, y) - ConstKernel(dim(), at.a).grad(x, y);
}

std::string TwoScaleKernel::id() const {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", eps_);
    return "twoscale:d" + std::to_string(dim()) + ":eps=" + buf + ":" +
           hex(corr_->field().fingerprint());
}

std::shared_ptr<const KernelModel> TwoScaleKernel::rescaled(double rho) const {
    require(rho > 0.0, "rescaling factor must be positive");
    return std::make_shared<TwoScaleKernel>(corr_, a0_, eps_ * rho);
}

}  // namespace lplab
