#include "lplab/const_kernel.hpp"

#include "lplab/quadrature.hpp"

#include <numbers>

namespace lplab {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

}  // namespace

ConstKernel::ConstKernel(int dim, const Mat3& e) : dim_(dim) {
    require(dim == 2 || dim == 3, "kernel dimension must be 2 or 3");
    e_ = embed(e, dim);
    if ((e_ - e_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + e_.cwiseAbs().maxCoeff()))
        throw InvalidArgument("kernel matrix is not symmetric");
    Eigen::LLT<Mat3> llt(e_);
    if (llt.info() != Eigen::Success) throw InvalidArgument("kernel matrix is not positive definite");
    einv_ = llt.solve(Mat3::Identity());
    einv_ = 0.5 * (einv_ + einv_.transpose());
    sqrt_det_ = std::sqrt(e_.determinant());
    scale_ = 1.0 / (kFourPi * sqrt_det_);
}

double ConstKernel::theta(const Vec3& x, const Vec3& y) const {
    const Vec3 z = x - y;
    const double q = quad(z);
    if (!(q > 0.0)) throw SingularEvaluation("kernel evaluated at coincident points");
    if (dim_ == 3) return scale_ / std::sqrt(q);
    return -scale_ * std::log(q);
}

Vec3 ConstKernel::grad(const Vec3& x, const Vec3& y, Slot which) const {
    const Vec3 z = x - y;
    const Vec3 ez = einv_ * z;
    const double q = z.dot(ez);
    if (!(q > 0.0)) throw SingularEvaluation("kernel gradient evaluated at coincident points");
    Vec3 g = dim_ == 3 ? Vec3(-scale_ / (q * std::sqrt(q)) * ez) : Vec3(-2.0 * scale_ / q * ez);
    if (dim_ == 2) g(2) = 0.0;
    return which == Slot::first ? g : Vec3(-g);
}

Mat3 ConstKernel::mixed_hessian(const Vec3& x, const Vec3& y) const {
    const Vec3 z = x - y;
    const Vec3 ez = einv_ * z;
    const double q = z.dot(ez);
    if (!(q > 0.0)) throw SingularEvaluation("kernel hessian evaluated at coincident points");
    const double c = dim_ == 3 ? scale_ / (q * std::sqrt(q)) : 2.0 * scale_ / q;
    Mat3 h = c * (einv_ - dim_ * (ez * ez.transpose()) / q);
    if (dim_ == 2) {
        h.row(2).setZero();
        h.col(2).setZero();
    }
    return h;
}

double theta_family_difference(int dim, const Mat3& e, const Mat3& f, const Vec3& x, int order) {
    require(order == 0 || order == 1, "difference order must be 0 or 1");
    const double gap = sym_norm(e - f, dim);
    if (gap == 0.0) return 0.0;
    ConstKernel ke(dim, e), kf(dim, f);
    const Vec3 origin = Vec3::Zero();
    const double r = x.norm();
    const double diff = order == 0 ? std::abs(ke.theta(x, origin) - kf.theta(x, origin))
                                   : (ke.grad(x, origin) - kf.grad(x, origin)).norm();
    return diff * std::pow(r, dim - 2 + order) / gap;
}

double kernel_flux(const ConstKernel& kernel, double r, int n) {
    return sphere_integral(kernel.dim(), Vec3::Zero(), r, n, [&kernel](const Vec3& x, const Vec3& nv) {
        return -nv.dot(kernel.matrix() * kernel.grad(x, Vec3::Zero()));
    });
}

}  // namespace lplab
