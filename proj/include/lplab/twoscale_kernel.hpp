#pragma once

#include "lplab/cell_homog.hpp"
#include "lplab/const_kernel.hpp"

#include <memory>
#include <string>

namespace lplab {

/// Per-point data reused across many kernel evaluations with the same X:
/// the coefficient A(X/eps) and the corrector factor I - grad chi(X/eps).
struct KernelAnchor {
    Vec3 x = Vec3::Zero();
    Mat3 a = Mat3::Identity();
    Mat3 factor = Mat3::Identity();  // factor(i, j) = delta_ij - d_i chi_j
};

/// Common interface of the kernels consumed by the layer operators.
class KernelModel {
public:
    virtual ~KernelModel() = default;

    [[nodiscard]] virtual int dim() const = 0;
    [[nodiscard]] virtual double gamma(const Vec3& x, const Vec3& y) const = 0;
    [[nodiscard]] virtual KernelAnchor anchor(const Vec3& x) const = 0;
    [[nodiscard]] virtual Vec3 grad_x(const KernelAnchor& at, const Vec3& y) const = 0;
    /// Jacobian of grad_x(at, y) in y: entry (i, k) = d/dy_k of component i.
    [[nodiscard]] virtual Mat3 grad_x_dy(const KernelAnchor& at, const Vec3& y) const = 0;
    /// Coefficient of the operator at a physical point, A(X/eps).
    [[nodiscard]] virtual Mat3 coefficient(const Vec3& x) const = 0;
    [[nodiscard]] virtual bool is_constant() const = 0;
    [[nodiscard]] virtual std::string id() const = 0;
    /// Kernel of the same operator on the domain dilated by rho.
    [[nodiscard]] virtual std::shared_ptr<const KernelModel> rescaled(double rho) const = 0;

    [[nodiscard]] Vec3 grad_x(const Vec3& x, const Vec3& y) const { return grad_x(anchor(x), y); }
    /// Scalar symmetric case: grad_y(X, Y) = grad_x(Y, X).
    [[nodiscard]] Vec3 grad_y(const Vec3& x, const Vec3& y) const { return grad_x(anchor(y), x); }
    /// n . A(P/eps) grad_x Gamma(P, Y)
    [[nodiscard]] double conormal(const KernelAnchor& at, const Vec3& n, const Vec3& y) const {
        return n.dot(at.a * grad_x(at, y));
    }
};

class ConstKernelModel final : public KernelModel {
public:
    ConstKernelModel(int dim, const Mat3& e) : kernel_(dim, e) {}

    [[nodiscard]] int dim() const override { return kernel_.dim(); }
    [[nodiscard]] double gamma(const Vec3& x, const Vec3& y) const override { return kernel_.theta(x, y); }
    [[nodiscard]] KernelAnchor anchor(const Vec3& x) const override {
        return {x, kernel_.matrix(), Mat3::Identity()};
    }
    [[nodiscard]] Vec3 grad_x(const KernelAnchor& at, const Vec3& y) const override {
        return kernel_.grad(at.x, y);
    }
    using KernelModel::grad_x;
    [[nodiscard]] Mat3 grad_x_dy(const KernelAnchor& at, const Vec3& y) const override {
        return kernel_.mixed_hessian(at.x, y);
    }
    [[nodiscard]] Mat3 coefficient(const Vec3&) const override { return kernel_.matrix(); }
    [[nodiscard]] bool is_constant() const override { return true; }
    [[nodiscard]] std::string id() const override;
    [[nodiscard]] std::shared_ptr<const KernelModel> rescaled(double rho) const override;
    [[nodiscard]] const ConstKernel& kernel() const noexcept { return kernel_; }

private:
    ConstKernel kernel_;
};

/// Two-regime approximation of the fundamental solution of
/// -div(A(x/eps) grad u):
///
///   |X - Y| <= eps        frozen coefficients (values averaged over both
///                         endpoints so the kernel is symmetric; in d = 2
///                         shifted by ln(eps) (1/sqrt det A - 1/sqrt det A0) / 2 pi
///                         so the logarithms of both regimes agree at scale eps)
///   |X - Y| >= 2 eps      homogenized kernel, gradient times I - grad chi
///
/// joined by a C^1 smoothstep in |X - Y|. Kernels are evaluated at physical
/// scale, so the rescaling law is exact in d = 3 and for gradients in d = 2;
/// d = 2 values shift by a logarithm of the scale.
class TwoScaleKernel final : public KernelModel {
public:
    TwoScaleKernel(std::shared_ptr<const CorrectorField> corr, HomogenizedMatrix a0, double eps);

    [[nodiscard]] int dim() const override { return corr_->dim(); }
    [[nodiscard]] double epsilon() const noexcept { return eps_; }
    [[nodiscard]] double r_near() const noexcept { return eps_; }
    [[nodiscard]] double r_far() const noexcept { return 2.0 * eps_; }
    [[nodiscard]] const HomogenizedMatrix& homogenized() const noexcept { return a0_; }
    [[nodiscard]] const CorrectorField& corrector() const noexcept { return *corr_; }
    [[nodiscard]] std::shared_ptr<const CorrectorField> corrector_ptr() const noexcept { return corr_; }
    [[nodiscard]] const CoefficientField& field() const noexcept { return corr_->field(); }

    /// Weight of the far-field regime at separation r, and its derivative.
    [[nodiscard]] double blend(double r) const;
    [[nodiscard]] double blend_derivative(double r) const;

    [[nodiscard]] double gamma(const Vec3& x, const Vec3& y) const override;
    [[nodiscard]] KernelAnchor anchor(const Vec3& x) const override;
    [[nodiscard]] Vec3 grad_x(const KernelAnchor& at, const Vec3& y) const override;
    using KernelModel::grad_x;
    [[nodiscard]] Mat3 grad_x_dy(const KernelAnchor& at, const Vec3& y) const override;
    [[nodiscard]] Mat3 coefficient(const Vec3& x) const override { return field().eval(x / eps_); }
    [[nodiscard]] bool is_constant() const override { return field().is_constant(); }
    [[nodiscard]] std::string id() const override;
    [[nodiscard]] std::shared_ptr<const KernelModel> rescaled(double rho) const override;

    /// grad_x - grad_1 Theta(X, Y; A(X/eps)); zero inside r_near.
    [[nodiscard]] Vec3 near_residual_pi(const Vec3& x, const Vec3& y) const;
    [[nodiscard]] double conormal_kernel(const Vec3& p, const Vec3& n, const Vec3& y) const {
        return conormal(anchor(p), n, y);
    }

private:
    std::shared_ptr<const CorrectorField> corr_;
    HomogenizedMatrix a0_;
    double eps_;
    ConstKernel far_;
};

}  // namespace lplab
