#include "lplab/twoscale_kernel.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lplab;

namespace {

struct Built {
    std::shared_ptr<const CoefficientField> field;
    std::shared_ptr<const CorrectorField> corr;
    HomogenizedMatrix hm;
};

Built build(const FieldDescriptor& d) {
    Built b;
    b.field = std::make_shared<const CoefficientField>(make_field(d));
    b.corr = std::make_shared<const CorrectorField>(solve_cell(b.field));
    b.hm = homogenized_matrix(*b.field, *b.corr);
    return b;
}

FieldDescriptor trig(int dim = 2) {
    FieldDescriptor d;
    d.kind = FieldKind::trigonometric;
    d.dim = dim;
    return d;
}

}  // namespace

TEST(TwoScaleKernel, ExactForConstantCoefficients) {
    FieldDescriptor d;
    d.matrix = Mat3::Identity();
    d.matrix(0, 0) = 2.0;
    d.matrix(0, 1) = d.matrix(1, 0) = 0.3;
    const Built b = build(d);
    const TwoScaleKernel k(b.corr, b.hm, 0.25);
    const ConstKernel c(2, d.matrix);
    for (double r : {0.05, 0.3, 0.4, 0.7, 3.0}) {
        const Vec3 x(r * 0.6, r * 0.8, 0.0), y = Vec3::Zero();
        EXPECT_NEAR(k.gamma(x, y), c.theta(x, y), 1e-12) << r;
        EXPECT_NEAR((k.grad_x(x, y) - c.grad(x, y)).norm(), 0.0, 1e-10) << r;
    }
}

TEST(TwoScaleKernel, Symmetric) {
    for (int dim : {2, 3}) {
        const Built b = build(trig(dim));
        const TwoScaleKernel k(b.corr, b.hm, 0.25);
        UniformSource rng(4);
        for (int n = 0; n < 30; ++n) {
            Vec3 x(rng.next(), rng.next(), dim == 3 ? rng.next() : 0.0);
            Vec3 y(rng.next(), rng.next(), dim == 3 ? rng.next() : 0.0);
            EXPECT_NEAR(k.gamma(x, y), k.gamma(y, x), 1e-13 * (1 + std::abs(k.gamma(x, y))));
        }
    }
}

TEST(TwoScaleKernel, RegimeBoundariesAndBlend) {
    const Built b = build(trig());
    const TwoScaleKernel k(b.corr, b.hm, 0.25);
    EXPECT_EQ(k.r_near(), 0.25);
    EXPECT_EQ(k.r_far(), 0.5);
    EXPECT_EQ(k.blend(0.2), 0.0);
    EXPECT_EQ(k.blend(0.6), 1.0);
    EXPECT_NEAR(k.blend(0.375), 0.5, 1e-15);
    const double h = 1e-6;
    EXPECT_NEAR(k.blend_derivative(0.3), (k.blend(0.3 + h) - k.blend(0.3 - h)) / (2 * h), 1e-6);
}

TEST(TwoScaleKernel, NearResidualVanishesInsideNearRegime) {
    const Built b = build(trig());
    const TwoScaleKernel k(b.corr, b.hm, 0.25);
    const Vec3 x(0.3, 0.4, 0.0);
    EXPECT_EQ(k.near_residual_pi(x, x + Vec3(0.1, 0.0, 0.0)), Vec3::Zero());
    EXPECT_GT(k.near_residual_pi(x, x + Vec3(2.0, 0.0, 0.0)).norm(), 0.0);
}

TEST(TwoScaleKernel, FarGradientIsCorrectedHomogenized) {
    const Built b = build(trig());
    const TwoScaleKernel k(b.corr, b.hm, 0.25);
    const ConstKernel c0(2, b.hm.a0);
    const Vec3 x(0.37, 0.11, 0.0), y(2.0, 1.5, 0.0);
    const KernelAnchor at = k.anchor(x);
    EXPECT_NEAR((k.grad_x(at, y) - at.factor * c0.grad(x, y)).norm(), 0.0, 1e-14);
}

TEST(TwoScaleKernel, GradientRescalingLaw) {
    for (int dim : {2, 3}) {
        const Built b = build(trig(dim));
        const TwoScaleKernel k(b.corr, b.hm, 0.25);
        const double rho = 2.0;
        const auto kr = k.rescaled(rho);
        const Vec3 x(0.2, 0.3, dim == 3 ? 0.1 : 0.0);
        for (double r : {0.1, 0.3, 0.7}) {
            const Vec3 y = x + Vec3(r, 0.5 * r, 0.0);
            const Vec3 g = k.grad_x(x, y), gr = kr->grad_x(rho * x, rho * y);
            EXPECT_NEAR((gr - std::pow(rho, 1 - dim) * g).norm(), 0.0, 1e-12 * g.norm()) << r;
            if (dim == 3) {
                EXPECT_NEAR(kr->gamma(rho * x, rho * y), k.gamma(x, y) / rho, 1e-13);
            }
        }
    }
}

TEST(TwoScaleKernel, MixedJacobianMatchesFiniteDifferences) {
    const Built b = build(trig());
    const TwoScaleKernel k(b.corr, b.hm, 0.25);
    const Vec3 x(0.1, 0.2, 0.0);
    for (double r : {0.1, 0.35, 0.8}) {
        const Vec3 y = x + Vec3(r * 0.8, -r * 0.6, 0.0);
        const KernelAnchor at = k.anchor(x);
        const Mat3 j = k.grad_x_dy(at, y);
        const double h = 1e-6;
        for (int c = 0; c < 2; ++c) {
            Vec3 e = Vec3::Zero();
            e(c) = h;
            const Vec3 fd = (k.grad_x(at, y + e) - k.grad_x(at, y - e)) / (2 * h);
            for (int i = 0; i < 2; ++i) EXPECT_NEAR(j(i, c), fd(i), 1e-5 * (1 + std::abs(fd(i)))) << r;
        }
    }
}

TEST(TwoScaleKernel, RejectsForeignHomogenizedMatrix) {
    const Built a = build(trig());
    FieldDescriptor d = trig();
    d.seed = 9;
    const Built b = build(d);
    EXPECT_THROW(TwoScaleKernel(a.corr, b.hm, 0.25), InvalidArgument);
    EXPECT_THROW(TwoScaleKernel(a.corr, a.hm, 0.0), InvalidArgument);
}
