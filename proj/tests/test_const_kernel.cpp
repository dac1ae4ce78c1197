#include "lplab/const_kernel.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lplab;

namespace {

constexpr double pi = std::numbers::pi;

Mat3 diag(double a, double b, double c = 1.0) {
    Mat3 m = Mat3::Zero();
    m(0, 0) = a;
    m(1, 1) = b;
    m(2, 2) = c;
    return m;
}

Mat3 spd3() {
    Mat3 m;
    m << 2.0, 0.3, -0.1, 0.3, 1.5, 0.2, -0.1, 0.2, 1.1;
    return m;
}

Mat3 spd2() {
    Mat3 m = Mat3::Identity();
    m(0, 0) = 1.7;
    m(0, 1) = m(1, 0) = 0.4;
    m(1, 1) = 0.9;
    return m;
}

}  // namespace

TEST(ConstKernel, LogarithmicClosedFormDiagonal) {
    const ConstKernel k(2, diag(2.0, 0.5));
    const Vec3 x(0.3, -0.7, 0.0);
    const double q = x(0) * x(0) / 2.0 + x(1) * x(1) / 0.5;
    EXPECT_NEAR(k.theta(x, Vec3::Zero()), -std::log(q) / (4.0 * pi), 1e-15);
}

TEST(ConstKernel, NewtonianClosedFormDiagonal) {
    const ConstKernel k(3, diag(4.0, 1.0, 0.25));
    const Vec3 x(1.0, 0.5, -0.25);
    const double q = 0.25 + 0.25 + 0.25;
    EXPECT_NEAR(k.theta(x, Vec3::Zero()), 1.0 / (4.0 * pi * std::sqrt(q)), 1e-15);
}

TEST(ConstKernel, FluxIsOneAtAllScales) {
    for (double r : {0.1, 1.0, 10.0}) {
        EXPECT_NEAR(kernel_flux(ConstKernel(2, spd2()), r), 1.0, 1e-10) << r;
        EXPECT_NEAR(kernel_flux(ConstKernel(3, spd3()), r, 512), 1.0, 1e-4) << r;
        EXPECT_NEAR(kernel_flux(ConstKernel(3, Mat3::Identity()), r), 1.0, 1e-12) << r;
    }
}

TEST(ConstKernel, SymmetricInItsArguments) {
    for (int dim : {2, 3}) {
        const ConstKernel k(dim, dim == 2 ? spd2() : spd3());
        const Vec3 x(0.2, 0.9, dim == 3 ? -0.4 : 0.0), y(-0.5, 0.1, dim == 3 ? 0.3 : 0.0);
        EXPECT_DOUBLE_EQ(k.theta(x, y), k.theta(y, x));
        EXPECT_NEAR((k.grad(x, y, Slot::first) + k.grad(x, y, Slot::second)).norm(), 0.0, 1e-15);
    }
}

TEST(ConstKernel, GradientMatchesFiniteDifferences) {
    for (int dim : {2, 3}) {
        const ConstKernel k(dim, dim == 2 ? spd2() : spd3());
        const Vec3 x(0.4, -0.3, dim == 3 ? 0.5 : 0.0), y(0.1, 0.2, dim == 3 ? -0.1 : 0.0);
        const double h = 1e-5;
        const Vec3 g = k.grad(x, y);
        const Mat3 mh = k.mixed_hessian(x, y);
        for (int i = 0; i < dim; ++i) {
            Vec3 e = Vec3::Zero();
            e(i) = h;
            const double fd = (k.theta(x + e, y) - k.theta(x - e, y)) / (2 * h);
            EXPECT_NEAR(g(i), fd, 1e-8);
            const Vec3 fdh = (k.grad(x, y + e) - k.grad(x, y - e)) / (2 * h);
            for (int j = 0; j < dim; ++j) EXPECT_NEAR(mh(j, i), fdh(j), 1e-6);
        }
    }
}

TEST(ConstKernel, GradientTranslationInvariant) {
    const ConstKernel k(3, spd3());
    const Vec3 x(0.3, 0.1, 0.7), y(-0.2, 0.4, 0.0), z(5.0, -3.0, 2.0);
    EXPECT_NEAR((k.grad(x + z, y + z) - k.grad(x, y)).norm(), 0.0, 1e-14);
    EXPECT_NEAR(k.theta(x + z, y + z), k.theta(x, y), 1e-14);
}

TEST(ConstKernel, HomogeneityLaws) {
    const Vec3 x(0.3, 0.4, 0.0);
    const ConstKernel k2(2, spd2());
    EXPECT_NEAR(k2.theta(2 * x, Vec3::Zero()),
                k2.theta(x, Vec3::Zero()) - std::log(2.0) / (2 * pi * k2.sqrt_det()), 1e-14);
    EXPECT_NEAR((k2.grad(2 * x, Vec3::Zero()) - 0.5 * k2.grad(x, Vec3::Zero())).norm(), 0.0, 1e-14);
    const ConstKernel k3(3, spd3());
    const Vec3 x3(0.3, 0.4, -0.2);
    EXPECT_NEAR(k3.theta(2 * x3, Vec3::Zero()), 0.5 * k3.theta(x3, Vec3::Zero()), 1e-14);
    EXPECT_NEAR((k3.grad(2 * x3, Vec3::Zero()) - 0.25 * k3.grad(x3, Vec3::Zero())).norm(), 0.0, 1e-14);
}

TEST(ConstKernel, CoincidentPointsThrow) {
    const ConstKernel k(2, Mat3::Identity());
    EXPECT_THROW((void)k.theta(Vec3::Zero(), Vec3::Zero()), SingularEvaluation);
}

TEST(ConstKernel, RejectsNonPositiveMatrix) {
    EXPECT_THROW(ConstKernel(2, diag(1.0, -1.0)), InvalidArgument);
}

TEST(ConstKernel, FamilyDifference) {
    const Mat3 e = spd3();
    EXPECT_EQ(theta_family_difference(3, e, e, Vec3(1, 0, 0), 1), 0.0);
    // first order in E - F, so bounded for small perturbations
    Mat3 f = e;
    f(0, 0) += 1e-3;
    const double q1 = theta_family_difference(3, e, f, Vec3(1, 0.5, 0), 1);
    const double q2 = theta_family_difference(3, e, f, Vec3(10, 5, 0), 1);
    EXPECT_GT(q1, 0.0);
    EXPECT_NEAR(q1, q2, 1e-9);  // scale invariant by homogeneity
}
