#include "lplab/coeff_field.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lplab;

namespace {

FieldDescriptor layered() {
    FieldDescriptor d;
    d.kind = FieldKind::layered;
    d.mean = 2.0;
    d.amplitude = 1.0;
    return d;
}

FieldDescriptor trig(std::uint64_t seed = 1, int dim = 2) {
    FieldDescriptor d;
    d.kind = FieldKind::trigonometric;
    d.seed = seed;
    d.dim = dim;
    return d;
}

}  // namespace

TEST(CoeffField, IdentityIsIdentityEverywhere) {
    const CoefficientField f = make_field(FieldDescriptor{});
    for (double y : {0.0, 0.13, 0.5, 0.97})
        EXPECT_TRUE(f.eval(Vec3(y, 1.0 - y, 0.0)).isIdentity(0.0));
    EXPECT_DOUBLE_EQ(f.mu(), 1.0);
    EXPECT_TRUE(f.is_constant());
}

TEST(CoeffField, LayeredValueAtQuarter) {
    const CoefficientField f = make_field(layered());
    const Mat3 a = f.eval(Vec3(0.25, 0.7, 0.0));
    EXPECT_NEAR(a(0, 0), 3.0, 1e-15);
    EXPECT_NEAR(a(1, 1), 3.0, 1e-15);
    EXPECT_EQ(a(0, 1), 0.0);
}

TEST(CoeffField, LayeredEllipticityFromSineExtrema) {
    const CoefficientField f = make_field(layered());
    // 2 + sin on a fine grid spans [1, 3]
    EXPECT_NEAR(f.lambda_min(), 1.0, 1e-12);
    EXPECT_NEAR(f.lambda_max(), 3.0, 1e-12);
    EXPECT_NEAR(f.mu(), 1.0 / 3.0, 1e-12);
}

TEST(CoeffField, PeriodicUnderIntegerShift) {
    for (int dim : {2, 3}) {
        const CoefficientField f = make_field(trig(3, dim));
        UniformSource rng(5);
        for (int k = 0; k < 50; ++k) {
            // dyadic points, so y + 1 is exact
            auto dy = [&] { return std::ldexp(std::floor(std::ldexp(rng.next(), 30)), -30); };
            Vec3 y(dy(), dy(), dim == 3 ? dy() : 0.0);
            Vec3 z = y;
            z(k % dim) += 1.0;
            EXPECT_EQ(f.eval(y), f.eval(z));
        }
    }
}

TEST(CoeffField, EvalIsPure) {
    const CoefficientField f = make_field(trig());
    const Vec3 y(0.31, 0.77, 0.0);
    const Mat3 a = f.eval(y);
    for (int k = 0; k < 5; ++k) EXPECT_EQ(f.eval(y), a);
}

TEST(CoeffField, TrigFieldIsSymmetricPositive) {
    const CoefficientField f = make_field(trig(7));
    UniformSource rng(1);
    for (int k = 0; k < 100; ++k) {
        const Mat3 a = f.eval(Vec3(rng.next(), rng.next(), 0.0));
        EXPECT_NEAR((a - a.transpose()).norm(), 0.0, 1e-15);
        EXPECT_GT(sym_eig_range(a, 2).first, 0.0);
    }
}

TEST(CoeffField, RejectsIndefiniteRecipe) {
    FieldDescriptor d = trig();
    d.shift = 0.05;
    d.trig_amplitude = 0.5;
    d.terms = 6;
    EXPECT_THROW(make_field(d), InvalidArgument);
    FieldDescriptor l = layered();
    l.amplitude = 2.5;
    EXPECT_THROW(make_field(l), InvalidArgument);
}

TEST(CoeffField, IdentityInterpolationEndpoints) {
    const CoefficientField f = make_field(trig());
    const CoefficientField f0 = interpolate_identity(f, 0.0);
    const CoefficientField f1 = interpolate_identity(f, 1.0);
    UniformSource rng(2);
    for (int k = 0; k < 20; ++k) {
        const Vec3 y(rng.next(), rng.next(), 0.0);
        EXPECT_NEAR((f0.eval(y) - Mat3::Identity()).norm(), 0.0, 1e-15);
        EXPECT_NEAR((f1.eval(y) - f.eval(y)).norm(), 0.0, 1e-15);
    }
}

TEST(CoeffField, HalfwayInterpolationOfThreeIsTwo) {
    const CoefficientField h = interpolate_identity(make_field(layered()), 0.5);
    const Mat3 a = h.eval(Vec3(0.25, 0.0, 0.0));
    EXPECT_NEAR(a(0, 0), 2.0, 1e-14);
    EXPECT_NEAR(a(1, 1), 2.0, 1e-14);
}

TEST(CoeffField, AffineFamilyLipschitzInS) {
    const CoefficientField f = make_field(trig(4));
    UniformSource rng(9);
    for (int k = 0; k < 40; ++k) {
        const double s1 = rng.next(), s2 = rng.next();
        const Vec3 y(rng.next(), rng.next(), 0.0);
        const Mat3 a1 = interpolate_identity(f, s1).eval(y), a2 = interpolate_identity(f, s2).eval(y);
        const double lhs = sym_norm(a1 - a2, 2);
        const double rhs = std::abs(s1 - s2) * sym_norm(f.eval(y) - Mat3::Identity(), 2);
        EXPECT_LE(lhs, rhs + 1e-14);
    }
}

TEST(CoeffField, HolderEstimateConstantIsZero) {
    EXPECT_EQ(holder_estimate(make_field(FieldDescriptor{}), 1.0, 500), 0.0);
}

TEST(CoeffField, HolderEstimateLayeredBracketsSineSlope) {
    const double est = holder_estimate(make_field(layered()), 1.0, 20000);
    EXPECT_LE(est, 2.0 * std::numbers::pi + 1e-9);
    EXPECT_GE(est, 6.0);
}

TEST(CoeffField, DifferenceOfIntegerShiftIsZero) {
    const CoefficientField f = make_field(trig(2));
    EXPECT_EQ(sup_difference(f, f), 0.0);
    EXPECT_EQ(holder_estimate_difference(f, f, 0.5, 200), 0.0);
}

TEST(CoeffField, FingerprintDistinguishesFields) {
    EXPECT_NE(make_field(trig(1)).fingerprint(), make_field(trig(2)).fingerprint());
    EXPECT_EQ(make_field(trig(1)).fingerprint(), make_field(trig(1)).fingerprint());
}
