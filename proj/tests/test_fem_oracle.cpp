#include "lplab/fem_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lplab;

namespace {

FemProblem laplace(std::function<double(const Vec3&)> g, double scale = 1.0) {
    FemProblem p;
    p.coefficient = [scale](const Vec3&) { return Mat3(scale * Mat3::Identity()); };
    p.dirichlet = std::move(g);
    return p;
}

}  // namespace

TEST(FemOracle, BilinearSolutionIsReproduced) {
    const FemGrid g = FemGrid::box(2, Vec3(0, 0, 0), Vec3(1, 1, 0), 1.0 / 128);
    const FemSolution s = fem_solve(g, laplace([](const Vec3& x) { return x(0) * x(1); }));
    double e2 = 0.0;
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        const Vec3 x = g.node(i);
        e2 = std::max(e2, std::abs(s.values()(i) - x(0) * x(1)));
    }
    EXPECT_LE(e2, 1e-4);
    EXPECT_NEAR(s.value(Vec3(0.33, 0.71, 0)), 0.33 * 0.71, 1e-4);
}

TEST(FemOracle, EnergyIdentity) {
    // int |grad u|^2 for u = x^2 - y^2 on the unit square is 8/3
    const FemGrid g = FemGrid::box(2, Vec3(0, 0, 0), Vec3(1, 1, 0), 1.0 / 64);
    const FemSolution s = fem_solve(g, laplace([](const Vec3& x) { return x(0) * x(0) - x(1) * x(1); }));
    EXPECT_NEAR(s.energy(), 8.0 / 3.0, 1e-3);
}

TEST(FemOracle, ConstantCoefficientScalesEnergy) {
    const FemGrid g = FemGrid::box(2, Vec3(0, 0, 0), Vec3(1, 1, 0), 1.0 / 16);
    const FemSolution s = fem_solve(g, laplace([](const Vec3& x) { return x(0) + x(1); }, 2.0));
    EXPECT_NEAR(s.energy(), 4.0, 1e-10);
    EXPECT_NEAR((s.gradient(Vec3(0.4, 0.4, 0)) - Vec3(1, 1, 0)).norm(), 0.0, 1e-9);
}

TEST(FemOracle, ThreeDimensionalLinear) {
    const FemGrid g = FemGrid::box(3, Vec3(0, 0, 0), Vec3(1, 1, 1), 1.0 / 8);
    const FemSolution s = fem_solve(g, laplace([](const Vec3& x) { return x(0) - 2 * x(2); }));
    EXPECT_NEAR(s.value(Vec3(0.3, 0.5, 0.7)), 0.3 - 1.4, 1e-9);
}

TEST(FemOracle, ExactValuesHaveZeroResidual) {
    const FemGrid g = FemGrid::box(2, Vec3(0, 0, 0), Vec3(1, 1, 0), 1.0 / 16);
    const FemProblem p = laplace([](const Vec3& x) { return 3 * x(0) - x(1); });
    Eigen::VectorXd v(g.n_nodes());
    for (std::size_t i = 0; i < g.n_nodes(); ++i) v(i) = 3 * g.node(i)(0) - g.node(i)(1);
    EXPECT_LT(fem_residual(g, p, v), 1e-13);
}

TEST(FemOracle, RejectsUnderresolvedOscillation) {
    const FemGrid g = FemGrid::box(2, Vec3(0, 0, 0), Vec3(1, 1, 0), 1.0 / 16);
    FemProblem p = laplace([](const Vec3&) { return 0.0; });
    p.epsilon = 0.25;
    EXPECT_THROW(fem_solve(g, p), InvalidArgument);
}

TEST(FemOracle, NeumannProblem) {
    const FemGrid g = FemGrid::box(2, Vec3(0, 0, 0), Vec3(1, 1, 0), 1.0 / 32);
    FemProblem p;
    p.coefficient = [](const Vec3&) { return Mat3::Identity(); };
    p.bc = FemProblem::Bc::neumann;
    p.neumann = [](const Vec3&, const Vec3& n) { return n(0); };
    const FemSolution s = fem_solve(g, p);
    EXPECT_NEAR(s.value(Vec3(0.8, 0.5, 0)) - s.value(Vec3(0.2, 0.5, 0)), 0.6, 1e-6);
}

TEST(FemOracle, BoundaryGradientExtrapolation) {
    const FemGrid g = FemGrid::box(2, Vec3(0, 0, 0), Vec3(1, 1, 0), 1.0 / 64);
    const FemSolution s = fem_solve(g, laplace([](const Vec3& x) { return x(0) * x(0) - x(1) * x(1); }));
    const Vec3 gb = fem_boundary_gradient(s, Vec3(1.0, 0.5, 0), Vec3(1, 0, 0));
    EXPECT_NEAR(gb(0), 2.0, 1e-2);
    EXPECT_NEAR(gb(1), -1.0, 1e-2);
}

TEST(FemOracle, ReferenceGreenMatchesLogKernel) {
    const Vec3 y(0.1, 0.2, 0.0);
    auto id = [](const Vec3&) { return Mat3::Identity(); };
    const ReferenceGreen plain(id, Mat3::Identity(), y, 16.0, 1.0 / 64, false);
    const ReferenceGreen sub(id, Mat3::Identity(), y, 16.0, 1.0 / 64, true);
    for (double r : {0.5, 1.0}) {
        const Vec3 x = y + Vec3(r * 0.6, r * 0.8, 0);
        const double exact = -std::log(r) / (2 * std::numbers::pi);
        EXPECT_NEAR(plain.value(x), exact, 5e-3) << r;
        EXPECT_NEAR(sub.value(x), exact, 1e-12) << r;
    }
    EXPECT_NEAR(sub.remainder(y + Vec3(0.3, 0, 0)), 0.0, 1e-12);
    EXPECT_NEAR(sub.flux(0.5), 1.0, 1e-6);
    EXPECT_NEAR(plain.flux(0.5), 1.0, 2e-2);
}
