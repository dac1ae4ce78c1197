#include "lplab/cell_homog.hpp"
#include "lplab/fem_oracle.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lplab;
using boost::math::quadrature::gauss_kronrod;

namespace {

std::shared_ptr<const CoefficientField> layered(double mean = 2.0, double amp = 1.0) {
    FieldDescriptor d;
    d.kind = FieldKind::layered;
    d.mean = mean;
    d.amplitude = amp;
    return std::make_shared<const CoefficientField>(make_field(d));
}

std::shared_ptr<const CoefficientField> trig(int dim = 2) {
    FieldDescriptor d;
    d.kind = FieldKind::trigonometric;
    d.dim = dim;
    return std::make_shared<const CoefficientField>(make_field(d));
}

double harmonic_mean(double mean, double amp) {
    auto inv = [&](double y) { return 1.0 / (mean + amp * std::sin(2.0 * std::numbers::pi * y)); };
    return 1.0 / gauss_kronrod<double, 61>::integrate(inv, 0.0, 1.0, 15, 1e-14);
}

}  // namespace

TEST(CellHomog, IdentityHasZeroCorrector) {
    auto f = std::make_shared<const CoefficientField>(make_field(FieldDescriptor{}));
    const CorrectorField c = solve_cell(f);
    EXPECT_TRUE(c.is_zero());
    EXPECT_EQ(c.residual(), 0.0);
    const HomogenizedMatrix h = homogenized_matrix(*f, c);
    EXPECT_NEAR((h.a0 - Mat3::Identity()).norm(), 0.0, 1e-12);
}

TEST(CellHomog, LayeredMatchesHarmonicArithmeticMeans) {
    auto f = layered();
    const CorrectorField c = solve_cell(f);
    const HomogenizedMatrix h = homogenized_matrix(*f, c);
    EXPECT_NEAR(h.a0(0, 0), harmonic_mean(2.0, 1.0), 1e-6);
    EXPECT_NEAR(h.a0(0, 0), std::sqrt(3.0), 1e-6);
    EXPECT_NEAR(h.a0(1, 1), 2.0, 1e-10);
    EXPECT_NEAR(h.a0(0, 1), 0.0, 1e-12);
}

TEST(CellHomog, LayeredCorrectorSolvesOneDimensionalProblem) {
    // chi_1' = 1 - abar / a(y) under w = y - chi
    auto f = layered();
    const CorrectorField c = solve_cell(f);
    const double abar = harmonic_mean(2.0, 1.0);
    for (double y : {0.0, 0.1, 0.25, 0.4, 0.75, 0.9}) {
        const double a = 2.0 + std::sin(2.0 * std::numbers::pi * y);
        const Vec3 p(y, 0.37, 0.0);
        EXPECT_NEAR(c.grad_chi(0, p)(0), 1.0 - abar / a, 1e-8) << y;
        EXPECT_NEAR(c.grad_chi(0, p)(1), 0.0, 1e-12);
    }
    // chi_1 itself: integral of chi_1' with zero mean
    auto dchi = [&](double y) { return 1.0 - abar / (2.0 + std::sin(2.0 * std::numbers::pi * y)); };
    auto chi = [&](double y) { return gauss_kronrod<double, 61>::integrate(dchi, 0.0, y, 10, 1e-13); };
    const double mean = gauss_kronrod<double, 31>::integrate(chi, 0.0, 1.0, 5, 1e-12);
    for (double y : {0.2, 0.6})
        EXPECT_NEAR(c.chi(0, Vec3(y, 0.0, 0.0)), chi(y) - mean, 1e-8) << y;
}

TEST(CellHomog, TransverseCorrectorVanishesForLayers) {
    auto f = layered();
    const CorrectorField c = solve_cell(f);
    for (const auto& m : c.modes(1)) EXPECT_LT(std::abs(m.coeff), 1e-13);
    const FieldFunction w2 = corrector_solution(std::make_shared<const CorrectorField>(c), 0.25, 1);
    EXPECT_NEAR(w2.value(Vec3(0.3, 0.7, 0.0)), 0.7, 1e-12);
}

TEST(CellHomog, ZerothModeAbsent) {
    const CorrectorField c = solve_cell(trig());
    for (int i = 0; i < 2; ++i)
        for (const auto& m : c.modes(i)) EXPECT_FALSE(m.k[0] == 0 && m.k[1] == 0 && m.k[2] == 0);
}

TEST(CellHomog, SymmetricFieldGivesSymmetricA0) {
    for (int dim : {2, 3}) {
        auto f = trig(dim);
        const HomogenizedMatrix h = homogenized_matrix(*f, solve_cell(f));
        EXPECT_NEAR((h.a0 - h.a0.transpose()).norm(), 0.0, 1e-10);
    }
}

TEST(CellHomog, VoigtReussBracketing) {
    for (double amp : {0.5, 1.0, 1.5}) {
        auto f = layered(2.0, amp);
        const HomogenizedMatrix h = homogenized_matrix(*f, solve_cell(f));
        auto [lo, hi] = sym_eig_range(h.a0, 2);
        EXPECT_GE(lo, harmonic_mean(2.0, amp) - 1e-8);
        EXPECT_LE(hi, 2.0 + 1e-8);
    }
    auto f = trig();
    const HomogenizedMatrix h = homogenized_matrix(*f, solve_cell(f));
    auto [lo, hi] = sym_eig_range(h.a0, 2);
    EXPECT_GE(lo, f->lambda_min());
    EXPECT_LE(hi, f->lambda_max());
}

TEST(CellHomog, RefinementStability) {
    auto f = trig();
    CellSolveOptions a, b;
    a.cutoff = 16;
    b.cutoff = 32;
    const CorrectorField ca = solve_cell(f, a), cb = solve_cell(f, b);
    const double diff = (homogenized_matrix(*f, ca).a0 - homogenized_matrix(*f, cb).a0).norm();
    EXPECT_LT(diff, 10.0 * std::max({ca.residual(), ca.truncation_residual(), 1e-14}));
}

TEST(CellHomog, GradientBoundForLayers) {
    auto f = layered();
    const CorrectorField c = solve_cell(f);
    EXPECT_NEAR(corrector_gradient_bound(c), std::sqrt(3.0) - 1.0, 1e-4);
    EXPECT_NEAR(corrector_gradient_bound(c, Vec3(3.0, -2.0, 0.0)), corrector_gradient_bound(c), 1e-12);
    auto id = std::make_shared<const CoefficientField>(make_field(FieldDescriptor{}));
    EXPECT_EQ(corrector_gradient_bound(solve_cell(id)), 0.0);
}

TEST(CellHomog, IdentityCorrectorSolutionIsCoordinate) {
    auto id = std::make_shared<const CoefficientField>(make_field(FieldDescriptor{}));
    auto c = std::make_shared<const CorrectorField>(solve_cell(id));
    const FieldFunction w = corrector_solution(c, 0.25, 0);
    const Vec3 x(0.3, 0.8, 0.0);
    EXPECT_EQ(w.value(x), 0.3);
    EXPECT_EQ(w.gradient(x), Vec3(1.0, 0.0, 0.0));
}

TEST(CellHomog, JsonRoundTrip) {
    auto f = trig();
    const CorrectorField c = solve_cell(f);
    const CorrectorField r = CorrectorField::from_json(c.to_json(), f);
    const Vec3 y(0.21, 0.64, 0.0);
    EXPECT_EQ(c.eval(y).value, r.eval(y).value);
    EXPECT_EQ(c.eval(y).jacobian, r.eval(y).jacobian);
}

TEST(CellHomog, CorrectorSolutionHasSmallFemResidual) {
    auto f = trig();
    auto c = std::make_shared<const CorrectorField>(solve_cell(f));
    const double eps = 0.25;
    const FieldFunction w = corrector_solution(c, eps, 0);
    FemGrid g = FemGrid::box(2, Vec3(0, 0, 0), Vec3(1, 1, 0), eps / 16);
    FemProblem pb;
    pb.coefficient = [&](const Vec3& x) { return f->eval(x / eps); };
    pb.epsilon = eps;
    pb.dirichlet = [&](const Vec3& x) { return w.value(x); };
    Eigen::VectorXd v(g.n_nodes());
    for (std::size_t i = 0; i < g.n_nodes(); ++i) v(i) = w.value(g.node(i));
    EXPECT_LT(fem_residual(g, pb, v), 1e-2);
    const FemSolution s = fem_solve(g, pb);
    EXPECT_LT((s.values() - v).cwiseAbs().maxCoeff(), 5e-3);
}

TEST(CellHomog, NonconvergenceIsReported) {
    CellSolveOptions o;
    o.max_iterations = 1;
    o.tol = 1e-14;
    EXPECT_THROW(solve_cell(trig(), o), ConvergenceError);
}
