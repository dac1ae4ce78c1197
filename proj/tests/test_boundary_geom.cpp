#include "lplab/boundary_geom.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lplab;

namespace {

double flux_of_position(const BoundaryMesh& m) {
    double s = 0.0;
    for (const Panel& p : m.panels()) s += p.measure * p.centroid.dot(p.normal);
    return s;
}

}  // namespace

TEST(BoundaryGeom, SquareClosurePerimeterAndVolume) {
    for (int grading : {0, 3}) {
        const BoundaryMesh m = unit_square_mesh(16, grading);
        EXPECT_NEAR(m.closure_vector().norm(), 0.0, 1e-14);
        EXPECT_NEAR(m.sigma(), 4.0, 1e-14);
        EXPECT_NEAR(flux_of_position(m), 2.0, 1e-13);  // d |Omega|
        EXPECT_EQ(m.features().size(), 4u);
    }
}

TEST(BoundaryGeom, GradingRefinesTowardCorners) {
    const BoundaryMesh a = unit_square_mesh(8, 0), b = unit_square_mesh(8, 3);
    EXPECT_GT(b.size(), a.size());
    EXPECT_NEAR(b.min_panel_size(), a.min_panel_size() / 8.0, 1e-14);
    EXPECT_NEAR(b.max_panel_size(), a.max_panel_size(), 1e-14);
}

TEST(BoundaryGeom, CubeClosureAreaAndVolume) {
    const BoundaryMesh m = unit_cube_mesh(6, 1);
    EXPECT_EQ(m.dim(), 3);
    EXPECT_NEAR(m.closure_vector().norm(), 0.0, 1e-13);
    EXPECT_NEAR(m.sigma(), 6.0, 1e-13);
    EXPECT_NEAR(flux_of_position(m), 3.0, 1e-12);
    EXPECT_EQ(m.features().size(), 6u);
}

TEST(BoundaryGeom, CirclePerimeterConverges) {
    const BoundaryMesh m = circle_mesh(Vec3(0.2, 0.1, 0.0), 0.8, 512);
    EXPECT_NEAR(m.sigma(), 2 * std::numbers::pi * 0.8, 1e-4);
    EXPECT_NEAR(m.closure_vector().norm(), 0.0, 1e-13);
    EXPECT_TRUE(m.contains(Vec3(0.2, 0.1, 0.0)));
    EXPECT_FALSE(m.contains(Vec3(1.1, 0.1, 0.0)));
    EXPECT_NEAR(m.distance(Vec3(0.2, 0.1, 0.0)), 0.8, 1e-4);
}

TEST(BoundaryGeom, NormalsPointOutward) {
    const BoundaryMesh m = unit_square_mesh(4);
    const Vec3 c(0.5, 0.5, 0.0);
    for (const Panel& p : m.panels()) EXPECT_GT((p.centroid - c).dot(p.normal), 0.0);
    const BoundaryMesh q = unit_cube_mesh(2);
    for (const Panel& p : q.panels()) EXPECT_GT((p.centroid - Vec3(0.5, 0.5, 0.5)).dot(p.normal), 0.0);
}

TEST(BoundaryGeom, TextRoundTrip) {
    const BoundaryMesh m = unit_square_mesh(5, 2);
    const BoundaryMesh r = BoundaryMesh::from_text(m.to_text());
    ASSERT_EQ(r.size(), m.size());
    EXPECT_EQ(r.id(), m.id());
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(r.panel(i).centroid, m.panel(i).centroid);
}

TEST(BoundaryGeom, DilationScalesMeasure) {
    const BoundaryMesh m = unit_cube_mesh(3);
    EXPECT_NEAR(m.dilated(2.0).sigma(), 4.0 * m.sigma(), 1e-12);
}

TEST(BoundaryGeom, TangentialGradientOnCircle) {
    // f = x restricted to the unit circle: tangential gradient (I - n n^T) e_1
    const BoundaryMesh m = circle_mesh(Vec3::Zero(), 1.0, 256);
    std::vector<double> f;
    for (const Panel& p : m.panels()) f.push_back(p.centroid(0));
    const auto g = tangential_gradient(m, f);
    double err = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const Vec3 n = m.panel(i).normal;
        const Vec3 exact = Vec3(1, 0, 0) - n(0) * n;
        err = std::max(err, (g[i] - exact).norm());
    }
    EXPECT_LT(err, 1e-3);
}

TEST(BoundaryGeom, TangentialGradientOnCubeFaces) {
    const BoundaryMesh m = unit_cube_mesh(8);
    std::vector<double> f;
    for (const Panel& p : m.panels()) f.push_back(p.centroid(0) + 2 * p.centroid(2));
    const auto g = tangential_gradient(m, f);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const Vec3 n = m.panel(i).normal, full(1, 0, 2);
        EXPECT_NEAR((g[i] - (full - n.dot(full) * n)).norm(), 0.0, 1e-12);
    }
}

TEST(BoundaryGeom, NormsOfConstantOnSquare) {
    const BoundaryMesh m = unit_square_mesh(16);
    const std::vector<double> one(m.size(), 1.0);
    const BoundaryNorms n = boundary_norms(m, one);
    EXPECT_NEAR(n.l2, 2.0, 1e-14);
    EXPECT_NEAR(n.w12, 0.5, 1e-14);
    EXPECT_NEAR(boundary_mean(m, one), 1.0, 1e-15);
}

TEST(BoundaryGeom, GraphPatchGeometry) {
    GraphDescriptor flat;
    const GraphPatch p = build_graph_patch(flat, 0.5, 0.5, 32);
    const double c = 10 * std::sqrt(2.0) * 1.5;
    EXPECT_NEAR(p.height_constant(), c, 1e-14);
    EXPECT_NEAR(p.cap_volume(0.5).integrate([](const Vec3&) { return 1.0; }), 1.0 * c * 0.5, 1e-10);
    EXPECT_NEAR(p.boundary_layer(0.75).integrate([](const Vec3&) { return 1.0; }), 1.5, 1e-12);
    EXPECT_NEAR(p.surface(0.5).sigma(), 1.0, 1e-14);
    const BoundaryMesh cap = p.cap_boundary(0.5);
    EXPECT_NEAR(cap.closure_vector().norm(), 0.0, 1e-12);
    for (const Panel& q : p.surface(0.5).panels()) EXPECT_LT(q.normal(1), 0.0);
}

TEST(BoundaryGeom, GraphPatchConeAndLipschitzCheck) {
    GraphDescriptor cone;
    cone.kind = GraphKind::cone;
    cone.slope = 0.8;
    const GraphPatch p = build_graph_patch(cone, 0.8, 0.5, 32);
    EXPECT_EQ(p.psi(0.0), 0.0);
    EXPECT_NEAR(p.psi(-0.25), 0.2, 1e-15);
    // area of D(r): 2 r C r minus the area under the cone
    const double r = 0.5, c = p.height_constant();
    EXPECT_NEAR(p.cap_volume(r).integrate([](const Vec3&) { return 1.0; }), 2 * r * c * r - 0.8 * r * r,
                1e-10);
    EXPECT_THROW(build_graph_patch(cone, 0.5, 0.5, 32), GeometryError);
}

TEST(BoundaryGeom, RichardsonIsExactForQuadratics) {
    auto u = [](double t) { return 1.5 - 2.0 * t + 0.7 * t * t; };
    EXPECT_NEAR(richardson_limit(u(0.1), u(0.2), u(0.4)), 1.5, 1e-14);
}

TEST(BoundaryGeom, NontangentialSamplesStayInCone) {
    const BoundaryMesh m = unit_square_mesh(8);
    NtOptions o;
    for (std::size_t i = 0; i < m.size(); i += 5) {
        const NtSamples s = nt_sample(m, i, o);
        EXPECT_FALSE(s.points.empty());
        for (const Vec3& z : s.points) {
            EXPECT_TRUE(m.contains(z));
            EXPECT_LT((z - m.panel(i).centroid).norm(), (1 + o.aperture) * m.distance(z) + 1e-14);
        }
    }
}

TEST(BoundaryGeom, NontangentialLimitAndMaximal) {
    const BoundaryMesh m = unit_square_mesh(8);
    auto u = [](const Vec3& x) { return x(0) * x(0) + x(1); };
    const auto lim = nt_limit(m, u, NtOptions::default_depths());
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(lim[i], u(m.panel(i).centroid), 1e-12);
    const auto mx = nt_maximal(m, [](const Vec3&) { return -3.0; });
    for (double v : mx) EXPECT_EQ(v, 3.0);
}
