#pragma once

#include "lplab/types.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lplab {

/// Flat boundary element: a segment (d = 2) or a planar rectangle (d = 3).
struct Panel {
    Vec3 centroid = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    Vec3 t1 = Vec3::Zero();  // along the feature in d = 2, first face axis in d = 3
    Vec3 t2 = Vec3::Zero();  // second face axis in d = 3, zero in d = 2
    double measure = 0.0;
    int feature = 0;
    int iu = 0;  // position along the feature (first face axis in d = 3)
    int iv = 0;  // second face axis in d = 3
    // d = 2: corners[0] -> corners[1] in traversal order.
    // d = 3: corners in counterclockwise order seen from outside.
    std::array<Vec3, 4> corners{};

    [[nodiscard]] double size() const noexcept;
};

/// Smooth piece of the boundary. In d = 2 a chain of panels between sharp
/// corners (or a whole closed curve); in d = 3 a face tiled nu x nv.
struct Feature {
    std::vector<int> panels;  // d = 3: panels[iu * nv + iv]
    bool closed = false;
    int nu = 0;
    int nv = 1;
};

class BoundaryMesh {
public:
    BoundaryMesh() = default;
    BoundaryMesh(int dim, std::vector<Panel> panels, bool closed_surface, double lipschitz = 0.0,
                 int grading = 0);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return panels_.size(); }
    [[nodiscard]] const Panel& panel(std::size_t i) const { return panels_[i]; }
    [[nodiscard]] const std::vector<Panel>& panels() const noexcept { return panels_; }
    [[nodiscard]] const std::vector<Feature>& features() const noexcept { return features_; }
    [[nodiscard]] double sigma() const noexcept { return sigma_; }
    [[nodiscard]] bool closed() const noexcept { return closed_; }
    [[nodiscard]] double lipschitz() const noexcept { return lipschitz_; }
    [[nodiscard]] int grading() const noexcept { return grading_; }
    [[nodiscard]] const Vec3& interior_reference() const noexcept { return interior_; }
    [[nodiscard]] std::uint64_t id() const noexcept { return id_; }
    [[nodiscard]] double min_panel_size() const noexcept;
    [[nodiscard]] double max_panel_size() const noexcept;
    [[nodiscard]] double diameter() const noexcept;

    /// sum_j measure_j n_j, zero for a closed surface.
    [[nodiscard]] Vec3 closure_vector() const;
    /// Point-in-domain test; requires a closed mesh.
    [[nodiscard]] bool contains(const Vec3& x) const;
    [[nodiscard]] double distance(const Vec3& x) const;
    /// Same mesh dilated about the origin by rho.
    [[nodiscard]] BoundaryMesh dilated(double rho) const;
    [[nodiscard]] std::vector<double> weights() const;

    /// Versioned text format; doubles are written in shortest round-trip form.
    [[nodiscard]] std::string to_text() const;
    static BoundaryMesh from_text(const std::string& text);

private:
    int dim_ = 2;
    std::vector<Panel> panels_;
    std::vector<Feature> features_;
    double sigma_ = 0.0;
    bool closed_ = true;
    double lipschitz_ = 0.0;
    int grading_ = 0;
    Vec3 interior_ = Vec3::Zero();
    Vec3 box_lo_ = Vec3::Zero();
    Vec3 box_hi_ = Vec3::Zero();
    std::uint64_t id_ = 0;

    void build_features();
};

/// Closed counterclockwise polygon. Each edge gets `panels_per_edge` equal
/// panels; at every sharp corner (turning angle above 20 degrees) the panel
/// touching the corner is bisected `grading` more times.
BoundaryMesh build_polygon_mesh(const std::vector<Vec3>& vertices, int panels_per_edge,
                                int grading = 0);

/// Axis-aligned cube with n x n panels per face, graded toward the edges the
/// same way as polygon panels toward corners.
BoundaryMesh build_cube_mesh(const Vec3& center, double half_width, int panels_per_side,
                             int grading = 0);

BoundaryMesh unit_square_mesh(int panels_per_edge, int grading = 0);
BoundaryMesh unit_cube_mesh(int panels_per_side, int grading = 0);
/// Regular n-gon inscribed in the circle of the given radius.
BoundaryMesh circle_mesh(const Vec3& center, double radius, int n);

// ---------------------------------------------------------------------------
// Graph patches (d = 2)

enum class GraphKind { flat, cone, sawtooth, sine };

struct GraphDescriptor {
    GraphKind kind = GraphKind::flat;
    double slope = 0.0;      // cone, sawtooth
    double period = 1.0;     // sawtooth, sine
    double amplitude = 0.0;  // sine
};

struct VolumeRule {
    std::vector<Vec3> points;
    std::vector<double> weights;
    [[nodiscard]] double integrate(const std::function<double(const Vec3&)>& f) const;
};

/// Lipschitz graph x_2 = psi(x_1) with psi(0) = 0 and the localization sets
/// Delta(r) = graph over |x_1| < r and D(r) = {|x_1| < r, psi < x_2 < C r},
/// C = 10 sqrt(2) (M + 1).
class GraphPatch {
public:
    GraphPatch(GraphDescriptor psi, double m, double r, int resolution);

    [[nodiscard]] double psi(double x) const;
    [[nodiscard]] double lipschitz() const noexcept { return m_; }
    [[nodiscard]] double radius() const noexcept { return r_; }
    [[nodiscard]] double height_constant() const noexcept { return c_; }
    [[nodiscard]] const GraphDescriptor& descriptor() const noexcept { return desc_; }

    /// Open surface mesh of Delta(rho), normals pointing down (out of D).
    [[nodiscard]] BoundaryMesh surface(double rho) const;
    /// Closed boundary of D(rho) (graph, sides, top at C r).
    [[nodiscard]] BoundaryMesh cap_boundary(double rho) const;
    /// Volume rule for D(rho).
    [[nodiscard]] VolumeRule cap_volume(double rho) const;
    /// Volume rule for {|x_1| < rho, psi < x_2 < psi + 1}.
    [[nodiscard]] VolumeRule boundary_layer(double rho) const;
    /// Volume rule for {|x_1| < rho, C r < x_2 < C r + 1}.
    [[nodiscard]] VolumeRule top_strip(double rho) const;

private:
    GraphDescriptor desc_;
    double m_;
    double r_;
    double c_;
    int resolution_;

    [[nodiscard]] std::vector<double> breakpoints(double lo, double hi) const;
    [[nodiscard]] VolumeRule region(double rho, const std::function<double(double)>& lo,
                                    const std::function<double(double)>& hi) const;
};

GraphPatch build_graph_patch(const GraphDescriptor& psi, double m, double r, int resolution);

// ---------------------------------------------------------------------------
// Boundary functions

/// Per-panel tangential gradient by second-order finite differences along
/// each feature, one-sided at feature ends.
std::vector<Vec3> tangential_gradient(const BoundaryMesh& mesh, const std::vector<double>& f);

struct BoundaryNorms {
    double l2 = 0.0;
    double w12 = 0.0;
};
/// L2 norm and ||grad_tan f||_2 + sigma^{1/(1-d)} ||f||_2.
BoundaryNorms boundary_norms(const BoundaryMesh& mesh, const std::vector<double>& f);

double l2_norm(const BoundaryMesh& mesh, const std::vector<double>& f);
double l2_norm(const BoundaryMesh& mesh, const std::vector<Vec3>& f);
/// sigma-weighted boundary mean.
double boundary_mean(const BoundaryMesh& mesh, const std::vector<double>& f);

// ---------------------------------------------------------------------------
// Nontangential approach

struct NtOptions {
    double aperture = 1.0;
    std::vector<double> depths = default_depths();
    static std::vector<double> default_depths();  // 2^-k, k = 1..10
};

struct NtSamples {
    std::vector<Vec3> points;
    std::vector<double> depths;
    int omitted = 0;  // depths dropped because the point left Omega or the cone
};

/// Points P - t n that lie inside Omega and inside the cone
/// |Z - P| < (1 + aperture) dist(Z, boundary).
NtSamples nt_sample(const BoundaryMesh& mesh, std::size_t panel, const NtOptions& options = {});

/// Per-panel max of |u| over the cone samples.
std::vector<double> nt_maximal(const BoundaryMesh& mesh,
                               const std::function<double(const Vec3&)>& u,
                               const NtOptions& options = {});

/// Nontangential limit from values at depths t, 2t, 4t (smallest first):
/// quadratic Richardson extrapolation to t = 0.
double richardson_limit(double u_t, double u_2t, double u_4t);

/// Nontangential limit of u at each panel along the inward normal, using the
/// three smallest of the given dyadic depths.
std::vector<double> nt_limit(const BoundaryMesh& mesh,
                             const std::function<double(const Vec3&)>& u,
                             const std::vector<double>& depths);

}  // namespace lplab
