#pragma once

#include "lplab/boundary_geom.hpp"
#include "lplab/layer_ops.hpp"

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace lplab {

enum class ProblemKind { dirichlet, neumann, regularity };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& name);

struct SolveOptions {
    AssemblyOptions assembly;
    PotentialOptions potential;
    /// Reciprocal condition numbers below this produce a warning.
    double rcond_warning = 1e-10;
    /// Turn warnings into errors.
    bool strict = false;
    /// d = 2 regularity solves rescale the domain to this diameter.
    double regularity_diameter = 0.5;
};

/// Layer-potential solution of one boundary value problem.
///
///   dirichlet   g = (-I/2 + K*)^{-1} f,  u = D(g)
///   neumann     g = (I/2 + K)^{-1} f,    u = S(g) - c  (c: boundary mean)
///   regularity  S g = f,                 u = S(g)
class BvpSolution {
public:
    struct Setup {
        ProblemKind kind = ProblemKind::dirichlet;
        BoundaryMesh mesh;
        std::shared_ptr<const KernelModel> kernel;
        std::vector<double> data;
        std::vector<double> density;
        double residual = 0.0;
        double rcond = 0.0;
        double density_ratio = 0.0;
        double projection = 0.0;
        double shift = 0.0;
        double scale = 1.0;
        double regularity_scale = 1.0;  // frame for single layer solves in d = 2
        std::vector<std::string> warnings;
        PotentialOptions potential;
    };
    explicit BvpSolution(Setup setup);

    [[nodiscard]] ProblemKind kind() const noexcept { return s_.kind; }
    [[nodiscard]] const BoundaryMesh& mesh() const noexcept { return s_.mesh; }
    [[nodiscard]] const KernelModel& kernel() const noexcept { return *s_.kernel; }
    /// Boundary data actually used (projected to mean zero for Neumann).
    [[nodiscard]] const std::vector<double>& data() const noexcept { return s_.data; }
    /// Layer density; lives on the rescaled mesh when scale() != 1.
    [[nodiscard]] const std::vector<double>& density() const noexcept { return s_.density; }
    /// ||M g - rhs|| / ||rhs||
    [[nodiscard]] double residual() const noexcept { return s_.residual; }
    /// Reciprocal condition estimate (0 on the iterative path).
    [[nodiscard]] double rcond() const noexcept { return s_.rcond; }
    /// ||g||_2 / ||f||_2 (Dirichlet, Neumann) or ||g||_2 / ||f||_{1,2} (regularity).
    [[nodiscard]] double density_ratio() const noexcept { return s_.density_ratio; }
    /// |int f dsigma| removed from Neumann data.
    [[nodiscard]] double projection() const noexcept { return s_.projection; }
    /// Dilation applied before a d = 2 regularity solve.
    [[nodiscard]] double scale() const noexcept { return s_.scale; }
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return s_.warnings; }

    [[nodiscard]] double value(const Vec3& x) const;
    [[nodiscard]] Vec3 gradient(const Vec3& x) const;
    /// Interior boundary trace of grad u per panel. Single layer solutions use
    /// the jump relation. For D(g) the tangential part is the data gradient and
    /// the conormal part solves S phi = (I/2 + K*) f.
    [[nodiscard]] std::vector<Vec3> boundary_gradient() const;
    /// Nontangential limit of u per panel (Richardson along the normal).
    [[nodiscard]] std::vector<double> boundary_values(const std::vector<double>& depths) const;

private:
    Setup s_;
    BoundaryMesh scaled_mesh_;
    std::shared_ptr<const KernelModel> scaled_kernel_;
};

BvpSolution solve_dirichlet(const BoundaryMesh& mesh, std::shared_ptr<const KernelModel> kernel,
                            const std::vector<double>& f, const SolveOptions& options = {});
BvpSolution solve_neumann(const BoundaryMesh& mesh, std::shared_ptr<const KernelModel> kernel,
                          const std::vector<double>& f, const SolveOptions& options = {});
BvpSolution solve_regularity(const BoundaryMesh& mesh, std::shared_ptr<const KernelModel> kernel,
                             const std::vector<double>& f, const SolveOptions& options = {});
BvpSolution solve(ProblemKind kind, const BoundaryMesh& mesh, std::shared_ptr<const KernelModel> kernel,
                  const std::vector<double>& f, const SolveOptions& options = {});

/// G(X, Y) = Gamma(X, Y) - W(X), W the regularity solution with data Gamma(., Y).
class GreenFunction {
public:
    GreenFunction(Vec3 pole, std::shared_ptr<const KernelModel> kernel, BvpSolution correction);

    [[nodiscard]] const Vec3& pole() const noexcept { return pole_; }
    [[nodiscard]] const BvpSolution& correction() const noexcept { return w_; }
    [[nodiscard]] double value(const Vec3& x) const;
    [[nodiscard]] Vec3 gradient(const Vec3& x) const;
    /// Flux of -A grad G out of the circle (sphere) of radius r about the pole.
    [[nodiscard]] double flux(double r, int n = 256) const;
    /// max |G| at panel corners and centroids, and max |Gamma(., Y)| there.
    [[nodiscard]] std::pair<double, double> boundary_trace() const;

private:
    Vec3 pole_;
    std::shared_ptr<const KernelModel> kernel_;
    BvpSolution w_;
};

GreenFunction green_function(const BoundaryMesh& mesh, std::shared_ptr<const KernelModel> kernel,
                             const Vec3& pole, const SolveOptions& options = {});

/// Gauss points on a panel: n per segment (d = 2) or n x n per rectangle.
void panel_quadrature(const Panel& panel, int dim, int n, std::vector<Vec3>& points,
                      std::vector<double>& weights);

struct RellichRatios {
    double neumann = 0.0;     // ||grad u|| / ||du/dnu||
    double regularity = 0.0;  // ||grad u|| / ||grad_tan u||
    double grad_norm = 0.0;
    double conormal_norm = 0.0;
    double tangential_norm = 0.0;
};

/// Ratios from per-panel boundary gradients. Throws InvalidArgument when a
/// denominator vanishes.
RellichRatios rellich_ratios(const BoundaryMesh& mesh, const std::vector<Vec3>& gradient,
                             const std::function<Mat3(const Vec3&)>& coefficient);
/// Ratios of an analytic solution, with 4-point Gauss quadrature per panel.
RellichRatios rellich_ratios(const BoundaryMesh& mesh, const FieldFunction& u);

/// Boundary data of an analytic solution: centroid values (Dirichlet,
/// regularity) or panel averages of the conormal derivative (Neumann).
std::vector<double> boundary_data(const BoundaryMesh& mesh, const FieldFunction& u, ProblemKind kind);

struct QIdentityOptions {
    double rho = 1.5;           // Omega_rho = D(rho) for the integration by parts
    std::uint64_t seed = 5;     // random test functions for the product rule
    int samples = 400;
    double fem_h = 0.0;         // 0: eps / 8
};

struct QIdentityReport {
    double product_rule = 0.0;       // max pointwise residual
    double telescoping = 0.0;        // |lhs - rhs| / (|int_top f| + |int_layer f|)
    double telescoping_lhs = 0.0;
    double telescoping_rhs = 0.0;
    double ibp_lhs = 0.0;            // int_{dD} du/dnu Q(u)
    double ibp_rhs = 0.0;            // int_D A grad u . Q(grad u)
    double ibp_scale = 0.0;          // int |du/dnu Q(u)| + int |A grad u . Q(grad u)|
    double ibp_residual = 0.0;       // |lhs - rhs| / scale
    double fem_residual = 0.0;       // algebraic residual of Q(u) as an L-solution
};

/// Checks of the vertical difference operator Q f(x) = f(x + e_d) - f(x) on a
/// graph patch, with u a solution of -div(A(x/eps) grad u) = 0.
QIdentityReport q_identity_report(const GraphPatch& patch, const FieldFunction& u, double eps,
                                  const QIdentityOptions& options = {});

struct ContinuationRow {
    double s = 0.0;
    double cond_plus = 0.0;   // I/2 + K, on the complement of its null direction
    double cond_minus = 0.0;  // -I/2 + K
    double lower_plus = 0.0;  // min over random f of ||(I/2 + K) f|| / ||f||
    double lower_minus = 0.0;
    double probe = 0.0;       // ||(K_s - K_0) f|| maximized over random unit f
    double probe_slope = 0.0; // probe / s
};

struct ContinuationOptions {
    double epsilon = 0.25;
    int n_random = 16;
    std::uint64_t seed = 3;
    CellSolveOptions cell;
};

/// Conditioning of +-I/2 + K along A^s = s A + (1 - s) I.
std::vector<ContinuationRow> continuation_sweep(const BoundaryMesh& mesh,
                                                std::shared_ptr<const CoefficientField> field,
                                                const std::vector<double>& s_grid,
                                                const ContinuationOptions& options = {});

enum class SweepProblem { corrector, dirichlet, neumann, regularity };
std::string to_string(SweepProblem p);

struct SweepConfig {
    FieldDescriptor field;
    std::vector<double> epsilons{1.0, 0.5, 0.25, 0.125};
    std::vector<SweepProblem> problems{SweepProblem::corrector, SweepProblem::dirichlet,
                                       SweepProblem::neumann, SweepProblem::regularity};
    int panels_per_edge = 32;
    int panels_per_epsilon = 8;
    int max_panels = 4000;
    /// Corrector-solution weights c_i of u = sum c_i w_i.
    std::vector<double> weights{1.0, 0.0, 0.0};
    double spread_limit = 2.0;
    double nt_aperture = 1.0;
    CellSolveOptions cell;
    SolveOptions solve;
    int jobs = 1;
};

struct SweepRow {
    double epsilon = 0.0;
    SweepProblem problem = SweepProblem::corrector;
    int n_panels = 0;
    double data_norm = 0.0;
    double grad_nt_norm = 0.0;  // ||(u)*|| for Dirichlet rows
    double ratio = 0.0;
    double rellich_neumann = 0.0;
    double rellich_regularity = 0.0;
    double residual = 0.0;
    std::string error;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    /// max/min across epsilon of ratio, rellich_neumann, rellich_regularity.
    std::map<std::string, std::array<double, 3>> spreads;
    bool passed = true;
    std::vector<std::string> failures;
};

/// Panels per edge for the unit square at scale eps: at least `per_eps`
/// per eps, capped so the mesh stays below `max_panels`.
int auto_panels(int base, int per_eps, double eps, int max_panels, int dim = 2);

SweepReport epsilon_sweep(const SweepConfig& config);

}  // namespace lplab
