#pragma once

#include "lplab/boundary_geom.hpp"
#include "lplab/twoscale_kernel.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace lplab {

enum class OperatorKind { single_layer = 0, conormal_trace = 1, double_layer_trace = 2 };

/// Dense Nystrom matrix of S, K (conormal trace of S) or K* (trace of D).
///
/// Entry conventions, with w_j the panel measures:
///   S_ij  = int_{panel j} Gamma(P_i, Y) dY
///   K_ij  = n_i . A(P_i/eps) grad_x Gamma(P_i, P_j) w_j        (i != j)
///   K*_ij = w_j K_ji / w_i
/// so that <K f, g>_sigma = <f, K* g>_sigma holds exactly. The diagonal of K
/// is chosen so that the sigma-weighted column sums of (I/2 + K) vanish;
/// this gives K*(1) = -1/2, the trace of D(1) = -1 inside Omega.
struct BemOperator {
    OperatorKind kind = OperatorKind::single_layer;
    Eigen::MatrixXd matrix;
    std::uint64_t mesh_id = 0;
    std::string kernel_id;
    std::string diagonal;

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
    [[nodiscard]] std::string to_binary() const;
    static BemOperator from_binary(const std::string& bytes);
};

struct AssemblyOptions {
    /// Entries whose target lies within this many panel sizes of the source
    /// panel are integrated with adaptive Gauss quadrature instead of the
    /// midpoint rule.
    double near_factor = 2.0;
};

BemOperator assemble_S(const BoundaryMesh& mesh, const KernelModel& kernel,
                       const AssemblyOptions& options = {});
BemOperator assemble_K(const BoundaryMesh& mesh, const KernelModel& kernel,
                       const AssemblyOptions& options = {});
BemOperator assemble_Kstar(const BoundaryMesh& mesh, const KernelModel& kernel,
                           const AssemblyOptions& options = {});
/// K* from an assembled K.
BemOperator kstar_from_k(const BoundaryMesh& mesh, const BemOperator& k);

/// Analytic self-integral of the frozen-coefficient kernel over panel i.
double single_layer_self(const BoundaryMesh& mesh, std::size_t i, const Mat3& e);

struct PotentialOptions {
    int max_depth = 14;
    double refine_ratio = 2.0;  // split while dist < ratio * piece size
};

/// int Gamma(X, Y) f(Y) dY with piecewise-constant f. Sets *degraded when X
/// lies within 0.1 local panel sizes of the boundary.
double single_layer_eval(const BoundaryMesh& mesh, const KernelModel& kernel,
                         const std::vector<double>& f, const Vec3& x, bool* degraded = nullptr,
                         const PotentialOptions& options = {});
/// int n(Y) . A(Y/eps) grad_y Gamma(X, Y) f(Y) dY.
double double_layer_eval(const BoundaryMesh& mesh, const KernelModel& kernel,
                         const std::vector<double>& f, const Vec3& x, bool* degraded = nullptr,
                         const PotentialOptions& options = {});
/// grad_X of the double layer potential.
Vec3 double_layer_grad(const BoundaryMesh& mesh, const KernelModel& kernel,
                       const std::vector<double>& f, const Vec3& x,
                       const PotentialOptions& options = {});
/// grad_X of the single layer potential.
Vec3 single_layer_grad(const BoundaryMesh& mesh, const KernelModel& kernel,
                       const std::vector<double>& f, const Vec3& x,
                       const PotentialOptions& options = {});

enum class Side { plus, minus };

/// Boundary traces of grad S(f) from inside (plus) and outside (minus):
/// +-1/2 n b f + principal value, b = 1 / (n . A n). Conormal parts equal
/// (+-I/2 + K) f with the assembled K.
std::vector<Vec3> trace_grad_single_layer(const BoundaryMesh& mesh, const KernelModel& kernel,
                                          const std::vector<double>& f, Side side,
                                          const AssemblyOptions& options = {});

/// Conormal components n . A grad of a per-panel vector field.
std::vector<double> conormal_part(const BoundaryMesh& mesh, const KernelModel& kernel,
                                  const std::vector<Vec3>& g);
/// Tangential components (I - n n^T) g.
std::vector<Vec3> tangential_part(const BoundaryMesh& mesh, const std::vector<Vec3>& g);

struct DenseSolveResult {
    Eigen::VectorXd x;
    double residual = 0.0;   // ||M x - b|| / ||b||
    double rcond = 0.0;      // reciprocal condition estimate (direct path only)
    int iterations = 0;      // Krylov iterations (0 on the direct path)
    bool direct = true;
};

/// LU below 2000 unknowns, restarted GMRES (tol 1e-10, 500 iterations)
/// above. Throws ConvergenceError if GMRES stalls.
DenseSolveResult solve_dense(const Eigen::MatrixXd& m, const Eigen::VectorXd& b);

struct ContinuityProbe {
    double value = 0.0;      // numerator / proxy
    double numerator = 0.0;  // max ||(K_A - K_B) f||_2 over unit densities
    double proxy = 0.0;      // sup|A - B| + sampled Hoelder constant of A - B
};

/// Measured continuity of K in the coefficients: both kernels on the same
/// mesh and scale; random densities normalized in L2(sigma).
ContinuityProbe operator_continuity_probe(const BoundaryMesh& mesh, const TwoScaleKernel& a,
                                          const TwoScaleKernel& b, int n_densities,
                                          std::uint64_t seed = 11);

/// Per-panel max over truncation radii rho of
/// |sum_{|P_j - P_i| > rho} K_ij f_j| with the off-diagonal conormal entries.
std::vector<double> truncated_maximal_probe(const BoundaryMesh& mesh, const BemOperator& k,
                                            const std::vector<double>& f,
                                            const std::vector<double>& radii);

}  // namespace lplab
