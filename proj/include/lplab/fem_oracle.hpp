#pragma once

#include "lplab/boundary_geom.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace lplab {

/// Structured grid of Q1 elements on an axis-aligned box, optionally with a
/// cell mask (d = 2) to carve out unions of rectangles.
class FemGrid {
public:
    static FemGrid box(int dim, const Vec3& lo, const Vec3& hi, double h);
    /// Active cells are those whose center satisfies `inside`.
    static FemGrid masked(const Vec3& lo, const Vec3& hi, double h,
                          const std::function<bool(const Vec3&)>& inside);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] const Vec3& lo() const noexcept { return lo_; }
    [[nodiscard]] const Vec3& hi() const noexcept { return hi_; }
    [[nodiscard]] double h() const noexcept { return h_; }
    [[nodiscard]] int cells(int axis) const { return n_[axis]; }
    [[nodiscard]] std::size_t n_nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t n_cells() const noexcept { return active_.size(); }
    [[nodiscard]] bool active(std::size_t cell) const { return active_[cell]; }
    [[nodiscard]] bool in_domain(std::size_t node) const { return in_domain_[node]; }
    [[nodiscard]] bool on_boundary(std::size_t node) const { return boundary_[node]; }
    [[nodiscard]] Vec3 node(std::size_t idx) const;
    [[nodiscard]] std::size_t node_index(int i, int j, int k = 0) const;
    [[nodiscard]] std::array<int, 3> node_coords(std::size_t idx) const;
    [[nodiscard]] std::size_t cell_index(int i, int j, int k = 0) const;
    /// Cell containing x (clamped to the grid), and the local coordinates in [0,1]^d.
    [[nodiscard]] std::size_t locate(const Vec3& x, Vec3& local) const;
    [[nodiscard]] std::array<std::size_t, 8> cell_nodes(std::size_t cell) const;

private:
    int dim_ = 2;
    Vec3 lo_ = Vec3::Zero();
    Vec3 hi_ = Vec3::Zero();
    double h_ = 0.0;
    std::array<int, 3> n_{1, 1, 1};
    std::size_t nodes_ = 0;
    std::vector<bool> active_;
    std::vector<bool> in_domain_;
    std::vector<bool> boundary_;

    void classify();
};

struct FemProblem {
    std::function<Mat3(const Vec3&)> coefficient;
    /// Oscillation length of the coefficient; 0 for slowly varying data.
    double epsilon = 0.0;
    enum class Bc { dirichlet, neumann } bc = Bc::dirichlet;
    std::function<double(const Vec3&)> dirichlet;
    std::function<double(const Vec3&, const Vec3&)> neumann;  // (x, outward normal)
    /// Adds the load -int F . grad phi, i.e. solves -div(A grad u) = div F.
    std::function<Vec3(const Vec3&)> flux_load;
    /// Unit point source, distributed with the nodal hat functions.
    std::optional<Vec3> point_load;
    double tol = 1e-10;
    int max_iterations = 20000;
};

class FemSolution {
public:
    FemSolution(FemGrid grid, Eigen::VectorXd values, std::function<Mat3(const Vec3&)> coefficient,
                double residual, int iterations);

    [[nodiscard]] const FemGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return values_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }
    [[nodiscard]] double value(const Vec3& x) const;
    [[nodiscard]] Vec3 gradient(const Vec3& x) const;
    [[nodiscard]] Mat3 coefficient(const Vec3& x) const { return coefficient_(x); }
    /// int grad u . A grad u over the active cells.
    [[nodiscard]] double energy() const;

private:
    FemGrid grid_;
    Eigen::VectorXd values_;
    std::function<Mat3(const Vec3&)> coefficient_;
    double residual_;
    int iterations_;

    [[nodiscard]] Vec3 cell_gradient(const Vec3& x) const;
};

/// Q1 Galerkin solve with preconditioned conjugate gradients. Throws
/// InvalidArgument when h > eps/8 for an oscillating coefficient, and
/// ConvergenceError when the iteration stalls.
FemSolution fem_solve(const FemGrid& grid, const FemProblem& problem);

/// Relative algebraic residual of given nodal values (Dirichlet rows fixed
/// by the values themselves): ||(K u - b)_free|| / ||(|K| |u|)_free||.
double fem_residual(const FemGrid& grid, const FemProblem& problem, const Eigen::VectorXd& values);

/// One-sided boundary gradient at x with outward normal n, extrapolated
/// quadratically from the depths h/2, 3h/2, 5h/2.
Vec3 fem_boundary_gradient(const FemSolution& sol, const Vec3& x, const Vec3& n);
std::vector<Vec3> fem_boundary_gradient(const FemSolution& sol, const BoundaryMesh& mesh);

struct GreenSample {
    Vec3 x;
    double value;
    Vec3 gradient;
};

/// FEM approximation of the fundamental solution with pole y on the box
/// y + [-L/2, L/2]^2 (d = 2) with outer data Gamma_{A0}. With `subtract`,
/// the frozen kernel Theta(., y; A(y)) is removed analytically and only the
/// bounded remainder is discretized; values and gradients then add Theta back.
class ReferenceGreen {
public:
    ReferenceGreen(std::function<Mat3(const Vec3&)> coefficient, const Mat3& a0, const Vec3& pole,
                   double box, double h, bool subtract = false);

    [[nodiscard]] double value(const Vec3& x) const;
    [[nodiscard]] Vec3 gradient(const Vec3& x) const;
    /// Bounded remainder u - Theta(., y; A(y)) (subtracted mode only).
    [[nodiscard]] double remainder(const Vec3& x) const;
    [[nodiscard]] const FemSolution& solution() const noexcept { return *sol_; }
    [[nodiscard]] const Vec3& pole() const noexcept { return pole_; }
    /// Samples on circles of the given radii around the pole.
    [[nodiscard]] std::vector<GreenSample> annulus(const std::vector<double>& radii, int n_angles) const;
    /// Flux of -A grad u out of the circle of radius r.
    [[nodiscard]] double flux(double r, int n_angles = 512) const;

private:
    std::function<Mat3(const Vec3&)> coefficient_;
    Vec3 pole_;
    bool subtract_;
    Mat3 frozen_;
    std::optional<FemSolution> sol_;
};

}  // namespace lplab
