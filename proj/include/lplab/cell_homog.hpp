#pragma once

#include "lplab/coeff_field.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lplab {

/// Torus-periodic correctors chi_i, stored as truncated Fourier series.
///
/// Sign convention: chi_i solves L(chi_i) = L(y_i), so the oscillating
/// solutions are w_i = y_i - chi_i and the corrected gradient factor is
/// (I - grad chi). Literature using w = y + chi flips every sign below.
class CorrectorField {
public:
    struct Mode {
        std::array<int, 3> k;
        std::complex<double> coeff;
    };

    CorrectorField(std::shared_ptr<const CoefficientField> field, int cutoff, double tol,
                   std::vector<std::vector<Mode>> modes, double residual,
                   double truncation_residual, int iterations);

    [[nodiscard]] int dim() const noexcept { return field_->dim(); }
    [[nodiscard]] int cutoff() const noexcept { return cutoff_; }
    [[nodiscard]] double tolerance() const noexcept { return tol_; }
    /// Relative residual of the Galerkin system in the H^{-1} dual norm.
    [[nodiscard]] double residual() const noexcept { return residual_; }
    /// Relative dual-norm size of the cell-equation residual outside the
    /// retained modes; measures what the cutoff throws away.
    [[nodiscard]] double truncation_residual() const noexcept { return truncation_residual_; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }
    [[nodiscard]] const CoefficientField& field() const noexcept { return *field_; }
    [[nodiscard]] std::shared_ptr<const CoefficientField> field_ptr() const noexcept { return field_; }
    /// Nonzero Fourier modes of chi_i (the zeroth mode is always absent).
    [[nodiscard]] const std::vector<Mode>& modes(int i) const { return modes_.at(i); }
    [[nodiscard]] bool is_zero() const noexcept;

    struct Sample {
        Vec3 value = Vec3::Zero();       // chi_i(y), i < d
        Mat3 jacobian = Mat3::Zero();    // jacobian(k, i) = d chi_i / d y_k
    };
    [[nodiscard]] Sample eval(const Vec3& y) const;
    [[nodiscard]] double chi(int i, const Vec3& y) const { return eval(y).value(i); }
    [[nodiscard]] Vec3 grad_chi(int i, const Vec3& y) const { return eval(y).jacobian.col(i); }

    /// JSON document with a version header; exact round trip of all modes.
    [[nodiscard]] std::string to_json() const;
    static CorrectorField from_json(const std::string& text,
                                    std::shared_ptr<const CoefficientField> field);

private:
    std::shared_ptr<const CoefficientField> field_;
    int cutoff_;
    double tol_;
    std::vector<std::vector<Mode>> modes_;
    double residual_;
    double truncation_residual_;
    int iterations_;
    int max_k_ = 0;
};

struct HomogenizedMatrix {
    int dim = 2;
    Mat3 a0 = Mat3::Identity();
    std::uint64_t field_fingerprint = 0;
    int cutoff = 0;
    double cell_residual = 0.0;
};

struct CellSolveOptions {
    int cutoff = 0;       // modes per dimension; 0 selects 32 (d = 2) or 16 (d = 3)
    double tol = 0.0;     // 0 selects 1e-10 (d = 2) or 1e-8 (d = 3)
    int max_iterations = 2000;
};

/// Spectral Galerkin solve of div(A grad chi_i) = div(A e_i) on the torus with
/// preconditioned conjugate gradients. Throws ConvergenceError if the
/// iteration budget runs out, or if the retained modes cannot meet `tol`.
CorrectorField solve_cell(std::shared_ptr<const CoefficientField> field,
                          const CellSolveOptions& options = {});

/// A0_ij = cell average of (a_ij - a_ik d_k chi_j), evaluated exactly on the
/// solver grid.
HomogenizedMatrix homogenized_matrix(const CoefficientField& field, const CorrectorField& corr);

/// A scalar function with analytic gradient, plus the coefficient used for
/// its conormal derivative n . A grad u.
class FieldFunction {
public:
    using ValueFn = std::function<double(const Vec3&)>;
    using GradFn = std::function<Vec3(const Vec3&)>;
    using CoeffFn = std::function<Mat3(const Vec3&)>;

    FieldFunction(ValueFn value, GradFn gradient, CoeffFn coefficient)
        : value_(std::move(value)), gradient_(std::move(gradient)),
          coefficient_(std::move(coefficient)) {}

    [[nodiscard]] double value(const Vec3& x) const { return value_(x); }
    [[nodiscard]] Vec3 gradient(const Vec3& x) const { return gradient_(x); }
    [[nodiscard]] Mat3 coefficient(const Vec3& x) const { return coefficient_(x); }
    [[nodiscard]] double conormal(const Vec3& x, const Vec3& n) const {
        return n.dot(coefficient_(x) * gradient_(x));
    }

private:
    ValueFn value_;
    GradFn gradient_;
    CoeffFn coefficient_;
};

/// w_i(x) = x_i - eps chi_i(x / eps), an exact solution of L_eps w = 0 up to
/// the cell residual.
FieldFunction corrector_solution(std::shared_ptr<const CorrectorField> corr, double eps, int i);

/// sum_i c_i w_i for the given weights (size d).
FieldFunction corrector_solution(std::shared_ptr<const CorrectorField> corr, double eps,
                                 const std::vector<double>& weights);

/// max |grad chi| (Frobenius norm of the Jacobian) over a fine torus grid,
/// optionally shifted by `offset`.
double corrector_gradient_bound(const CorrectorField& corr, const Vec3& offset = Vec3::Zero());

}  // namespace lplab
