#pragma once

#include "lplab/types.hpp"

namespace lplab {

enum class Slot { first, second };

/// Fundamental solution of -div(E grad u) = delta for a constant SPD matrix E.
///
///   d = 3:  Theta(X, Y) = 1 / (4 pi sqrt(det E) q^{1/2})
///   d = 2:  Theta(X, Y) = -ln q / (4 pi sqrt(det E))
///
/// with q = (X - Y) . E^{-1} (X - Y).
class ConstKernel {
public:
    ConstKernel(int dim, const Mat3& e);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] const Mat3& matrix() const noexcept { return e_; }
    [[nodiscard]] const Mat3& inverse() const noexcept { return einv_; }
    [[nodiscard]] double sqrt_det() const noexcept { return sqrt_det_; }

    [[nodiscard]] double theta(const Vec3& x, const Vec3& y) const;
    /// Gradient in the first (X) or second (Y) slot.
    [[nodiscard]] Vec3 grad(const Vec3& x, const Vec3& y, Slot which = Slot::first) const;

    /// d/dY of grad_X Theta: entry (i, k) = d^2 Theta / dX_i dY_k.
    [[nodiscard]] Mat3 mixed_hessian(const Vec3& x, const Vec3& y) const;
    /// q(z) = z . E^{-1} z
    [[nodiscard]] double quad(const Vec3& z) const { return z.dot(einv_ * z); }

private:
    int dim_;
    Mat3 e_;
    Mat3 einv_;
    double sqrt_det_;
    double scale_;
};

/// |grad^N Theta(X,0;E) - grad^N Theta(X,0;F)| |X|^{d-2+N} / |E - F| with the
/// spectral norm; 0 when E == F. In d = 2 and N = 0 the logarithm is not
/// homogeneous, and the quotient grows like ln|X|.
/// Flux of -E grad Theta(., 0) out of the circle (sphere) of radius r; one
/// for an exact fundamental solution.
double kernel_flux(const ConstKernel& kernel, double r, int n = 256);

double theta_family_difference(int dim, const Mat3& e, const Mat3& f, const Vec3& x, int order);

}  // namespace lplab
