#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace lplab {

// Points and coefficient matrices are stored in three components even in
// d = 2; the unused z entries are zero and the unused diagonal entry of a 2D
// coefficient matrix is one, so determinants and inverses of the embedded
// matrix agree with those of the d x d block.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class SingularEvaluation : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}
    [[nodiscard]] double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

inline void require(bool ok, const std::string& message) {
    if (!ok) throw InvalidArgument(message);
}

/// Embed the leading d x d block of `m` into a 3x3 matrix with unit padding.
inline Mat3 embed(const Mat3& m, int dim) {
    Mat3 out = Mat3::Identity();
    out.topLeftCorner(dim, dim) = m.topLeftCorner(dim, dim);
    return out;
}

/// Extreme eigenvalues of the leading d x d block of a symmetric matrix.
inline std::pair<double, double> sym_eig_range(const Mat3& m, int dim) {
    if (dim == 2) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m.topLeftCorner<2, 2>(),
                                                          Eigen::EigenvaluesOnly);
        return {es.eigenvalues()(0), es.eigenvalues()(1)};
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    es.computeDirect(m, Eigen::EigenvaluesOnly);
    return {es.eigenvalues()(0), es.eigenvalues()(2)};
}

/// Spectral norm of the leading d x d block of a symmetric matrix.
inline double sym_norm(const Mat3& m, int dim) {
    auto [lo, hi] = sym_eig_range(m, dim);
    return std::max(std::abs(lo), std::abs(hi));
}

/// FNV-1a, used for provenance fingerprints and config hashes; stable across
/// platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace lplab
