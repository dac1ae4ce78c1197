#pragma once

#include "lplab/types.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace lplab {

enum class FieldKind { constant, layered, trigonometric };

/// Construction recipe for a periodic coefficient field A(Y) on the unit torus.
///
/// - constant:      A(Y) = matrix
/// - layered:       A(Y) = (mean + amplitude * sin(2 pi frequency Y[axis])) I
/// - trigonometric: A(Y) = shift I + sum of `terms` random symmetric
///                  cos/sin modes with integer frequencies in
///                  [-max_frequency, max_frequency]^d and entries drawn
///                  uniformly from [-trig_amplitude, trig_amplitude]
///
/// `blend` applies the identity interpolation A^s = s A + (1 - s) I on top of
/// the recipe; it is 1 for fields built directly from a descriptor.
struct FieldDescriptor {
    int dim = 2;
    FieldKind kind = FieldKind::constant;

    Mat3 matrix = Mat3::Identity();

    double mean = 2.0;
    double amplitude = 1.0;
    int frequency = 1;
    int axis = 0;

    std::uint64_t seed = 1;
    int terms = 3;
    int max_frequency = 1;
    double trig_amplitude = 0.1;
    double shift = 1.0;

    double holder_exponent = 0.5;
    double blend = 1.0;

    bool operator==(const FieldDescriptor&) const = default;
};

/// One Fourier mode cos_part * cos(2 pi k.Y) + sin_part * sin(2 pi k.Y).
struct TrigTerm {
    std::array<int, 3> k{0, 0, 0};
    Mat3 cos_part = Mat3::Zero();
    Mat3 sin_part = Mat3::Zero();
};

class CoefficientField {
public:
    CoefficientField(FieldDescriptor descriptor, Mat3 mean, std::vector<TrigTerm> terms);

    [[nodiscard]] int dim() const noexcept { return descriptor_.dim; }
    [[nodiscard]] const FieldDescriptor& descriptor() const noexcept { return descriptor_; }

    /// A(Y), with Y reduced mod 1 componentwise before any trigonometry, so
    /// eval(Y) and eval(Y + Z) agree bit for bit whenever Y + Z is exact.
    [[nodiscard]] Mat3 eval(const Vec3& y) const;

    /// Cell average of A (the constant Fourier mode).
    [[nodiscard]] const Mat3& mean_matrix() const noexcept { return mean_; }
    [[nodiscard]] const std::vector<TrigTerm>& terms() const noexcept { return terms_; }
    [[nodiscard]] bool is_constant() const noexcept { return terms_.empty(); }
    /// Largest |k_i| over all modes; 0 for a constant field.
    [[nodiscard]] int max_mode() const noexcept;

    /// Verified ellipticity: min over the 64^d grid of min(lambda_min, 1/lambda_max).
    [[nodiscard]] double mu() const noexcept { return mu_; }
    [[nodiscard]] double lambda_min() const noexcept { return lambda_min_; }
    [[nodiscard]] double lambda_max() const noexcept { return lambda_max_; }
    [[nodiscard]] double holder_exponent() const noexcept { return descriptor_.holder_exponent; }
    /// Declared Hoelder constant: max(Lipschitz bound, 2 * oscillation bound).
    [[nodiscard]] double holder_constant() const noexcept { return tau_; }

    /// Stable hash of the resolved representation (mean + modes).
    [[nodiscard]] std::uint64_t fingerprint() const noexcept { return fingerprint_; }

private:
    FieldDescriptor descriptor_;
    Mat3 mean_;
    std::vector<TrigTerm> terms_;
    double mu_ = 1.0;
    double lambda_min_ = 1.0;
    double lambda_max_ = 1.0;
    double tau_ = 0.0;
    std::uint64_t fingerprint_ = 0;
};

/// Build and validate a field. Throws InvalidArgument naming the first grid
/// point where the matrix fails to be positive definite.
CoefficientField make_field(const FieldDescriptor& descriptor);

/// A^s = s A + (1 - s) I.
CoefficientField interpolate_identity(const CoefficientField& field, double s);

/// Sampled lower bound for the Hoelder constant: max over random pairs of
/// |A(X) - A(Y)| / |X - Y|^lambda (spectral norm). Deterministic in `seed`.
double holder_estimate(const CoefficientField& field, double lambda, int n_pairs,
                       std::uint64_t seed = 7);

/// The same estimate applied to the difference field A - B.
double holder_estimate_difference(const CoefficientField& a, const CoefficientField& b,
                                  double lambda, int n_pairs, std::uint64_t seed = 7);

/// max over a 64^d grid of |A(Y) - B(Y)|.
double sup_difference(const CoefficientField& a, const CoefficientField& b);

/// Deterministic uniform doubles in [0, 1) from a 64-bit Mersenne twister;
/// used wherever reproducible random sampling is needed.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed);
    double next();
    double next(double lo, double hi) { return lo + (hi - lo) * next(); }
    int next_int(int lo, int hi);  // inclusive range

private:
    std::mt19937_64 engine_;
};

}  // namespace lplab
