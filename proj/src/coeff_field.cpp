#include "lplab/coeff_field.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace lplab {

namespace {

constexpr int kVerifyGrid = 64;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double reduce(double y) { return y - std::floor(y); }

std::string describe_point(const Vec3& y, int dim) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (int i = 0; i < dim; ++i) os << (i ? ", " : "") << y(i);
    os << ')';
    return os.str();
}

Mat3 random_symmetric(UniformSource& rng, int dim, double amplitude) {
    Mat3 m = Mat3::Zero();
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            double v = rng.next(-amplitude, amplitude);
            m(i, j) = v;
            m(j, i) = v;
        }
    return m;
}

std::string canonical(const Mat3& mean, const std::vector<TrigTerm>& terms, int dim) {
    std::ostringstream os;
    os.precision(17);
    os << dim << ';';
    for (int i = 0; i < 9; ++i) os << mean.data()[i] << ',';
    for (const auto& t : terms) {
        os << '|' << t.k[0] << ' ' << t.k[1] << ' ' << t.k[2];
        for (int i = 0; i < 9; ++i) os << ',' << t.cos_part.data()[i] << ',' << t.sin_part.data()[i];
    }
    return os.str();
}

}  // namespace

UniformSource::UniformSource(std::uint64_t seed) : engine_(seed) {}

double UniformSource::next() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int UniformSource::next_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
}

CoefficientField::CoefficientField(FieldDescriptor descriptor, Mat3 mean,
                                   std::vector<TrigTerm> terms)
    : descriptor_(std::move(descriptor)), mean_(embed(mean, descriptor_.dim)),
      terms_(std::move(terms)) {
    const int d = dim();
    require(d == 2 || d == 3, "coefficient field dimension must be 2 or 3");
    for (auto& t : terms_) {
        for (int i = d; i < 3; ++i) t.k[i] = 0;
        for (int i = d; i < 3; ++i) {
            t.cos_part.row(i).setZero();
            t.cos_part.col(i).setZero();
            t.sin_part.row(i).setZero();
            t.sin_part.col(i).setZero();
        }
    }

    // Verify symmetry, positivity and the two-sided bound on the sample grid.
    const int n = kVerifyGrid;
    const int total = d == 2 ? n * n : n * n * n;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int idx = 0; idx < total; ++idx) {
        Vec3 y(static_cast<double>(idx % n) / n, static_cast<double>((idx / n) % n) / n,
               d == 3 ? static_cast<double>(idx / (n * n)) / n : 0.0);
        Mat3 a = eval(y);
        if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-14 * (1.0 + a.cwiseAbs().maxCoeff()))
            throw InvalidArgument("coefficient matrix is not symmetric at Y = " + describe_point(y, d));
        auto [emin, emax] = sym_eig_range(a, d);
        if (!(emin > 0.0))
            throw InvalidArgument("coefficient matrix is not positive definite at Y = " +
                                  describe_point(y, d) + " (min eigenvalue " +
                                  std::to_string(emin) + ")");
        lo = std::min(lo, emin);
        hi = std::max(hi, emax);
    }
    lambda_min_ = lo;
    lambda_max_ = hi;
    mu_ = std::min({lo, 1.0 / hi, 1.0});

    double lipschitz = 0.0;
    double oscillation = 0.0;
    for (const auto& t : terms_) {
        double knorm = std::sqrt(double(t.k[0] * t.k[0] + t.k[1] * t.k[1] + t.k[2] * t.k[2]));
        double amp = sym_norm(t.cos_part, d) + sym_norm(t.sin_part, d);
        lipschitz += kTwoPi * knorm * amp;
        oscillation += amp;
    }
    tau_ = std::max(lipschitz, 2.0 * oscillation);
    fingerprint_ = fnv1a(canonical(mean_, terms_, d));
}

Mat3 CoefficientField::eval(const Vec3& y) const {
    const int d = dim();
    Mat3 a = mean_;
    if (terms_.empty()) return a;
    double r[3] = {reduce(y(0)), reduce(y(1)), d == 3 ? reduce(y(2)) : 0.0};
    for (const auto& t : terms_) {
        double phase = kTwoPi * (t.k[0] * r[0] + t.k[1] * r[1] + t.k[2] * r[2]);
        a.noalias() += std::cos(phase) * t.cos_part + std::sin(phase) * t.sin_part;
    }
    return a;
}

int CoefficientField::max_mode() const noexcept {
    int m = 0;
    for (const auto& t : terms_)
        for (int v : t.k) m = std::max(m, std::abs(v));
    return m;
}

CoefficientField make_field(const FieldDescriptor& desc) {
    require(desc.dim == 2 || desc.dim == 3, "field.dim must be 2 or 3");
    require(desc.holder_exponent > 0.0 && desc.holder_exponent < 1.0,
            "field.holder_exponent must lie in (0, 1)");
    require(desc.blend >= 0.0 && desc.blend <= 1.0, "field.blend must lie in [0, 1]");
    const int d = desc.dim;
    Mat3 mean = Mat3::Identity();
    std::vector<TrigTerm> terms;

    switch (desc.kind) {
    case FieldKind::constant:
        mean = embed(desc.matrix, d);
        break;
    case FieldKind::layered: {
        require(desc.axis >= 0 && desc.axis < d, "field.axis out of range");
        require(desc.frequency > 0, "field.frequency must be positive");
        mean = embed(desc.mean * Mat3::Identity(), d);
        TrigTerm t;
        t.k[desc.axis] = desc.frequency;
        t.sin_part = desc.amplitude * Mat3::Identity();
        terms.push_back(t);
        break;
    }
    case FieldKind::trigonometric: {
        require(desc.terms >= 0, "field.terms must be non-negative");
        require(desc.max_frequency >= 1, "field.max_frequency must be at least 1");
        UniformSource rng(desc.seed);
        mean = embed(desc.shift * Mat3::Identity(), d);
        for (int n = 0; n < desc.terms; ++n) {
            TrigTerm t;
            do {
                for (int i = 0; i < d; ++i) t.k[i] = rng.next_int(-desc.max_frequency, desc.max_frequency);
            } while (t.k[0] == 0 && t.k[1] == 0 && t.k[2] == 0);
            t.cos_part = random_symmetric(rng, d, desc.trig_amplitude);
            t.sin_part = random_symmetric(rng, d, desc.trig_amplitude);
            terms.push_back(t);
        }
        break;
    }
    }

    if (desc.blend != 1.0) {
        const double s = desc.blend;
        mean = s * mean + (1.0 - s) * Mat3::Identity();
        for (auto& t : terms) {
            t.cos_part *= s;
            t.sin_part *= s;
        }
        if (s == 0.0) terms.clear();
    }
    return CoefficientField(desc, mean, std::move(terms));
}

CoefficientField interpolate_identity(const CoefficientField& field, double s) {
    require(s >= 0.0 && s <= 1.0, "interpolation parameter s must lie in [0, 1]");
    FieldDescriptor desc = field.descriptor();
    desc.blend = field.descriptor().blend * s;
    return make_field(desc);
}

namespace {

double holder_pairs(const auto& diff_at, int dim, double lambda, int n_pairs, std::uint64_t seed) {
    UniformSource rng(seed);
    double best = 0.0;
    for (int p = 0; p < n_pairs; ++p) {
        Vec3 x = Vec3::Zero();
        Vec3 dir = Vec3::Zero();
        for (int i = 0; i < dim; ++i) {
            x(i) = rng.next();
            dir(i) = rng.next(-1.0, 1.0);
        }
        if (dir.norm() == 0.0) continue;
        // Separations log-uniform in [1e-4, 1].
        double len = std::pow(10.0, rng.next(-4.0, 0.0));
        Vec3 y = x + len * dir.normalized();
        double dist = (x - y).norm();
        double num = sym_norm(diff_at(x) - diff_at(y), dim);
        best = std::max(best, num / std::pow(dist, lambda));
    }
    return best;
}

}  // namespace

double holder_estimate(const CoefficientField& field, double lambda, int n_pairs,
                       std::uint64_t seed) {
    require(lambda > 0.0 && lambda <= 1.0, "Hoelder exponent must lie in (0, 1]");
    return holder_pairs([&](const Vec3& y) { return field.eval(y); }, field.dim(), lambda,
                        n_pairs, seed);
}

double holder_estimate_difference(const CoefficientField& a, const CoefficientField& b,
                                  double lambda, int n_pairs, std::uint64_t seed) {
    require(a.dim() == b.dim(), "fields must share a dimension");
    require(lambda > 0.0 && lambda <= 1.0, "Hoelder exponent must lie in (0, 1]");
    return holder_pairs([&](const Vec3& y) { return Mat3(a.eval(y) - b.eval(y)); }, a.dim(),
                        lambda, n_pairs, seed);
}

double sup_difference(const CoefficientField& a, const CoefficientField& b) {
    require(a.dim() == b.dim(), "fields must share a dimension");
    const int d = a.dim();
    const int n = kVerifyGrid;
    const int total = d == 2 ? n * n : n * n * n;
    double best = 0.0;
    for (int idx = 0; idx < total; ++idx) {
        Vec3 y(static_cast<double>(idx % n) / n, static_cast<double>((idx / n) % n) / n,
               d == 3 ? static_cast<double>(idx / (n * n)) / n : 0.0);
        best = std::max(best, sym_norm(a.eval(y) - b.eval(y), d));
    }
    return best;
}

}  // namespace lplab
