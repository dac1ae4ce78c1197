#include "lplab/cell_homog.hpp"

#include <fftw3.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>

namespace lplab {

namespace {

using cplx = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

int next_pow2(int n) {
    int m = 1;
    while (m < n) m <<= 1;
    return m;
}

// Complex DFT workspace on an M^d grid, first index slowest.
class Grid {
public:
    Grid(int dim, int m) : dim_(dim), m_(m) {
        size_ = 1;
        for (int i = 0; i < dim; ++i) size_ *= m;
        buf_ = fftw_alloc_complex(size_);
        int n[3] = {m, m, m};
        fwd_ = fftw_plan_dft(dim, n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft(dim, n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Grid() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }
    Grid(const Grid&) = delete;
    Grid& operator=(const Grid&) = delete;

    [[nodiscard]] std::size_t size() const { return size_; }
    cplx* data() { return reinterpret_cast<cplx*>(buf_); }
    void forward() { fftw_execute(fwd_); }
    void backward() { fftw_execute(bwd_); }
    void clear() { std::fill(data(), data() + size_, cplx(0.0, 0.0)); }

    [[nodiscard]] std::size_t index(const std::array<int, 3>& k) const {
        std::size_t idx = 0;
        for (int i = 0; i < dim_; ++i) idx = idx * m_ + static_cast<std::size_t>((k[i] % m_ + m_) % m_);
        return idx;
    }
    [[nodiscard]] Vec3 point(std::size_t idx) const {
        Vec3 y = Vec3::Zero();
        for (int i = dim_ - 1; i >= 0; --i) {
            y(i) = static_cast<double>(idx % m_) / m_;
            idx /= m_;
        }
        return y;
    }
    // Signed frequency of a grid index.
    [[nodiscard]] std::array<int, 3> freq(std::size_t idx) const {
        std::array<int, 3> k{0, 0, 0};
        for (int i = dim_ - 1; i >= 0; --i) {
            int v = static_cast<int>(idx % m_);
            k[i] = v >= m_ / 2 ? v - m_ : v;
            idx /= m_;
        }
        return k;
    }

private:
    int dim_;
    int m_;
    std::size_t size_;
    fftw_complex* buf_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

// Galerkin operator of -div(A grad .) on the retained Fourier modes.
class CellOperator {
public:
    CellOperator(const CoefficientField& field, int cutoff)
        : d_(field.dim()), half_(cutoff / 2 - 1),
          grid_(field.dim(), next_pow2(cutoff + 2 * field.max_mode())) {
        std::array<int, 3> k{0, 0, 0};
        const int h = half_;
        for (k[0] = -h; k[0] <= h; ++k[0])
            for (k[1] = -h; k[1] <= h; ++k[1])
                for (k[2] = (d_ == 3 ? -h : 0); k[2] <= (d_ == 3 ? h : 0); ++k[2])
                    if (k[0] != 0 || k[1] != 0 || k[2] != 0) modes_.push_back(k);
        slots_.reserve(modes_.size());
        for (const auto& m : modes_) slots_.push_back(grid_.index(m));

        coeff_.resize(grid_.size());
        for (std::size_t p = 0; p < grid_.size(); ++p) coeff_[p] = field.eval(grid_.point(p));
        const Mat3 mean = field.mean_matrix();
        diag_.resize(modes_.size());
        for (std::size_t n = 0; n < modes_.size(); ++n) {
            Vec3 kv = kTwoPi * wave(modes_[n]);
            diag_[n] = kv.dot(mean * kv);
        }
        grad_.assign(d_, std::vector<cplx>(grid_.size()));
    }

    [[nodiscard]] std::size_t n_modes() const { return modes_.size(); }
    [[nodiscard]] const std::vector<std::array<int, 3>>& modes() const { return modes_; }
    [[nodiscard]] const std::vector<double>& diagonal() const { return diag_; }
    Grid& grid() { return grid_; }

    static Vec3 wave(const std::array<int, 3>& k) { return Vec3(k[0], k[1], k[2]); }

    // Fill grad_ with the grid values of grad chi for the coefficient vector c.
    void gradient_on_grid(const std::vector<cplx>& c) {
        for (int i = 0; i < d_; ++i) {
            grid_.clear();
            cplx* g = grid_.data();
            for (std::size_t n = 0; n < modes_.size(); ++n)
                g[slots_[n]] = cplx(0.0, kTwoPi * modes_[n][i]) * c[n];
            grid_.backward();
            std::copy(g, g + grid_.size(), grad_[i].begin());
        }
    }

    // out_k = sum_i (-2 pi i k_i) FT(flux_i)(k), flux_i given on the grid.
    void divergence(const std::vector<std::vector<cplx>>& flux, std::vector<cplx>& out,
                    std::vector<cplx>* outside = nullptr) {
        const double scale = 1.0 / static_cast<double>(grid_.size());
        out.assign(modes_.size(), cplx(0.0, 0.0));
        std::vector<cplx> full;
        if (outside) full.assign(grid_.size(), cplx(0.0, 0.0));
        for (int i = 0; i < d_; ++i) {
            cplx* g = grid_.data();
            std::copy(flux[i].begin(), flux[i].end(), g);
            grid_.forward();
            for (std::size_t n = 0; n < modes_.size(); ++n)
                out[n] += cplx(0.0, -kTwoPi * modes_[n][i]) * g[slots_[n]] * scale;
            if (outside)
                for (std::size_t p = 0; p < grid_.size(); ++p)
                    full[p] += cplx(0.0, -kTwoPi * grid_.freq(p)[i]) * g[p] * scale;
        }
        if (outside) {
            for (std::size_t s : slots_) full[s] = 0.0;
            *outside = std::move(full);
        }
    }

    void apply(const std::vector<cplx>& c, std::vector<cplx>& out,
               std::vector<cplx>* outside = nullptr) {
        gradient_on_grid(c);
        std::vector<std::vector<cplx>> flux(d_, std::vector<cplx>(grid_.size()));
        for (std::size_t p = 0; p < grid_.size(); ++p)
            for (int i = 0; i < d_; ++i) {
                cplx s = 0.0;
                for (int j = 0; j < d_; ++j) s += coeff_[p](i, j) * grad_[j][p];
                flux[i][p] = s;
            }
        divergence(flux, out, outside);
    }

    // Right-hand side sum_i (-2 pi i k_i) FT(a_ij)(k) for direction j, and
    // its part beyond the retained modes.
    void rhs(int j, std::vector<cplx>& out, std::vector<cplx>* outside = nullptr) {
        std::vector<std::vector<cplx>> flux(d_, std::vector<cplx>(grid_.size()));
        for (std::size_t p = 0; p < grid_.size(); ++p)
            for (int i = 0; i < d_; ++i) flux[i][p] = coeff_[p](i, j);
        divergence(flux, out, outside);
    }

    [[nodiscard]] const std::vector<Mat3>& coeff() const { return coeff_; }
    [[nodiscard]] const std::vector<std::vector<cplx>>& grad() const { return grad_; }

private:
    int d_;
    int half_;
    Grid grid_;
    std::vector<std::array<int, 3>> modes_;
    std::vector<std::size_t> slots_;
    std::vector<Mat3> coeff_;
    std::vector<double> diag_;
    std::vector<std::vector<cplx>> grad_;
};

// Dual (H^{-1}) norm of a mode vector.
double dual_norm(const std::vector<std::array<int, 3>>& modes, const std::vector<cplx>& r) {
    double s = 0.0;
    for (std::size_t n = 0; n < modes.size(); ++n) {
        Vec3 k = kTwoPi * CellOperator::wave(modes[n]);
        s += std::norm(r[n]) / k.squaredNorm();
    }
    return std::sqrt(s);
}

double dual_norm_grid(Grid& grid, const std::vector<cplx>& r) {
    double s = 0.0;
    for (std::size_t p = 0; p < r.size(); ++p) {
        if (r[p] == cplx(0.0, 0.0)) continue;
        Vec3 k = kTwoPi * CellOperator::wave(grid.freq(p));
        s += std::norm(r[p]) / k.squaredNorm();
    }
    return std::sqrt(s);
}

cplx dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

// Tables of exp(2 pi i k y) for |k| <= kmax.
void phase_table(double y, int kmax, std::vector<cplx>& out) {
    out.resize(2 * kmax + 1);
    double r = y - std::floor(y);
    out[kmax] = 1.0;
    for (int k = 1; k <= kmax; ++k) {
        cplx e = std::polar(1.0, kTwoPi * k * r);
        out[kmax + k] = e;
        out[kmax - k] = std::conj(e);
    }
}

}  // namespace

CorrectorField::CorrectorField(std::shared_ptr<const CoefficientField> field, int cutoff,
                               double tol, std::vector<std::vector<Mode>> modes,
                               double residual, double truncation_residual, int iterations)
    : field_(std::move(field)), cutoff_(cutoff), tol_(tol), modes_(std::move(modes)),
      residual_(residual), truncation_residual_(truncation_residual), iterations_(iterations) {
    require(field_ != nullptr, "corrector needs a coefficient field");
    require(static_cast<int>(modes_.size()) == field_->dim(), "one mode table per direction");
    for (const auto& table : modes_)
        for (const auto& m : table) {
            require(m.k[0] != 0 || m.k[1] != 0 || m.k[2] != 0, "zeroth corrector mode must be absent");
            for (int v : m.k) max_k_ = std::max(max_k_, std::abs(v));
        }
}

bool CorrectorField::is_zero() const noexcept {
    for (const auto& t : modes_)
        if (!t.empty()) return false;
    return true;
}

CorrectorField::Sample CorrectorField::eval(const Vec3& y) const {
    Sample s;
    if (is_zero()) return s;
    const int d = dim();
    thread_local std::vector<cplx> tab[3];
    for (int i = 0; i < d; ++i) phase_table(y(i), max_k_, tab[i]);
    for (int j = 0; j < d; ++j) {
        double v = 0.0;
        Vec3 g = Vec3::Zero();
        for (const auto& m : modes_[j]) {
            cplx e = tab[0][max_k_ + m.k[0]] * tab[1][max_k_ + m.k[1]];
            if (d == 3) e *= tab[2][max_k_ + m.k[2]];
            cplx t = m.coeff * e;
            v += t.real();
            // d/dy exp(2 pi i k.y) = 2 pi i k exp(...); real part of i t is -imag(t).
            double dr = -t.imag() * kTwoPi;
            for (int i = 0; i < d; ++i) g(i) += dr * m.k[i];
        }
        s.value(j) = v;
        s.jacobian.col(j) = g;
    }
    return s;
}

std::string CorrectorField::to_json() const {
    nlohmann::json doc;
    doc["format"] = "lplab-corrector";
    doc["version"] = 1;
    doc["dim"] = dim();
    doc["field_fingerprint"] = field_->fingerprint();
    doc["cutoff"] = cutoff_;
    doc["tolerance"] = tol_;
    doc["residual"] = residual_;
    doc["truncation_residual"] = truncation_residual_;
    doc["iterations"] = iterations_;
    nlohmann::json dirs = nlohmann::json::array();
    for (const auto& table : modes_) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& m : table)
            arr.push_back({m.k[0], m.k[1], m.k[2], m.coeff.real(), m.coeff.imag()});
        dirs.push_back(arr);
    }
    doc["modes"] = dirs;
    return doc.dump();
}

CorrectorField CorrectorField::from_json(const std::string& text,
                                         std::shared_ptr<const CoefficientField> field) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("corrector table: ") + e.what());
    }
    if (doc.value("format", "") != "lplab-corrector" || doc.value("version", 0) != 1)
        throw InvalidArgument("corrector table: unsupported format or version");
    require(field != nullptr, "corrector table needs its coefficient field");
    if (doc.at("field_fingerprint").get<std::uint64_t>() != field->fingerprint())
        throw InvalidArgument("corrector table was computed for a different coefficient field");
    std::vector<std::vector<Mode>> modes;
    for (const auto& arr : doc.at("modes")) {
        std::vector<Mode> table;
        for (const auto& e : arr)
            table.push_back(Mode{{e[0].get<int>(), e[1].get<int>(), e[2].get<int>()},
                                 cplx(e[3].get<double>(), e[4].get<double>())});
        modes.push_back(std::move(table));
    }
    return CorrectorField(std::move(field), doc.at("cutoff").get<int>(),
                          doc.at("tolerance").get<double>(), std::move(modes),
                          doc.at("residual").get<double>(),
                          doc.at("truncation_residual").get<double>(),
                          doc.at("iterations").get<int>());
}

CorrectorField solve_cell(std::shared_ptr<const CoefficientField> field,
                          const CellSolveOptions& options) {
    require(field != nullptr, "solve_cell needs a coefficient field");
    const int d = field->dim();
    const int cutoff = options.cutoff > 0 ? options.cutoff : (d == 2 ? 32 : 16);
    const double tol = options.tol > 0.0 ? options.tol : (d == 2 ? 1e-10 : 1e-8);
    require(cutoff >= 4, "cell cutoff must be at least 4");
    require(cutoff % 2 == 0, "cell cutoff must be even");

    std::vector<std::vector<CorrectorField::Mode>> tables(d);
    if (field->is_constant()) return CorrectorField(field, cutoff, tol, std::move(tables), 0.0, 0.0, 0);

    CellOperator op(*field, cutoff);
    const auto& modes = op.modes();
    const auto& diag = op.diagonal();
    const std::size_t n = op.n_modes();
    double worst_residual = 0.0;
    double worst_truncation = 0.0;
    int total_iterations = 0;

    for (int j = 0; j < d; ++j) {
        std::vector<cplx> b;
        op.rhs(j, b);
        const double bnorm = dual_norm(modes, b);
        if (bnorm == 0.0) continue;

        std::vector<cplx> x(n, 0.0), r = b, z(n), p(n), q(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
        p = z;
        cplx rz = dot(r, z);
        double rel = 1.0;
        int it = 0;
        for (; it < options.max_iterations; ++it) {
            rel = dual_norm(modes, r) / bnorm;
            if (rel <= tol) break;
            op.apply(p, q);
            double alpha = rz.real() / dot(p, q).real();
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
                z[i] = r[i] / diag[i];
            }
            cplx rz_new = dot(r, z);
            double beta = rz_new.real() / rz.real();
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
        if (rel > tol)
            throw ConvergenceError("cell problem did not converge within " +
                                       std::to_string(options.max_iterations) + " iterations",
                                   rel);
        // True residual, and the part of the cell equation the cutoff discards.
        std::vector<cplx> ax, outside_ax, outside_b;
        op.apply(x, ax, &outside_ax);
        op.rhs(j, b, &outside_b);
        std::vector<cplx> res(n);
        for (std::size_t i = 0; i < n; ++i) res[i] = b[i] - ax[i];
        rel = dual_norm(modes, res) / bnorm;
        for (std::size_t p2 = 0; p2 < outside_ax.size(); ++p2) outside_b[p2] -= outside_ax[p2];
        const double trunc = dual_norm_grid(op.grid(), outside_b) / bnorm;
        // The energy error of a Galerkin solution is quadratic in the
        // discarded residual, so the cutoff is adequate when trunc^2 <= tol.
        if (trunc * trunc > tol)
            throw ConvergenceError("cell cutoff " + std::to_string(cutoff) +
                                       " is too small for tolerance; increase cell.cutoff",
                                   trunc);
        worst_residual = std::max(worst_residual, rel);
        worst_truncation = std::max(worst_truncation, trunc);
        total_iterations += it;

        const double drop = 1e-16 * std::sqrt(std::real(dot(x, x)));
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(x[i]) > drop) tables[j].push_back({modes[i], x[i]});
    }
    return CorrectorField(field, cutoff, tol, std::move(tables), worst_residual, worst_truncation,
                          total_iterations);
}

HomogenizedMatrix homogenized_matrix(const CoefficientField& field, const CorrectorField& corr) {
    if (field.fingerprint() != corr.field().fingerprint() || field.dim() != corr.dim())
        throw InvalidArgument("corrector was computed for a different coefficient field");
    const int d = field.dim();
    HomogenizedMatrix h;
    h.dim = d;
    h.field_fingerprint = field.fingerprint();
    h.cutoff = corr.cutoff();
    h.cell_residual = corr.residual();
    if (corr.is_zero()) {
        h.a0 = field.mean_matrix();
        return h;
    }
    // Energy form <A (e_j - grad chi_j), e_i - grad chi_i> on the solver grid;
    // it equals the plain cell average at the Galerkin solution, is symmetric
    // by construction, and is exact for the trigonometric integrand.
    CellOperator op(field, corr.cutoff());
    const auto& modes = op.modes();
    std::vector<std::vector<cplx>> grads(d);
    for (int j = 0; j < d; ++j) {
        std::vector<cplx> c(op.n_modes(), 0.0);
        std::size_t pos = 0;
        for (const auto& m : corr.modes(j)) {
            while (pos < modes.size() && modes[pos] != m.k) ++pos;
            require(pos < modes.size(), "corrector mode outside the solver cutoff");
            c[pos] = m.coeff;
        }
        op.gradient_on_grid(c);
        grads[j].resize(op.grid().size() * d);
        for (int i = 0; i < d; ++i)
            for (std::size_t p = 0; p < op.grid().size(); ++p) grads[j][p * d + i] = op.grad()[i][p];
    }
    const std::size_t np = op.grid().size();
    Mat3 a0 = Mat3::Zero();
    for (std::size_t p = 0; p < np; ++p) {
        const Mat3& a = op.coeff()[p];
        Mat3 f = Mat3::Zero();  // column j = e_j - grad chi_j
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) f(i, j) = (i == j ? 1.0 : 0.0) - grads[j][p * d + i].real();
        a0.topLeftCorner(d, d) += f.topLeftCorner(d, d).transpose() *
                                  a.topLeftCorner(d, d) * f.topLeftCorner(d, d);
    }
    a0 /= static_cast<double>(np);
    h.a0 = embed(a0, d);
    return h;
}

FieldFunction corrector_solution(std::shared_ptr<const CorrectorField> corr, double eps, int i) {
    require(corr != nullptr, "corrector_solution needs a corrector");
    require(i >= 0 && i < corr->dim(), "corrector direction out of range");
    std::vector<double> w(corr->dim(), 0.0);
    w[i] = 1.0;
    return corrector_solution(std::move(corr), eps, w);
}

FieldFunction corrector_solution(std::shared_ptr<const CorrectorField> corr, double eps,
                                 const std::vector<double>& weights) {
    require(corr != nullptr, "corrector_solution needs a corrector");
    require(eps > 0.0, "epsilon must be positive");
    require(static_cast<int>(weights.size()) == corr->dim(), "one weight per direction");
    const int d = corr->dim();
    Vec3 c = Vec3::Zero();
    for (int i = 0; i < d; ++i) c(i) = weights[i];
    auto value = [corr, eps, c, d](const Vec3& x) {
        auto s = corr->eval(x / eps);
        double v = 0.0;
        for (int i = 0; i < d; ++i) v += c(i) * (x(i) - eps * s.value(i));
        return v;
    };
    auto grad = [corr, eps, c](const Vec3& x) {
        auto s = corr->eval(x / eps);
        return Vec3(c - s.jacobian * c);
    };
    auto coeff = [corr, eps](const Vec3& x) { return corr->field().eval(x / eps); };
    return FieldFunction(value, grad, coeff);
}

double corrector_gradient_bound(const CorrectorField& corr, const Vec3& offset) {
    if (corr.is_zero()) return 0.0;
    const int d = corr.dim();
    const int n = d == 2 ? 128 : 32;
    const int total = d == 2 ? n * n : n * n * n;
    double best = 0.0;
    for (int idx = 0; idx < total; ++idx) {
        Vec3 y(static_cast<double>(idx % n) / n, static_cast<double>((idx / n) % n) / n,
               d == 3 ? static_cast<double>(idx / (n * n)) / n : 0.0);
        best = std::max(best, corr.eval(y + offset).jacobian.norm());
    }
    return best;
}

}  // namespace lplab
