#include "lplab/layer_ops.hpp"

#include "lplab/quadrature.hpp"

#include <unsupported/Eigen/IterativeSolvers>

#include <cstring>
#include <numbers>

namespace lplab {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr double kOnePointFactor = 8.0;

// Segment [a, b] in d = 2, or the rectangle origin + [0,1] eu + [0,1] ev in d = 3.
struct Piece {
    Vec3 origin;
    Vec3 eu;
    Vec3 ev;
    bool flat2d;

    [[nodiscard]] double size() const { return flat2d ? eu.norm() : std::max(eu.norm(), ev.norm()); }
    [[nodiscard]] double measure() const { return flat2d ? eu.norm() : eu.cross(ev).norm(); }
    [[nodiscard]] Vec3 center() const { return flat2d ? Vec3(origin + 0.5 * eu) : Vec3(origin + 0.5 * eu + 0.5 * ev); }
    [[nodiscard]] double distance(const Vec3& x) const {
        Vec3 d = x - origin;
        double u = std::clamp(d.dot(eu) / eu.squaredNorm(), 0.0, 1.0);
        if (flat2d) return (d - u * eu).norm();
        double v = std::clamp(d.dot(ev) / ev.squaredNorm(), 0.0, 1.0);
        return (d - u * eu - v * ev).norm();
    }
};

Piece piece_of(const Panel& p, int dim) {
    if (dim == 2) return {p.corners[0], p.corners[1] - p.corners[0], Vec3::Zero(), true};
    return {p.corners[0], p.corners[1] - p.corners[0], p.corners[3] - p.corners[0], false};
}

template <class T, class F>
T integrate_piece(const Piece& pc, const Vec3& x, const F& f, const PotentialOptions& opt, int depth) {
    const double dist = pc.distance(x);
    if (depth < opt.max_depth && dist < opt.refine_ratio * pc.size()) {
        if (pc.flat2d) {
            Piece a{pc.origin, 0.5 * pc.eu, Vec3::Zero(), true};
            Piece b{pc.origin + 0.5 * pc.eu, 0.5 * pc.eu, Vec3::Zero(), true};
            return integrate_piece<T>(a, x, f, opt, depth + 1) + integrate_piece<T>(b, x, f, opt, depth + 1);
        }
        T sum = integrate_piece<T>(Piece{pc.origin, 0.5 * pc.eu, 0.5 * pc.ev, false}, x, f, opt, depth + 1);
        sum += integrate_piece<T>(Piece{pc.origin + 0.5 * pc.eu, 0.5 * pc.eu, 0.5 * pc.ev, false}, x, f, opt, depth + 1);
        sum += integrate_piece<T>(Piece{pc.origin + 0.5 * pc.ev, 0.5 * pc.eu, 0.5 * pc.ev, false}, x, f, opt, depth + 1);
        sum += integrate_piece<T>(Piece{pc.origin + 0.5 * pc.eu + 0.5 * pc.ev, 0.5 * pc.eu, 0.5 * pc.ev, false}, x, f, opt, depth + 1);
        return sum;
    }
    const double meas = pc.measure();
    if (pc.flat2d) {
        const QuadRule& g = gauss_rule(4);
        T sum = g.weights[0] * f(Vec3(pc.origin + g.nodes[0] * pc.eu));
        for (std::size_t k = 1; k < g.nodes.size(); ++k) sum += g.weights[k] * f(Vec3(pc.origin + g.nodes[k] * pc.eu));
        return meas * sum;
    }
    const QuadRule& g = gauss_rule(3);
    T sum = g.weights[0] * g.weights[0] * f(Vec3(pc.origin + g.nodes[0] * pc.eu + g.nodes[0] * pc.ev));
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) {
            if (a == 0 && b == 0) continue;
            sum += g.weights[a] * g.weights[b] * f(Vec3(pc.origin + g.nodes[a] * pc.eu + g.nodes[b] * pc.ev));
        }
    return meas * sum;
}

// Integral over a whole panel: midpoint rule when the target is far away.
template <class T, class F>
T integrate_panel(const Panel& p, int dim, const Vec3& x, const F& f, const PotentialOptions& opt) {
    Piece pc = piece_of(p, dim);
    if (pc.distance(x) > kOnePointFactor * p.size()) return T(p.measure * f(p.centroid));
    return integrate_piece<T>(pc, x, f, opt, 0);
}

bool is_near(const Panel& target_panel, const Panel& source, int dim, double factor) {
    return piece_of(source, dim).distance(target_panel.centroid) < factor * source.size();
}

void check_density(const BoundaryMesh& mesh, const std::vector<double>& f) {
    require(f.size() == mesh.size(), "density length does not match the mesh");
}

bool degraded_point(const BoundaryMesh& mesh, const Vec3& x) {
    for (const auto& p : mesh.panels())
        if (piece_of(p, mesh.dim()).distance(x) < 0.1 * p.size()) return true;
    return false;
}

// Row i of the gradient matrix: G_ij = int_{panel j} grad_x Gamma(P_i, Y) dY
// (midpoint away from P_i), G_ii = 0.
void gradient_row(const BoundaryMesh& mesh, const KernelModel& kernel, std::size_t i,
                  const KernelAnchor& at, const AssemblyOptions& options, std::vector<Vec3>& row) {
    const int d = mesh.dim();
    const Panel& pi = mesh.panel(i);
    row.assign(mesh.size(), Vec3::Zero());
    PotentialOptions popt;
    for (std::size_t j = 0; j < mesh.size(); ++j) {
        if (j == i) continue;
        const Panel& pj = mesh.panel(j);
        if (is_near(pi, pj, d, options.near_factor)) {
            row[j] = integrate_piece<Vec3>(piece_of(pj, d), pi.centroid,
                                           [&](const Vec3& y) { return kernel.grad_x(at, y); }, popt, 0);
        } else {
            row[j] = pj.measure * kernel.grad_x(at, pj.centroid);
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string BemOperator::to_binary() const {
    std::string out;
    auto put = [&out](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
    const char magic[8] = {'L', 'P', 'L', 'A', 'B', 'O', 'P', '\0'};
    put(magic, 8);
    std::uint32_t version = 1, k = static_cast<std::uint32_t>(kind);
    std::uint64_t n = size(), len = kernel_id.size();
    put(&version, 4);
    put(&k, 4);
    put(&n, 8);
    put(&mesh_id, 8);
    put(&len, 8);
    put(kernel_id.data(), len);
    for (Eigen::Index r = 0; r < matrix.rows(); ++r)
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
            double v = matrix(r, c);
            put(&v, 8);
        }
    return out;
}

BemOperator BemOperator::from_binary(const std::string& bytes) {
    std::size_t pos = 0;
    auto get = [&](void* p, std::size_t n) {
        if (pos + n > bytes.size()) throw InvalidArgument("operator file is truncated");
        std::memcpy(p, bytes.data() + pos, n);
        pos += n;
    };
    char magic[8];
    get(magic, 8);
    if (std::memcmp(magic, "LPLABOP", 8) != 0) throw InvalidArgument("not an operator file");
    std::uint32_t version = 0, k = 0;
    std::uint64_t n = 0, len = 0;
    BemOperator op;
    get(&version, 4);
    if (version != 1) throw InvalidArgument("unsupported operator file version");
    get(&k, 4);
    if (k > 2) throw InvalidArgument("unknown operator kind");
    op.kind = static_cast<OperatorKind>(k);
    get(&n, 8);
    get(&op.mesh_id, 8);
    get(&len, 8);
    op.kernel_id.resize(len);
    get(op.kernel_id.data(), len);
    op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < op.matrix.rows(); ++r)
        for (Eigen::Index c = 0; c < op.matrix.cols(); ++c) get(&op.matrix(r, c), 8);
    return op;
}

double single_layer_self(const BoundaryMesh& mesh, std::size_t i, const Mat3& e) {
    const int d = mesh.dim();
    const Panel& p = mesh.panel(i);
    ConstKernel k(d, e);
    const double c = 1.0 / (kFourPi * k.sqrt_det());
    if (d == 2) {
        const double h = p.measure;
        return -c * (2.0 * h * (std::log(0.5 * h) - 1.0) + h * std::log(k.quad(p.t1)));
    }
    // Split the rectangle into triangles (P, v_k, v_k+1); each contributes
    // h_k int_0^1 dt / |v_k - P + t (v_k+1 - v_k)|_{E^-1}.
    const QuadRule& g = gauss_rule(24);
    double total = 0.0;
    for (int kk = 0; kk < 4; ++kk) {
        const Vec3 a = p.corners[kk] - p.centroid;
        const Vec3 edge = p.corners[(kk + 1) % 4] - p.corners[kk];
        const double hk = a.cross(edge).norm();
        double s = 0.0;
        for (std::size_t q = 0; q < g.nodes.size(); ++q)
            s += g.weights[q] / std::sqrt(k.quad(a + g.nodes[q] * edge));
        total += hk * s;
    }
    return c * total;
}

BemOperator assemble_S(const BoundaryMesh& mesh, const KernelModel& kernel,
                       const AssemblyOptions& options) {
    require(mesh.dim() == kernel.dim(), "mesh and kernel dimensions differ");
    const int d = mesh.dim();
    const std::size_t n = mesh.size();
    BemOperator op;
    op.kind = OperatorKind::single_layer;
    op.mesh_id = mesh.id();
    op.kernel_id = kernel.id();
    op.diagonal = "analytic frozen-coefficient self integral";
    op.matrix.resize(n, n);
    PotentialOptions popt;
    for (std::size_t i = 0; i < n; ++i) {
        const Panel& pi = mesh.panel(i);
        for (std::size_t j = 0; j < n; ++j) {
            const Panel& pj = mesh.panel(j);
            double v;
            if (i == j)
                v = single_layer_self(mesh, i, kernel.coefficient(pi.centroid));
            else if (is_near(pi, pj, d, options.near_factor))
                v = integrate_piece<double>(piece_of(pj, d), pi.centroid,
                                            [&](const Vec3& y) { return kernel.gamma(pi.centroid, y); }, popt, 0);
            else
                v = pj.measure * kernel.gamma(pi.centroid, pj.centroid);
            op.matrix(i, j) = v;
        }
    }
    return op;
}

BemOperator assemble_K(const BoundaryMesh& mesh, const KernelModel& kernel,
                       const AssemblyOptions& options) {
    require(mesh.dim() == kernel.dim(), "mesh and kernel dimensions differ");
    const std::size_t n = mesh.size();
    BemOperator op;
    op.kind = OperatorKind::conormal_trace;
    op.mesh_id = mesh.id();
    op.kernel_id = kernel.id();
    op.diagonal = "sigma-weighted column sums of (I/2 + K) vanish";
    op.matrix.resize(n, n);
    std::vector<Vec3> row;
    for (std::size_t i = 0; i < n; ++i) {
        const Panel& pi = mesh.panel(i);
        KernelAnchor at = kernel.anchor(pi.centroid);
        gradient_row(mesh, kernel, i, at, options, row);
        const Vec3 an = at.a * pi.normal;
        for (std::size_t j = 0; j < n; ++j) op.matrix(i, j) = j == i ? 0.0 : an.dot(row[j]);
    }
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (i != j) s += mesh.panel(i).measure * op.matrix(i, j);
        const double wj = mesh.panel(j).measure;
        op.matrix(j, j) = -0.5 - s / wj;
    }
    return op;
}

BemOperator kstar_from_k(const BoundaryMesh& mesh, const BemOperator& k) {
    require(k.kind == OperatorKind::conormal_trace, "K* is built from a conormal-trace operator");
    require(k.size() == mesh.size(), "operator size does not match the mesh");
    const std::size_t n = mesh.size();
    BemOperator op;
    op.kind = OperatorKind::double_layer_trace;
    op.mesh_id = k.mesh_id;
    op.kernel_id = k.kernel_id;
    op.diagonal = "row sums of K* equal -1/2";
    op.matrix.resize(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            op.matrix(i, j) = mesh.panel(j).measure * k.matrix(j, i) / mesh.panel(i).measure;
    return op;
}

BemOperator assemble_Kstar(const BoundaryMesh& mesh, const KernelModel& kernel,
                           const AssemblyOptions& options) {
    return kstar_from_k(mesh, assemble_K(mesh, kernel, options));
}

// ---------------------------------------------------------------------------

double single_layer_eval(const BoundaryMesh& mesh, const KernelModel& kernel,
                         const std::vector<double>& f, const Vec3& x, bool* degraded,
                         const PotentialOptions& options) {
    check_density(mesh, f);
    if (degraded) *degraded = degraded_point(mesh, x);
    double s = 0.0;
    for (std::size_t j = 0; j < mesh.size(); ++j) {
        if (f[j] == 0.0) continue;
        s += f[j] * integrate_panel<double>(mesh.panel(j), mesh.dim(), x,
                                            [&](const Vec3& y) { return kernel.gamma(x, y); }, options);
    }
    return s;
}

double double_layer_eval(const BoundaryMesh& mesh, const KernelModel& kernel,
                         const std::vector<double>& f, const Vec3& x, bool* degraded,
                         const PotentialOptions& options) {
    check_density(mesh, f);
    if (degraded) *degraded = degraded_point(mesh, x);
    double s = 0.0;
    for (std::size_t j = 0; j < mesh.size(); ++j) {
        if (f[j] == 0.0) continue;
        const Vec3& n = mesh.panel(j).normal;
        s += f[j] * integrate_panel<double>(
                        mesh.panel(j), mesh.dim(), x,
                        [&](const Vec3& y) { return kernel.conormal(kernel.anchor(y), n, x); }, options);
    }
    return s;
}

Vec3 double_layer_grad(const BoundaryMesh& mesh, const KernelModel& kernel,
                       const std::vector<double>& f, const Vec3& x, const PotentialOptions& options) {
    check_density(mesh, f);
    Vec3 s = Vec3::Zero();
    for (std::size_t j = 0; j < mesh.size(); ++j) {
        if (f[j] == 0.0) continue;
        const Vec3& n = mesh.panel(j).normal;
        s += f[j] * integrate_panel<Vec3>(mesh.panel(j), mesh.dim(), x,
                                          [&](const Vec3& y) {
                                              const KernelAnchor at = kernel.anchor(y);
                                              return Vec3(kernel.grad_x_dy(at, x).transpose() * (at.a * n));
                                          },
                                          options);
    }
    return s;
}

Vec3 single_layer_grad(const BoundaryMesh& mesh, const KernelModel& kernel,
                       const std::vector<double>& f, const Vec3& x, const PotentialOptions& options) {
    check_density(mesh, f);
    const KernelAnchor at = kernel.anchor(x);
    Vec3 s = Vec3::Zero();
    for (std::size_t j = 0; j < mesh.size(); ++j) {
        if (f[j] == 0.0) continue;
        s += f[j] * integrate_panel<Vec3>(mesh.panel(j), mesh.dim(), x,
                                          [&](const Vec3& y) { return kernel.grad_x(at, y); }, options);
    }
    return s;
}

std::vector<Vec3> trace_grad_single_layer(const BoundaryMesh& mesh, const KernelModel& kernel,
                                          const std::vector<double>& f, Side side,
                                          const AssemblyOptions& options) {
    check_density(mesh, f);
    const std::size_t n = mesh.size();
    // The diagonal of K enters the principal value along the normal.
    BemOperator k = assemble_K(mesh, kernel, options);
    const double sign = side == Side::plus ? 0.5 : -0.5;
    std::vector<Vec3> out(n);
    std::vector<Vec3> row;
    for (std::size_t i = 0; i < n; ++i) {
        const Panel& pi = mesh.panel(i);
        KernelAnchor at = kernel.anchor(pi.centroid);
        gradient_row(mesh, kernel, i, at, options, row);
        Vec3 pv = Vec3::Zero();
        for (std::size_t j = 0; j < n; ++j) pv += f[j] * row[j];
        const double b = 1.0 / pi.normal.dot(at.a * pi.normal);
        out[i] = sign * b * f[i] * pi.normal + pv + k.matrix(i, i) * f[i] * b * pi.normal;
    }
    return out;
}

std::vector<double> conormal_part(const BoundaryMesh& mesh, const KernelModel& kernel,
                                  const std::vector<Vec3>& g) {
    require(g.size() == mesh.size(), "boundary field length does not match the mesh");
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Panel& p = mesh.panel(i);
        out[i] = p.normal.dot(kernel.coefficient(p.centroid) * g[i]);
    }
    return out;
}

std::vector<Vec3> tangential_part(const BoundaryMesh& mesh, const std::vector<Vec3>& g) {
    require(g.size() == mesh.size(), "boundary field length does not match the mesh");
    std::vector<Vec3> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec3& n = mesh.panel(i).normal;
        out[i] = g[i] - n.dot(g[i]) * n;
    }
    return out;
}

// ---------------------------------------------------------------------------

DenseSolveResult solve_dense(const Eigen::MatrixXd& m, const Eigen::VectorXd& b) {
    require(m.rows() == m.cols() && m.rows() == b.size(), "dense solve: dimension mismatch");
    DenseSolveResult res;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.x = Eigen::VectorXd::Zero(b.size());
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
        res.rcond = lu.rcond();
        return res;
    }
    if (m.rows() < 2000) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
        res.x = lu.solve(b);
        res.rcond = lu.rcond();
        res.direct = true;
    } else {
        Eigen::GMRES<Eigen::MatrixXd, Eigen::DiagonalPreconditioner<double>> gmres;
        gmres.setTolerance(1e-10);
        gmres.setMaxIterations(500);
        gmres.set_restart(100);
        gmres.compute(m);
        res.x = gmres.solve(b);
        res.iterations = static_cast<int>(gmres.iterations());
        res.direct = false;
        if (gmres.info() != Eigen::Success)
            throw ConvergenceError("GMRES did not reach tolerance 1e-10 within 500 iterations",
                                   (m * res.x - b).norm() / bnorm);
    }
    res.residual = (m * res.x - b).norm() / bnorm;
    return res;
}

ContinuityProbe operator_continuity_probe(const BoundaryMesh& mesh, const TwoScaleKernel& a,
                                          const TwoScaleKernel& b, int n_densities,
                                          std::uint64_t seed) {
    require(n_densities >= 1, "need at least one density");
    require(a.epsilon() == b.epsilon(), "kernels must share epsilon");
    ContinuityProbe out;
    if (a.field().fingerprint() == b.field().fingerprint()) return out;
    Eigen::MatrixXd diff = assemble_K(mesh, a).matrix - assemble_K(mesh, b).matrix;
    UniformSource rng(seed);
    const std::size_t n = mesh.size();
    for (int k = 0; k < n_densities; ++k) {
        Eigen::VectorXd f(n);
        for (std::size_t i = 0; i < n; ++i) f(i) = rng.next(-1.0, 1.0);
        double fn = 0.0;
        for (std::size_t i = 0; i < n; ++i) fn += mesh.panel(i).measure * f(i) * f(i);
        f /= std::sqrt(fn);
        Eigen::VectorXd g = diff * f;
        double gn = 0.0;
        for (std::size_t i = 0; i < n; ++i) gn += mesh.panel(i).measure * g(i) * g(i);
        out.numerator = std::max(out.numerator, std::sqrt(gn));
    }
    const double lambda = a.field().holder_exponent();
    out.proxy = sup_difference(a.field(), b.field()) +
                holder_estimate_difference(a.field(), b.field(), lambda, 2000);
    out.value = out.proxy > 0.0 ? out.numerator / out.proxy : 0.0;
    return out;
}

std::vector<double> truncated_maximal_probe(const BoundaryMesh& mesh, const BemOperator& k,
                                            const std::vector<double>& f,
                                            const std::vector<double>& radii) {
    check_density(mesh, f);
    require(k.size() == mesh.size(), "operator size does not match the mesh");
    for (std::size_t r = 1; r < radii.size(); ++r)
        require(radii[r] < radii[r - 1], "truncation radii must decrease");
    const std::size_t n = mesh.size();
    std::vector<double> out(n, 0.0);
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < n; ++i) {
        order.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) order.push_back({(mesh.panel(j).centroid - mesh.panel(i).centroid).norm(), j});
        std::sort(order.begin(), order.end());
        // Tail sums from the far end; radii decrease, so walk inward.
        double tail = 0.0;
        std::size_t pos = order.size();
        double best = 0.0;
        for (double rho : radii) {
            while (pos > 0 && order[pos - 1].first > rho) {
                --pos;
                tail += k.matrix(i, order[pos].second) * f[order[pos].second];
            }
            best = std::max(best, std::abs(tail));
        }
        out[i] = best;
    }
    return out;
}

}  // namespace lplab
