#include "lplab/bvp_lab.hpp"

#include "lplab/fem_oracle.hpp"
#include "lplab/quadrature.hpp"

#include <atomic>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

namespace lplab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double weighted_norm(const BoundaryMesh& mesh, const Eigen::VectorXd& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) s += mesh.panel(i).measure * v(i) * v(i);
    return std::sqrt(s);
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void check_result(const DenseSolveResult& r, const SolveOptions& options, const std::string& what,
                  std::vector<std::string>& warnings) {
    if (r.residual > 1e-8)
        throw ConvergenceError(what + ": solve residual " + std::to_string(r.residual) + " exceeds 1e-8",
                               r.residual);
    if (r.direct && r.rcond < options.rcond_warning) {
        std::ostringstream os;
        os << what << ": operator is nearly singular (rcond " << r.rcond << ")";
        if (options.strict) throw SingularEvaluation(os.str());
        warnings.push_back(os.str());
    }
}

}  // namespace

std::string to_string(ProblemKind kind) {
    switch (kind) {
    case ProblemKind::dirichlet: return "dirichlet";
    case ProblemKind::neumann: return "neumann";
    case ProblemKind::regularity: return "regularity";
    }
    return "?";
}

ProblemKind problem_kind_from_string(const std::string& name) {
    if (name == "dirichlet") return ProblemKind::dirichlet;
    if (name == "neumann") return ProblemKind::neumann;
    if (name == "regularity") return ProblemKind::regularity;
    throw InvalidArgument("unknown problem kind '" + name + "'");
}

// ---------------------------------------------------------------------------

BvpSolution::BvpSolution(Setup setup) : s_(std::move(setup)) {
    if (s_.scale != 1.0) {
        scaled_mesh_ = s_.mesh.dilated(s_.scale);
        scaled_kernel_ = s_.kernel->rescaled(s_.scale);
    } else {
        scaled_mesh_ = s_.mesh;
        scaled_kernel_ = s_.kernel;
    }
}

double BvpSolution::value(const Vec3& x) const {
    switch (s_.kind) {
    case ProblemKind::dirichlet:
        return double_layer_eval(s_.mesh, *s_.kernel, s_.density, x, nullptr, s_.potential);
    case ProblemKind::neumann:
        return single_layer_eval(s_.mesh, *s_.kernel, s_.density, x, nullptr, s_.potential) - s_.shift;
    case ProblemKind::regularity:
        return single_layer_eval(scaled_mesh_, *scaled_kernel_, s_.density, s_.scale * x, nullptr,
                                 s_.potential);
    }
    return 0.0;
}

Vec3 BvpSolution::gradient(const Vec3& x) const {
    switch (s_.kind) {
    case ProblemKind::neumann:
        return single_layer_grad(s_.mesh, *s_.kernel, s_.density, x, s_.potential);
    case ProblemKind::regularity:
        return s_.scale * single_layer_grad(scaled_mesh_, *scaled_kernel_, s_.density, s_.scale * x,
                                            s_.potential);
    case ProblemKind::dirichlet:
        break;
    }
    return double_layer_grad(s_.mesh, *s_.kernel, s_.density, x, s_.potential);
}

std::vector<Vec3> BvpSolution::boundary_gradient() const {
    if (s_.kind == ProblemKind::neumann)
        return trace_grad_single_layer(s_.mesh, *s_.kernel, s_.density, Side::plus);
    if (s_.kind == ProblemKind::regularity) {
        auto g = trace_grad_single_layer(scaled_mesh_, *scaled_kernel_, s_.density, Side::plus);
        for (auto& v : g) v *= s_.scale;
        return g;
    }
    // Conormal derivative phi from the boundary trace of Green's representation
    // u = S(phi) - D(u), i.e. S phi = (I/2 + K*) f, solved where the d = 2
    // single layer is safely invertible. Tangential part from the data.
    const double rho = s_.regularity_scale;
    const BoundaryMesh work = rho != 1.0 ? s_.mesh.dilated(rho) : s_.mesh;
    const auto wk = rho != 1.0 ? s_.kernel->rescaled(rho) : s_.kernel;
    Eigen::MatrixXd rhs_op = assemble_Kstar(work, *wk).matrix;
    rhs_op.diagonal().array() += 0.5;
    const Eigen::VectorXd rhs = rhs_op * to_eigen(s_.data);
    const DenseSolveResult r = solve_dense(assemble_S(work, *wk).matrix, rhs);
    std::vector<Vec3> out = tangential_gradient(s_.mesh, s_.data);
    for (std::size_t i = 0; i < s_.mesh.size(); ++i) {
        const Panel& p = s_.mesh.panel(i);
        const Mat3 a = s_.kernel->coefficient(p.centroid);
        const double phi = rho * r.x(static_cast<Eigen::Index>(i));
        out[i] += (phi - p.normal.dot(a * out[i])) / p.normal.dot(a * p.normal) * p.normal;
    }
    return out;
}

std::vector<double> BvpSolution::boundary_values(const std::vector<double>& depths) const {
    return nt_limit(s_.mesh, [this](const Vec3& x) { return value(x); }, depths);
}

BvpSolution solve_dirichlet(const BoundaryMesh& mesh, std::shared_ptr<const KernelModel> kernel,
                            const std::vector<double>& f, const SolveOptions& options) {
    require(kernel != nullptr, "kernel is required");
    require(f.size() == mesh.size(), "boundary data length does not match the mesh");
    require(mesh.closed(), "Dirichlet solve needs a closed boundary");
    BemOperator kstar = assemble_Kstar(mesh, *kernel, options.assembly);
    Eigen::MatrixXd m = kstar.matrix;
    m.diagonal().array() -= 0.5;
    const Eigen::VectorXd rhs = to_eigen(f);
    DenseSolveResult r = solve_dense(m, rhs);
    BvpSolution::Setup s;
    s.kind = ProblemKind::dirichlet;
    s.mesh = mesh;
    s.kernel = kernel;
    s.data = f;
    s.density = to_std(r.x);
    check_result(r, options, "Dirichlet", s.warnings);
    s.residual = r.residual;
    s.rcond = r.rcond;
    const double fn = weighted_norm(mesh, rhs);
    s.density_ratio = fn > 0.0 ? weighted_norm(mesh, r.x) / fn : 0.0;
    s.potential = options.potential;
    if (mesh.dim() == 2 && mesh.diameter() > options.regularity_diameter)
        s.regularity_scale = options.regularity_diameter / mesh.diameter();
    return BvpSolution(std::move(s));
}

BvpSolution solve_neumann(const BoundaryMesh& mesh, std::shared_ptr<const KernelModel> kernel,
                          const std::vector<double>& f, const SolveOptions& options) {
    require(kernel != nullptr, "kernel is required");
    require(f.size() == mesh.size(), "boundary data length does not match the mesh");
    require(mesh.closed(), "Neumann solve needs a closed boundary");
    const std::size_t n = mesh.size();
    const auto w = mesh.weights();
    const double mean = boundary_mean(mesh, f);
    std::vector<double> data(f);
    for (auto& v : data) v -= mean;

    // (I/2 + K) annihilates nothing on the left except w; the rank-one
    // border 1 w^T / sigma makes the system regular and selects w.g = 0.
    BemOperator k = assemble_K(mesh, *kernel, options.assembly);
    Eigen::MatrixXd m = k.matrix;
    m.diagonal().array() += 0.5;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) += w[j] / mesh.sigma();
    const Eigen::VectorXd rhs = to_eigen(data);
    DenseSolveResult r = solve_dense(m, rhs);

    BvpSolution::Setup s;
    s.kind = ProblemKind::neumann;
    s.mesh = mesh;
    s.kernel = kernel;
    s.data = data;
    s.density = to_std(r.x);
    check_result(r, options, "Neumann", s.warnings);
    s.residual = r.residual;
    s.rcond = r.rcond;
    s.projection = std::abs(mean) * mesh.sigma();
    const double fn = weighted_norm(mesh, rhs);
    s.density_ratio = fn > 0.0 ? weighted_norm(mesh, r.x) / fn : 0.0;
    if (fn > 0.0) {
        BemOperator sop = assemble_S(mesh, *kernel, options.assembly);
        const Eigen::VectorXd trace = sop.matrix * r.x;
        s.shift = boundary_mean(mesh, to_std(trace));
    }
    s.potential = options.potential;
    return BvpSolution(std::move(s));
}

BvpSolution solve_regularity(const BoundaryMesh& mesh, std::shared_ptr<const KernelModel> kernel,
                             const std::vector<double>& f, const SolveOptions& options) {
    require(kernel != nullptr, "kernel is required");
    require(f.size() == mesh.size(), "boundary data length does not match the mesh");
    double scale = 1.0;
    if (mesh.dim() == 2 && mesh.diameter() > options.regularity_diameter)
        scale = options.regularity_diameter / mesh.diameter();
    const BoundaryMesh work = scale != 1.0 ? mesh.dilated(scale) : mesh;
    const auto wk = scale != 1.0 ? kernel->rescaled(scale) : kernel;
    BemOperator sop = assemble_S(work, *wk, options.assembly);
    const Eigen::VectorXd rhs = to_eigen(f);
    DenseSolveResult r = solve_dense(sop.matrix, rhs);
    if (r.direct && r.rcond < 1e-13) {
        std::ostringstream os;
        os << "single layer operator is numerically singular (rcond " << r.rcond
           << "); rescale the domain to a smaller diameter";
        throw SingularEvaluation(os.str());
    }
    BvpSolution::Setup s;
    s.kind = ProblemKind::regularity;
    s.mesh = mesh;
    s.kernel = kernel;
    s.data = f;
    s.density = to_std(r.x);
    check_result(r, options, "regularity", s.warnings);
    s.residual = r.residual;
    s.rcond = r.rcond;
    s.scale = scale;
    const double fn = boundary_norms(work, f).w12;
    s.density_ratio = fn > 0.0 ? weighted_norm(work, r.x) / fn : 0.0;
    s.potential = options.potential;
    return BvpSolution(std::move(s));
}

BvpSolution solve(ProblemKind kind, const BoundaryMesh& mesh, std::shared_ptr<const KernelModel> kernel,
                  const std::vector<double>& f, const SolveOptions& options) {
    switch (kind) {
    case ProblemKind::dirichlet: return solve_dirichlet(mesh, std::move(kernel), f, options);
    case ProblemKind::neumann: return solve_neumann(mesh, std::move(kernel), f, options);
    case ProblemKind::regularity: return solve_regularity(mesh, std::move(kernel), f, options);
    }
    throw InvalidArgument("unknown problem kind");
}

// ---------------------------------------------------------------------------

GreenFunction::GreenFunction(Vec3 pole, std::shared_ptr<const KernelModel> kernel, BvpSolution correction)
    : pole_(std::move(pole)), kernel_(std::move(kernel)), w_(std::move(correction)) {}

double GreenFunction::value(const Vec3& x) const { return kernel_->gamma(x, pole_) - w_.value(x); }

Vec3 GreenFunction::gradient(const Vec3& x) const { return kernel_->grad_x(x, pole_) - w_.gradient(x); }

double GreenFunction::flux(double r, int n) const {
    return sphere_integral(kernel_->dim(), pole_, r, n, [this](const Vec3& x, const Vec3& nv) {
        return -nv.dot(kernel_->coefficient(x) * gradient(x));
    });
}

std::pair<double, double> GreenFunction::boundary_trace() const {
    const BoundaryMesh& mesh = w_.mesh();
    double gmax = 0.0, tmax = 0.0;
    auto visit = [&](const Vec3& x) {
        gmax = std::max(gmax, std::abs(kernel_->gamma(x, pole_)));
        tmax = std::max(tmax, std::abs(value(x)));
    };
    for (const auto& p : mesh.panels()) {
        visit(p.centroid);
        visit(p.corners[0]);
        if (mesh.dim() == 3)
            for (int c = 1; c < 4; ++c) visit(p.corners[c]);
    }
    return {tmax, gmax};
}

GreenFunction green_function(const BoundaryMesh& mesh, std::shared_ptr<const KernelModel> kernel,
                             const Vec3& pole, const SolveOptions& options) {
    require(kernel != nullptr, "kernel is required");
    require(mesh.closed() && mesh.contains(pole), "the pole must lie inside the domain");
    if (mesh.distance(pole) <= 2.0 * mesh.max_panel_size())
        throw InvalidArgument("the pole must be more than two panel sizes from the boundary");
    std::vector<double> data(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) data[i] = kernel->gamma(mesh.panel(i).centroid, pole);
    BvpSolution w = solve_regularity(mesh, kernel, data, options);
    return GreenFunction(pole, std::move(kernel), std::move(w));
}

// ---------------------------------------------------------------------------

void panel_quadrature(const Panel& panel, int dim, int n, std::vector<Vec3>& points,
                      std::vector<double>& weights) {
    const QuadRule& g = gauss_rule(n);
    points.clear();
    weights.clear();
    if (dim == 2) {
        const Vec3 a = panel.corners[0], e = panel.corners[1] - panel.corners[0];
        for (int k = 0; k < n; ++k) {
            points.push_back(a + g.nodes[k] * e);
            weights.push_back(panel.measure * g.weights[k]);
        }
        return;
    }
    const Vec3 o = panel.corners[0], eu = panel.corners[1] - o, ev = panel.corners[3] - o;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            points.push_back(o + g.nodes[a] * eu + g.nodes[b] * ev);
            weights.push_back(panel.measure * g.weights[a] * g.weights[b]);
        }
}

namespace {

RellichRatios finish_ratios(double g2, double c2, double t2) {
    RellichRatios r;
    r.grad_norm = std::sqrt(g2);
    r.conormal_norm = std::sqrt(c2);
    r.tangential_norm = std::sqrt(t2);
    if (r.grad_norm <= 0.0) throw InvalidArgument("Rellich ratios undefined: the boundary gradient vanishes");
    if (r.conormal_norm <= 1e-12 * r.grad_norm)
        throw InvalidArgument("Rellich ratio undefined: the conormal derivative vanishes");
    if (r.tangential_norm <= 1e-12 * r.grad_norm)
        throw InvalidArgument("Rellich ratio undefined: the tangential gradient vanishes");
    r.neumann = r.grad_norm / r.conormal_norm;
    r.regularity = r.grad_norm / r.tangential_norm;
    return r;
}

}  // namespace

RellichRatios rellich_ratios(const BoundaryMesh& mesh, const std::vector<Vec3>& gradient,
                             const std::function<Mat3(const Vec3&)>& coefficient) {
    require(gradient.size() == mesh.size(), "boundary gradient length does not match the mesh");
    double g2 = 0.0, c2 = 0.0, t2 = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const Panel& p = mesh.panel(i);
        const Vec3& g = gradient[i];
        const double c = p.normal.dot(coefficient(p.centroid) * g);
        const Vec3 t = g - g.dot(p.normal) * p.normal;
        g2 += p.measure * g.squaredNorm();
        c2 += p.measure * c * c;
        t2 += p.measure * t.squaredNorm();
    }
    return finish_ratios(g2, c2, t2);
}

RellichRatios rellich_ratios(const BoundaryMesh& mesh, const FieldFunction& u) {
    double g2 = 0.0, c2 = 0.0, t2 = 0.0;
    std::vector<Vec3> pts;
    std::vector<double> wts;
    for (const auto& p : mesh.panels()) {
        panel_quadrature(p, mesh.dim(), mesh.dim() == 2 ? 4 : 3, pts, wts);
        for (std::size_t q = 0; q < pts.size(); ++q) {
            const Vec3 g = u.gradient(pts[q]);
            const double c = p.normal.dot(u.coefficient(pts[q]) * g);
            const Vec3 t = g - g.dot(p.normal) * p.normal;
            g2 += wts[q] * g.squaredNorm();
            c2 += wts[q] * c * c;
            t2 += wts[q] * t.squaredNorm();
        }
    }
    return finish_ratios(g2, c2, t2);
}

// ---------------------------------------------------------------------------

QIdentityReport q_identity_report(const GraphPatch& patch, const FieldFunction& u, double eps,
                                  const QIdentityOptions& options) {
    require(eps > 0.0, "epsilon must be positive");
    require(options.rho > 0.0 && options.rho <= patch.radius() * 3.0, "rho must lie in (0, 3r]");
    const Vec3 e(0.0, 1.0, 0.0);
    const double r = patch.radius();
    const double top = patch.height_constant() * r;
    QIdentityReport rep;

    // Product rule on random smooth functions sampled over D(r).
    UniformSource rng(options.seed);
    struct Wave {
        double a, bx, by, c;
    };
    auto make = [&rng]() {
        std::vector<Wave> w(3);
        for (auto& t : w) t = {rng.next(-2.0, 2.0), rng.next(-3.0, 3.0), rng.next(-3.0, 3.0), rng.next(0.0, 6.0)};
        return w;
    };
    const auto fw = make(), gw = make();
    auto eval = [](const std::vector<Wave>& w, const Vec3& x) {
        double s = 0.0;
        for (const auto& t : w) s += t.a * std::sin(t.bx * x(0) + t.by * x(1) + t.c);
        return s;
    };
    for (int k = 0; k < options.samples; ++k) {
        const double x1 = rng.next(-r, r);
        const Vec3 x(x1, rng.next(patch.psi(x1), top), 0.0);
        const double f0 = eval(fw, x), f1 = eval(fw, x + e), g0 = eval(gw, x), g1 = eval(gw, x + e);
        const double qf = f1 - f0, qg = g1 - g0, qfg = f1 * g1 - f0 * g0;
        rep.product_rule = std::max(rep.product_rule, std::abs(qfg - qf * qg - (f0 * qg + g0 * qf)));
    }

    // Telescoping with the energy density f = grad u . A grad u.
    auto density = [&u](const Vec3& x) {
        const Vec3 g = u.gradient(x);
        return g.dot(u.coefficient(x) * g);
    };
    rep.telescoping_lhs = patch.cap_volume(r).integrate([&](const Vec3& x) { return density(x + e) - density(x); });
    const double t_top = patch.top_strip(r).integrate(density);
    const double t_low = patch.boundary_layer(r).integrate(density);
    rep.telescoping_rhs = t_top - t_low;
    rep.telescoping = std::abs(rep.telescoping_lhs - rep.telescoping_rhs) / (std::abs(t_top) + std::abs(t_low));

    // Integration by parts on D(rho) with v = Q(u).
    const BoundaryMesh cap = patch.cap_boundary(options.rho);
    std::vector<Vec3> pts;
    std::vector<double> wts;
    double lhs = 0.0, lhs_abs = 0.0;
    for (const auto& p : cap.panels()) {
        panel_quadrature(p, 2, 4, pts, wts);
        for (std::size_t q = 0; q < pts.size(); ++q) {
            const double term = u.conormal(pts[q], p.normal) * (u.value(pts[q] + e) - u.value(pts[q]));
            lhs += wts[q] * term;
            lhs_abs += wts[q] * std::abs(term);
        }
    }
    double rhs = 0.0, rhs_abs = 0.0;
    const VolumeRule vol = patch.cap_volume(options.rho);
    for (std::size_t k = 0; k < vol.points.size(); ++k) {
        const Vec3& x = vol.points[k];
        const double term = (u.coefficient(x) * u.gradient(x)).dot(u.gradient(x + e) - u.gradient(x));
        rhs += vol.weights[k] * term;
        rhs_abs += vol.weights[k] * std::abs(term);
    }
    rep.ibp_lhs = lhs;
    rep.ibp_rhs = rhs;
    rep.ibp_scale = lhs_abs + rhs_abs;
    rep.ibp_residual = rep.ibp_scale > 0.0 ? std::abs(lhs - rhs) / rep.ibp_scale : 0.0;

    // Q(u) interpolated on a grid inside D(r), checked against the discrete operator.
    const double h = options.fem_h > 0.0 ? options.fem_h : eps / 8.0;
    const double half = h * std::ceil(0.5 * r / h);
    double psi_max = 0.0;
    for (int k = 0; k <= 64; ++k) psi_max = std::max(psi_max, patch.psi(-half + 2.0 * half * k / 64.0));
    const double y0 = h * std::ceil((psi_max + 0.25) / h);
    FemGrid grid = FemGrid::box(2, Vec3(-half, y0, 0.0), Vec3(half, y0 + 2.0 * half, 0.0), h);
    Eigen::VectorXd qu(static_cast<Eigen::Index>(grid.n_nodes()));
    for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
        const Vec3 x = grid.node(i);
        qu(static_cast<Eigen::Index>(i)) = u.value(x + e) - u.value(x);
    }
    FemProblem pb;
    pb.coefficient = [&u](const Vec3& x) { return u.coefficient(x); };
    pb.epsilon = eps;
    rep.fem_residual = fem_residual(grid, pb, qu);
    return rep;
}

// ---------------------------------------------------------------------------

std::vector<ContinuationRow> continuation_sweep(const BoundaryMesh& mesh,
                                                std::shared_ptr<const CoefficientField> field,
                                                const std::vector<double>& s_grid,
                                                const ContinuationOptions& options) {
    require(field != nullptr, "coefficient field is required");
    require(mesh.closed(), "continuation needs a closed boundary");
    for (double s : s_grid) require(s >= 0.0 && s <= 1.0, "continuation parameters must lie in [0, 1]");
    const std::size_t n = mesh.size();
    const auto w = mesh.weights();
    Eigen::VectorXd wh(n), whi(n);
    for (std::size_t i = 0; i < n; ++i) {
        wh(i) = std::sqrt(w[i]);
        whi(i) = 1.0 / wh(i);
    }
    auto kernel_at = [&](double s) {
        auto fs = std::make_shared<const CoefficientField>(interpolate_identity(*field, s));
        auto corr = std::make_shared<const CorrectorField>(solve_cell(fs, options.cell));
        return TwoScaleKernel(corr, homogenized_matrix(*fs, *corr), options.epsilon);
    };
    const Eigen::MatrixXd k0 = assemble_K(mesh, kernel_at(0.0)).matrix;

    UniformSource rng(options.seed);
    std::vector<Eigen::VectorXd> probes;
    for (int k = 0; k < options.n_random; ++k) {
        Eigen::VectorXd f(n);
        for (std::size_t i = 0; i < n; ++i) f(i) = rng.next(-1.0, 1.0);
        probes.push_back(f / weighted_norm(mesh, f));
    }

    std::vector<ContinuationRow> rows;
    for (double s : s_grid) {
        const Eigen::MatrixXd k = s == 0.0 ? k0 : assemble_K(mesh, kernel_at(s)).matrix;
        ContinuationRow row;
        row.s = s;
        for (int sign : {1, -1}) {
            Eigen::MatrixXd m = k;
            m.diagonal().array() += 0.5 * sign;
            const Eigen::MatrixXd b = wh.asDiagonal() * m * whi.asDiagonal();
            Eigen::BDCSVD<Eigen::MatrixXd> svd(b);
            const auto& sv = svd.singularValues();
            // I/2 + K has the one-dimensional cokernel spanned by the weights.
            const double lo = sign > 0 ? sv(static_cast<Eigen::Index>(n) - 2) : sv(static_cast<Eigen::Index>(n) - 1);
            const double cond = lo > 0.0 ? sv(0) / lo : std::numeric_limits<double>::infinity();
            double lower = std::numeric_limits<double>::infinity();
            for (const auto& f : probes) lower = std::min(lower, weighted_norm(mesh, m * f));
            (sign > 0 ? row.cond_plus : row.cond_minus) = cond;
            (sign > 0 ? row.lower_plus : row.lower_minus) = lower;
        }
        const Eigen::MatrixXd diff = k - k0;
        for (const auto& f : probes) row.probe = std::max(row.probe, weighted_norm(mesh, diff * f));
        row.probe_slope = s > 0.0 ? row.probe / s : 0.0;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------

std::string to_string(SweepProblem p) {
    switch (p) {
    case SweepProblem::corrector: return "corrector";
    case SweepProblem::dirichlet: return "dirichlet";
    case SweepProblem::neumann: return "neumann";
    case SweepProblem::regularity: return "regularity";
    }
    return "?";
}

std::vector<double> boundary_data(const BoundaryMesh& mesh, const FieldFunction& u, ProblemKind kind) {
    const int d = mesh.dim();
    std::vector<double> f(mesh.size());
    std::vector<Vec3> pts;
    std::vector<double> wts;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const Panel& p = mesh.panel(i);
        if (kind == ProblemKind::neumann) {
            panel_quadrature(p, d, d == 2 ? 4 : 3, pts, wts);
            double s = 0.0;
            for (std::size_t q = 0; q < pts.size(); ++q) s += wts[q] * u.conormal(pts[q], p.normal);
            f[i] = s / p.measure;
        } else {
            f[i] = u.value(p.centroid);
        }
    }
    return f;
}

int auto_panels(int base, int per_eps, double eps, int max_panels, int dim) {
    require(eps > 0.0, "epsilon must be positive");
    int n = std::max(base, static_cast<int>(std::ceil(per_eps / eps - 1e-9)));
    const int cap = dim == 2 ? max_panels / 4 : static_cast<int>(std::floor(std::sqrt(max_panels / 6.0)));
    return std::min(n, cap);
}

namespace {

double nt_norm(const BoundaryMesh& mesh, const std::function<double(const Vec3&)>& f, double aperture) {
    NtOptions opt;
    opt.aperture = aperture;
    return l2_norm(mesh, nt_maximal(mesh, f, opt));
}

SweepRow sweep_cell(const SweepConfig& cfg, std::shared_ptr<const CorrectorField> corr,
                    const HomogenizedMatrix& hm, double eps, SweepProblem problem) {
    SweepRow row;
    row.epsilon = eps;
    row.problem = problem;
    const int d = cfg.field.dim;
    const int n = auto_panels(cfg.panels_per_edge, cfg.panels_per_epsilon, eps, cfg.max_panels, d);
    const BoundaryMesh mesh = d == 2 ? unit_square_mesh(n) : unit_cube_mesh(n);
    row.n_panels = static_cast<int>(mesh.size());
    std::vector<double> weights(cfg.weights.begin(), cfg.weights.begin() + d);
    const FieldFunction u = corrector_solution(corr, eps, weights);
    auto kernel = std::make_shared<const TwoScaleKernel>(corr, hm, eps);
    auto coef = [&kernel](const Vec3& x) { return kernel->coefficient(x); };

    if (problem == SweepProblem::corrector) {
        RellichRatios rr = rellich_ratios(mesh, u);
        row.data_norm = rr.conormal_norm;
        row.grad_nt_norm = nt_norm(mesh, [&u](const Vec3& x) { return u.gradient(x).norm(); }, cfg.nt_aperture);
        row.rellich_neumann = rr.neumann;
        row.rellich_regularity = rr.regularity;
        row.residual = corr->residual();
    } else {
        const ProblemKind kind = problem == SweepProblem::dirichlet ? ProblemKind::dirichlet
                                 : problem == SweepProblem::neumann ? ProblemKind::neumann
                                                                    : ProblemKind::regularity;
        const std::vector<double> f = boundary_data(mesh, u, kind);
        BvpSolution sol = solve(kind, mesh, kernel, f, cfg.solve);
        if (kind == ProblemKind::dirichlet) {
            row.data_norm = l2_norm(mesh, f);
            row.grad_nt_norm = nt_norm(mesh, [&sol](const Vec3& x) { return std::abs(sol.value(x)); }, cfg.nt_aperture);
        } else {
            row.data_norm = kind == ProblemKind::neumann ? l2_norm(mesh, sol.data()) : boundary_norms(mesh, f).w12;
            row.grad_nt_norm = nt_norm(mesh, [&sol](const Vec3& x) { return sol.gradient(x).norm(); }, cfg.nt_aperture);
        }
        RellichRatios rr = rellich_ratios(mesh, sol.boundary_gradient(), coef);
        row.rellich_neumann = rr.neumann;
        row.rellich_regularity = rr.regularity;
        row.residual = sol.residual();
    }
    row.ratio = row.grad_nt_norm / row.data_norm;
    return row;
}

}  // namespace

SweepReport epsilon_sweep(const SweepConfig& cfg) {
    require(!cfg.epsilons.empty() && !cfg.problems.empty(), "sweep needs epsilons and problems");
    for (double e : cfg.epsilons) require(e > 0.0, "epsilon values must be positive");
    require(cfg.weights.size() >= static_cast<std::size_t>(cfg.field.dim), "need one weight per dimension");
    auto field = std::make_shared<const CoefficientField>(make_field(cfg.field));
    auto corr = std::make_shared<const CorrectorField>(solve_cell(field, cfg.cell));
    const HomogenizedMatrix hm = homogenized_matrix(*field, *corr);

    struct Cell {
        double eps;
        SweepProblem problem;
    };
    std::vector<Cell> cells;
    for (double e : cfg.epsilons)
        for (SweepProblem p : cfg.problems) cells.push_back({e, p});
    std::vector<SweepRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                rows[i] = sweep_cell(cfg, corr, hm, cells[i].eps, cells[i].problem);
            } catch (const std::exception& ex) {
                SweepRow r;
                r.epsilon = cells[i].eps;
                r.problem = cells[i].problem;
                r.data_norm = r.grad_nt_norm = r.ratio = r.rellich_neumann = r.rellich_regularity = r.residual = kNaN;
                r.error = ex.what();
                rows[i] = r;
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(cells.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepReport rep;
    rep.rows = rows;
    for (SweepProblem p : cfg.problems) {
        std::array<double, 3> lo, hi;
        lo.fill(std::numeric_limits<double>::infinity());
        hi.fill(0.0);
        int count = 0;
        for (const auto& r : rows) {
            if (r.problem != p) continue;
            if (!r.error.empty()) {
                rep.passed = false;
                rep.failures.push_back(to_string(p) + " at eps=" + std::to_string(r.epsilon) + ": " + r.error);
                continue;
            }
            const double v[3] = {r.ratio, r.rellich_neumann, r.rellich_regularity};
            for (int k = 0; k < 3; ++k) {
                lo[k] = std::min(lo[k], v[k]);
                hi[k] = std::max(hi[k], v[k]);
            }
            ++count;
        }
        std::array<double, 3> spread;
        for (int k = 0; k < 3; ++k) spread[k] = count > 0 ? hi[k] / lo[k] : kNaN;
        rep.spreads[to_string(p)] = spread;
        static const char* names[3] = {"ratio", "rellich_neumann", "rellich_regularity"};
        for (int k = 0; k < 3; ++k)
            if (count > 0 && !(spread[k] < cfg.spread_limit)) {
                rep.passed = false;
                std::ostringstream os;
                os << to_string(p) << " " << names[k] << " spread " << spread[k] << " >= " << cfg.spread_limit;
                rep.failures.push_back(os.str());
            }
    }
    return rep;
}

}  // namespace lplab
