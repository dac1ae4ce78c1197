#include "lplab/cli_runner.hpp"

#include "lplab/bvp_lab.hpp"
#include "lplab/kernel_rates.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace lplab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

namespace {

class Csv {
public:
    Csv(std::string hash, std::vector<std::string> columns) : hash_(std::move(hash)) {
        text_ = "config_hash";
        for (const auto& c : columns) text_ += "," + c;
        text_ += "\n";
    }
    Csv& row() {
        text_ += hash_;
        open_ = true;
        return *this;
    }
    Csv& operator<<(double v) { return put(format_double(v)); }
    Csv& operator<<(int v) { return put(std::to_string(v)); }
    Csv& operator<<(std::size_t v) { return put(std::to_string(v)); }
    Csv& operator<<(const std::string& v) { return put(v); }
    Csv& operator<<(const char* v) { return put(v); }
    void end() {
        text_ += "\n";
        open_ = false;
    }
    [[nodiscard]] const std::string& text() const { return text_; }

private:
    Csv& put(const std::string& s) {
        text_ += "," + s;
        return *this;
    }
    std::string hash_;
    std::string text_;
    bool open_ = false;
};

struct Context {
    const Config& cfg;
    const RunOptions& opt;
    std::string hash;
    std::ostringstream summary;
    std::vector<Assertion> assertions;
    std::optional<Csv> csv;
    std::string dump;

    std::uint64_t seed() const { return cfg.get_uint("seed", 1); }

    void check(const std::string& name, bool ok, double value, double limit, const char* relation) {
        std::ostringstream d;
        d << format_double(value) << " " << relation << " " << format_double(limit);
        assertions.push_back({name, ok, d.str()});
    }
    void check_flag(const std::string& name, bool ok, const std::string& detail) {
        assertions.push_back({name, ok, detail});
    }
};

FieldDescriptor field_descriptor(const Config& c, const std::string& default_kind) {
    FieldDescriptor fd;
    fd.dim = c.get_int("field.dim", 2);
    if (fd.dim != 2 && fd.dim != 3) throw ConfigError("/field/dim", "must be 2 or 3");
    const std::string kind = c.get_string("field.kind", default_kind);
    if (kind == "identity") {
        fd.kind = FieldKind::constant;
    } else if (kind == "constant") {
        fd.kind = FieldKind::constant;
        const auto m = c.get_list("field.matrix", {});
        const std::size_t d = static_cast<std::size_t>(fd.dim);
        if (m.size() == d) {
            for (int i = 0; i < fd.dim; ++i) fd.matrix(i, i) = m[i];
        } else if (m.size() == d * d) {
            for (int i = 0; i < fd.dim; ++i)
                for (int j = 0; j < fd.dim; ++j) fd.matrix(i, j) = m[i * d + j];
        } else if (!m.empty()) {
            throw ConfigError("/field/matrix", "needs d diagonal entries or d * d entries");
        }
    } else if (kind == "layered") {
        fd.kind = FieldKind::layered;
    } else {
        fd.kind = FieldKind::trigonometric;
    }
    fd.mean = c.get_number("field.mean", fd.mean);
    fd.amplitude = c.get_number("field.amplitude", fd.amplitude);
    fd.frequency = c.get_int("field.frequency", fd.frequency);
    fd.axis = c.get_int("field.axis", fd.axis);
    if (fd.axis >= fd.dim) throw ConfigError("/field/axis", "must be below field.dim");
    fd.seed = c.get_uint("field.seed", c.get_uint("seed", 1));
    fd.terms = c.get_int("field.terms", fd.terms);
    fd.max_frequency = c.get_int("field.max_frequency", fd.max_frequency);
    fd.trig_amplitude = c.get_number("field.trig_amplitude", fd.trig_amplitude);
    fd.shift = c.get_number("field.shift", fd.shift);
    return fd;
}

CellSolveOptions cell_options(const Config& c) {
    CellSolveOptions o;
    o.cutoff = c.get_int("cell.cutoff", 0);
    o.tol = c.get_number("tol.cell", 0.0);
    return o;
}

struct FieldBundle {
    std::shared_ptr<const CoefficientField> field;
    std::shared_ptr<const CorrectorField> corr;
    HomogenizedMatrix hm;
};

FieldBundle build_field(const Config& c, const std::string& default_kind) {
    FieldBundle b;
    b.field = std::make_shared<const CoefficientField>(make_field(field_descriptor(c, default_kind)));
    b.corr = std::make_shared<const CorrectorField>(solve_cell(b.field, cell_options(c)));
    b.hm = homogenized_matrix(*b.field, *b.corr);
    return b;
}

std::shared_ptr<const KernelModel> build_kernel(const FieldBundle& b, double eps) {
    if (b.field->is_constant())
        return std::make_shared<const ConstKernelModel>(b.field->dim(), b.field->mean_matrix());
    return std::make_shared<const TwoScaleKernel>(b.corr, b.hm, eps);
}

BoundaryMesh build_domain(const Config& c, int dim, int default_panels, const std::string& default_kind) {
    const std::string kind = c.get_string("domain.kind", default_kind);
    const int n = c.get_int("domain.panels", default_panels);
    if (n < 1) throw ConfigError("/domain/panels", "must be positive");
    if (kind == "square" || kind == "disk") {
        if (dim != 2) throw ConfigError("/domain/kind", kind + " needs field.dim = 2");
    } else if (kind == "cube") {
        if (dim != 3) throw ConfigError("/domain/kind", "cube needs field.dim = 3");
    } else {
        throw ConfigError("/domain/kind", "graph domains are only used by q-identities");
    }
    if (kind == "square") return unit_square_mesh(n);
    if (kind == "cube") return unit_cube_mesh(n);
    const auto ctr = c.get_list("domain.center", {0.0, 0.0});
    if (ctr.size() != 2) throw ConfigError("/domain/center", "needs two coordinates");
    return circle_mesh(Vec3(ctr[0], ctr[1], 0.0), c.get_number("domain.radius", 1.0), n);
}

Vec3 point(const Config& c, const std::string& key, const Vec3& fallback, int dim) {
    if (!c.has(key)) return fallback;
    const auto v = c.get_list(key, {});
    if (static_cast<int>(v.size()) != dim)
        throw ConfigError(Config::pointer(key), "needs " + std::to_string(dim) + " coordinates");
    Vec3 p = Vec3::Zero();
    for (int i = 0; i < dim; ++i) p(i) = v[i];
    return p;
}

// ---------------------------------------------------------------------------

void run_cell(Context& ctx) {
    const Config& c = ctx.cfg;
    const FieldBundle b = build_field(c, "layered");
    const int d = b.field->dim();
    const FieldDescriptor& fd = b.field->descriptor();

    std::optional<Mat3> oracle;
    if (fd.kind == FieldKind::constant) {
        oracle = b.field->mean_matrix();
    } else if (fd.kind == FieldKind::layered) {
        Mat3 o = Mat3::Identity() * fd.mean;
        o(fd.axis, fd.axis) = std::sqrt(fd.mean * fd.mean - fd.amplitude * fd.amplitude);
        oracle = embed(o, d);
    }
    const double tol = c.get_number("tol.a0", fd.kind == FieldKind::constant ? 1e-12 : 1e-5);

    std::vector<std::string> cols{"row"};
    for (int j = 0; j < d; ++j) cols.push_back("a0_" + std::to_string(j + 1));
    cols.insert(cols.end(), {"chi_norm", "oracle_error"});
    ctx.csv.emplace(ctx.hash, cols);
    double worst = 0.0, chi_worst = 0.0;
    for (int i = 0; i < d; ++i) {
        double chi2 = 0.0;
        for (const auto& m : b.corr->modes(i)) chi2 += std::norm(m.coeff);
        const double chi = std::sqrt(chi2);
        chi_worst = std::max(chi_worst, chi);
        double err = std::numeric_limits<double>::quiet_NaN();
        if (oracle) {
            err = 0.0;
            for (int j = 0; j < d; ++j) err = std::max(err, std::abs(b.hm.a0(i, j) - (*oracle)(i, j)));
            worst = std::max(worst, err);
        }
        ctx.csv->row() << i + 1;
        for (int j = 0; j < d; ++j) *ctx.csv << b.hm.a0(i, j);
        *ctx.csv << chi << err;
        ctx.csv->end();
    }
    ctx.summary << "A0 =";
    for (int i = 0; i < d; ++i) {
        ctx.summary << (i ? " ;" : "");
        for (int j = 0; j < d; ++j) ctx.summary << " " << format_double(b.hm.a0(i, j));
    }
    ctx.summary << "\ncell residual " << format_double(b.corr->residual()) << ", truncation "
                << format_double(b.corr->truncation_residual()) << ", " << b.corr->iterations()
                << " iterations\n";
    if (oracle) ctx.check("a0_oracle", worst <= tol, worst, tol, "<=");
    if (fd.kind == FieldKind::constant) ctx.check("chi_zero", chi_worst <= tol, chi_worst, tol, "<=");
    auto [lo, hi] = sym_eig_range(b.hm.a0, d);
    ctx.check("a0_positive", lo > 0.0, lo, 0.0, ">");
    (void)hi;
}

void run_kernel_rates(Context& ctx) {
    const Config& c = ctx.cfg;
    if (c.get_int("field.dim", 2) != 2) throw ConfigError("/field/dim", "kernel rates need d = 2");
    const FieldBundle b = build_field(c, "trigonometric");
    KernelRateOptions o;
    o.box = c.get_number("kernel.box", o.box);
    o.h = c.get_number("kernel.h", o.h);
    o.pole = point(c, "kernel.pole", o.pole, 2);
    o.near_radii = c.get_list("kernel.near_radii", o.near_radii);
    o.far_radii = c.get_list("kernel.far_radii", o.far_radii);
    o.n_angles = c.get_int("kernel.angles", o.n_angles);
    const KernelRateReport r = kernel_rates(b.corr, b.hm, o);
    const double gain = c.get_number("tol.rate_gain", 0.3);

    ctx.csv.emplace(ctx.hash, std::vector<std::string>{"regime", "r", "residual"});
    for (const auto& s : r.near) {
        ctx.csv->row() << "near" << s.r << s.residual;
        ctx.csv->end();
    }
    for (const auto& s : r.far) {
        ctx.csv->row() << "far" << s.r << s.residual;
        ctx.csv->end();
    }
    ctx.summary << "near slope " << format_double(r.near_slope) << " (leading order "
                << format_double(r.near_order) << ")\nfar slope " << format_double(r.far_slope)
                << " (leading order " << format_double(r.far_order) << ")\nreference flux "
                << format_double(r.flux) << "\n";
    ctx.check("near_gain", r.near_slope >= r.near_order + gain, r.near_slope, r.near_order + gain, ">=");
    ctx.check("far_gain", r.far_slope <= r.far_order - gain, r.far_slope, r.far_order - gain, "<=");
}

FieldFunction harmonic_polynomial(const Mat3& e, int d, const Vec3& c) {
    // E22 x1^2 - E11 x2^2 has zero E-Laplacian for any constant E
    auto value = [e, d, c](const Vec3& x) {
        const Vec3 z = x - c;
        double v = e(1, 1) * z(0) * z(0) - e(0, 0) * z(1) * z(1) + z(0) + 0.5 * z(1);
        if (d == 3) v += 0.25 * z(2);
        return v;
    };
    auto grad = [e, d, c](const Vec3& x) {
        const Vec3 z = x - c;
        return Vec3(2.0 * e(1, 1) * z(0) + 1.0, -2.0 * e(0, 0) * z(1) + 0.5, d == 3 ? 0.25 : 0.0);
    };
    return FieldFunction(value, grad, [e](const Vec3&) { return e; });
}

void run_solve(Context& ctx) {
    const Config& c = ctx.cfg;
    const FieldBundle b = build_field(c, "identity");
    const int d = b.field->dim();
    const bool constant = b.field->is_constant();
    const std::string data = c.get_string("data", constant ? "polynomial" : "corrector");
    if (data == "polynomial" && !constant)
        throw ConfigError("/data", "polynomial data needs a constant field");
    const double eps = c.get_number("eps", 0.25);
    const ProblemKind kind = problem_kind_from_string(c.get_string("problem", "dirichlet"));
    const std::string dom = c.get_string("domain.kind", d == 2 ? "square" : "cube");
    const int panels = constant ? (d == 2 ? 64 : 16)
                                : auto_panels(32, c.get_int("mesh.panels_per_eps", 8), eps,
                                              c.get_int("mesh.max_panels", 4000), d);
    const BoundaryMesh mesh = build_domain(c, d, panels, dom);

    Vec3 center = Vec3::Constant(0.5);
    if (d == 2) center(2) = 0.0;
    double half = 0.25;
    if (dom == "disk") {
        const auto ctr = c.get_list("domain.center", {0.0, 0.0});
        center = Vec3(ctr[0], ctr[1], 0.0);
        half = 0.5 * c.get_number("domain.radius", 1.0) / std::sqrt(2.0);
    }
    std::vector<double> weights = c.get_list("weights", {1.0, 0.5, 0.25});
    if (weights.size() < static_cast<std::size_t>(d)) throw ConfigError("/weights", "needs one weight per dimension");
    weights.resize(d);
    const FieldFunction u = data == "polynomial" ? harmonic_polynomial(b.field->mean_matrix(), d, center)
                                                 : corrector_solution(b.corr, eps, weights);

    SolveOptions so;
    so.strict = ctx.opt.strict || c.get_bool("strict", false);
    const BvpSolution sol = solve(kind, mesh, build_kernel(b, eps), boundary_data(mesh, u, kind), so);

    std::vector<Vec3> probes;
    const int m = d == 2 ? 9 : 27;
    for (int k = 0; k < m; ++k) {
        Vec3 p = center;
        p(0) += half * (k % 3 - 1);
        p(1) += half * (k / 3 % 3 - 1);
        if (d == 3) p(2) += half * (k / 9 - 1);
        probes.push_back(p);
    }
    std::vector<double> uh(m), ex(m);
    double shift = 0.0;
    for (int k = 0; k < m; ++k) {
        uh[k] = sol.value(probes[k]);
        ex[k] = u.value(probes[k]);
        shift += uh[k] - ex[k];
    }
    shift = kind == ProblemKind::neumann ? shift / m : 0.0;
    double err = 0.0, scale = 0.0;
    ctx.csv.emplace(ctx.hash, std::vector<std::string>{"x", "y", "z", "u", "exact", "error"});
    for (int k = 0; k < m; ++k) {
        const double e = std::abs(uh[k] - shift - ex[k]);
        err = std::max(err, e);
        scale = std::max(scale, std::abs(ex[k]));
        ctx.csv->row() << probes[k](0) << probes[k](1) << probes[k](2) << uh[k] - shift << ex[k] << e;
        ctx.csv->end();
    }
    const double rel = err / scale;
    ctx.summary << to_string(kind) << " solve, " << mesh.size() << " panels, " << data << " data\n"
                << "density residual " << format_double(sol.residual()) << ", rcond "
                << format_double(sol.rcond()) << "\nmax relative interior error " << format_double(rel) << "\n";
    for (const auto& w : sol.warnings()) ctx.summary << "warning: " << w << "\n";
    const double tol = c.get_number("tol.interior", data == "corrector" ? 0.1 : d == 2 ? 0.005 : 0.02);
    ctx.check("interior_error", rel <= tol, rel, tol, "<=");

    if (c.get_bool("dump", false)) {
        if (d != 2) throw ConfigError("/dump", "field dumps are available for d = 2");
        const int n = c.get_int("dump.n", 41);
        if (n < 2) throw ConfigError("/dump/n", "needs at least 2 points per side");
        Vec3 lo = mesh.panel(0).centroid, hi = lo;
        for (const auto& p : mesh.panels()) {
            lo = lo.cwiseMin(p.corners[0]);
            hi = hi.cwiseMax(p.corners[0]);
        }
        std::ostringstream os;
        os << "# x y u\n";
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const Vec3 x(lo(0) + (hi(0) - lo(0)) * (i + 0.5) / n, lo(1) + (hi(1) - lo(1)) * (j + 0.5) / n, 0.0);
                if (!mesh.contains(x)) continue;
                os << format_double(x(0)) << " " << format_double(x(1)) << " "
                   << format_double(sol.value(x) - shift) << "\n";
            }
            os << "\n";
        }
        ctx.dump = os.str();
    }
}

void run_sweep(Context& ctx) {
    const Config& c = ctx.cfg;
    SweepConfig sc;
    sc.field = field_descriptor(c, "trigonometric");
    sc.epsilons = c.get_list("epsilons", sc.epsilons);
    sc.problems.clear();
    for (const auto& p : c.get_names("problems", {"corrector", "dirichlet", "neumann", "regularity"}))
        sc.problems.push_back(p == "corrector"   ? SweepProblem::corrector
                              : p == "dirichlet" ? SweepProblem::dirichlet
                              : p == "neumann"   ? SweepProblem::neumann
                                                 : SweepProblem::regularity);
    sc.weights = c.get_list("weights", sc.weights);
    sc.weights.resize(3, 0.0);
    sc.panels_per_edge = c.get_int("domain.panels", sc.panels_per_edge);
    sc.panels_per_epsilon = c.get_int("mesh.panels_per_eps", sc.panels_per_epsilon);
    sc.max_panels = c.get_int("mesh.max_panels", sc.max_panels);
    sc.spread_limit = c.get_number("tol.spread", sc.spread_limit);
    sc.nt_aperture = c.get_number("nt.aperture", sc.nt_aperture);
    sc.cell = cell_options(c);
    sc.solve.strict = ctx.opt.strict || c.get_bool("strict", false);
    sc.jobs = ctx.opt.jobs > 0 ? ctx.opt.jobs : c.get_int("jobs", 1);
    const SweepReport rep = epsilon_sweep(sc);

    ctx.csv.emplace(ctx.hash, std::vector<std::string>{"epsilon", "problem", "n_panels", "data_norm",
                                                        "grad_nt_norm", "ratio", "rellich_neumann",
                                                        "rellich_regularity", "residual"});
    for (const auto& r : rep.rows) {
        ctx.csv->row() << r.epsilon << to_string(r.problem) << r.n_panels << r.data_norm << r.grad_nt_norm
                       << r.ratio << r.rellich_neumann << r.rellich_regularity << r.residual;
        ctx.csv->end();
        if (!r.error.empty())
            ctx.summary << "error at eps " << format_double(r.epsilon) << " " << to_string(r.problem) << ": "
                        << r.error << "\n";
    }
    static const char* names[3] = {"ratio", "rellich_neumann", "rellich_regularity"};
    for (const auto& [p, s] : rep.spreads)
        for (int k = 0; k < 3; ++k)
            ctx.check(p + "_" + names[k] + "_spread", s[k] < sc.spread_limit, s[k], sc.spread_limit, "<");
    for (const auto& r : rep.rows)
        if (!r.error.empty())
            ctx.check_flag(to_string(r.problem) + "_eps_" + format_double(r.epsilon), false, r.error);
}

void run_continuation(Context& ctx) {
    const Config& c = ctx.cfg;
    if (c.get_int("field.dim", 2) != 2) throw ConfigError("/field/dim", "continuation runs in d = 2");
    auto field = std::make_shared<const CoefficientField>(make_field(field_descriptor(c, "trigonometric")));
    const BoundaryMesh mesh = build_domain(c, 2, 16, "square");
    ContinuationOptions o;
    o.epsilon = c.get_number("eps", o.epsilon);
    o.n_random = c.get_int("random", o.n_random);
    o.seed = ctx.seed();
    o.cell = cell_options(c);
    const auto grid = c.get_list("s_grid", {0.0, 0.25, 0.5, 0.75, 1.0});
    const auto rows = continuation_sweep(mesh, field, grid, o);

    ctx.csv.emplace(ctx.hash, std::vector<std::string>{"s", "cond_plus", "cond_minus", "lower_plus",
                                                        "lower_minus", "probe", "probe_slope"});
    double plo = 1e300, phi = 0.0, mlo = 1e300, mhi = 0.0, slo = 1e300, shi = 0.0;
    bool finite = true;
    for (const auto& r : rows) {
        ctx.csv->row() << r.s << r.cond_plus << r.cond_minus << r.lower_plus << r.lower_minus << r.probe
                       << r.probe_slope;
        ctx.csv->end();
        finite = finite && std::isfinite(r.cond_plus) && std::isfinite(r.cond_minus);
        plo = std::min(plo, r.cond_plus);
        phi = std::max(phi, r.cond_plus);
        mlo = std::min(mlo, r.cond_minus);
        mhi = std::max(mhi, r.cond_minus);
        if (r.s > 0.0) {
            slo = std::min(slo, r.probe_slope);
            shi = std::max(shi, r.probe_slope);
        }
    }
    const double cf = c.get_number("tol.condition_factor", 5.0);
    const double pf = c.get_number("tol.probe_factor", 2.0);
    ctx.summary << rows.size() << " values of s on " << mesh.size() << " panels\n";
    ctx.check_flag("conditions_finite", finite, finite ? "all finite" : "non-finite estimate");
    ctx.check("cond_plus_spread", phi / plo <= cf, phi / plo, cf, "<=");
    ctx.check("cond_minus_spread", mhi / mlo <= cf, mhi / mlo, cf, "<=");
    if (shi > 0.0) ctx.check("probe_linearity", shi / slo <= pf, shi / slo, pf, "<=");
}

void run_q_identities(Context& ctx) {
    const Config& c = ctx.cfg;
    if (c.get_int("field.dim", 2) != 2) throw ConfigError("/field/dim", "graph patches are two dimensional");
    const FieldBundle b = build_field(c, "trigonometric");
    GraphDescriptor g;
    const std::string gk = c.get_string("domain.graph", "sine");
    g.kind = gk == "flat" ? GraphKind::flat : gk == "cone" ? GraphKind::cone : gk == "sawtooth" ? GraphKind::sawtooth : GraphKind::sine;
    g.slope = c.get_number("domain.slope", 0.5);
    g.period = c.get_number("domain.period", 1.0);
    g.amplitude = c.get_number("domain.amplitude", 0.1);
    const GraphPatch patch = build_graph_patch(g, c.get_number("domain.lipschitz", 0.7), c.get_number("domain.r", 0.5),
                                               c.get_int("domain.resolution", 32));
    QIdentityOptions o;
    o.rho = c.get_number("rho", o.rho);
    o.seed = ctx.seed();
    o.samples = c.get_int("samples", o.samples);
    std::vector<double> weights = c.get_list("weights", {1.0, 1.0});
    weights.resize(2, 0.0);
    const double tp = c.get_number("tol.product", 1e-12);
    const double tt = c.get_number("tol.telescoping", 1e-10);
    const double ti = c.get_number("tol.ibp", 0.02);

    ctx.csv.emplace(ctx.hash, std::vector<std::string>{"epsilon", "product_rule", "telescoping", "ibp_lhs",
                                                        "ibp_rhs", "ibp_residual", "fem_residual"});
    for (double eps : c.get_list("epsilons", {0.5, 0.25})) {
        const QIdentityReport r = q_identity_report(patch, corrector_solution(b.corr, eps, weights), eps, o);
        ctx.csv->row() << eps << r.product_rule << r.telescoping << r.ibp_lhs << r.ibp_rhs << r.ibp_residual
                       << r.fem_residual;
        ctx.csv->end();
        const std::string tag = "_eps_" + format_double(eps);
        ctx.check("product_rule" + tag, r.product_rule <= tp, r.product_rule, tp, "<=");
        ctx.check("telescoping" + tag, r.telescoping <= tt, r.telescoping, tt, "<=");
        const double inv = 1.0 / eps;
        if (std::abs(inv - std::round(inv)) < 1e-12)
            ctx.check("ibp" + tag, r.ibp_residual <= ti, r.ibp_residual, ti, "<=");
        else
            ctx.summary << "1/eps = " << format_double(inv) << " is not an integer; no IBP assertion\n";
    }
}

double disk_green(const Vec3& x, const Vec3& y, const Vec3& c, double radius) {
    const Vec3 xr = x - c, yr = y - c;
    const double ny = yr.norm();
    const double l = std::log((x - y).norm());
    if (ny == 0.0) return -(l - std::log(radius)) / (2.0 * std::numbers::pi);
    const Vec3 star = radius * radius * yr / (ny * ny);
    return -(l - std::log(ny / radius * (xr - star).norm())) / (2.0 * std::numbers::pi);
}

void run_green(Context& ctx) {
    const Config& c = ctx.cfg;
    const FieldBundle b = build_field(c, "identity");
    const int d = b.field->dim();
    const std::string dom = c.get_string("domain.kind", d == 2 ? "disk" : "cube");
    if (dom == "disk" && !c.has("domain.radius")) throw ConfigError("/domain/radius", "required for disk domains");
    const BoundaryMesh mesh = build_domain(c, d, d == 2 ? 256 : 12, dom);
    const double eps = c.get_number("eps", 0.25);
    Vec3 dflt = dom == "disk" ? point(c, "domain.center", Vec3::Zero(), 2) + Vec3(0.2, 0.1, 0.0)
                              : Vec3(0.45, 0.4, d == 3 ? 0.55 : 0.0);
    const Vec3 pole = point(c, "green.pole", dflt, d);
    SolveOptions so;
    so.strict = ctx.opt.strict || c.get_bool("strict", false);
    const GreenFunction g = green_function(mesh, build_kernel(b, eps), pole, so);

    double dist = 1e300;
    for (const auto& p : mesh.panels()) dist = std::min(dist, (p.centroid - pole).norm());
    // Pole flux is a small-circle limit; with an oscillating kernel the flux
    // through larger circles carries the kernel's approximation error.
    const double fr = c.get_number("green.flux_radius", b.field->is_constant() ? 0.5 * dist : std::min(0.5 * dist, eps / 8.0));
    const double flux = g.flux(fr, 512);
    const auto [tmax, gmax] = g.boundary_trace();
    const double trace = tmax / gmax;

    ctx.csv.emplace(ctx.hash, std::vector<std::string>{"metric", "value"});
    auto put = [&](const char* k, double v) {
        ctx.csv->row() << k << v;
        ctx.csv->end();
    };
    put("flux", flux);
    put("flux_radius", fr);
    double worst = 0.0;
    for (int k = 1; k <= 8; ++k) worst = std::max(worst, std::abs(g.flux(dist * k / 9.0, 512) - 1.0));
    put("flux_profile_max_deviation", worst);
    put("trace_ratio", trace);
    put("correction_residual", g.correction().residual());
    ctx.summary << "pole (" << format_double(pole(0)) << ", " << format_double(pole(1))
                << (d == 3 ? ", " + format_double(pole(2)) : std::string()) << "), " << mesh.size() << " panels\n";

    const double tf = c.get_number("tol.flux", 0.02), tt = c.get_number("tol.trace", 0.02);
    ctx.check("pole_flux", std::abs(flux - 1.0) <= tf, std::abs(flux - 1.0), tf, "<=");
    ctx.check("boundary_trace", trace <= tt, trace, tt, "<=");

    const bool identity = b.field->is_constant() && b.field->mean_matrix().isIdentity(0.0);
    if (dom == "disk" && identity) {
        const auto ctr = c.get_list("domain.center", {0.0, 0.0});
        const Vec3 cc(ctr[0], ctr[1], 0.0);
        const double radius = c.get_number("domain.radius", 1.0);
        double err = 0.0, scale = 0.0;
        for (double s : {0.25, 0.5, 0.75})
            for (int k = 0; k < 16; ++k) {
                const double t = 2.0 * std::numbers::pi * (k + 0.25) / 16;
                const Vec3 x = cc + s * radius * Vec3(std::cos(t), std::sin(t), 0.0);
                if ((x - pole).norm() < 0.05 * radius) continue;
                const double ex = disk_green(x, pole, cc, radius);
                err = std::max(err, std::abs(g.value(x) - ex));
                scale = std::max(scale, std::abs(ex));
            }
        put("closed_form_error", err / scale);
        const double tg = c.get_number("tol.green", 0.01);
        ctx.check("closed_form", err / scale <= tg, err / scale, tg, "<=");
    }
}

void run_const_kernel(Context& ctx) {
    const Config& c = ctx.cfg;
    const auto radii = c.get_list("const.radii", {0.5, 1.0, 2.0});
    auto diag = c.get_list("const.diag", {4.0, 1.0, 1.0});
    diag.resize(3, 1.0);
    const double tf = c.get_number("tol.flux_norm", 1e-6);
    const double th = c.get_number("tol.homogeneity", 1e-12);
    ctx.csv.emplace(ctx.hash, std::vector<std::string>{"dim", "e11", "e22", "e33", "r", "flux", "flux_error",
                                                        "homogeneity_error"});
    std::mt19937_64 rng(ctx.seed());
    std::normal_distribution<double> normal;
    double fw = 0.0, hw = 0.0;
    for (int d : {2, 3}) {
        for (int which = 0; which < 2; ++which) {
            Mat3 e = Mat3::Identity();
            if (which == 1)
                for (int i = 0; i < d; ++i) e(i, i) = diag[i];
            const ConstKernel k(d, e);
            for (double r : radii) {
                const double flux = kernel_flux(k, r, 512);
                // Theta(2X) = 2^{2-d} Theta(X) in d = 3; in d = 2 the scaling
                // shifts Theta by -ln 2 / (2 pi sqrt(det E)).
                double h = 0.0;
                for (int s = 0; s < 16; ++s) {
                    Vec3 x(normal(rng), normal(rng), d == 3 ? normal(rng) : 0.0);
                    x *= r / x.norm();
                    const double t1 = k.theta(x, Vec3::Zero()), t2 = k.theta(2.0 * x, Vec3::Zero());
                    const double expect = d == 3 ? 0.5 * t1 : t1 - std::log(2.0) / (2.0 * std::numbers::pi * k.sqrt_det());
                    h = std::max(h, std::abs(t2 - expect) / (std::abs(t1) + std::abs(t2)));
                    const Vec3 g1 = k.grad(x, Vec3::Zero()), g2 = k.grad(2.0 * x, Vec3::Zero());
                    h = std::max(h, (g2 - std::pow(2.0, 1 - d) * g1).norm() / g2.norm());
                }
                ctx.csv->row() << d << e(0, 0) << e(1, 1) << (d == 3 ? e(2, 2) : 0.0) << r << flux
                               << std::abs(flux - 1.0) << h;
                ctx.csv->end();
                fw = std::max(fw, std::abs(flux - 1.0));
                hw = std::max(hw, h);
            }
        }
    }
    ctx.summary << "max flux error " << format_double(fw) << ", max homogeneity error " << format_double(hw) << "\n";
    ctx.check("flux_normalization", fw <= tf, fw, tf, "<=");
    ctx.check("homogeneity", hw <= th, hw, th, "<=");
}

void run_traces(Context& ctx) {
    const Config& c = ctx.cfg;
    const FieldBundle b = build_field(c, "identity");
    const int d = b.field->dim();
    const BoundaryMesh mesh = build_domain(c, d, d == 2 ? 32 : 6, d == 2 ? "square" : "cube");
    const auto kernel = build_kernel(b, c.get_number("eps", 0.25));
    std::mt19937_64 rng(ctx.seed());
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> f(mesh.size());
    for (auto& v : f) v = unif(rng);

    const auto plus = trace_grad_single_layer(mesh, *kernel, f, Side::plus);
    const auto minus = trace_grad_single_layer(mesh, *kernel, f, Side::minus);
    const BemOperator k = assemble_K(mesh, *kernel);
    Eigen::VectorXd fv = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    const Eigen::VectorXd kf = 0.5 * fv + k.matrix * fv;
    const auto cplus = conormal_part(mesh, *kernel, plus);
    const auto tp = tangential_part(mesh, plus), tm = tangential_part(mesh, minus);

    double jump = 0.0, tang = 0.0, opk = 0.0, fmax = 0.0, gmax = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const Panel& p = mesh.panel(i);
        const Mat3 a = kernel->coefficient(p.centroid);
        const Vec3 expect = f[i] / p.normal.dot(a * p.normal) * p.normal;
        jump = std::max(jump, (plus[i] - minus[i] - expect).norm());
        tang = std::max(tang, (tp[i] - tm[i]).norm());
        opk = std::max(opk, std::abs(cplus[i] - kf(static_cast<Eigen::Index>(i))));
        fmax = std::max(fmax, std::abs(f[i]));
        gmax = std::max(gmax, plus[i].norm());
    }
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(mesh.size()));
    const Eigen::VectorXd k1 = 0.5 * one + k.matrix * one;
    double mean = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) mean += mesh.panel(i).measure * k1(static_cast<Eigen::Index>(i));
    mean = std::abs(mean) / mesh.sigma();

    const double tj = c.get_number("tol.jump", 1e-12), tt = c.get_number("tol.tangential", 1e-12);
    const double tm_ = c.get_number("tol.mean", 1e-10);
    ctx.csv.emplace(ctx.hash, std::vector<std::string>{"check", "value", "tolerance"});
    auto put = [&](const char* name, double v, double tol) {
        ctx.csv->row() << name << v << tol;
        ctx.csv->end();
        ctx.check(name, v <= tol, v, tol, "<=");
    };
    put("jump", jump / fmax, tj);
    put("conormal_trace_vs_operator", opk / fmax, tj);
    put("tangential_agreement", tang / gmax, tt);
    put("constant_mean", mean, tm_);
    ctx.summary << mesh.size() << " panels, kernel " << kernel->id() << "\n";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

}  // namespace

RunResult run(Config config, const RunOptions& options) {
    if (options.seed) config.set("seed", std::to_string(*options.seed));
    if (options.strict) config.set("strict", "true");
    Context ctx{config, options, config.hash_hex(), {}, {}, {}, {}};
    const std::string sub = config.subcommand();
    ctx.summary << "lplab " << sub << " (config " << ctx.hash << ")\n";

    if (sub == "cell") run_cell(ctx);
    else if (sub == "kernel-rates") run_kernel_rates(ctx);
    else if (sub == "solve") run_solve(ctx);
    else if (sub == "rellich-sweep") run_sweep(ctx);
    else if (sub == "continuation") run_continuation(ctx);
    else if (sub == "q-identities") run_q_identities(ctx);
    else if (sub == "green") run_green(ctx);
    else if (sub == "const-kernel") run_const_kernel(ctx);
    else run_traces(ctx);

    RunResult res;
    res.assertions = ctx.assertions;
    bool ok = true;
    for (const auto& a : ctx.assertions) {
        ctx.summary << (a.passed ? "PASS " : "FAIL ") << a.name << ": " << a.detail << "\n";
        ok = ok && a.passed;
    }
    res.exit_code = ok ? 0 : 1;
    res.summary = ctx.summary.str();

    std::string stem = config.get_string("output", sub);
    for (auto& ch : stem)
        if (ch == '-') ch = '_';
    const std::filesystem::path dir(options.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / (stem + ".csv"), ctx.csv->text());
    write_file(dir / (stem + ".txt"), res.summary);
    res.artifacts = {(dir / (stem + ".csv")).string(), (dir / (stem + ".txt")).string()};
    if (!ctx.dump.empty()) {
        write_file(dir / (stem + "_field.dat"), ctx.dump);
        res.artifacts.push_back((dir / (stem + "_field.dat")).string());
    }
    if (options.echo) std::fputs(res.summary.c_str(), stdout);
    return res;
}

}  // namespace lplab
