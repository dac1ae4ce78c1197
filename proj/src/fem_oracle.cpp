#include "lplab/fem_oracle.hpp"

#include "lplab/const_kernel.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <numbers>

namespace lplab {

namespace {

constexpr double kGauss2[2] = {0.5 - 0.5 / 1.7320508075688772, 0.5 + 0.5 / 1.7320508075688772};

// Q1 shape function a (bit pattern of the local corner) and its gradient in
// local coordinates.
double shape(int a, const Vec3& xi, int dim) {
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= (a >> d & 1) ? xi(d) : 1.0 - xi(d);
    return v;
}

Vec3 shape_grad(int a, const Vec3& xi, int dim) {
    Vec3 g = Vec3::Zero();
    for (int d = 0; d < dim; ++d) {
        double v = (a >> d & 1) ? 1.0 : -1.0;
        for (int e = 0; e < dim; ++e)
            if (e != d) v *= (a >> e & 1) ? xi(e) : 1.0 - xi(e);
        g(d) = v;
    }
    return g;
}

std::vector<Vec3> gauss_points(int dim) {
    std::vector<Vec3> pts;
    for (int k = 0; k < (dim == 3 ? 2 : 1); ++k)
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i)
                pts.emplace_back(kGauss2[i], kGauss2[j], dim == 3 ? kGauss2[k] : 0.0);
    return pts;
}

struct Assembly {
    Eigen::SparseMatrix<double> k;
    Eigen::VectorXd b;
    std::vector<long> free_index;
    Eigen::VectorXd fixed;  // Dirichlet values on boundary nodes
};

Assembly assemble(const FemGrid& grid, const FemProblem& pb, bool with_abs = false,
                  Eigen::SparseMatrix<double>* abs_k = nullptr) {
    const int d = grid.dim();
    const int nloc = 1 << d;
    const double h = grid.h();
    const double vol = std::pow(h, d);
    const bool dirichlet = pb.bc == FemProblem::Bc::dirichlet;
    Assembly as;
    as.free_index.assign(grid.n_nodes(), -1);
    as.fixed = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.n_nodes()));
    long nfree = 0;
    for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
        if (!grid.in_domain(i)) continue;
        if (dirichlet && grid.on_boundary(i))
            as.fixed(i) = pb.dirichlet(grid.node(i));
        else
            as.free_index[i] = nfree++;
    }
    as.k.resize(nfree, nfree);
    as.k.reserve(Eigen::VectorXi::Constant(nfree, d == 2 ? 9 : 27));
    if (with_abs) {
        abs_k->resize(nfree, nfree);
        abs_k->reserve(Eigen::VectorXi::Constant(nfree, d == 2 ? 9 : 27));
    }
    as.b = Eigen::VectorXd::Zero(nfree);

    const auto gp = gauss_points(d);
    const double gw = 1.0 / gp.size();
    std::vector<std::array<Vec3, 8>> grads(gp.size());
    for (std::size_t q = 0; q < gp.size(); ++q)
        for (int a = 0; a < nloc; ++a) grads[q][a] = shape_grad(a, gp[q], d) / h;

    Eigen::Matrix<double, 8, 8> ke;
    for (std::size_t c = 0; c < grid.n_cells(); ++c) {
        if (!grid.active(c)) continue;
        auto nodes = grid.cell_nodes(c);
        const Vec3 origin = grid.node(nodes[0]);
        ke.setZero();
        Eigen::Matrix<double, 8, 1> fe = Eigen::Matrix<double, 8, 1>::Zero();
        for (std::size_t q = 0; q < gp.size(); ++q) {
            const Vec3 x = origin + h * gp[q];
            const Mat3 a = pb.coefficient(x);
            for (int i = 0; i < nloc; ++i) {
                const Vec3 ag = a * grads[q][i];
                for (int j = 0; j < nloc; ++j) ke(j, i) += gw * vol * grads[q][j].dot(ag);
            }
            if (pb.flux_load) {
                const Vec3 f = pb.flux_load(x);
                for (int i = 0; i < nloc; ++i) fe(i) -= gw * vol * f.dot(grads[q][i]);
            }
        }
        for (int i = 0; i < nloc; ++i) {
            const long fi = as.free_index[nodes[i]];
            if (fi < 0) continue;
            as.b(fi) += fe(i);
            for (int j = 0; j < nloc; ++j) {
                const long fj = as.free_index[nodes[j]];
                if (fj < 0) {
                    as.b(fi) -= ke(i, j) * as.fixed(nodes[j]);
                } else {
                    as.k.coeffRef(fi, fj) += ke(i, j);
                    if (with_abs) abs_k->coeffRef(fi, fj) += std::abs(ke(i, j));
                }
            }
        }
    }

    if (pb.point_load) {
        Vec3 xi;
        std::size_t c = grid.locate(*pb.point_load, xi);
        auto nodes = grid.cell_nodes(c);
        for (int a = 0; a < nloc; ++a) {
            const long fi = as.free_index[nodes[a]];
            if (fi >= 0) as.b(fi) += shape(a, xi, d);
        }
    }

    if (!dirichlet && pb.neumann) {
        // Boundary faces of active cells, 2-point Gauss per tangential axis.
        for (std::size_t c = 0; c < grid.n_cells(); ++c) {
            if (!grid.active(c)) continue;
            auto nodes = grid.cell_nodes(c);
            const Vec3 origin = grid.node(nodes[0]);
            auto ijk = grid.node_coords(nodes[0]);
            for (int axis = 0; axis < d; ++axis)
                for (int side = 0; side < 2; ++side) {
                    std::array<int, 3> nb = ijk;
                    nb[axis] += side ? 1 : -1;
                    bool outside = nb[axis] < 0 || nb[axis] >= grid.cells(axis) ||
                                   !grid.active(grid.cell_index(nb[0], nb[1], nb[2]));
                    if (!outside) continue;
                    Vec3 n = Vec3::Zero();
                    n(axis) = side ? 1.0 : -1.0;
                    const int t1 = (axis + 1) % d, t2 = d == 3 ? (axis + 2) % 3 : -1;
                    const double area = std::pow(h, d - 1);
                    const int nq = d == 3 ? 4 : 2;
                    for (int q = 0; q < nq; ++q) {
                        Vec3 xi = Vec3::Zero();
                        xi(axis) = side;
                        xi(t1) = kGauss2[q % 2];
                        if (t2 >= 0) xi(t2) = kGauss2[q / 2];
                        const double g = pb.neumann(origin + h * xi, n);
                        for (int a = 0; a < nloc; ++a) {
                            const long fi = as.free_index[nodes[a]];
                            if (fi >= 0) as.b(fi) += area / nq * g * shape(a, xi, d);
                        }
                    }
                }
        }
    }
    as.k.makeCompressed();
    return as;
}

}  // namespace

// ---------------------------------------------------------------------------

FemGrid FemGrid::box(int dim, const Vec3& lo, const Vec3& hi, double h) {
    require(dim == 2 || dim == 3, "FEM grid dimension must be 2 or 3");
    require(h > 0.0, "element size must be positive");
    FemGrid g;
    g.dim_ = dim;
    g.lo_ = lo;
    g.hi_ = hi;
    g.h_ = h;
    for (int i = 0; i < 3; ++i) {
        if (i >= dim) {
            g.n_[i] = 1;
            g.lo_(i) = g.hi_(i) = 0.0;
            continue;
        }
        double cells = (hi(i) - lo(i)) / h;
        int n = static_cast<int>(std::lround(cells));
        require(n >= 2 && std::abs(cells - n) <= 1e-9 * cells, "box sides must be multiples of h");
        g.n_[i] = n;
    }
    std::size_t ncell = static_cast<std::size_t>(g.n_[0]) * g.n_[1] * (dim == 3 ? g.n_[2] : 1);
    g.active_.assign(ncell, true);
    g.classify();
    return g;
}

FemGrid FemGrid::masked(const Vec3& lo, const Vec3& hi, double h,
                        const std::function<bool(const Vec3&)>& inside) {
    FemGrid g = box(2, lo, hi, h);
    for (int j = 0; j < g.n_[1]; ++j)
        for (int i = 0; i < g.n_[0]; ++i) {
            Vec3 c = g.lo_ + Vec3((i + 0.5) * h, (j + 0.5) * h, 0.0);
            g.active_[g.cell_index(i, j)] = inside(c);
        }
    g.classify();
    return g;
}

void FemGrid::classify() {
    const int nx = n_[0] + 1, ny = n_[1] + 1, nz = dim_ == 3 ? n_[2] + 1 : 1;
    nodes_ = static_cast<std::size_t>(nx) * ny * nz;
    std::vector<int> touching(nodes_, 0);
    in_domain_.assign(nodes_, false);
    for (std::size_t c = 0; c < active_.size(); ++c) {
        if (!active_[c]) continue;
        for (std::size_t v : cell_nodes(c)) {
            if (v == static_cast<std::size_t>(-1)) continue;
            in_domain_[v] = true;
            ++touching[v];
        }
    }
    boundary_.assign(nodes_, false);
    const int full = 1 << dim_;
    for (std::size_t v = 0; v < nodes_; ++v) {
        if (!in_domain_[v]) continue;
        auto ijk = node_coords(v);
        // Count the cells around the node that exist in the grid.
        int around = 1;
        for (int a = 0; a < dim_; ++a) around *= (ijk[a] == 0 || ijk[a] == n_[a]) ? 1 : 2;
        boundary_[v] = around < full || touching[v] < around;
    }
}

Vec3 FemGrid::node(std::size_t idx) const {
    auto ijk = node_coords(idx);
    return lo_ + h_ * Vec3(ijk[0], ijk[1], dim_ == 3 ? ijk[2] : 0);
}

std::size_t FemGrid::node_index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(n_[0] + 1) * (static_cast<std::size_t>(j) +
                                                  static_cast<std::size_t>(n_[1] + 1) * k);
}

std::array<int, 3> FemGrid::node_coords(std::size_t idx) const {
    const std::size_t nx = n_[0] + 1, ny = n_[1] + 1;
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
}

std::size_t FemGrid::cell_index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(n_[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(n_[1]) * k);
}

std::array<std::size_t, 8> FemGrid::cell_nodes(std::size_t cell) const {
    const int i = static_cast<int>(cell % n_[0]);
    const int j = static_cast<int>((cell / n_[0]) % n_[1]);
    const int k = static_cast<int>(cell / (static_cast<std::size_t>(n_[0]) * n_[1]));
    std::array<std::size_t, 8> out;
    out.fill(static_cast<std::size_t>(-1));
    for (int a = 0; a < (1 << dim_); ++a) out[a] = node_index(i + (a & 1), j + (a >> 1 & 1), k + (a >> 2 & 1));
    return out;
}

std::size_t FemGrid::locate(const Vec3& x, Vec3& local) const {
    int idx[3] = {0, 0, 0};
    local = Vec3::Zero();
    for (int a = 0; a < dim_; ++a) {
        double s = (x(a) - lo_(a)) / h_;
        int c = std::clamp(static_cast<int>(std::floor(s)), 0, n_[a] - 1);
        idx[a] = c;
        local(a) = s - c;
    }
    return cell_index(idx[0], idx[1], idx[2]);
}

// ---------------------------------------------------------------------------

FemSolution::FemSolution(FemGrid grid, Eigen::VectorXd values,
                         std::function<Mat3(const Vec3&)> coefficient, double residual, int iterations)
    : grid_(std::move(grid)), values_(std::move(values)), coefficient_(std::move(coefficient)),
      residual_(residual), iterations_(iterations) {}

double FemSolution::value(const Vec3& x) const {
    Vec3 xi;
    const std::size_t c = grid_.locate(x, xi);
    auto nodes = grid_.cell_nodes(c);
    double v = 0.0;
    for (int a = 0; a < (1 << grid_.dim()); ++a) v += values_(nodes[a]) * shape(a, xi, grid_.dim());
    return v;
}

Vec3 FemSolution::gradient(const Vec3& x) const {
    // On an interior grid line the Q1 gradient jumps; average the cells on both sides.
    const int d = grid_.dim();
    const double h = grid_.h();
    int on_line = 0;
    for (int a = 0; a < d; ++a) {
        const double s = (x(a) - grid_.lo()(a)) / h;
        const double r = std::round(s);
        if (std::abs(s - r) < 1e-9 && r > 0.5 && r < grid_.cells(a) - 0.5) on_line |= 1 << a;
    }
    if (on_line == 0) return cell_gradient(x);
    Vec3 g = Vec3::Zero();
    int count = 0;
    for (int mask = 0; mask < (1 << d); ++mask) {
        if (mask & ~on_line) continue;
        Vec3 p = x;
        for (int a = 0; a < d; ++a)
            if (on_line >> a & 1) p(a) += ((mask >> a & 1) ? 1e-6 : -1e-6) * h;
        g += cell_gradient(p);
        ++count;
    }
    return g / count;
}

Vec3 FemSolution::cell_gradient(const Vec3& x) const {
    Vec3 xi;
    const std::size_t c = grid_.locate(x, xi);
    auto nodes = grid_.cell_nodes(c);
    Vec3 g = Vec3::Zero();
    for (int a = 0; a < (1 << grid_.dim()); ++a) g += values_(nodes[a]) * shape_grad(a, xi, grid_.dim());
    return g / grid_.h();
}

double FemSolution::energy() const {
    const int d = grid_.dim();
    const double h = grid_.h();
    const auto gp = gauss_points(d);
    const double wq = std::pow(h, d) / gp.size();
    double e = 0.0;
    for (std::size_t c = 0; c < grid_.n_cells(); ++c) {
        if (!grid_.active(c)) continue;
        auto nodes = grid_.cell_nodes(c);
        const Vec3 origin = grid_.node(nodes[0]);
        for (const auto& q : gp) {
            Vec3 g = Vec3::Zero();
            for (int a = 0; a < (1 << d); ++a) g += values_(nodes[a]) * shape_grad(a, q, d);
            g /= h;
            e += wq * g.dot(coefficient_(origin + h * q) * g);
        }
    }
    return e;
}

FemSolution fem_solve(const FemGrid& grid, const FemProblem& pb) {
    require(static_cast<bool>(pb.coefficient), "FEM problem needs a coefficient");
    if (pb.bc == FemProblem::Bc::dirichlet)
        require(static_cast<bool>(pb.dirichlet), "Dirichlet problem needs boundary data");
    if (pb.epsilon > 0.0 && grid.h() > pb.epsilon / 8.0 * (1.0 + 1e-12))
        throw InvalidArgument("FEM resolution rule violated: h = " + std::to_string(grid.h()) +
                              " but h <= eps/8 = " + std::to_string(pb.epsilon / 8.0) + " is required");
    Assembly as = assemble(grid, pb);
    const bool neumann = pb.bc == FemProblem::Bc::neumann;
    if (neumann) as.b.array() -= as.b.mean();

    Eigen::VectorXd x;
    int iterations = 0;
    if (as.b.norm() == 0.0) {
        x = Eigen::VectorXd::Zero(as.b.size());
    } else if (neumann) {
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(pb.tol);
        cg.setMaxIterations(pb.max_iterations);
        cg.compute(as.k);
        x = cg.solve(as.b);
        iterations = static_cast<int>(cg.iterations());
        if (cg.info() != Eigen::Success)
            throw ConvergenceError("FEM conjugate gradients did not converge", cg.error());
        x.array() -= x.mean();
    } else {
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                 Eigen::IncompleteCholesky<double>> cg;
        cg.setTolerance(pb.tol);
        cg.setMaxIterations(pb.max_iterations);
        cg.compute(as.k);
        x = cg.solve(as.b);
        iterations = static_cast<int>(cg.iterations());
        if (cg.info() != Eigen::Success)
            throw ConvergenceError("FEM conjugate gradients did not converge", cg.error());
    }
    const double bn = as.b.norm();
    const double residual = bn > 0.0 ? (as.k * x - as.b).norm() / bn : 0.0;

    Eigen::VectorXd values = as.fixed;
    for (std::size_t i = 0; i < grid.n_nodes(); ++i)
        if (as.free_index[i] >= 0) values(i) = x(as.free_index[i]);
    return FemSolution(grid, std::move(values), pb.coefficient, residual, iterations);
}

double fem_residual(const FemGrid& grid, const FemProblem& problem, const Eigen::VectorXd& values) {
    require(static_cast<std::size_t>(values.size()) == grid.n_nodes(), "nodal vector length mismatch");
    FemProblem pb = problem;
    const Eigen::VectorXd* vals = &values;
    pb.dirichlet = [&grid, vals](const Vec3& x) {
        Vec3 xi;
        std::size_t c = grid.locate(x, xi);
        auto nodes = grid.cell_nodes(c);
        // x is a grid node; pick the matching corner.
        for (int a = 0; a < (1 << grid.dim()); ++a)
            if ((grid.node(nodes[a]) - x).norm() <= 1e-12 * (1.0 + x.norm())) return (*vals)(nodes[a]);
        return 0.0;
    };
    pb.bc = FemProblem::Bc::dirichlet;
    Eigen::SparseMatrix<double> abs_k;
    Assembly as = assemble(grid, pb, true, &abs_k);
    Eigen::VectorXd u(as.b.size()), ua(as.b.size());
    for (std::size_t i = 0; i < grid.n_nodes(); ++i)
        if (as.free_index[i] >= 0) u(as.free_index[i]) = values(i);
    ua = u.cwiseAbs();
    const double scale = (abs_k * ua).norm();
    return scale > 0.0 ? (as.k * u - as.b).norm() / scale : 0.0;
}

Vec3 fem_boundary_gradient(const FemSolution& sol, const Vec3& x, const Vec3& n) {
    const double h = sol.grid().h();
    Vec3 g1 = sol.gradient(x - 0.5 * h * n);
    Vec3 g2 = sol.gradient(x - 1.5 * h * n);
    Vec3 g3 = sol.gradient(x - 2.5 * h * n);
    return (15.0 * g1 - 10.0 * g2 + 3.0 * g3) / 8.0;
}

std::vector<Vec3> fem_boundary_gradient(const FemSolution& sol, const BoundaryMesh& mesh) {
    std::vector<Vec3> out(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i)
        out[i] = fem_boundary_gradient(sol, mesh.panel(i).centroid, mesh.panel(i).normal);
    return out;
}

// ---------------------------------------------------------------------------

ReferenceGreen::ReferenceGreen(std::function<Mat3(const Vec3&)> coefficient, const Mat3& a0,
                               const Vec3& pole, double box, double h, bool subtract)
    : coefficient_(std::move(coefficient)), pole_(pole), subtract_(subtract) {
    require(box >= 16.0, "reference Green box must have side at least 16");
    require(h <= 1.0 / 64.0 * (1.0 + 1e-12), "reference Green element size must be at most 1/64");
    frozen_ = coefficient_(pole_);
    const ConstKernel far(2, a0);
    const ConstKernel frozen(2, frozen_);
    const Vec3 half(0.5 * box, 0.5 * box, 0.0);
    FemGrid grid = FemGrid::box(2, pole_ - half, pole_ + half, h);
    FemProblem pb;
    pb.coefficient = coefficient_;
    pb.epsilon = 1.0;
    pb.tol = 1e-10;
    if (subtract_) {
        Vec3 y = pole_;
        Mat3 ay = frozen_;
        auto coef = coefficient_;
        pb.dirichlet = [far, frozen, y](const Vec3& x) { return far.theta(x, y) - frozen.theta(x, y); };
        pb.flux_load = [coef, ay, frozen, y](const Vec3& x) {
            return Vec3((coef(x) - ay) * frozen.grad(x, y));
        };
    } else {
        Vec3 y = pole_;
        pb.dirichlet = [far, y](const Vec3& x) { return far.theta(x, y); };
        pb.point_load = pole_;
    }
    sol_.emplace(fem_solve(grid, pb));
}

double ReferenceGreen::remainder(const Vec3& x) const {
    require(subtract_, "remainder is only available in subtracted mode");
    return sol_->value(x);
}

double ReferenceGreen::value(const Vec3& x) const {
    double v = sol_->value(x);
    if (subtract_) v += ConstKernel(2, frozen_).theta(x, pole_);
    return v;
}

Vec3 ReferenceGreen::gradient(const Vec3& x) const {
    Vec3 g = sol_->gradient(x);
    if (subtract_) g += ConstKernel(2, frozen_).grad(x, pole_);
    return g;
}

std::vector<GreenSample> ReferenceGreen::annulus(const std::vector<double>& radii, int n_angles) const {
    std::vector<GreenSample> out;
    for (double r : radii)
        for (int k = 0; k < n_angles; ++k) {
            double t = 2.0 * std::numbers::pi * (k + 0.5) / n_angles;
            Vec3 x = pole_ + r * Vec3(std::cos(t), std::sin(t), 0.0);
            out.push_back({x, value(x), gradient(x)});
        }
    return out;
}

double ReferenceGreen::flux(double r, int n_angles) const {
    double s = 0.0;
    for (int k = 0; k < n_angles; ++k) {
        double t = 2.0 * std::numbers::pi * (k + 0.5) / n_angles;
        Vec3 n(std::cos(t), std::sin(t), 0.0);
        Vec3 x = pole_ + r * n;
        s -= n.dot(coefficient_(x) * gradient(x));
    }
    return s * 2.0 * std::numbers::pi * r / n_angles;
}

}  // namespace lplab
