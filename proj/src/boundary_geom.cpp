#include "lplab/boundary_geom.hpp"

#include "lplab/quadrature.hpp"

#include <charconv>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace lplab {

namespace {

constexpr double kSharpTurn = 20.0 * std::numbers::pi / 180.0;

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InvalidArgument("mesh text: bad number '" + s + "'");
    return v;
}

double cross2(const Vec3& a, const Vec3& b) { return a(0) * b(1) - a(1) * b(0); }

double turning_angle(const Vec3& in, const Vec3& out) {
    return std::abs(std::atan2(cross2(in, out), in.dot(out)));
}

Panel segment_panel(const Vec3& a, const Vec3& b, int feature, int iu) {
    Panel p;
    p.corners[0] = a;
    p.corners[1] = b;
    p.centroid = 0.5 * (a + b);
    Vec3 t = b - a;
    p.measure = t.norm();
    p.t1 = t / p.measure;
    p.normal = Vec3(p.t1(1), -p.t1(0), 0.0);
    p.feature = feature;
    p.iu = iu;
    return p;
}

// Breakpoints in [0, 1]: n equal pieces, end pieces bisected `g` times at
// the flagged ends.
std::vector<double> graded_breaks(int n, int g, bool grade_start, bool grade_end) {
    std::vector<double> b;
    const double h = 1.0 / n;
    b.push_back(0.0);
    if (grade_start)
        for (int k = g; k >= 1; --k) b.push_back(h * std::ldexp(1.0, -k));
    for (int i = 1; i < n; ++i) b.push_back(i * h);
    if (grade_end)
        for (int k = 1; k <= g; ++k) b.push_back(1.0 - h * std::ldexp(1.0, -k));
    b.push_back(1.0);
    return b;
}

bool segments_cross(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    auto orient = [](const Vec3& p, const Vec3& q, const Vec3& r) { return cross2(q - p, r - p); };
    double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
        return true;
    auto on_seg = [](const Vec3& p, const Vec3& q, const Vec3& r) {
        return std::min(p(0), q(0)) <= r(0) && r(0) <= std::max(p(0), q(0)) &&
               std::min(p(1), q(1)) <= r(1) && r(1) <= std::max(p(1), q(1));
    };
    if (o1 == 0 && on_seg(a, b, c)) return true;
    if (o2 == 0 && on_seg(a, b, d)) return true;
    if (o3 == 0 && on_seg(c, d, a)) return true;
    if (o4 == 0 && on_seg(c, d, b)) return true;
    return false;
}

double segment_distance(const Vec3& x, const Vec3& a, const Vec3& b) {
    Vec3 t = b - a;
    double s = std::clamp((x - a).dot(t) / t.squaredNorm(), 0.0, 1.0);
    return (x - a - s * t).norm();
}

double rectangle_distance(const Vec3& x, const Panel& p) {
    Vec3 eu = p.corners[1] - p.corners[0];
    Vec3 ev = p.corners[3] - p.corners[0];
    double lu = eu.norm(), lv = ev.norm();
    Vec3 d = x - p.corners[0];
    double u = d.dot(eu) / lu, v = d.dot(ev) / lv, w = d.dot(p.normal);
    double du = u - std::clamp(u, 0.0, lu);
    double dv = v - std::clamp(v, 0.0, lv);
    return std::sqrt(du * du + dv * dv + w * w);
}

// Derivative at x of the quadratic through (xs[k], fs[k]).
double lagrange_derivative(const double xs[3], const double fs[3], double x) {
    double out = 0.0;
    for (int k = 0; k < 3; ++k) {
        int a = (k + 1) % 3, b = (k + 2) % 3;
        double denom = (xs[k] - xs[a]) * (xs[k] - xs[b]);
        out += fs[k] * ((x - xs[a]) + (x - xs[b])) / denom;
    }
    return out;
}

// Derivative along a chain of samples at coordinates s (increasing).
std::vector<double> chain_derivative(const std::vector<double>& s, const std::vector<double>& f,
                                     bool periodic, double period) {
    const std::size_t n = s.size();
    std::vector<double> df(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double xs[3], fs[3];
        if (periodic) {
            std::size_t im = (i + n - 1) % n, ip = (i + 1) % n;
            xs[0] = s[im] - (im > i ? period : 0.0);
            xs[1] = s[i];
            xs[2] = s[ip] + (ip < i ? period : 0.0);
            fs[0] = f[im];
            fs[1] = f[i];
            fs[2] = f[ip];
        } else {
            std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
            for (int k = 0; k < 3; ++k) {
                xs[k] = s[c - 1 + k];
                fs[k] = f[c - 1 + k];
            }
        }
        df[i] = lagrange_derivative(xs, fs, s[i]);
    }
    return df;
}

}  // namespace

double Panel::size() const noexcept {
    if (t2.isZero()) return measure;
    return std::max((corners[1] - corners[0]).norm(), (corners[3] - corners[0]).norm());
}

BoundaryMesh::BoundaryMesh(int dim, std::vector<Panel> panels, bool closed_surface,
                           double lipschitz, int grading)
    : dim_(dim), panels_(std::move(panels)), closed_(closed_surface), lipschitz_(lipschitz),
      grading_(grading) {
    require(dim == 2 || dim == 3, "mesh dimension must be 2 or 3");
    require(!panels_.empty(), "mesh has no panels");
    sigma_ = 0.0;
    for (const auto& p : panels_) {
        if (!(p.measure > 0.0)) throw GeometryError("panel with non-positive measure");
        sigma_ += p.measure;
    }
    box_lo_ = box_hi_ = panels_[0].corners[0];
    for (const auto& p : panels_)
        for (int k = 0; k < (dim == 2 ? 2 : 4); ++k) {
            box_lo_ = box_lo_.cwiseMin(p.corners[k]);
            box_hi_ = box_hi_.cwiseMax(p.corners[k]);
        }
    if (dim == 2) {
        // Area centroid of the closed curve (Green's theorem), or the mean
        // point for open curves.
        double area = 0.0;
        Vec3 c = Vec3::Zero();
        for (const auto& p : panels_) {
            double a = cross2(p.corners[0], p.corners[1]);
            area += 0.5 * a;
            c += a * (p.corners[0] + p.corners[1]) / 6.0;
        }
        interior_ = closed_ && area > 0.0 ? Vec3(c / area) : Vec3(0.5 * (box_lo_ + box_hi_));
    } else {
        interior_ = 0.5 * (box_lo_ + box_hi_);
    }
    build_features();
    id_ = fnv1a(to_text());
}

void BoundaryMesh::build_features() {
    int nf = 0;
    for (const auto& p : panels_) nf = std::max(nf, p.feature + 1);
    features_.assign(nf, Feature{});
    std::vector<std::vector<std::pair<std::pair<int, int>, int>>> members(nf);
    for (std::size_t i = 0; i < panels_.size(); ++i)
        members[panels_[i].feature].push_back({{panels_[i].iu, panels_[i].iv}, static_cast<int>(i)});
    for (int f = 0; f < nf; ++f) {
        auto& m = members[f];
        std::sort(m.begin(), m.end());
        Feature& feat = features_[f];
        for (const auto& e : m) feat.panels.push_back(e.second);
        if (dim_ == 2) {
            feat.nu = static_cast<int>(feat.panels.size());
            feat.nv = 1;
            const Panel& first = panels_[feat.panels.front()];
            const Panel& last = panels_[feat.panels.back()];
            feat.closed = closed_ && feat.panels.size() > 2 &&
                          (first.corners[0] - last.corners[1]).norm() <= 1e-14 * (1.0 + first.corners[0].norm()) &&
                          turning_angle(last.t1, first.t1) <= kSharpTurn;
        } else {
            int nu = 0, nv = 0;
            for (const auto& e : m) {
                nu = std::max(nu, e.first.first + 1);
                nv = std::max(nv, e.first.second + 1);
            }
            feat.nu = nu;
            feat.nv = nv;
            if (static_cast<std::size_t>(nu * nv) != feat.panels.size())
                throw GeometryError("face panels do not form a tensor grid");
        }
    }
}

double BoundaryMesh::min_panel_size() const noexcept {
    double h = panels_[0].size();
    for (const auto& p : panels_) h = std::min(h, p.size());
    return h;
}

double BoundaryMesh::max_panel_size() const noexcept {
    double h = 0.0;
    for (const auto& p : panels_) h = std::max(h, p.size());
    return h;
}

double BoundaryMesh::diameter() const noexcept { return (box_hi_ - box_lo_).norm(); }

Vec3 BoundaryMesh::closure_vector() const {
    Vec3 s = Vec3::Zero();
    for (const auto& p : panels_) s += p.measure * p.normal;
    return s;
}

bool BoundaryMesh::contains(const Vec3& x) const {
    require(closed_, "point location needs a closed boundary");
    if (dim_ == 3) {
        for (int i = 0; i < 3; ++i)
            if (!(x(i) > box_lo_(i) && x(i) < box_hi_(i))) return false;
        return true;
    }
    // Crossing number against the panel segments.
    bool inside = false;
    for (const auto& p : panels_) {
        const Vec3& a = p.corners[0];
        const Vec3& b = p.corners[1];
        if ((a(1) > x(1)) != (b(1) > x(1))) {
            double xc = a(0) + (x(1) - a(1)) * (b(0) - a(0)) / (b(1) - a(1));
            if (x(0) < xc) inside = !inside;
        }
    }
    return inside;
}

double BoundaryMesh::distance(const Vec3& x) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : panels_)
        best = std::min(best, dim_ == 2 ? segment_distance(x, p.corners[0], p.corners[1])
                                        : rectangle_distance(x, p));
    return best;
}

BoundaryMesh BoundaryMesh::dilated(double rho) const {
    require(rho > 0.0, "dilation factor must be positive");
    std::vector<Panel> out = panels_;
    const double power = dim_ - 1;
    for (auto& p : out) {
        p.centroid *= rho;
        for (auto& c : p.corners) c *= rho;
        p.measure *= std::pow(rho, power);
    }
    return BoundaryMesh(dim_, std::move(out), closed_, lipschitz_, grading_);
}

std::vector<double> BoundaryMesh::weights() const {
    std::vector<double> w(panels_.size());
    for (std::size_t i = 0; i < panels_.size(); ++i) w[i] = panels_[i].measure;
    return w;
}

std::string BoundaryMesh::to_text() const {
    std::ostringstream os;
    os << "lplab-mesh 1\n";
    os << "dim " << dim_ << " panels " << panels_.size() << " closed " << (closed_ ? 1 : 0)
       << " grading " << grading_ << " lipschitz " << fmt(lipschitz_) << " sigma " << fmt(sigma_)
       << '\n';
    auto put = [&os](const Vec3& v) { os << ' ' << fmt(v(0)) << ' ' << fmt(v(1)) << ' ' << fmt(v(2)); };
    for (const auto& p : panels_) {
        os << p.feature << ' ' << p.iu << ' ' << p.iv << ' ' << fmt(p.measure);
        put(p.centroid);
        put(p.normal);
        put(p.t1);
        put(p.t2);
        for (const auto& c : p.corners) put(c);
        os << '\n';
    }
    return os.str();
}

BoundaryMesh BoundaryMesh::from_text(const std::string& text) {
    std::istringstream is(text);
    std::string magic, key;
    int version = 0;
    is >> magic >> version;
    if (magic != "lplab-mesh" || version != 1) throw InvalidArgument("mesh text: unsupported header");
    int dim = 0, closed = 0, grading = 0;
    std::size_t n = 0;
    std::string lip, sigma;
    is >> key >> dim >> key >> n >> key >> closed >> key >> grading >> key >> lip >> key >> sigma;
    if (!is) throw InvalidArgument("mesh text: malformed header");
    std::vector<Panel> panels(n);
    auto get = [&is]() {
        std::string s;
        is >> s;
        return parse_double(s);
    };
    auto get3 = [&get]() {
        double a = get(), b = get(), c = get();
        return Vec3(a, b, c);
    };
    for (auto& p : panels) {
        is >> p.feature >> p.iu >> p.iv;
        p.measure = get();
        p.centroid = get3();
        p.normal = get3();
        p.t1 = get3();
        p.t2 = get3();
        for (auto& c : p.corners) c = get3();
        if (!is) throw InvalidArgument("mesh text: truncated panel list");
    }
    return BoundaryMesh(dim, std::move(panels), closed != 0, parse_double(lip), grading);
}

BoundaryMesh build_polygon_mesh(const std::vector<Vec3>& vertices, int panels_per_edge,
                                int grading) {
    const std::size_t m = vertices.size();
    require(m >= 3, "polygon needs at least three vertices");
    require(panels_per_edge >= 1, "panels_per_edge must be positive");
    require(grading >= 0, "grading must be non-negative");
    double area = 0.0;
    for (std::size_t k = 0; k < m; ++k) area += 0.5 * cross2(vertices[k], vertices[(k + 1) % m]);
    if (!(area > 0.0)) throw GeometryError("polygon must be counterclockwise with positive area");
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            if (b == a + 1 || (a == 0 && b == m - 1)) continue;
            if (segments_cross(vertices[a], vertices[(a + 1) % m], vertices[b], vertices[(b + 1) % m]))
                throw GeometryError("polygon is self-intersecting (edges " + std::to_string(a) +
                                    " and " + std::to_string(b) + ")");
        }
    for (std::size_t k = 0; k < m; ++k)
        if ((vertices[(k + 1) % m] - vertices[k]).norm() == 0.0)
            throw GeometryError("polygon has a repeated vertex");

    std::vector<bool> sharp(m);
    for (std::size_t k = 0; k < m; ++k) {
        Vec3 in = vertices[k] - vertices[(k + m - 1) % m];
        Vec3 out = vertices[(k + 1) % m] - vertices[k];
        sharp[k] = turning_angle(in, out) > kSharpTurn;
    }
    // Start the traversal at a sharp corner so features never wrap around.
    std::size_t start = 0;
    for (std::size_t k = 0; k < m; ++k)
        if (sharp[k]) {
            start = k;
            break;
        }

    std::vector<Panel> panels;
    int feature = -1, iu = 0;
    for (std::size_t e = 0; e < m; ++e) {
        std::size_t k = (start + e) % m;
        if (feature < 0 || sharp[k]) {
            ++feature;
            iu = 0;
        }
        const Vec3& a = vertices[k];
        const Vec3& b = vertices[(k + 1) % m];
        auto br = graded_breaks(panels_per_edge, grading, sharp[k], sharp[(k + 1) % m]);
        for (std::size_t i = 0; i + 1 < br.size(); ++i)
            panels.push_back(segment_panel(a + br[i] * (b - a), a + br[i + 1] * (b - a), feature, iu++));
    }
    return BoundaryMesh(2, std::move(panels), true, 0.0, grading);
}

BoundaryMesh build_cube_mesh(const Vec3& center, double half_width, int panels_per_side,
                             int grading) {
    require(half_width > 0.0, "cube half width must be positive");
    require(panels_per_side >= 1, "panels_per_side must be positive");
    require(grading >= 0, "grading must be non-negative");
    auto br = graded_breaks(panels_per_side, grading, true, true);
    std::vector<double> coord(br.size());
    for (std::size_t i = 0; i < br.size(); ++i) coord[i] = -half_width + 2.0 * half_width * br[i];
    const int n = static_cast<int>(coord.size()) - 1;

    std::vector<Panel> panels;
    int face = 0;
    for (int axis = 0; axis < 3; ++axis)
        for (int sign : {-1, 1}) {
            Vec3 normal = Vec3::Zero();
            normal(axis) = sign;
            int ua = (axis + 1) % 3, va = (axis + 2) % 3;
            if (sign < 0) std::swap(ua, va);
            Vec3 eu = Vec3::Unit(ua), ev = Vec3::Unit(va);
            Vec3 base = center + sign * half_width * normal.cwiseAbs();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    Panel p;
                    p.normal = normal;
                    p.t1 = eu;
                    p.t2 = ev;
                    p.corners[0] = base + coord[i] * eu + coord[j] * ev;
                    p.corners[1] = base + coord[i + 1] * eu + coord[j] * ev;
                    p.corners[2] = base + coord[i + 1] * eu + coord[j + 1] * ev;
                    p.corners[3] = base + coord[i] * eu + coord[j + 1] * ev;
                    p.centroid = 0.25 * (p.corners[0] + p.corners[1] + p.corners[2] + p.corners[3]);
                    p.measure = (coord[i + 1] - coord[i]) * (coord[j + 1] - coord[j]);
                    p.feature = face;
                    p.iu = i;
                    p.iv = j;
                    panels.push_back(p);
                }
            ++face;
        }
    return BoundaryMesh(3, std::move(panels), true, 0.0, grading);
}

BoundaryMesh unit_square_mesh(int panels_per_edge, int grading) {
    return build_polygon_mesh({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)},
                              panels_per_edge, grading);
}

BoundaryMesh unit_cube_mesh(int panels_per_side, int grading) {
    return build_cube_mesh(Vec3(0.5, 0.5, 0.5), 0.5, panels_per_side, grading);
}

BoundaryMesh circle_mesh(const Vec3& center, double radius, int n) {
    require(n >= 8, "circle mesh needs at least 8 panels");
    require(radius > 0.0, "radius must be positive");
    std::vector<Vec3> v(n);
    for (int k = 0; k < n; ++k) {
        double t = 2.0 * std::numbers::pi * k / n;
        v[k] = center + radius * Vec3(std::cos(t), std::sin(t), 0.0);
    }
    return build_polygon_mesh(v, 1, 0);
}

// ---------------------------------------------------------------------------

double VolumeRule::integrate(const std::function<double(const Vec3&)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) s += weights[i] * f(points[i]);
    return s;
}

GraphPatch::GraphPatch(GraphDescriptor psi, double m, double r, int resolution)
    : desc_(psi), m_(m), r_(r), c_(10.0 * std::sqrt(2.0) * (m + 1.0)), resolution_(resolution) {
    require(m >= 0.0, "Lipschitz constant must be non-negative");
    require(r > 0.0, "patch radius must be positive");
    require(resolution >= 4, "patch resolution must be at least 4");
    if (desc_.kind == GraphKind::sawtooth || desc_.kind == GraphKind::sine)
        require(desc_.period > 0.0, "graph period must be positive");
    // Sampled difference quotients over the whole working range [-3r, 3r].
    const int n = 8192;
    const double lo = -3.0 * r, h = 6.0 * r / n;
    double xa = lo, fa = this->psi(lo);
    for (int i = 1; i <= n; ++i) {
        double xb = lo + i * h, fb = this->psi(xb);
        double q = std::abs(fb - fa) / (xb - xa);
        if (q > m * (1.0 + 1e-12) + 1e-15) {
            std::ostringstream os;
            os.precision(17);
            os << "graph violates the declared Lipschitz bound " << m << ": |psi(" << xa
               << ") - psi(" << xb << ")| / |dx| = " << q;
            throw GeometryError(os.str());
        }
        xa = xb;
        fa = fb;
    }
}

double GraphPatch::psi(double x) const {
    switch (desc_.kind) {
    case GraphKind::flat:
        return 0.0;
    case GraphKind::cone:
        return desc_.slope * std::abs(x);
    case GraphKind::sawtooth: {
        double p = desc_.period;
        double k = std::round(x / p);
        return desc_.slope * std::abs(x - k * p);
    }
    case GraphKind::sine:
        return desc_.amplitude * std::sin(2.0 * std::numbers::pi * x / desc_.period);
    }
    return 0.0;
}

std::vector<double> GraphPatch::breakpoints(double lo, double hi) const {
    std::vector<double> kinks{lo, hi};
    if (desc_.kind == GraphKind::cone && lo < 0.0 && hi > 0.0) kinks.push_back(0.0);
    if (desc_.kind == GraphKind::sawtooth) {
        double step = 0.5 * desc_.period;
        for (double k = std::ceil(lo / step); k * step < hi; k += 1.0)
            if (k * step > lo) kinks.push_back(k * step);
    }
    std::sort(kinks.begin(), kinks.end());
    const double h = 2.0 * r_ / resolution_;
    std::vector<double> out{kinks.front()};
    for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
        double a = kinks[i], b = kinks[i + 1];
        if (b - a <= 0.0) continue;
        int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
        for (int k = 1; k <= pieces; ++k) out.push_back(k == pieces ? b : a + (b - a) * k / pieces);
    }
    return out;
}

BoundaryMesh GraphPatch::surface(double rho) const {
    require(rho > 0.0, "patch radius must be positive");
    auto xs = breakpoints(-rho, rho);
    std::vector<Panel> panels;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        panels.push_back(segment_panel(Vec3(xs[i], psi(xs[i]), 0.0), Vec3(xs[i + 1], psi(xs[i + 1]), 0.0),
                                       0, static_cast<int>(i)));
    return BoundaryMesh(2, std::move(panels), false, m_, 0);
}

BoundaryMesh GraphPatch::cap_boundary(double rho) const {
    require(rho > 0.0, "patch radius must be positive");
    const double top = c_ * r_;
    const double h = 2.0 * r_ / resolution_;
    std::vector<Vec3> v;
    for (double x : breakpoints(-rho, rho)) v.emplace_back(x, psi(x), 0.0);
    v.pop_back();
    auto side = [&](const Vec3& a, const Vec3& b) {
        int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / h - 1e-9)));
        for (int k = 0; k < pieces; ++k) v.push_back(a + (b - a) * (static_cast<double>(k) / pieces));
    };
    side(Vec3(rho, psi(rho), 0.0), Vec3(rho, top, 0.0));
    side(Vec3(rho, top, 0.0), Vec3(-rho, top, 0.0));
    side(Vec3(-rho, top, 0.0), Vec3(-rho, psi(-rho), 0.0));
    return build_polygon_mesh(v, 1, 0);
}

VolumeRule GraphPatch::region(double rho, const std::function<double(double)>& lo,
                              const std::function<double(double)>& hi) const {
    const QuadRule& g = gauss_rule(4);
    const double h = 2.0 * r_ / resolution_;
    VolumeRule rule;
    auto xs = breakpoints(-rho, rho);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        double a = xs[i], dx = xs[i + 1] - xs[i];
        for (std::size_t p = 0; p < g.nodes.size(); ++p) {
            double x = a + dx * g.nodes[p];
            double ylo = lo(x), yhi = hi(x);
            int pieces = std::max(1, static_cast<int>(std::ceil((yhi - ylo) / h - 1e-9)));
            double dy = (yhi - ylo) / pieces;
            for (int k = 0; k < pieces; ++k)
                for (std::size_t q = 0; q < g.nodes.size(); ++q) {
                    rule.points.emplace_back(x, ylo + dy * (k + g.nodes[q]), 0.0);
                    rule.weights.push_back(dx * g.weights[p] * dy * g.weights[q]);
                }
        }
    }
    return rule;
}

VolumeRule GraphPatch::cap_volume(double rho) const {
    const double top = c_ * r_;
    return region(rho, [this](double x) { return psi(x); }, [top](double) { return top; });
}

VolumeRule GraphPatch::boundary_layer(double rho) const {
    return region(rho, [this](double x) { return psi(x); }, [this](double x) { return psi(x) + 1.0; });
}

VolumeRule GraphPatch::top_strip(double rho) const {
    const double top = c_ * r_;
    return region(rho, [top](double) { return top; }, [top](double) { return top + 1.0; });
}

GraphPatch build_graph_patch(const GraphDescriptor& psi, double m, double r, int resolution) {
    return GraphPatch(psi, m, r, resolution);
}

// ---------------------------------------------------------------------------

std::vector<Vec3> tangential_gradient(const BoundaryMesh& mesh, const std::vector<double>& f) {
    require(f.size() == mesh.size(), "boundary function length does not match the mesh");
    std::vector<Vec3> out(mesh.size(), Vec3::Zero());
    for (const auto& feat : mesh.features()) {
        if (mesh.dim() == 2) {
            const std::size_t n = feat.panels.size();
            if (n < 3) throw GeometryError("feature with fewer than 3 panels; mesh too coarse");
            std::vector<double> s(n), v(n);
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const Panel& p = mesh.panel(feat.panels[k]);
                s[k] = acc + 0.5 * p.measure;
                acc += p.measure;
                v[k] = f[feat.panels[k]];
            }
            auto df = chain_derivative(s, v, feat.closed, acc);
            for (std::size_t k = 0; k < n; ++k) {
                const Panel& p = mesh.panel(feat.panels[k]);
                out[feat.panels[k]] = df[k] * p.t1;
            }
        } else {
            const int nu = feat.nu, nv = feat.nv;
            if (nu < 3 || nv < 3) throw GeometryError("face with fewer than 3 panels per side; mesh too coarse");
            auto at = [&](int i, int j) { return feat.panels[i * nv + j]; };
            const Panel& p0 = mesh.panel(at(0, 0));
            std::vector<double> su(nu), sv(nv);
            for (int i = 0; i < nu; ++i) su[i] = (mesh.panel(at(i, 0)).centroid - p0.corners[0]).dot(p0.t1);
            for (int j = 0; j < nv; ++j) sv[j] = (mesh.panel(at(0, j)).centroid - p0.corners[0]).dot(p0.t2);
            for (int j = 0; j < nv; ++j) {
                std::vector<double> v(nu);
                for (int i = 0; i < nu; ++i) v[i] = f[at(i, j)];
                auto d = chain_derivative(su, v, false, 0.0);
                for (int i = 0; i < nu; ++i) out[at(i, j)] += d[i] * p0.t1;
            }
            for (int i = 0; i < nu; ++i) {
                std::vector<double> v(nv);
                for (int j = 0; j < nv; ++j) v[j] = f[at(i, j)];
                auto d = chain_derivative(sv, v, false, 0.0);
                for (int j = 0; j < nv; ++j) out[at(i, j)] += d[j] * p0.t2;
            }
        }
    }
    return out;
}

double l2_norm(const BoundaryMesh& mesh, const std::vector<double>& f) {
    require(f.size() == mesh.size(), "boundary function length does not match the mesh");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += mesh.panel(i).measure * f[i] * f[i];
    return std::sqrt(s);
}

double l2_norm(const BoundaryMesh& mesh, const std::vector<Vec3>& f) {
    require(f.size() == mesh.size(), "boundary function length does not match the mesh");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += mesh.panel(i).measure * f[i].squaredNorm();
    return std::sqrt(s);
}

double boundary_mean(const BoundaryMesh& mesh, const std::vector<double>& f) {
    require(f.size() == mesh.size(), "boundary function length does not match the mesh");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += mesh.panel(i).measure * f[i];
    return s / mesh.sigma();
}

BoundaryNorms boundary_norms(const BoundaryMesh& mesh, const std::vector<double>& f) {
    BoundaryNorms n;
    n.l2 = l2_norm(mesh, f);
    const double tan = l2_norm(mesh, tangential_gradient(mesh, f));
    n.w12 = tan + std::pow(mesh.sigma(), 1.0 / (1.0 - mesh.dim())) * n.l2;
    return n;
}

// ---------------------------------------------------------------------------

std::vector<double> NtOptions::default_depths() {
    std::vector<double> d;
    for (int k = 1; k <= 10; ++k) d.push_back(std::ldexp(1.0, -k));
    return d;
}

NtSamples nt_sample(const BoundaryMesh& mesh, std::size_t panel, const NtOptions& options) {
    require(panel < mesh.size(), "panel index out of range");
    require(options.aperture > 0.0, "aperture must be positive");
    NtSamples out;
    const Panel& p = mesh.panel(panel);
    for (double t : options.depths) {
        require(t > 0.0, "nontangential depths must be positive");
        Vec3 z = p.centroid - t * p.normal;
        if (mesh.closed() && !mesh.contains(z)) {
            ++out.omitted;
            continue;
        }
        double dist = mesh.distance(z);
        if (!((z - p.centroid).norm() < (1.0 + options.aperture) * dist)) {
            ++out.omitted;
            continue;
        }
        out.points.push_back(z);
        out.depths.push_back(t);
    }
    return out;
}

std::vector<double> nt_maximal(const BoundaryMesh& mesh,
                               const std::function<double(const Vec3&)>& u,
                               const NtOptions& options) {
    std::vector<double> out(mesh.size(), 0.0);
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        auto s = nt_sample(mesh, i, options);
        for (const auto& z : s.points) out[i] = std::max(out[i], std::abs(u(z)));
    }
    return out;
}

double richardson_limit(double u_t, double u_2t, double u_4t) {
    return (8.0 * u_t - 6.0 * u_2t + u_4t) / 3.0;
}

std::vector<double> nt_limit(const BoundaryMesh& mesh,
                             const std::function<double(const Vec3&)>& u,
                             const std::vector<double>& depths) {
    require(depths.size() >= 3, "need at least three depths");
    std::vector<double> d = depths;
    std::sort(d.begin(), d.end());
    require(std::abs(d[1] - 2 * d[0]) <= 1e-12 * d[1] && std::abs(d[2] - 2 * d[1]) <= 1e-12 * d[2],
            "the three smallest depths must be dyadic (t, 2t, 4t)");
    std::vector<double> out(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const Panel& p = mesh.panel(i);
        double v[3];
        for (int k = 0; k < 3; ++k) v[k] = u(p.centroid - d[k] * p.normal);
        out[i] = richardson_limit(v[0], v[1], v[2]);
    }
    return out;
}

}  // namespace lplab
