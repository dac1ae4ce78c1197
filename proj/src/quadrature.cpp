#include "lplab/quadrature.hpp"

#include "lplab/types.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace lplab {

namespace {

QuadRule compute_rule(int n) {
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
        rule.weights[n - 1 - i] = 0.5 * w;
    }
    return rule;
}

}  // namespace

const QuadRule& gauss_rule(int n) {
    require(n >= 1 && n <= 64, "Gauss rule order must lie in [1, 64]");
    static std::map<int, QuadRule> cache;
    static std::mutex lock;
    std::lock_guard<std::mutex> guard(lock);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
    return it->second;
}

double sphere_integral(int dim, const Vec3& c, double r, int n,
                       const std::function<double(const Vec3&, const Vec3&)>& f) {
    require(r > 0.0 && n >= 8, "sphere integral needs a positive radius and at least 8 nodes");
    double s = 0.0;
    if (dim == 2) {
        for (int k = 0; k < n; ++k) {
            const double t = 2.0 * std::numbers::pi * (k + 0.5) / n;
            const Vec3 nv(std::cos(t), std::sin(t), 0.0);
            s += f(c + r * nv, nv);
        }
        return s * 2.0 * std::numbers::pi * r / n;
    }
    const QuadRule& g = gauss_rule(std::min(64, std::max(8, n / 4)));
    const int nphi = std::max(8, n / 2);
    for (std::size_t a = 0; a < g.nodes.size(); ++a) {
        const double z = 2.0 * g.nodes[a] - 1.0, sn = std::sqrt(1.0 - z * z);
        for (int b = 0; b < nphi; ++b) {
            const double phi = 2.0 * std::numbers::pi * (b + 0.5) / nphi;
            const Vec3 nv(sn * std::cos(phi), sn * std::sin(phi), z);
            s += 2.0 * g.weights[a] * (2.0 * std::numbers::pi / nphi) * r * r * f(c + r * nv, nv);
        }
    }
    return s;
}

}  // namespace lplab
