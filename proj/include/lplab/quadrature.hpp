#pragma once

#include "lplab/types.hpp"

#include <functional>
#include <vector>

namespace lplab {

struct QuadRule {
    std::vector<double> nodes;    // in [0, 1]
    std::vector<double> weights;  // sum to 1
};

/// n-point Gauss-Legendre rule mapped to [0, 1]; cached per n.
const QuadRule& gauss_rule(int n);

/// Integral over the circle (d = 2, n uniform nodes) or sphere (d = 3, Gauss
/// in the polar cosine times n / 2 uniform azimuths) of radius r about c.
/// The integrand receives the point and the outward unit normal.
double sphere_integral(int dim, const Vec3& c, double r, int n,
                       const std::function<double(const Vec3&, const Vec3&)>& f);

}  // namespace lplab
