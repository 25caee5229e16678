#pragma once

#include <Eigen/Core>

#include "facetflow/geometry.hpp"

namespace facetflow {

/// A radially symmetric Cahn-Hoffman field z = w(r) x/r (or a scalar field
/// z = w(x) in 1D), valid on [r_in, r_out]. Closed-form fields store
/// w(r) = lambda*r/2 + c/r (2D) or w(x) = lambda*x + c (1D), so div z ==
/// lambda identically; sampled fields carry nodal values.
struct RadialField {
    int dim = 2;
    double r_in = 0.0;
    double r_out = 0.0;
    bool closed_form = false;
    double lambda = 0.0;
    double c = 0.0;
    Eigen::ArrayXd r;  // sample radii (ascending)
    Eigen::ArrayXd w;  // sample values

    double eval(double rr) const;
    double max_abs(int probes = 2001) const;
};

RadialField make_closed_form_field(int dim, double r_in, double r_out, double lambda,
                                   double c, int samples = 129);
RadialField make_sampled_field(int dim, const Eigen::ArrayXd& r, const Eigen::ArrayXd& w);

/// z^k(y) = z(y/k) on the dilated band; closed forms rescale exactly.
RadialField dilate_field(const RadialField& f, double k);

} // namespace facetflow
