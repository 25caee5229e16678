#include "facetflow/radial_field.hpp"

#include <cmath>

namespace facetflow {

namespace {

double closed_eval(const RadialField& f, double rr) {
    if (f.dim == 2) {
        if (rr == 0.0) return f.c == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return 0.5 * f.lambda * rr + f.c / rr;
    }
    return f.lambda * rr + f.c;
}

} // namespace

double RadialField::eval(double rr) const {
    if (closed_form) return closed_eval(*this, rr);
    if (r.size() == 0) throw InvalidParam("empty field");
    if (r.size() == 1) return w[0];
    if (rr <= r[0]) return w[0];
    if (rr >= r[r.size() - 1]) return w[w.size() - 1];
    // uniform-grid interpolation
    const double h = (r[r.size() - 1] - r[0]) / static_cast<double>(r.size() - 1);
    const int i = std::min<int>(static_cast<int>((rr - r[0]) / h), static_cast<int>(r.size()) - 2);
    const double s = (rr - r[i]) / (r[i + 1] - r[i]);
    return (1.0 - s) * w[i] + s * w[i + 1];
}

double RadialField::max_abs(int probes) const {
    if (!closed_form) return w.size() ? w.abs().maxCoeff() : 0.0;
    double m = 0.0;
    for (int k = 0; k < probes; ++k) {
        const double rr = r_in + (r_out - r_in) * k / double(probes - 1);
        if (dim == 2 && rr == 0.0 && c != 0.0) continue;
        m = std::max(m, std::abs(eval(rr)));
    }
    return m;
}

RadialField make_closed_form_field(int dim, double r_in, double r_out, double lambda,
                                   double c, int samples) {
    if (r_out < r_in) throw InvalidParam("field bounds out of order");
    RadialField f;
    f.dim = dim;
    f.r_in = r_in;
    f.r_out = r_out;
    f.closed_form = true;
    f.lambda = lambda;
    f.c = c;
    const int m = std::max(samples, 2);
    f.r = Eigen::ArrayXd::LinSpaced(m, r_in, r_out);
    f.w.resize(m);
    for (int i = 0; i < m; ++i) f.w[i] = closed_eval(f, f.r[i]);
    return f;
}

RadialField make_sampled_field(int dim, const Eigen::ArrayXd& r, const Eigen::ArrayXd& w) {
    if (r.size() != w.size() || r.size() == 0) throw DimensionMismatch("bad field samples");
    RadialField f;
    f.dim = dim;
    f.r_in = r[0];
    f.r_out = r[r.size() - 1];
    f.r = r;
    f.w = w;
    return f;
}

RadialField dilate_field(const RadialField& f, double k) {
    if (!(k > 0.0)) throw InvalidParam("dilation factor must be positive");
    RadialField g = f;
    g.r_in = f.r_in * k;
    g.r_out = f.r_out * k;
    g.r = f.r * k;
    if (f.closed_form) {
        g.lambda = f.lambda / k;
        g.c = (f.dim == 2) ? f.c * k : f.c;
    }
    return g;
}

} // namespace facetflow
