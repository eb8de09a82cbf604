#include "arbe/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "arbe/core.hpp"

namespace arbe {

void BoundaryParams::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    if (!(m > 0.0)) throw DomainError("m must be positive");
    if (!(c_scale >= 0.0)) throw DomainError("c_scale must be nonnegative");
    if (!(restart_factor >= 1.0)) throw DomainError("restart_factor must be at least 1");
}

double lnln_clamped(double x) { return std::log(std::log(std::max(x, std::numbers::e))); }

double howard_radius(double W, const BoundaryParams& p) {
    p.validate();
    if (!(W >= 0.0)) throw DomainError("intrinsic time must be nonnegative");
    const double w = std::max(W, p.m);
    const double ell = 1.4 * std::log(std::log(2.0 * std::max(W / p.m, 1.0))) + std::log(5.2 / p.delta);
    return 1.44 * std::sqrt(w * ell) + 0.41 * p.c_scale * ell;
}

double hoeffding_radius(double range_variance_sum, const BoundaryParams& p) {
    BoundaryParams q = p;
    q.c_scale = 0.0;
    return howard_radius(range_variance_sum, q);
}

double bernstein_radius(double var_sum, double c_bound, const BoundaryParams& p) {
    if (!(c_bound > 0.0)) throw DomainError("Bernstein bound needs c > 0");
    BoundaryParams q = p;
    q.c_scale = c_bound;
    return howard_radius(var_sum, q);
}

double conc_i(std::size_t t0, std::size_t t, double rho_i, const BoundaryParams& p) {
    if (t <= t0) throw DomainError("conc_i needs t > t0");
    if (!(rho_i > 0.0 && rho_i <= 1.0)) throw DomainError("rho must lie in (0,1]");
    BoundaryParams q = p;
    q.m = 0.5 / rho_i;
    const double span = static_cast<double>(t - t0);
    return p.restart_factor * bernstein_radius(span / rho_i, 1.0 / rho_i, q);
}

double gap_width_W(std::size_t t0, std::size_t t, double rho_M, double R_M, std::size_t n, double delta,
                   double c_W) {
    if (t < t0 + 2) throw DomainError("gap width needs t - t0 >= 2");
    if (n < 1) throw DomainError("restart counter starts at 1");
    if (!(rho_M > 0.0 && rho_M <= 1.0)) throw DomainError("rho must lie in (0,1]");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    const double span = static_cast<double>(t - t0);
    const double nn = static_cast<double>(n);
    const double first = R_M / std::sqrt(rho_M) * std::sqrt(std::log(nn * span / delta) / span);
    const double second = (std::log(nn) + lnln_clamped(span) - std::log(delta)) / (rho_M * span);
    return c_W * (first + second);
}

double exploit_width_V(std::size_t t_e, std::size_t t, double rho_e, double R, double delta_e, double c_V) {
    if (t < t_e + 2) throw DomainError("exploit width needs t - t_e >= 2");
    if (!(rho_e > 0.0 && rho_e <= 1.0)) throw DomainError("rho must lie in (0,1]");
    if (!(delta_e > 0.0 && delta_e < 1.0)) throw DomainError("delta must lie in (0,1)");
    const double span = static_cast<double>(t - t_e);
    const double first = R * std::sqrt(std::log(span / delta_e) / (rho_e * span));
    const double second = (lnln_clamped(span) - std::log(delta_e)) / span;
    return c_V * (first + second);
}

}  // namespace arbe
