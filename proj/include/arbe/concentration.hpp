#pragma once

#include <cstddef>

namespace arbe {

struct BoundaryParams {
    double delta = 0.05;
    double m = 1.0;               // intrinsic-time floor
    double c_scale = 0.0;         // sub-psi_P scale
    double restart_factor = 1.0;  // multiplies conc_i

    void validate() const;
};

// ln ln max(x, e)
double lnln_clamped(double x);

double howard_radius(double W, const BoundaryParams& p);
double hoeffding_radius(double range_variance_sum, const BoundaryParams& p);
double bernstein_radius(double var_sum, double c_bound, const BoundaryParams& p);

// Bernstein radius of an importance-weighted sum over rounds t0+1..t; p.m and p.c_scale are ignored.
double conc_i(std::size_t t0, std::size_t t, double rho_i, const BoundaryParams& p);

double gap_width_W(std::size_t t0, std::size_t t, double rho_M, double R_M, std::size_t n, double delta,
                   double c_W);

double exploit_width_V(std::size_t t_e, std::size_t t, double rho_e, double R, double delta_e, double c_V);

}  // namespace arbe
