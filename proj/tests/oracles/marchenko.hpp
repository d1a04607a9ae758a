#ifndef CDX_TESTS_ORACLES_MARCHENKO_HPP
#define CDX_TESTS_ORACLES_MARCHENKO_HPP

/* Independent one-variable collocation oracle for the classical single-mode
 * reflectionless kernel. Conventions used here, all in plain real analysis
 * with no code shared with the library under test:
 *
 *   F(s; tau) = beta exp(-kappa s + 8 kappa^3 tau)
 *   K(x, y) + F(x + y) + int_x^inf F(y + z) K(x, z) dz = 0
 *   K(x, y)  = -F(x + y) / (1 + E),   E = (beta / 2 kappa) e^{-2 kappa x + 8 kappa^3 tau}
 *   K(x, x)  = -2 kappa E / (1 + E)
 *   u(x)     = 2 d/dx K(x, x) = 2 kappa^2 sech^2(kappa (x - 4 kappa^2 tau) - phi)
 *   phi      = log(beta / (2 kappa)) / 2
 *
 * and this u solves u_tau + 6 u u_x + u_xxx = 0 (right-moving bright profile
 * of height +2 kappa^2). The numeric path discretizes the integral equation
 * with Simpson collocation on z_i = x + i h and reads the kernel diagonal.
 */

#include <cmath>
#include <vector>

#include <eigen3/Eigen/Dense>

namespace marchenko {

struct Params {
    double kappa = 0.7;
    double beta = 1.4;
    double tau = 0.0;
};

inline double f_of(const Params& p, double s) {
    return p.beta * std::exp(-p.kappa * s + 8.0 * p.kappa * p.kappa * p.kappa * p.tau);
}

inline double energy(const Params& p, double x) {
    return (p.beta / (2.0 * p.kappa)) *
           std::exp(-2.0 * p.kappa * x + 8.0 * p.kappa * p.kappa * p.kappa * p.tau);
}

inline double kernel_closed(const Params& p, double x, double y) {
    return -f_of(p, x + y) / (1.0 + energy(p, x));
}

inline double diag_closed(const Params& p, double x) {
    const double e = energy(p, x);
    return -2.0 * p.kappa * e / (1.0 + e);
}

inline double u_closed(const Params& p, double x) {
    const double phi = 0.5 * std::log(p.beta / (2.0 * p.kappa));
    const double th = p.kappa * (x - 4.0 * p.kappa * p.kappa * p.tau) - phi;
    const double c = std::cosh(th);
    return 2.0 * p.kappa * p.kappa / (c * c);
}

inline std::vector<double> simpson_weights(int n, double h) {
    std::vector<double> w(static_cast<size_t>(n), 0.0);
    for (int i = 0; i + 2 < n; i += 2) {
        w[static_cast<size_t>(i)] += h / 3.0;
        w[static_cast<size_t>(i + 1)] += 4.0 * h / 3.0;
        w[static_cast<size_t>(i + 2)] += h / 3.0;
    }
    return w;
}

/* K(x, x + j h) for j = 0..nz-1 by collocation; n odd. */
inline std::vector<double> solve_ray(const Params& p, double x, double zmax, int nz) {
    const double h = zmax / (nz - 1);
    const std::vector<double> w = simpson_weights(nz, h);
    Eigen::MatrixXd m(nz, nz);
    Eigen::VectorXd rhs(nz);
    for (int i = 0; i < nz; ++i) {
        const double zi = x + i * h;
        rhs(i) = -f_of(p, x + zi);
        for (int j = 0; j < nz; ++j) {
            const double zj = x + j * h;
            m(i, j) = (i == j ? 1.0 : 0.0) + w[static_cast<size_t>(j)] * f_of(p, zi + zj);
        }
    }
    const Eigen::VectorXd k = m.partialPivLu().solve(rhs);
    return std::vector<double>(k.data(), k.data() + nz);
}

inline double solve_diag(const Params& p, double x, double zmax, int nz) {
    return solve_ray(p, x, zmax, nz)[0];
}

/* u = 2 d/dx K(x, x) on the lattice x0 + i hx, central stencil inside and
 * second-order one-sided stencils at the two ends. */
inline std::vector<double> u_numeric(const Params& p, double x0, double hx, int nx,
                                     double zmax, int nz) {
    std::vector<double> d(static_cast<size_t>(nx));
    for (int i = 0; i < nx; ++i) d[static_cast<size_t>(i)] = solve_diag(p, x0 + i * hx, zmax, nz);
    std::vector<double> u(static_cast<size_t>(nx));
    for (int i = 0; i < nx; ++i) {
        double dd;
        if (i == 0)
            dd = (-3.0 * d[0] + 4.0 * d[1] - d[2]) / (2.0 * hx);
        else if (i == nx - 1)
            dd = (3.0 * d[static_cast<size_t>(nx - 1)] - 4.0 * d[static_cast<size_t>(nx - 2)] +
                  d[static_cast<size_t>(nx - 3)]) /
                 (2.0 * hx);
        else
            dd = (d[static_cast<size_t>(i + 1)] - d[static_cast<size_t>(i - 1)]) / (2.0 * hx);
        u[static_cast<size_t>(i)] = 2.0 * dd;
    }
    return u;
}

} // namespace marchenko

#endif
