#ifndef CDX_SCENARIO_HPP
#define CDX_SCENARIO_HPP

#include <string>
#include <vector>

#include "cdx/grid.hpp"
#include "cdx/line_integral.hpp"
#include "cdx/sigma.hpp"

namespace cdx {

/* One exponential (or Gaussian, for the heat family) mode of the seed kernel.
 * c is the time rate; when solve_c is set it is found from the symbol
 * equation of the scenario's operator pair. */
struct ModeSpec {
    double kappa = 1.0;
    CDMatrix amp;
    double c = 0.0;
    bool solve_c = true;
};

/* A full problem instance: algebra, sigma triple, seed modes and the sampling
 * geometry used by the solver and the residual suite.
 *
 * sx acts on the first kernel argument (slot 0), sy on the second (slot 1),
 * st on time (slot 2). The ray direction is sigma-aligned: coordinate xi_x(j)
 * moves at speed psi_x[j]. */
struct Scenario {
    std::string equation; /* "kdv" | "mkdv" | "heat" */
    int level = 2;
    int s = 1;
    double p = 1.0;

    SigmaSpec sx, sy, st;
    std::vector<ModeSpec> modes;

    /* base-point lattice, per active space coordinate */
    double x_min = -4.0;
    double x_max = 4.0;
    int nx = 81;

    /* absolute second-argument patch (odd sample count), centered */
    int ny = 13;
    double patch_center = 0.0;

    /* moving-offset patch around the diagonal (odd sample count) */
    int ndelta = 7;

    /* half-line ray */
    double z_max = 12.0;
    int nz = 241;

    /* time stamps per active time coordinate (odd) */
    int nt = 3;
    double ht = 5e-3;
    double t_center = 0.0;

    double eps_tail = 1e-8;
    QuadRule rule = QuadRule::Simpson;
    double constraint_rel = 1e-2;

    double hx() const { return (x_max - x_min) / (nx - 1); }

    /* Structural validation. enforce_zero_real_psi additionally requires
     * psi_0 = 0 on the space sigmas for the kdv and mkdv families, the
     * standing hypothesis of those derivations. */
    void validate(bool enforce_zero_real_psi) const;
};

/* Aligned linear forms and the analytic value of the seed kernel. */
class ModeFamily {
public:
    explicit ModeFamily(const Scenario& sc);

    /* theta = sum_j psi_j * coords[xi(j)] for the chosen sigma (0 x, 1 y, 2 t) */
    double theta(int which, const std::vector<double>& coords) const;
    /* speed of theta along the sigma-aligned ray, sum_j psi_j^2 of sx */
    double ray_speed() const;

    /* F at a (left, right) pair of aligned arguments:
     *   kdv   sum_m B_m exp(-kappa_m (l + r) + c_m th_t)
     *   mkdv  sum_m B_m exp(-kappa_m (l + r) / 2 + c_m th_t)
     *   heat  sum_m B_m exp(-kappa_m (l - r)^2)                      */
    CDMatrix pair_value(double th_left, double th_right, double th_t) const;

    /* d/dl of pair_value, used for decay estimates */
    double pair_decay_rate() const;

    const Scenario& scenario() const { return *sc_; }

private:
    const Scenario* sc_;
};

/* Fill in mode time rates from the symbol equation  c S_t = -(s_x + s_y)^3
 * (kdv, mkdv) on exponential modes; heat modes are static. Throws
 * NoDispersionSolution when the cubic symbol leaves the time symbol's real
 * line. Modes with solve_c = false keep their preset rate. */
void solve_dispersion(Scenario& sc);

/* The linear operator pair of the scenario applied with grid stencils. */
GridFunction apply_l1(const Scenario& sc, const GridFunction& f);
GridFunction apply_l2(const Scenario& sc, const GridFunction& f);

struct ConstraintReport {
    double l1_rel = 0.0;
    double l2_rel = 0.0;
    double scale = 0.0;
    bool pass = false;
};

/* Samples the seed kernel on a modest lattice and measures |L1 F| and |L2 F|
 * relative to |F|, against sc.constraint_rel. */
ConstraintReport check_constraints(const Scenario& sc);

/* Sample F(x, y, t) on explicit axes (slot 0 / 1 / 2 coordinate layout). */
GridFunction sample_seed(const Scenario& sc, const std::vector<Axis>& axes);

} // namespace cdx

#endif
