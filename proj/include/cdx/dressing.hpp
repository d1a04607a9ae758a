#ifndef CDX_DRESSING_HPP
#define CDX_DRESSING_HPP

#include "cdx/scenario.hpp"

namespace cdx {

/* Component closure the solver worked in. Real: every input is real and the
 * system splits per component. Planar: all inputs live in span{1, W} for one
 * imaginary unit direction W, which is an associative commutative plane, so
 * the system closes on two real components. Full: generic real-linear system
 * over all 2^r components. */
enum class Closure { Real, Planar, Full };

struct SolveOptions {
    bool neumann_check = false;
    int neumann_subsample = 20;
    int neumann_max_terms = 128;
    double neumann_tol = 1e-12;
    double spectral_limit = 0.9;
    double rcond_min = 1e-10;
    int threads = 1;
};

struct SolveStats {
    Closure closure = Closure::Full;
    double rcond_min = 1.0;   /* worst 1-norm reciprocal condition estimate */
    double spectral_max = 0.0;/* largest spectral-radius estimate (Neumann)  */
    double neumann_gap = -1.0;/* direct vs series gap; -1 when not run      */
    double tail_ratio = 0.0;  /* worst end-slab / peak integrand ratio      */
    size_t solves = 0;
};

/* Solved kernel sampled on the scenario geometry.
 *
 *   K     x-lattice x absolute y-patch x time
 *   Kmov  x-lattice x moving z-offset patch x time, z = x + offset
 *   Kray  x-lattice x ray node axis (slot 3) x time, K(x, x + zeta v0)
 *   g     x-lattice x time, the diagonal value K(x, x)
 *
 * K2 / K2mov / g2 hold the second kernel of the mkdv family (empty axes
 * otherwise). */
struct DressingResult {
    GridFunction K, Kmov, Kray, g;
    GridFunction K2, K2mov, g2;
    SolveStats stats;
};

/* Solve (I - A) K = F on a half-line ray per base point and sample the
 * kernel. Throws TailNotDecayed when the truncated integrand does not decay,
 * SingularOperator when a base system is numerically singular. */
DressingResult solve_dressing(const Scenario& sc, const SolveOptions& opt = SolveOptions());

/* (f, g) = integral of sum over entries of f_e^* g_e, trapezoid in each axis. */
CDNumber scalar_product(const GridFunction& f, const GridFunction& g);
double hilbert_norm(const GridFunction& f);

/* The dressing operator only multiplies kernel values from the left, so right
 * multiplication by a constant must pass through it. Returns the relative gap
 * on a representative base point with a random field and constant. */
double right_linearity_gap(const Scenario& sc, unsigned seed = 7u);

/* g = -v v - sigma_x v, the quadratic map between the two hierarchies. */
GridFunction miura_transform(const GridFunction& v, const SigmaSpec& sx);

} // namespace cdx

#endif
