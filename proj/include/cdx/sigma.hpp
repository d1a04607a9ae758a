#ifndef CDX_SIGMA_HPP
#define CDX_SIGMA_HPP

#include <array>
#include <map>
#include <utility>
#include <vector>

#include "cdx/grid.hpp"

namespace cdx {

/* First-order operator  sigma f = sum_j i_j^* (df/dx_{xi(j)}) psi_j  acting on
 * the coordinates of one variable slot. psi are real constants with
 * sum psi_j^2 > 0; xi is a permutation of the 2^r coordinate indices. */
struct SigmaSpec {
    int level = 0;
    std::vector<double> psi;
    std::vector<int> xi;
    int slot = 0;

    void validate() const;
    SigmaSpec with_slot(int new_slot) const {
        SigmaSpec s = *this;
        s.slot = new_slot;
        return s;
    }
    /* Identity xi and a single active component j with weight w. */
    static SigmaSpec single(int level, int j, double w = 1.0, int slot = 0);
};

/* Active (psi_j != 0) component list as (j, xi(j), psi_j). */
std::vector<std::array<double, 3>> active_components(const SigmaSpec& sg);

GridFunction apply_sigma(const GridFunction& f, const SigmaSpec& sg);

/* Conjugated variant  sigma^ f = sum_j (df/dx_{xi(j)}) i_j psi_j  (right factors). */
GridFunction apply_sigma_hat(const GridFunction& f, const SigmaSpec& sg);

/* m-fold application of apply_sigma. */
GridFunction sigma_power(const GridFunction& f, const SigmaSpec& sg, int m);

/* sigma-symbol of an exponential mode: the constant c with
 * sigma exp(<e, x>) = c exp(<e, x>), where e[m] is the coefficient of
 * coordinate m of the slot sigma differentiates. */
CDNumber sigma_symbol(const SigmaSpec& sg, const std::vector<double>& exponent);

/* ------------------------------------------------------------------ *
 * Partial application to a two-factor product.
 *
 * The partial operator on a product differentiates one factor and wraps the
 * whole current expression:  ^s sigma {f g} = sum_j i_j^* [ ... d_s ... ] psi_j.
 * Successive applications nest, the latest wrap outermost.  A ProductExpr
 * tracks the sum of wrapped terms symbolically and evaluates on demand, so
 * mixed chains like ^1sigma_x(^2sigma_z{f g}) keep their exact grouping.
 * ------------------------------------------------------------------ */
class ProductExpr {
public:
    ProductExpr(GridFunction f, GridFunction g);

    /* factor: 1 differentiates f, 2 differentiates g. */
    void apply_partial(int factor, const SigmaSpec& sg);

    GridFunction evaluate() const;

    /* Evaluate, then tie slot-1 samples to slot-0 samples (restriction z = x). */
    GridFunction evaluate_on_diagonal() const;

private:
    using DKey = std::vector<std::pair<std::pair<int, int>, int>>; /* ((slot,coord) -> order) */

    struct Term {
        std::vector<int> wraps; /* generator indices, innermost first */
        DKey df, dg;
        double coeff = 1.0;
    };

    const GridFunction& derived(const GridFunction& base, std::map<DKey, GridFunction>& cache,
                                const DKey& key) const;

    GridFunction f_, g_;
    std::vector<Term> terms_;
    mutable std::map<DKey, GridFunction> cache_f_, cache_g_;
};

/* Convenience: one partial application to a product, evaluated. */
GridFunction apply_partial_sigma(int factor, const SigmaSpec& sg, const GridFunction& f,
                                 const GridFunction& g);

/* Result of the even-power reality check of sigma powers. */
struct RealCoeffReport {
    double leak = 0.0;            /* max imaginary magnitude of sigma^{2k} f          */
    double closed_form_diff = 0.0;/* max |sigma^{2k} f - A^k f|, A = sum c_j d^2/dx^2 */
};

/* For real-valued f and psi_0 = 0, sigma^{2k} f must stay real and equal
 * A^k f with A = sum_j psi_j^2 i_j^2 d^2/dx_{xi(j)}^2. */
RealCoeffReport check_real_coefficients(const GridFunction& f, const SigmaSpec& sg, int k);

} // namespace cdx

#endif
