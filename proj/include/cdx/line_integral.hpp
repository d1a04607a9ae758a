#ifndef CDX_LINE_INTEGRAL_HPP
#define CDX_LINE_INTEGRAL_HPP

#include <utility>
#include <vector>

#include "cdx/grid.hpp"
#include "cdx/sigma.hpp"

namespace cdx {

enum class QuadRule { Trapezoid, Simpson };

/* Weights w_k with  int_{t_0}^{t_{n-1}} f dt ~ sum_k w_k f_k  on n uniform
 * samples with spacing h. Simpson uses the 3/8 rule on the last three
 * intervals when the interval count is odd. */
std::vector<double> quad_weights(QuadRule rule, int n, double h);

/* Row-major n x n matrix W with  C_m = sum_k W[m,k] f_k ~ int_{t_0}^{t_m}.
 * Order matches the rule at every prefix (odd Simpson prefixes use a
 * three-point half-panel correction). */
std::vector<double> quad_cumulative_matrix(QuadRule rule, int n, double h);

/* Total variation of a sampled algebra-valued path. */
double path_variation(const std::vector<CDNumber>& g);

/* Variation distance between two sampled paths: |g_0 - w_0| plus the minimum
 * over monotone reparametrizations of the variation of g - w. */
double path_distance(const std::vector<CDNumber>& g, const std::vector<CDNumber>& w);

/* Symbol u of sigma along direction v0 (indexed by coordinate): moving at
 * unit parameter speed along v0, sigma f = u dW/dt for ray profiles W.
 * Throws IncompatibleDirection when v0 moves a coordinate sigma cannot see
 * or when the symbol is not invertible. */
CDNumber ray_symbol(const SigmaSpec& sg, const std::vector<double>& v0);

/* W(t) = u^{-1} int_{t_0}^t g dt along the given axis; sigma W = g and
 * W(t_0) = 0 whenever the axis parametrizes motion along v0. */
GridFunction antideriv_from_base(const GridFunction& g, int axis_index, const SigmaSpec& sg,
                                 const std::vector<double>& v0, QuadRule rule = QuadRule::Simpson);

/* W(t) = u^{-1} int_t^{t_end} g dt, the decaying-tail variant; sigma W = -g.
 * Throws TailNotDecayed when |g| at the far end exceeds eps_tail. */
GridFunction antideriv_to_infinity(const GridFunction& g, int axis_index, const SigmaSpec& sg,
                                   const std::vector<double>& v0, QuadRule rule = QuadRule::Simpson,
                                   double eps_tail = 1e-8);

/* Sup-norm ratio ||int_t^inf f_k||/||f_k|| for f_k(t) = sin(k t) exp(-t),
 * sampled on n points with spacing h; decays as the frequency k grows. */
std::vector<std::pair<double, double>> operator_norm_decay(int n, double h,
                                                           const std::vector<double>& ks);

} // namespace cdx

#endif
