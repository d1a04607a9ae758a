#ifndef CDX_OPERATOR_ALGEBRA_HPP
#define CDX_OPERATOR_ALGEBRA_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "cdx/cd_number.hpp"
#include "cdx/sigma.hpp"

namespace cdx {

/* Multi-index of derivative orders over d real coordinates. */
using Multi = std::vector<int>;

/* Real constant-coefficient differential operator sum_alpha c_alpha d^alpha. */
struct RealDiffOp {
    int d = 0;
    std::map<Multi, double> terms;

    static RealDiffOp zero(int d);
    static RealDiffOp constant(int d, double c);
    static RealDiffOp partial(int d, int coord, int order = 1);
};

RealDiffOp op_add(const RealDiffOp& a, const RealDiffOp& b);
RealDiffOp op_scale(const RealDiffOp& a, double s);
RealDiffOp op_mul(const RealDiffOp& a, const RealDiffOp& b);
double op_max_coeff(const RealDiffOp& a);

/* Linear operator on algebra-valued functions kept in the normal form
 *
 *     A f = sum_{j,s} [ A_{j,s} f_s ] i_j^*,
 *
 * where f = sum_s f_s i_s and each A_{j,s} is a real constant-coefficient
 * differential operator. Composition stays inside this class. */
class DrOperator {
public:
    DrOperator() = default;
    DrOperator(int level, int d);

    int level() const { return level_; }
    int d() const { return d_; }
    int dim() const { return dim_; }
    RealDiffOp& at(int j, int s);
    const RealDiffOp& at(int j, int s) const;

    static DrOperator zero(int level, int d);
    static DrOperator identity(int level, int d);
    /* f -> rho f applied to every component (real coefficients). */
    static DrOperator real_op(int level, const RealDiffOp& rho);
    static DrOperator left_mult(int level, int d, const CDNumber& c);
    static DrOperator right_mult(int level, int d, const CDNumber& c);
    /* f -> sum_j i_j^* (d f / dx_{xi(j)}) psi_j over coordinates 0..d-1. */
    static DrOperator sigma_like(const SigmaSpec& sg, int d);

private:
    int level_ = 0, d_ = 0, dim_ = 1;
    std::vector<RealDiffOp> a_;
};

DrOperator dr_add(const DrOperator& a, const DrOperator& b);
DrOperator dr_sub(const DrOperator& a, const DrOperator& b);
DrOperator dr_scale(const DrOperator& a, double s);

/* Composition b after a. With signed_rule the middle index carries the
 * factor (-1)^{[m >= 1]}; without it the factor is dropped (the naive rule,
 * kept for comparison). */
DrOperator dr_compose(const DrOperator& b, const DrOperator& a, bool signed_rule = true);
DrOperator dr_pow(const DrOperator& a, int k, bool signed_rule = true);

/* Zero the j = 0 row: the normal form of (I - pi_0) A. */
DrOperator dr_strip_real_part(const DrOperator& a);

double dr_max_coeff(const DrOperator& a);
double dr_max_diff(const DrOperator& a, const DrOperator& b);

/* Distance from the real-coefficient subspace: off-diagonal rows plus
 * disagreement of the diagonal with a single shared real operator. */
double dr_real_coefficient_leak(const DrOperator& a);

/* Polynomial with algebra coefficients, for direct operator application. */
struct CDPoly {
    int level = 0, d = 0;
    std::map<Multi, CDNumber> terms;
};

CDPoly poly_random(int level, int d, int degree, uint64_t seed);
CDPoly poly_sub(const CDPoly& a, const CDPoly& b);
double poly_max_coeff(const CDPoly& a);
CDPoly dr_apply(const DrOperator& a, const CDPoly& p);

struct AlgebraCheckReport {
    double signed_rule_err = 0.0;
    double unsigned_rule_err = 0.0;
    double power_assoc_err = 0.0;
    double center_commute_err = 0.0;
    double center_witness = 0.0;
    double even_power_leak = 0.0;
};

/* Composition rule, power associativity, center and even-power reality checks
 * on random polynomial data at the given algebra level (level >= 2). */
AlgebraCheckReport dr_algebra_check(int level, uint64_t seed);

} // namespace cdx

#endif
