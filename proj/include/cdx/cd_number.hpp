#ifndef CDX_CD_NUMBER_HPP
#define CDX_CD_NUMBER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdx/errors.hpp"

namespace cdx {

/* Doubling hierarchy of real algebras A_r, dim 2^r:
 *   r=0 reals, r=1 complex, r=2 quaternions, r=3 octonions, r=4 sedenions, ...
 * Basis convention: i_0 = 1; the doubling generator of step r is l = i_{2^{r-1}}
 * and i_{2^{r-1}+m} = i_m * l.  For j >= 1: i_j^2 = -1 and i_j i_k = -i_k i_j (j != k).
 */

constexpr int kMaxLevel = 6;

inline constexpr int dim_of(int level) { return 1 << level; }

/* Signed multiplication table for the basis elements of A_r.
 * index/sign are dim x dim, row-major: i_a * i_b = sign[a*dim+b] * i_{index[a*dim+b]}.
 * Built once per level by an index-pair recursion on the doubling law and shared
 * read-only afterwards; this is an independent code path from the coefficient
 * doubling recursion in cd_mul, which is what makes comparing the two a real test.
 */
struct BasisTable {
    int level = 0;
    int dim = 1;
    std::vector<int16_t> index;
    std::vector<int8_t> sign;

    static const BasisTable& get(int level);

    int16_t idx(int a, int b) const { return index[static_cast<size_t>(a) * dim + b]; }
    int8_t sgn(int a, int b) const { return sign[static_cast<size_t>(a) * dim + b]; }
};

class CDNumber {
public:
    CDNumber() : level_(0), c_(1, 0.0) {}

    explicit CDNumber(int level) : level_(check_level(level)), c_(dim_of(level), 0.0) {}

    CDNumber(int level, std::vector<double> coeffs) : level_(check_level(level)), c_(std::move(coeffs)) {
        if (static_cast<int>(c_.size()) != dim_of(level_))
            throw ShapeMismatch("CDNumber: coefficient count does not match 2^level");
    }

    static CDNumber real(int level, double v) {
        CDNumber z(level);
        z.c_[0] = v;
        return z;
    }

    static CDNumber basis(int level, int j, double scale = 1.0) {
        CDNumber z(level);
        if (j < 0 || j >= z.dim())
            throw RangeError("CDNumber::basis: generator index out of range");
        z.c_[j] = scale;
        return z;
    }

    int level() const { return level_; }
    int dim() const { return static_cast<int>(c_.size()); }

    double operator[](int j) const { return c_[j]; }
    double& operator[](int j) { return c_[j]; }

    const std::vector<double>& coeffs() const { return c_; }
    double* data() { return c_.data(); }
    const double* data() const { return c_.data(); }

private:
    static int check_level(int level) {
        if (level < 0 || level > kMaxLevel)
            throw RangeError("CDNumber: level must be in [0, 6]");
        return level;
    }

    int level_;
    std::vector<double> c_;
};

/* Span-level kernels. All spans have length 2^level; out must not alias inputs. */
namespace spans {
void conj(int level, double* a);
void mul_doubling(int level, const double* a, const double* b, double* out);
void mul_table(const BasisTable& table, const double* a, const double* b, double* out);
/* out += s * (i_g or i_g^*) * x, generator index g, table path. */
void add_genmul(const BasisTable& table, int g, bool conjugate_gen, double s, const double* x,
                double* out);
}

CDNumber cd_add(const CDNumber& a, const CDNumber& b);
CDNumber cd_sub(const CDNumber& a, const CDNumber& b);
CDNumber cd_neg(const CDNumber& a);
CDNumber cd_scale(const CDNumber& a, double s);

/* Product by the doubling law (alpha+beta l)(gamma+delta l) = (alpha gamma - conj(delta) beta)
 * + (delta alpha + beta conj(gamma)) l. */
CDNumber cd_mul(const CDNumber& a, const CDNumber& b);

/* Product accumulated through the shared basis table. */
CDNumber cd_mul_table(const CDNumber& a, const CDNumber& b);

CDNumber cd_conj(const CDNumber& a);

/* Squared norm sum_j a_j^2 (= a a^* for these algebras). */
double cd_norm2(const CDNumber& a);
double cd_norm(const CDNumber& a);

/* a^{-1} = a^* / |a|^2; throws DivisionByZero on (near-)zero input. */
CDNumber cd_inv(const CDNumber& a);

/* Left-to-right power a^n = (..(a*a)*a..)*a, n >= 0. */
CDNumber cd_pow(const CDNumber& a, int n);

CDNumber cd_commutator(const CDNumber& a, const CDNumber& b);

/* [a,b,c] = (ab)c - a(bc). */
CDNumber cd_associator(const CDNumber& a, const CDNumber& b, const CDNumber& c);

bool cd_is_real(const CDNumber& a, double tol = 0.0);

/* Debug format "a0 + a1*i1 + ..." with zero components skipped. */
std::string to_string(const CDNumber& a);

/* Human-readable basis table, one row per i_a. */
std::string table_to_string(int level);

struct ZeroDivisorPair {
    CDNumber a;
    CDNumber b;
};

/* Deterministic search over (i_p +- i_q)(i_u +- i_v), p<q, u<v, for a pair of
 * nonzero elements with |ab| < 1e-12. Empty for r <= 3. */
std::optional<ZeroDivisorPair> find_zero_divisor(int level);

} // namespace cdx

#endif
