#include "cdx/operator_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cdx/errors.hpp"

namespace cdx {

RealDiffOp RealDiffOp::zero(int d) {
    RealDiffOp o;
    o.d = d;
    return o;
}

RealDiffOp RealDiffOp::constant(int d, double c) {
    RealDiffOp o;
    o.d = d;
    if (c != 0.0) o.terms[Multi(d, 0)] = c;
    return o;
}

RealDiffOp RealDiffOp::partial(int d, int coord, int order) {
    if (coord < 0 || coord >= d) throw RangeError("RealDiffOp::partial: coordinate out of range");
    if (order < 0) throw RangeError("RealDiffOp::partial: negative order");
    RealDiffOp o;
    o.d = d;
    Multi m(d, 0);
    m[coord] = order;
    o.terms[m] = 1.0;
    return o;
}

RealDiffOp op_add(const RealDiffOp& a, const RealDiffOp& b) {
    if (a.d != b.d) throw ShapeMismatch("op_add: coordinate count differs");
    RealDiffOp o = a;
    for (const auto& [m, c] : b.terms) o.terms[m] += c;
    return o;
}

RealDiffOp op_scale(const RealDiffOp& a, double s) {
    RealDiffOp o = a;
    for (auto& [m, c] : o.terms) c *= s;
    return o;
}

RealDiffOp op_mul(const RealDiffOp& a, const RealDiffOp& b) {
    if (a.d != b.d) throw ShapeMismatch("op_mul: coordinate count differs");
    RealDiffOp o;
    o.d = a.d;
    for (const auto& [ma, ca] : a.terms)
        for (const auto& [mb, cb] : b.terms) {
            Multi m = ma;
            for (int i = 0; i < a.d; ++i) m[i] += mb[i];
            o.terms[m] += ca * cb;
        }
    return o;
}

double op_max_coeff(const RealDiffOp& a) {
    double m = 0.0;
    for (const auto& [mi, c] : a.terms) m = std::max(m, std::fabs(c));
    return m;
}

DrOperator::DrOperator(int level, int d) : level_(level), d_(d), dim_(dim_of(level)) {
    if (level < 0 || level > kMaxLevel) throw RangeError("DrOperator: level out of range");
    a_.assign(static_cast<size_t>(dim_) * dim_, RealDiffOp::zero(d));
}

RealDiffOp& DrOperator::at(int j, int s) {
    return a_[static_cast<size_t>(j) * dim_ + s];
}

const RealDiffOp& DrOperator::at(int j, int s) const {
    return a_[static_cast<size_t>(j) * dim_ + s];
}

DrOperator DrOperator::zero(int level, int d) { return DrOperator(level, d); }

namespace {
inline double star_sign(int j) { return j >= 1 ? -1.0 : 1.0; }
} // namespace

DrOperator DrOperator::identity(int level, int d) {
    return real_op(level, RealDiffOp::constant(d, 1.0));
}

DrOperator DrOperator::real_op(int level, const RealDiffOp& rho) {
    DrOperator o(level, rho.d);
    for (int s = 0; s < o.dim_; ++s) o.at(s, s) = op_scale(rho, star_sign(s));
    return o;
}

DrOperator DrOperator::left_mult(int level, int d, const CDNumber& c) {
    if (c.level() != level) throw ShapeMismatch("DrOperator::left_mult: level mismatch");
    const BasisTable& t = BasisTable::get(level);
    DrOperator o(level, d);
    for (int g = 0; g < o.dim_; ++g) {
        if (c[g] == 0.0) continue;
        for (int s = 0; s < o.dim_; ++s) {
            const int q = t.idx(g, s);
            const double w = c[g] * t.sgn(g, s) * star_sign(q);
            o.at(q, s) = op_add(o.at(q, s), RealDiffOp::constant(d, w));
        }
    }
    return o;
}

DrOperator DrOperator::right_mult(int level, int d, const CDNumber& c) {
    if (c.level() != level) throw ShapeMismatch("DrOperator::right_mult: level mismatch");
    const BasisTable& t = BasisTable::get(level);
    DrOperator o(level, d);
    for (int g = 0; g < o.dim_; ++g) {
        if (c[g] == 0.0) continue;
        for (int s = 0; s < o.dim_; ++s) {
            const int q = t.idx(s, g);
            const double w = c[g] * t.sgn(s, g) * star_sign(q);
            o.at(q, s) = op_add(o.at(q, s), RealDiffOp::constant(d, w));
        }
    }
    return o;
}

DrOperator DrOperator::sigma_like(const SigmaSpec& sg, int d) {
    sg.validate();
    const BasisTable& t = BasisTable::get(sg.level);
    DrOperator o(sg.level, d);
    for (int j = 0; j < o.dim_; ++j) {
        if (sg.psi[j] == 0.0) continue;
        if (sg.xi[j] >= d) throw RangeError("DrOperator::sigma_like: xi exceeds coordinate count");
        for (int s = 0; s < o.dim_; ++s) {
            const int q = t.idx(j, s);
            const double w = sg.psi[j] * star_sign(j) * t.sgn(j, s) * star_sign(q);
            o.at(q, s) = op_add(o.at(q, s), op_scale(RealDiffOp::partial(d, sg.xi[j]), w));
        }
    }
    return o;
}

DrOperator dr_add(const DrOperator& a, const DrOperator& b) {
    if (a.level() != b.level() || a.d() != b.d()) throw ShapeMismatch("dr_add: shape mismatch");
    DrOperator o(a.level(), a.d());
    for (int j = 0; j < a.dim(); ++j)
        for (int s = 0; s < a.dim(); ++s) o.at(j, s) = op_add(a.at(j, s), b.at(j, s));
    return o;
}

DrOperator dr_sub(const DrOperator& a, const DrOperator& b) { return dr_add(a, dr_scale(b, -1.0)); }

DrOperator dr_scale(const DrOperator& a, double s) {
    DrOperator o(a.level(), a.d());
    for (int j = 0; j < a.dim(); ++j)
        for (int k = 0; k < a.dim(); ++k) o.at(j, k) = op_scale(a.at(j, k), s);
    return o;
}

DrOperator dr_compose(const DrOperator& b, const DrOperator& a, bool signed_rule) {
    if (a.level() != b.level() || a.d() != b.d()) throw ShapeMismatch("dr_compose: shape mismatch");
    DrOperator o(a.level(), a.d());
    for (int k = 0; k < a.dim(); ++k)
        for (int s = 0; s < a.dim(); ++s) {
            RealDiffOp acc = RealDiffOp::zero(a.d());
            for (int m = 0; m < a.dim(); ++m) {
                RealDiffOp p = op_mul(b.at(k, m), a.at(m, s));
                if (signed_rule) p = op_scale(p, star_sign(m));
                acc = op_add(acc, p);
            }
            o.at(k, s) = acc;
        }
    return o;
}

DrOperator dr_pow(const DrOperator& a, int k, bool signed_rule) {
    if (k < 0) throw RangeError("dr_pow: negative power");
    DrOperator o = DrOperator::identity(a.level(), a.d());
    for (int i = 0; i < k; ++i) o = dr_compose(a, o, signed_rule);
    return o;
}

DrOperator dr_strip_real_part(const DrOperator& a) {
    DrOperator o = a;
    for (int s = 0; s < a.dim(); ++s) o.at(0, s) = RealDiffOp::zero(a.d());
    return o;
}

double dr_max_coeff(const DrOperator& a) {
    double m = 0.0;
    for (int j = 0; j < a.dim(); ++j)
        for (int s = 0; s < a.dim(); ++s) m = std::max(m, op_max_coeff(a.at(j, s)));
    return m;
}

double dr_max_diff(const DrOperator& a, const DrOperator& b) { return dr_max_coeff(dr_sub(a, b)); }

double dr_real_coefficient_leak(const DrOperator& a) {
    double m = 0.0;
    for (int j = 0; j < a.dim(); ++j)
        for (int s = 0; s < a.dim(); ++s)
            if (j != s) m = std::max(m, op_max_coeff(a.at(j, s)));
    /* diagonal rows must all encode the same real operator rho, with
     * at(s, s) = (-1)^{[s >= 1]} rho */
    const RealDiffOp& rho = a.at(0, 0);
    for (int s = 1; s < a.dim(); ++s) {
        RealDiffOp diff = op_add(op_scale(rho, star_sign(s)), op_scale(a.at(s, s), -1.0));
        m = std::max(m, op_max_coeff(diff));
    }
    return m;
}

CDPoly poly_random(int level, int d, int degree, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CDPoly p;
    p.level = level;
    p.d = d;
    Multi m(d, 0);
    /* enumerate all multi-indices with |m| <= degree */
    const int n = dim_of(level);
    while (true) {
        int total = 0;
        for (int v : m) total += v;
        if (total <= degree) {
            CDNumber c(level);
            for (int j = 0; j < n; ++j) c[j] = u(rng);
            p.terms[m] = c;
        }
        int i = d - 1;
        while (i >= 0) {
            if (++m[i] <= degree) break;
            m[i] = 0;
            --i;
        }
        if (i < 0) break;
    }
    return p;
}

CDPoly poly_sub(const CDPoly& a, const CDPoly& b) {
    if (a.level != b.level || a.d != b.d) throw ShapeMismatch("poly_sub: shape mismatch");
    CDPoly o = a;
    for (const auto& [m, c] : b.terms) {
        auto it = o.terms.find(m);
        if (it == o.terms.end())
            o.terms[m] = cd_neg(c);
        else
            it->second = cd_sub(it->second, c);
    }
    return o;
}

double poly_max_coeff(const CDPoly& a) {
    double m = 0.0;
    for (const auto& [mi, c] : a.terms)
        for (int j = 0; j < c.dim(); ++j) m = std::max(m, std::fabs(c[j]));
    return m;
}

namespace {

/* Apply one real monomial operator c d^alpha to a real scalar polynomial
 * (map multi-index -> coefficient). */
void apply_monomial(const Multi& alpha, double c, const std::map<Multi, double>& p,
                    std::map<Multi, double>& out) {
    const int d = static_cast<int>(alpha.size());
    for (const auto& [m, v] : p) {
        double factor = 1.0;
        Multi r = m;
        bool dead = false;
        for (int i = 0; i < d && !dead; ++i) {
            for (int t = 0; t < alpha[i]; ++t) {
                if (r[i] == 0) {
                    dead = true;
                    break;
                }
                factor *= r[i];
                --r[i];
            }
        }
        if (dead || factor == 0.0) continue;
        out[r] += c * v * factor;
    }
}

} // namespace

CDPoly dr_apply(const DrOperator& a, const CDPoly& p) {
    if (a.level() != p.level || a.d() != p.d) throw ShapeMismatch("dr_apply: shape mismatch");
    const int n = a.dim();
    /* split p into real component polynomials */
    std::vector<std::map<Multi, double>> comp(n);
    for (const auto& [m, c] : p.terms)
        for (int s = 0; s < n; ++s)
            if (c[s] != 0.0) comp[s][m] = c[s];

    CDPoly q;
    q.level = p.level;
    q.d = p.d;
    for (int j = 0; j < n; ++j) {
        std::map<Multi, double> row; /* real polynomial sum_s A_{j,s} f_s */
        for (int s = 0; s < n; ++s)
            for (const auto& [alpha, cc] : a.at(j, s).terms) apply_monomial(alpha, cc, comp[s], row);
        const double sign = star_sign(j); /* i_j^* = sign * i_j */
        for (const auto& [m, v] : row) {
            if (v == 0.0) continue;
            auto it = q.terms.find(m);
            if (it == q.terms.end()) it = q.terms.emplace(m, CDNumber(p.level)).first;
            it->second[j] += sign * v;
        }
    }
    return q;
}

AlgebraCheckReport dr_algebra_check(int level, uint64_t seed) {
    if (level < 2) throw PreconditionViolated("dr_algebra_check: level must be at least 2");
    const int d = 2;
    AlgebraCheckReport rep;

    SigmaSpec s1 = SigmaSpec::single(level, 1, 1.0);
    SigmaSpec s2d = SigmaSpec::single(level, 2, 0.75);
    s2d.xi[1] = 2; /* swap 1 <-> 2 so component 2 differentiates coordinate 1 */
    s2d.xi[2] = 1;

    const DrOperator A = dr_add(DrOperator::sigma_like(s1, d),
                                DrOperator::left_mult(level, d, CDNumber::basis(level, 2, 0.5)));
    const DrOperator B = dr_add(DrOperator::sigma_like(s2d, d),
                                DrOperator::right_mult(level, d, CDNumber::basis(level, 1, 1.25)));

    const CDPoly p = poly_random(level, d, 5, seed);

    /* composition rule, with and without the middle-index sign factor */
    const CDPoly direct = dr_apply(B, dr_apply(A, p));
    rep.signed_rule_err = poly_max_coeff(poly_sub(direct, dr_apply(dr_compose(B, A, true), p)));
    rep.unsigned_rule_err = poly_max_coeff(poly_sub(direct, dr_apply(dr_compose(B, A, false), p)));

    /* power associativity A^k A^m = A^{k+m}, k + m <= 4 */
    for (int k = 1; k <= 3; ++k)
        for (int m = 1; k + m <= 4; ++m) {
            const DrOperator lhs = dr_compose(dr_pow(A, k), dr_pow(A, m));
            const DrOperator rhs = dr_pow(A, k + m);
            rep.power_assoc_err = std::max(rep.power_assoc_err, dr_max_diff(lhs, rhs));
            rep.power_assoc_err = std::max(
                rep.power_assoc_err,
                poly_max_coeff(poly_sub(dr_apply(lhs, p), dr_apply(rhs, p))));
        }

    /* center: a real-coefficient operator commutes with the generators */
    RealDiffOp rho = op_add(RealDiffOp::partial(d, 0, 2), RealDiffOp::constant(d, 0.5));
    rho = op_add(rho, op_scale(RealDiffOp::partial(d, 1, 1), -2.0));
    const DrOperator R = DrOperator::real_op(level, rho);
    std::vector<DrOperator> gens;
    for (int g = 1; g < dim_of(level); ++g) {
        gens.push_back(DrOperator::left_mult(level, d, CDNumber::basis(level, g)));
        gens.push_back(DrOperator::right_mult(level, d, CDNumber::basis(level, g)));
    }
    gens.push_back(DrOperator::sigma_like(s1, d));
    for (const DrOperator& g : gens)
        rep.center_commute_err =
            std::max(rep.center_commute_err, dr_max_diff(dr_compose(R, g), dr_compose(g, R)));

    /* witness: a non-real operator falls outside the center */
    const DrOperator W = DrOperator::left_mult(level, d, CDNumber::basis(level, 1));
    const DrOperator G = DrOperator::left_mult(level, d, CDNumber::basis(level, 2));
    rep.center_witness = dr_max_diff(dr_compose(W, G), dr_compose(G, W));

    /* even powers of sum_{g >= 1} i_g^* rho_g (no real generator term) have
     * real coefficients */
    DrOperator S = DrOperator::zero(level, d);
    const RealDiffOp rhos[3] = {RealDiffOp::partial(d, 0), op_scale(RealDiffOp::partial(d, 1), 0.75),
                                op_scale(op_mul(RealDiffOp::partial(d, 0), RealDiffOp::partial(d, 1)),
                                         0.5)};
    for (int g = 1; g <= 3 && g < dim_of(level); ++g) {
        const CDNumber gen = CDNumber::basis(level, g, -1.0); /* i_g^* */
        S = dr_add(S, dr_compose(DrOperator::left_mult(level, d, gen),
                                 DrOperator::real_op(level, rhos[g - 1])));
    }
    for (int k = 1; k <= 2; ++k)
        rep.even_power_leak =
            std::max(rep.even_power_leak, dr_real_coefficient_leak(dr_pow(S, 2 * k)));
    return rep;
}

} // namespace cdx
