#include "cdx/cd_number.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <sstream>

namespace cdx {

/* ---------------------------------------------------------------- tables */

namespace {

/* Index-pair recursion for i_a * i_b at a given level. Writing a = a0 + h*a1,
 * b = b0 + h*b1 with h = 2^{r-1}, the doubling law reduces each case to a
 * level r-1 product:
 *   (a1,b1) = (0,0):  i_{a0} i_{b0}
 *   (0,1):  (i_{b0} i_{a0}) l                      (argument swap)
 *   (1,0):  (i_{a0} conj(i_{b0})) l                (extra sign when b0 >= 1)
 *   (1,1):  -conj(i_{b0}) i_{a0}                   (extra sign when b0 == 0)
 */
std::pair<int, int> basis_prod(int level, int a, int b) {
    if (level == 0) return {0, +1};
    const int h = 1 << (level - 1);
    const int a0 = a & (h - 1), a1 = a >> (level - 1);
    const int b0 = b & (h - 1), b1 = b >> (level - 1);
    if (a1 == 0 && b1 == 0) return basis_prod(level - 1, a0, b0);
    if (a1 == 0 && b1 == 1) {
        auto [idx, sg] = basis_prod(level - 1, b0, a0);
        return {h + idx, sg};
    }
    if (a1 == 1 && b1 == 0) {
        auto [idx, sg] = basis_prod(level - 1, a0, b0);
        return {h + idx, b0 >= 1 ? -sg : sg};
    }
    auto [idx, sg] = basis_prod(level - 1, b0, a0);
    return {idx, b0 == 0 ? -sg : sg};
}

std::array<BasisTable, kMaxLevel + 1> g_tables;
std::once_flag g_tables_once;

void build_tables() {
    for (int r = 0; r <= kMaxLevel; ++r) {
        BasisTable& t = g_tables[r];
        t.level = r;
        t.dim = dim_of(r);
        t.index.resize(static_cast<size_t>(t.dim) * t.dim);
        t.sign.resize(static_cast<size_t>(t.dim) * t.dim);
        for (int a = 0; a < t.dim; ++a) {
            for (int b = 0; b < t.dim; ++b) {
                auto [idx, sg] = basis_prod(r, a, b);
                t.index[static_cast<size_t>(a) * t.dim + b] = static_cast<int16_t>(idx);
                t.sign[static_cast<size_t>(a) * t.dim + b] = static_cast<int8_t>(sg);
            }
        }
    }
}

} // namespace

const BasisTable& BasisTable::get(int level) {
    if (level < 0 || level > kMaxLevel)
        throw RangeError("BasisTable: level must be in [0, 6]");
    std::call_once(g_tables_once, build_tables);
    return g_tables[level];
}

/* ---------------------------------------------------------------- span ops */

namespace spans {

void conj(int level, double* a) {
    const int n = dim_of(level);
    for (int j = 1; j < n; ++j) a[j] = -a[j];
}

void mul_doubling(int level, const double* a, const double* b, double* out) {
    if (level == 0) {
        out[0] = a[0] * b[0];
        return;
    }
    const int h = 1 << (level - 1);
    std::vector<double> t1(h), t2(h), cc(h);
    /* lower half: alpha*gamma - conj(delta)*beta */
    mul_doubling(level - 1, a, b, t1.data());
    std::copy(b + h, b + 2 * h, cc.begin());
    conj(level - 1, cc.data());
    mul_doubling(level - 1, cc.data(), a + h, t2.data());
    for (int m = 0; m < h; ++m) out[m] = t1[m] - t2[m];
    /* upper half: delta*alpha + beta*conj(gamma) */
    mul_doubling(level - 1, b + h, a, t1.data());
    std::copy(b, b + h, cc.begin());
    conj(level - 1, cc.data());
    mul_doubling(level - 1, a + h, cc.data(), t2.data());
    for (int m = 0; m < h; ++m) out[h + m] = t1[m] + t2[m];
}

void mul_table(const BasisTable& table, const double* a, const double* b, double* out) {
    const int n = table.dim;
    std::fill(out, out + n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        const int16_t* idx = &table.index[static_cast<size_t>(i) * n];
        const int8_t* sg = &table.sign[static_cast<size_t>(i) * n];
        for (int j = 0; j < n; ++j) {
            if (b[j] == 0.0) continue;
            out[idx[j]] += sg[j] * ai * b[j];
        }
    }
}

void add_genmul(const BasisTable& table, int g, bool conjugate_gen, double s, const double* x,
                double* out) {
    const int n = table.dim;
    const double sc = (conjugate_gen && g >= 1) ? -s : s;
    const int16_t* idx = &table.index[static_cast<size_t>(g) * n];
    const int8_t* sg = &table.sign[static_cast<size_t>(g) * n];
    for (int j = 0; j < n; ++j) out[idx[j]] += sg[j] * sc * x[j];
}

} // namespace spans

/* ---------------------------------------------------------------- number ops */

namespace {
void require_same_level(const CDNumber& a, const CDNumber& b, const char* who) {
    if (a.level() != b.level()) throw ShapeMismatch(std::string(who) + ": level mismatch");
}
} // namespace

CDNumber cd_add(const CDNumber& a, const CDNumber& b) {
    require_same_level(a, b, "cd_add");
    CDNumber out(a.level());
    for (int j = 0; j < a.dim(); ++j) out[j] = a[j] + b[j];
    return out;
}

CDNumber cd_sub(const CDNumber& a, const CDNumber& b) {
    require_same_level(a, b, "cd_sub");
    CDNumber out(a.level());
    for (int j = 0; j < a.dim(); ++j) out[j] = a[j] - b[j];
    return out;
}

CDNumber cd_neg(const CDNumber& a) {
    CDNumber out(a.level());
    for (int j = 0; j < a.dim(); ++j) out[j] = -a[j];
    return out;
}

CDNumber cd_scale(const CDNumber& a, double s) {
    CDNumber out(a.level());
    for (int j = 0; j < a.dim(); ++j) out[j] = s * a[j];
    return out;
}

CDNumber cd_mul(const CDNumber& a, const CDNumber& b) {
    require_same_level(a, b, "cd_mul");
    CDNumber out(a.level());
    spans::mul_doubling(a.level(), a.data(), b.data(), out.data());
    return out;
}

CDNumber cd_mul_table(const CDNumber& a, const CDNumber& b) {
    require_same_level(a, b, "cd_mul_table");
    CDNumber out(a.level());
    spans::mul_table(BasisTable::get(a.level()), a.data(), b.data(), out.data());
    return out;
}

CDNumber cd_conj(const CDNumber& a) {
    CDNumber out = a;
    spans::conj(a.level(), out.data());
    return out;
}

double cd_norm2(const CDNumber& a) {
    double s = 0.0;
    for (int j = 0; j < a.dim(); ++j) s += a[j] * a[j];
    return s;
}

double cd_norm(const CDNumber& a) { return std::sqrt(cd_norm2(a)); }

CDNumber cd_inv(const CDNumber& a) {
    const double n2 = cd_norm2(a);
    if (n2 == 0.0 || !std::isfinite(1.0 / n2))
        throw DivisionByZero("cd_inv: zero or numerically singular element");
    return cd_scale(cd_conj(a), 1.0 / n2);
}

CDNumber cd_pow(const CDNumber& a, int n) {
    if (n < 0) throw RangeError("cd_pow: negative exponent");
    CDNumber out = CDNumber::real(a.level(), 1.0);
    for (int k = 0; k < n; ++k) out = cd_mul(out, a);
    return out;
}

CDNumber cd_commutator(const CDNumber& a, const CDNumber& b) {
    return cd_sub(cd_mul(a, b), cd_mul(b, a));
}

CDNumber cd_associator(const CDNumber& a, const CDNumber& b, const CDNumber& c) {
    return cd_sub(cd_mul(cd_mul(a, b), c), cd_mul(a, cd_mul(b, c)));
}

bool cd_is_real(const CDNumber& a, double tol) {
    for (int j = 1; j < a.dim(); ++j)
        if (std::abs(a[j]) > tol) return false;
    return true;
}

std::string to_string(const CDNumber& a) {
    std::ostringstream os;
    bool first = true;
    for (int j = 0; j < a.dim(); ++j) {
        const double v = a[j];
        if (v == 0.0) continue;
        if (first) {
            if (j == 0)
                os << v;
            else if (v == 1.0)
                os << "i" << j;
            else if (v == -1.0)
                os << "-i" << j;
            else
                os << v << "*i" << j;
            first = false;
        } else {
            const double av = std::abs(v);
            os << (v < 0 ? " - " : " + ");
            if (j == 0)
                os << av;
            else if (av == 1.0)
                os << "i" << j;
            else
                os << av << "*i" << j;
        }
    }
    if (first) os << "0";
    return os.str();
}

std::string table_to_string(int level) {
    const BasisTable& t = BasisTable::get(level);
    std::ostringstream os;
    for (int a = 0; a < t.dim; ++a) {
        for (int b = 0; b < t.dim; ++b) {
            const int idx = t.idx(a, b);
            os << (t.sgn(a, b) > 0 ? " +" : " -");
            os << "i" << idx;
            if (idx < 10) os << " ";
        }
        os << "\n";
    }
    return os.str();
}

std::optional<ZeroDivisorPair> find_zero_divisor(int level) {
    const int n = dim_of(level);
    if (level > kMaxLevel) throw RangeError("find_zero_divisor: level must be in [0, 6]");
    const BasisTable& t = BasisTable::get(level);
    /* (i_p + sa i_q)(i_u + sb i_v) vanishes exactly when the four basis
     * products cancel in pairs; that is a pure table condition */
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q)
            for (int u = 0; u < n; ++u)
                for (int v = u + 1; v < n; ++v) {
                    if (t.idx(p, u) != t.idx(q, v) || t.idx(p, v) != t.idx(q, u)) continue;
                    for (int sa = -1; sa <= 1; sa += 2)
                        for (int sb = -1; sb <= 1; sb += 2) {
                            if (t.sgn(p, u) + sa * sb * t.sgn(q, v) != 0) continue;
                            if (sb * t.sgn(p, v) + sa * t.sgn(q, u) != 0) continue;
                            CDNumber a(level), b(level);
                            a[p] = 1.0;
                            a[q] = sa;
                            b[u] = 1.0;
                            b[v] = sb;
                            if (cd_norm(cd_mul(a, b)) < 1e-12) return ZeroDivisorPair{a, b};
                        }
                }
    return std::nullopt;
}

} // namespace cdx
