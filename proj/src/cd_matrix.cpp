#include "cdx/cd_matrix.hpp"

#include <cmath>
#include <sstream>

namespace cdx {

namespace {
void require_same_shape(const CDMatrix& a, const CDMatrix& b, const char* who) {
    if (a.level() != b.level() || a.s() != b.s())
        throw ShapeMismatch(std::string(who) + ": shape mismatch");
}
} // namespace

CDMatrix mat_add(const CDMatrix& a, const CDMatrix& b) {
    require_same_shape(a, b, "mat_add");
    CDMatrix out = a;
    for (size_t i = 0; i < out.flat_size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

CDMatrix mat_sub(const CDMatrix& a, const CDMatrix& b) {
    require_same_shape(a, b, "mat_sub");
    CDMatrix out = a;
    for (size_t i = 0; i < out.flat_size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

CDMatrix mat_scale(const CDMatrix& a, double s) {
    CDMatrix out = a;
    for (size_t i = 0; i < out.flat_size(); ++i) out.data()[i] *= s;
    return out;
}

CDMatrix mat_mul(const CDMatrix& a, const CDMatrix& b) {
    require_same_shape(a, b, "mat_mul");
    const int s = a.s();
    const int n = a.comp_dim();
    const BasisTable& table = BasisTable::get(a.level());
    CDMatrix out(a.level(), s);
    std::vector<double> prod(n);
    for (int i = 0; i < s; ++i)
        for (int k = 0; k < s; ++k) {
            double* acc = out.entry(i, k);
            for (int m = 0; m < s; ++m) {
                spans::mul_table(table, a.entry(i, m), b.entry(m, k), prod.data());
                for (int j = 0; j < n; ++j) acc[j] += prod[j];
            }
        }
    return out;
}

CDMatrix mat_scale_left(const CDNumber& c, const CDMatrix& a) {
    if (c.level() != a.level()) throw ShapeMismatch("mat_scale_left: level mismatch");
    const BasisTable& table = BasisTable::get(a.level());
    CDMatrix out(a.level(), a.s());
    for (int i = 0; i < a.s(); ++i)
        for (int k = 0; k < a.s(); ++k)
            spans::mul_table(table, c.data(), a.entry(i, k), out.entry(i, k));
    return out;
}

CDMatrix mat_scale_right(const CDMatrix& a, const CDNumber& c) {
    if (c.level() != a.level()) throw ShapeMismatch("mat_scale_right: level mismatch");
    const BasisTable& table = BasisTable::get(a.level());
    CDMatrix out(a.level(), a.s());
    for (int i = 0; i < a.s(); ++i)
        for (int k = 0; k < a.s(); ++k)
            spans::mul_table(table, a.entry(i, k), c.data(), out.entry(i, k));
    return out;
}

CDMatrix mat_conj(const CDMatrix& a) {
    CDMatrix out = a;
    for (int i = 0; i < a.s(); ++i)
        for (int k = 0; k < a.s(); ++k) spans::conj(a.level(), out.entry(i, k));
    return out;
}

double mat_norm_inf(const CDMatrix& a) {
    double best = 0.0;
    const int n = a.comp_dim();
    for (int i = 0; i < a.s(); ++i)
        for (int k = 0; k < a.s(); ++k) {
            const double* e = a.entry(i, k);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += e[j] * e[j];
            best = std::max(best, s);
        }
    return std::sqrt(best);
}

double mat_norm2_sum(const CDMatrix& a) {
    double s = 0.0;
    for (size_t i = 0; i < a.flat_size(); ++i) s += a.data()[i] * a.data()[i];
    return s;
}

bool is_real_matrix(const CDMatrix& a, double tol) {
    const int n = a.comp_dim();
    for (int i = 0; i < a.s(); ++i)
        for (int k = 0; k < a.s(); ++k) {
            const double* e = a.entry(i, k);
            for (int j = 1; j < n; ++j)
                if (std::abs(e[j]) > tol) return false;
        }
    return true;
}

std::string to_string(const CDMatrix& a) {
    std::ostringstream os;
    for (int i = 0; i < a.s(); ++i) {
        os << "[ ";
        for (int k = 0; k < a.s(); ++k) {
            os << to_string(a.get(i, k));
            if (k + 1 < a.s()) os << " | ";
        }
        os << " ]\n";
    }
    return os.str();
}

} // namespace cdx
