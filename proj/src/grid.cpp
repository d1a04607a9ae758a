#include "cdx/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace cdx {

GridFunction::GridFunction(int level, int s, std::vector<Axis> axes)
    : level_(level), s_(s), axes_(std::move(axes)) {
    if (level < 0 || level > kMaxLevel) throw RangeError("GridFunction: level must be in [0, 6]");
    if (s < 1) throw RangeError("GridFunction: s must be >= 1");
    nsamples_ = 1;
    for (const Axis& a : axes_) {
        if (a.n < 1) throw GridTooSmall("GridFunction: axis extent must be >= 1");
        nsamples_ *= static_cast<size_t>(a.n);
    }
    strides_.assign(axes_.size(), 1);
    for (int k = static_cast<int>(axes_.size()) - 2; k >= 0; --k)
        strides_[k] = strides_[k + 1] * axes_[k + 1].n;
    v_.assign(nsamples_ * block(), 0.0);
}

int GridFunction::find_axis(int slot, int coord) const {
    for (int k = 0; k < naxes(); ++k)
        if (axes_[k].slot == slot && axes_[k].coord == coord) return k;
    return -1;
}

size_t GridFunction::flat_index(const std::vector<int>& idx) const {
    size_t f = 0;
    for (int k = 0; k < naxes(); ++k) f += static_cast<size_t>(idx[k]) * strides_[k];
    return f;
}

std::vector<int> GridFunction::multi_index(size_t flat) const {
    std::vector<int> idx(naxes());
    for (int k = 0; k < naxes(); ++k) {
        idx[k] = static_cast<int>(flat / strides_[k]);
        flat %= strides_[k];
    }
    return idx;
}

CDMatrix GridFunction::get(size_t flat) const {
    CDMatrix m(level_, s_);
    std::memcpy(m.data(), sample(flat), block() * sizeof(double));
    return m;
}

void GridFunction::set(size_t flat, const CDMatrix& m) {
    if (m.level() != level_ || m.s() != s_) throw ShapeMismatch("GridFunction::set: shape mismatch");
    std::memcpy(sample(flat), m.data(), block() * sizeof(double));
}

bool same_layout(const GridFunction& a, const GridFunction& b) {
    if (a.level() != b.level() || a.s() != b.s() || a.naxes() != b.naxes()) return false;
    for (int k = 0; k < a.naxes(); ++k) {
        const Axis &x = a.axis(k), &y = b.axis(k);
        if (x.slot != y.slot || x.coord != y.coord || x.n != y.n) return false;
        if (x.h != y.h || x.x0 != y.x0) return false;
    }
    return true;
}

GridFunction gf_add(const GridFunction& a, const GridFunction& b) {
    if (!same_layout(a, b)) throw ShapeMismatch("gf_add: layout mismatch");
    GridFunction out = a;
    for (size_t i = 0; i < out.raw().size(); ++i) out.raw()[i] += b.raw()[i];
    return out;
}

GridFunction gf_sub(const GridFunction& a, const GridFunction& b) {
    if (!same_layout(a, b)) throw ShapeMismatch("gf_sub: layout mismatch");
    GridFunction out = a;
    for (size_t i = 0; i < out.raw().size(); ++i) out.raw()[i] -= b.raw()[i];
    return out;
}

GridFunction gf_scale(const GridFunction& a, double s) {
    GridFunction out = a;
    for (double& v : out.raw()) v *= s;
    return out;
}

namespace {

/* Map each axis of b to an axis of a (b must be a broadcastable subset). */
std::vector<int> subset_map(const GridFunction& a, const GridFunction& b, const char* who) {
    if (a.level() != b.level() || a.s() != b.s())
        throw ShapeMismatch(std::string(who) + ": shape mismatch");
    std::vector<int> map(b.naxes(), -1);
    for (int k = 0; k < b.naxes(); ++k) {
        const Axis& bx = b.axis(k);
        const int ai = a.find_axis(bx.slot, bx.coord);
        if (ai < 0) throw ShapeMismatch(std::string(who) + ": operand axis missing from left field");
        const Axis& ax = a.axis(ai);
        if (ax.n != bx.n || ax.h != bx.h || ax.x0 != bx.x0)
            throw ShapeMismatch(std::string(who) + ": operand axis sampling differs");
        map[k] = ai;
    }
    return map;
}

void mat_mul_spans(const BasisTable& table, int s, int n, const double* a, const double* b,
                   double* out, std::vector<double>& prod) {
    std::fill(out, out + static_cast<size_t>(s) * s * n, 0.0);
    for (int i = 0; i < s; ++i)
        for (int k = 0; k < s; ++k) {
            double* acc = out + (static_cast<size_t>(i) * s + k) * n;
            for (int m = 0; m < s; ++m) {
                spans::mul_table(table, a + (static_cast<size_t>(i) * s + m) * n,
                                 b + (static_cast<size_t>(m) * s + k) * n, prod.data());
                for (int j = 0; j < n; ++j) acc[j] += prod[j];
            }
        }
}

} // namespace

GridFunction gf_mul(const GridFunction& a, const GridFunction& b) {
    const std::vector<int> map = subset_map(a, b, "gf_mul");
    const BasisTable& table = BasisTable::get(a.level());
    GridFunction out(a.level(), a.s(), a.axes());
    out.assume_constant_off_axes = a.assume_constant_off_axes;
    out.z_max = std::max(a.z_max, b.z_max);
    out.tail_bound = std::max(a.tail_bound, b.tail_bound);
    const int n = a.comp_dim();
    std::vector<double> prod(n);
    std::vector<int> idx;
    for (size_t f = 0; f < a.nsamples(); ++f) {
        idx = a.multi_index(f);
        size_t fb = 0;
        for (int k = 0; k < b.naxes(); ++k)
            fb += static_cast<size_t>(idx[map[k]]) * b.stride(k);
        mat_mul_spans(table, a.s(), n, a.sample(f), b.sample(fb), out.sample(f), prod);
    }
    return out;
}

bool gf_axes_contain(const GridFunction& big, const GridFunction& small) {
    if (big.level() != small.level() || big.s() != small.s()) return false;
    for (int k = 0; k < small.naxes(); ++k) {
        const Axis& sx = small.axis(k);
        const int bi = big.find_axis(sx.slot, sx.coord);
        if (bi < 0) return false;
        const Axis& bx = big.axis(bi);
        if (bx.n != sx.n || bx.h != sx.h || bx.x0 != sx.x0) return false;
    }
    return true;
}

GridFunction gf_mul_bcast(const GridFunction& a, const GridFunction& b) {
    if (gf_axes_contain(a, b)) return gf_mul(a, b);
    if (!gf_axes_contain(b, a)) throw ShapeMismatch("gf_mul_bcast: neither operand covers the other");
    const std::vector<int> map = subset_map(b, a, "gf_mul_bcast");
    const BasisTable& table = BasisTable::get(a.level());
    GridFunction out(b.level(), b.s(), b.axes());
    out.assume_constant_off_axes = b.assume_constant_off_axes;
    out.z_max = std::max(a.z_max, b.z_max);
    out.tail_bound = std::max(a.tail_bound, b.tail_bound);
    const int n = b.comp_dim();
    std::vector<double> prod(n);
    std::vector<int> idx;
    for (size_t f = 0; f < b.nsamples(); ++f) {
        idx = b.multi_index(f);
        size_t fa = 0;
        for (int k = 0; k < a.naxes(); ++k)
            fa += static_cast<size_t>(idx[map[k]]) * a.stride(k);
        mat_mul_spans(table, b.s(), n, a.sample(fa), b.sample(f), out.sample(f), prod);
    }
    return out;
}

GridFunction gf_scale_left(const CDNumber& c, const GridFunction& a) {
    if (c.level() != a.level()) throw ShapeMismatch("gf_scale_left: level mismatch");
    const BasisTable& table = BasisTable::get(a.level());
    GridFunction out(a.level(), a.s(), a.axes());
    out.assume_constant_off_axes = a.assume_constant_off_axes;
    out.z_max = a.z_max;
    out.tail_bound = a.tail_bound;
    const int n = a.comp_dim();
    const size_t entries = a.nsamples() * a.s() * a.s();
    for (size_t e = 0; e < entries; ++e)
        spans::mul_table(table, c.data(), a.raw().data() + e * n, out.raw().data() + e * n);
    return out;
}

GridFunction gf_scale_right(const GridFunction& a, const CDNumber& c) {
    if (c.level() != a.level()) throw ShapeMismatch("gf_scale_right: level mismatch");
    const BasisTable& table = BasisTable::get(a.level());
    GridFunction out(a.level(), a.s(), a.axes());
    out.assume_constant_off_axes = a.assume_constant_off_axes;
    out.z_max = a.z_max;
    out.tail_bound = a.tail_bound;
    const int n = a.comp_dim();
    const size_t entries = a.nsamples() * a.s() * a.s();
    for (size_t e = 0; e < entries; ++e)
        spans::mul_table(table, a.raw().data() + e * n, c.data(), out.raw().data() + e * n);
    return out;
}

GridFunction gf_derive(const GridFunction& f, int axis_index) {
    const Axis& ax = f.axis(axis_index);
    if (ax.n < 3) throw GridTooSmall("gf_derive: need at least 3 samples along the axis");
    GridFunction out(f.level(), f.s(), f.axes());
    out.assume_constant_off_axes = f.assume_constant_off_axes;
    out.z_max = f.z_max;
    out.tail_bound = f.tail_bound;
    const size_t blk = f.block();
    const size_t st = f.stride(axis_index) * blk;
    const double inv2h = 1.0 / (2.0 * ax.h);
    const int n = ax.n;

    /* Iterate the grid as outer x axis x inner. */
    const size_t inner = f.stride(axis_index);
    const size_t outer = f.nsamples() / (static_cast<size_t>(n) * inner);
    const double* src = f.raw().data();
    double* dst = out.raw().data();
    for (size_t o = 0; o < outer; ++o) {
        for (size_t in = 0; in < inner; ++in) {
            const size_t base = (o * n * inner + in) * blk;
            for (size_t c = 0; c < blk; ++c) {
                const double* p = src + base + c;
                double* q = dst + base + c;
                q[0] = (-3.0 * p[0] + 4.0 * p[st] - p[2 * st]) * inv2h;
                for (int i = 1; i + 1 < n; ++i)
                    q[static_cast<size_t>(i) * st] =
                        (p[(static_cast<size_t>(i) + 1) * st] - p[(static_cast<size_t>(i) - 1) * st]) * inv2h;
                q[static_cast<size_t>(n - 1) * st] =
                    (3.0 * p[static_cast<size_t>(n - 1) * st] - 4.0 * p[static_cast<size_t>(n - 2) * st] +
                     p[static_cast<size_t>(n - 3) * st]) *
                    inv2h;
            }
        }
    }
    return out;
}

GridFunction gf_slice(const GridFunction& f, int axis_index, int at) {
    if (at < 0 || at >= f.axis(axis_index).n) throw RangeError("gf_slice: index out of range");
    std::vector<Axis> axes;
    for (int k = 0; k < f.naxes(); ++k)
        if (k != axis_index) axes.push_back(f.axis(k));
    GridFunction out(f.level(), f.s(), axes);
    out.assume_constant_off_axes = f.assume_constant_off_axes;
    out.z_max = f.z_max;
    out.tail_bound = f.tail_bound;
    const size_t blk = f.block();
    for (size_t g = 0; g < out.nsamples(); ++g) {
        std::vector<int> oi = out.multi_index(g);
        std::vector<int> fi(f.naxes());
        int c = 0;
        for (int k = 0; k < f.naxes(); ++k) fi[k] = (k == axis_index) ? at : oi[c++];
        std::memcpy(out.sample(g), f.sample(f.flat_index(fi)), blk * sizeof(double));
    }
    return out;
}

GridFunction gf_diagonal(const GridFunction& f) {
    std::vector<Axis> axes;
    std::vector<int> keep;        /* axis in f for each output axis */
    std::vector<int> partner;     /* matching slot-1 axis, or -1 */
    for (int k = 0; k < f.naxes(); ++k) {
        const Axis& ax = f.axis(k);
        if (ax.slot == 1) continue;
        axes.push_back(ax);
        keep.push_back(k);
        if (ax.slot == 0) {
            const int p = f.find_axis(1, ax.coord);
            if (p < 0) throw ShapeMismatch("gf_diagonal: missing second-slot partner axis");
            const Axis& px = f.axis(p);
            if (px.n != ax.n || px.h != ax.h || px.x0 != ax.x0)
                throw ShapeMismatch("gf_diagonal: slot samplings differ");
            partner.push_back(p);
        } else {
            partner.push_back(-1);
        }
    }
    for (int k = 0; k < f.naxes(); ++k)
        if (f.axis(k).slot == 1 && f.find_axis(0, f.axis(k).coord) < 0)
            throw ShapeMismatch("gf_diagonal: second-slot axis without first-slot partner");

    GridFunction out(f.level(), f.s(), axes);
    out.assume_constant_off_axes = f.assume_constant_off_axes;
    out.z_max = f.z_max;
    out.tail_bound = f.tail_bound;
    const size_t blk = f.block();
    for (size_t g = 0; g < out.nsamples(); ++g) {
        std::vector<int> oi = out.multi_index(g);
        std::vector<int> fi(f.naxes(), 0);
        for (size_t k = 0; k < keep.size(); ++k) {
            fi[keep[k]] = oi[k];
            if (partner[k] >= 0) fi[partner[k]] = oi[k];
        }
        std::memcpy(out.sample(g), f.sample(f.flat_index(fi)), blk * sizeof(double));
    }
    return out;
}

GridFunction gf_window(const GridFunction& f, const std::vector<int>& lo,
                       const std::vector<int>& len) {
    if (static_cast<int>(lo.size()) != f.naxes() || static_cast<int>(len.size()) != f.naxes())
        throw ShapeMismatch("gf_window: bounds rank mismatch");
    std::vector<Axis> axes = f.axes();
    for (int k = 0; k < f.naxes(); ++k) {
        if (lo[k] < 0 || len[k] < 1 || lo[k] + len[k] > axes[k].n)
            throw RangeError("gf_window: window out of range");
        axes[k].x0 = axes[k].value(lo[k]);
        axes[k].n = len[k];
    }
    GridFunction out(f.level(), f.s(), axes);
    out.assume_constant_off_axes = f.assume_constant_off_axes;
    out.z_max = f.z_max;
    out.tail_bound = f.tail_bound;
    const size_t blk = f.block();
    for (size_t g = 0; g < out.nsamples(); ++g) {
        std::vector<int> oi = out.multi_index(g);
        std::vector<int> fi(f.naxes());
        for (int k = 0; k < f.naxes(); ++k) fi[k] = oi[k] + lo[k];
        std::memcpy(out.sample(g), f.sample(f.flat_index(fi)), blk * sizeof(double));
    }
    return out;
}

namespace {
bool in_interior(const GridFunction& f, size_t flat, const std::vector<int>& trim) {
    if (trim.empty()) return true;
    std::vector<int> idx = f.multi_index(flat);
    for (int k = 0; k < f.naxes(); ++k) {
        const int t = k < static_cast<int>(trim.size()) ? trim[k] : 0;
        if (idx[k] < t || idx[k] >= f.axis(k).n - t) return false;
    }
    return true;
}
} // namespace

double gf_norm_inf(const GridFunction& f, const std::vector<int>& trim) {
    double best = 0.0;
    const size_t blk = f.block();
    for (size_t g = 0; g < f.nsamples(); ++g) {
        if (!in_interior(f, g, trim)) continue;
        const double* p = f.sample(g);
        const int n = f.comp_dim();
        for (int e = 0; e < f.s() * f.s(); ++e) {
            double s2 = 0.0;
            for (int j = 0; j < n; ++j) s2 += p[e * n + j] * p[e * n + j];
            best = std::max(best, s2);
        }
        (void)blk;
    }
    return std::sqrt(best);
}

double gf_norm_l2(const GridFunction& f, const std::vector<int>& trim) {
    double cell = 1.0;
    for (int k = 0; k < f.naxes(); ++k)
        if (f.axis(k).n > 1) cell *= f.axis(k).h;
    double s = 0.0;
    const size_t blk = f.block();
    for (size_t g = 0; g < f.nsamples(); ++g) {
        if (!in_interior(f, g, trim)) continue;
        const double* p = f.sample(g);
        for (size_t c = 0; c < blk; ++c) s += p[c] * p[c];
    }
    return std::sqrt(s * cell);
}

double gf_max_abs_diff(const GridFunction& a, const GridFunction& b) {
    if (!same_layout(a, b)) throw ShapeMismatch("gf_max_abs_diff: layout mismatch");
    double best = 0.0;
    for (size_t i = 0; i < a.raw().size(); ++i)
        best = std::max(best, std::abs(a.raw()[i] - b.raw()[i]));
    return best;
}

GridFunction gf_sample(int level, int s, std::vector<Axis> axes,
                       const std::function<CDMatrix(const std::vector<double>&)>& fn) {
    GridFunction out(level, s, std::move(axes));
    std::vector<double> x(out.naxes());
    for (size_t g = 0; g < out.nsamples(); ++g) {
        std::vector<int> idx = out.multi_index(g);
        for (int k = 0; k < out.naxes(); ++k) x[k] = out.axis(k).value(idx[k]);
        out.set(g, fn(x));
    }
    return out;
}

} // namespace cdx
