#include "cdx/sigma.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdx/errors.hpp"

namespace cdx {

void SigmaSpec::validate() const {
    if (level < 0 || level > kMaxLevel) throw RangeError("SigmaSpec: level out of range");
    const int n = dim_of(level);
    if (static_cast<int>(psi.size()) != n) throw ConfigError("SigmaSpec: psi must have 2^level entries");
    if (static_cast<int>(xi.size()) != n) throw ConfigError("SigmaSpec: xi must have 2^level entries");
    std::vector<char> seen(n, 0);
    for (int v : xi) {
        if (v < 0 || v >= n) throw ConfigError("SigmaSpec: xi entry out of range");
        if (seen[v]) throw ConfigError("SigmaSpec: xi is not a permutation");
        seen[v] = 1;
    }
    double q = 0.0;
    for (double w : psi) q += w * w;
    if (q == 0.0) throw ConfigError("SigmaSpec: psi must not vanish identically");
    if (slot < 0) throw ConfigError("SigmaSpec: negative variable slot");
}

SigmaSpec SigmaSpec::single(int level, int j, double w, int slot) {
    const int n = dim_of(level);
    if (j < 0 || j >= n) throw RangeError("SigmaSpec::single: component out of range");
    SigmaSpec s;
    s.level = level;
    s.psi.assign(n, 0.0);
    s.psi[j] = w;
    s.xi.resize(n);
    for (int m = 0; m < n; ++m) s.xi[m] = m;
    s.slot = slot;
    return s;
}

std::vector<std::array<double, 3>> active_components(const SigmaSpec& sg) {
    std::vector<std::array<double, 3>> out;
    for (int j = 0; j < static_cast<int>(sg.psi.size()); ++j)
        if (sg.psi[j] != 0.0)
            out.push_back({static_cast<double>(j), static_cast<double>(sg.xi[j]), sg.psi[j]});
    return out;
}

namespace {

/* out += s * (i_g or i_g^*) * x, one algebra element. */
void add_left_gen(const BasisTable& table, int g, bool conj_gen, double s, const double* x,
                  double* out) {
    spans::add_genmul(table, g, conj_gen, s, x, out);
}

/* out += s * x * i_g (right multiplication, no conjugation). */
void add_right_gen(const BasisTable& table, int g, double s, const double* x, double* out) {
    const int n = table.dim;
    for (int m = 0; m < n; ++m) {
        const double xm = x[m];
        if (xm == 0.0) continue;
        out[table.idx(m, g)] += s * table.sgn(m, g) * xm;
    }
}

int locate_axis(const GridFunction& f, int slot, int coord, bool* constant) {
    const int ai = f.find_axis(slot, coord);
    if (ai < 0) {
        if (f.assume_constant_off_axes) {
            *constant = true;
            return -1;
        }
        throw UnmappedAxis("sigma: no axis for slot " + std::to_string(slot) + ", coordinate " +
                           std::to_string(coord));
    }
    *constant = false;
    return ai;
}

} // namespace

GridFunction apply_sigma(const GridFunction& f, const SigmaSpec& sg) {
    sg.validate();
    if (f.level() != sg.level) throw ShapeMismatch("apply_sigma: algebra level mismatch");
    const BasisTable& table = BasisTable::get(f.level());
    GridFunction out(f.level(), f.s(), f.axes());
    out.assume_constant_off_axes = f.assume_constant_off_axes;
    out.z_max = f.z_max;
    out.tail_bound = f.tail_bound;
    const int n = f.comp_dim();
    for (int j = 0; j < n; ++j) {
        if (sg.psi[j] == 0.0) continue;
        bool constant = false;
        const int ai = locate_axis(f, sg.slot, sg.xi[j], &constant);
        if (constant) continue;
        const GridFunction d = gf_derive(f, ai);
        const size_t entries = f.nsamples() * f.s() * f.s();
        for (size_t e = 0; e < entries; ++e)
            add_left_gen(table, j, true, sg.psi[j], d.raw().data() + e * n, out.raw().data() + e * n);
    }
    return out;
}

GridFunction apply_sigma_hat(const GridFunction& f, const SigmaSpec& sg) {
    sg.validate();
    if (f.level() != sg.level) throw ShapeMismatch("apply_sigma_hat: algebra level mismatch");
    const BasisTable& table = BasisTable::get(f.level());
    GridFunction out(f.level(), f.s(), f.axes());
    out.assume_constant_off_axes = f.assume_constant_off_axes;
    out.z_max = f.z_max;
    out.tail_bound = f.tail_bound;
    const int n = f.comp_dim();
    for (int j = 0; j < n; ++j) {
        if (sg.psi[j] == 0.0) continue;
        bool constant = false;
        const int ai = locate_axis(f, sg.slot, sg.xi[j], &constant);
        if (constant) continue;
        const GridFunction d = gf_derive(f, ai);
        const size_t entries = f.nsamples() * f.s() * f.s();
        for (size_t e = 0; e < entries; ++e)
            add_right_gen(table, j, sg.psi[j], d.raw().data() + e * n, out.raw().data() + e * n);
    }
    return out;
}

GridFunction sigma_power(const GridFunction& f, const SigmaSpec& sg, int m) {
    if (m < 0) throw RangeError("sigma_power: negative power");
    GridFunction out = f;
    for (int i = 0; i < m; ++i) out = apply_sigma(out, sg);
    return out;
}

CDNumber sigma_symbol(const SigmaSpec& sg, const std::vector<double>& exponent) {
    sg.validate();
    CDNumber u(sg.level);
    for (int j = 0; j < dim_of(sg.level); ++j) {
        if (sg.psi[j] == 0.0) continue;
        const int coord = sg.xi[j];
        const double e = coord < static_cast<int>(exponent.size()) ? exponent[coord] : 0.0;
        if (e == 0.0) continue;
        const double c = sg.psi[j] * e;
        u[j] += (j >= 1) ? -c : c;
    }
    return u;
}

/* ------------------------------------------------------------------ */

ProductExpr::ProductExpr(GridFunction f, GridFunction g) : f_(std::move(f)), g_(std::move(g)) {
    if (f_.level() != g_.level() || f_.s() != g_.s())
        throw ShapeMismatch("ProductExpr: factor shapes differ");
    terms_.push_back(Term{});
}

void ProductExpr::apply_partial(int factor, const SigmaSpec& sg) {
    if (factor != 1 && factor != 2) throw RangeError("ProductExpr: factor must be 1 or 2");
    sg.validate();
    if (sg.level != f_.level()) throw ShapeMismatch("ProductExpr: sigma level mismatch");
    std::vector<Term> next;
    for (const Term& t : terms_) {
        for (int j = 0; j < dim_of(sg.level); ++j) {
            if (sg.psi[j] == 0.0) continue;
            Term nt = t;
            nt.wraps.push_back(j);
            nt.coeff *= sg.psi[j];
            DKey& dk = (factor == 1) ? nt.df : nt.dg;
            const std::pair<int, int> ax{sg.slot, sg.xi[j]};
            auto it = std::lower_bound(dk.begin(), dk.end(), ax,
                                       [](const auto& a, const auto& b) { return a.first < b; });
            if (it != dk.end() && it->first == ax)
                ++it->second;
            else
                dk.insert(it, {ax, 1});
            next.push_back(std::move(nt));
        }
    }
    terms_ = std::move(next);
}

const GridFunction& ProductExpr::derived(const GridFunction& base, std::map<DKey, GridFunction>& cache,
                                         const DKey& key) const {
    if (key.empty()) return base;
    auto hit = cache.find(key);
    if (hit != cache.end()) return hit->second;
    DKey parent = key;
    std::pair<int, int> ax = parent.back().first;
    if (--parent.back().second == 0) parent.pop_back();
    const GridFunction& p = derived(base, cache, parent);
    bool constant = false;
    const int ai = locate_axis(p, ax.first, ax.second, &constant);
    GridFunction d = constant ? GridFunction(p.level(), p.s(), p.axes()) : gf_derive(p, ai);
    if (constant) d.assume_constant_off_axes = p.assume_constant_off_axes;
    return cache.emplace(key, std::move(d)).first->second;
}

GridFunction ProductExpr::evaluate() const {
    GridFunction acc;
    bool first = true;
    for (const Term& t : terms_) {
        const GridFunction& a = derived(f_, cache_f_, t.df);
        const GridFunction& b = derived(g_, cache_g_, t.dg);
        GridFunction p = gf_mul_bcast(a, b);
        for (int w : t.wraps) {
            const CDNumber gen = CDNumber::basis(p.level(), w, w >= 1 ? -1.0 : 1.0);
            p = gf_scale_left(gen, p);
        }
        if (t.coeff != 1.0) p = gf_scale(p, t.coeff);
        acc = first ? std::move(p) : gf_add(acc, p);
        first = false;
    }
    return acc;
}

GridFunction ProductExpr::evaluate_on_diagonal() const { return gf_diagonal(evaluate()); }

GridFunction apply_partial_sigma(int factor, const SigmaSpec& sg, const GridFunction& f,
                                 const GridFunction& g) {
    ProductExpr e(f, g);
    e.apply_partial(factor, sg);
    return e.evaluate();
}

RealCoeffReport check_real_coefficients(const GridFunction& f, const SigmaSpec& sg, int k) {
    sg.validate();
    if (sg.psi[0] != 0.0)
        throw PreconditionViolated("check_real_coefficients: psi_0 must vanish");
    if (k < 1) throw RangeError("check_real_coefficients: k must be positive");

    RealCoeffReport rep;
    const GridFunction s = sigma_power(f, sg, 2 * k);
    const int n = f.comp_dim();
    const size_t entries = f.nsamples() * f.s() * f.s();
    for (size_t e = 0; e < entries; ++e) {
        const double* v = s.raw().data() + e * n;
        for (int c = 1; c < n; ++c) rep.leak = std::max(rep.leak, std::fabs(v[c]));
    }

    /* A f = sum_j psi_j^2 i_j^2 d^2 f / dx_{xi(j)}^2, iterated k times. The
     * second derivative is the first-derivative stencil applied twice, which
     * is what the sigma chain itself produces on the surviving terms. */
    GridFunction a = f;
    for (int it = 0; it < k; ++it) {
        GridFunction next(a.level(), a.s(), a.axes());
        next.assume_constant_off_axes = a.assume_constant_off_axes;
        for (int j = 1; j < n; ++j) {
            if (sg.psi[j] == 0.0) continue;
            bool constant = false;
            const int ai = locate_axis(a, sg.slot, sg.xi[j], &constant);
            if (constant) continue;
            const GridFunction d2 = gf_derive(gf_derive(a, ai), ai);
            next = gf_add(next, gf_scale(d2, -sg.psi[j] * sg.psi[j]));
        }
        a = std::move(next);
    }
    rep.closed_form_diff = gf_max_abs_diff(s, a);
    return rep;
}

} // namespace cdx
