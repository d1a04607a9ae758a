#include "cdx/line_integral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cdx/errors.hpp"

namespace cdx {

std::vector<double> quad_weights(QuadRule rule, int n, double h) {
    if (n < 2) throw GridTooSmall("quad_weights: need at least 2 samples");
    std::vector<double> w(n, 0.0);
    if (rule == QuadRule::Trapezoid || n == 2) {
        w.assign(n, h);
        w.front() = w.back() = 0.5 * h;
        return w;
    }
    const int intervals = n - 1;
    int simpson_end = n - 1; /* samples 0..simpson_end form the even-interval part */
    if (intervals % 2 != 0) simpson_end = n - 4;
    if (simpson_end < 0) { /* n == 2 handled above; n == 4 pure 3/8 */
        simpson_end = 0;
    }
    for (int k = 0; k + 2 <= simpson_end; k += 2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if (intervals % 2 != 0) {
        const int b = n - 4;
        w[b] += 3.0 * h / 8.0;
        w[b + 1] += 9.0 * h / 8.0;
        w[b + 2] += 9.0 * h / 8.0;
        w[b + 3] += 3.0 * h / 8.0;
    }
    return w;
}

std::vector<double> quad_cumulative_matrix(QuadRule rule, int n, double h) {
    if (n < 2) throw GridTooSmall("quad_cumulative_matrix: need at least 2 samples");
    std::vector<double> W(static_cast<size_t>(n) * n, 0.0);
    auto row = [&](int m) { return W.data() + static_cast<size_t>(m) * n; };
    if (rule == QuadRule::Trapezoid || n < 4) {
        for (int m = 1; m < n; ++m) {
            std::copy(row(m - 1), row(m - 1) + n, row(m));
            row(m)[m - 1] += 0.5 * h;
            row(m)[m] += 0.5 * h;
        }
        /* n == 3 still gets the exact Simpson total in the last row */
        if (rule == QuadRule::Simpson && n == 3) {
            row(2)[0] = h / 3.0;
            row(2)[1] = 4.0 * h / 3.0;
            row(2)[2] = h / 3.0;
        }
        return W;
    }
    for (int m = 1; m < n; ++m) {
        double* r = row(m);
        if (m % 2 == 0) {
            std::copy(row(m - 2), row(m - 2) + n, r);
            r[m - 2] += h / 3.0;
            r[m - 1] += 4.0 * h / 3.0;
            r[m] += h / 3.0;
        } else if (m + 1 < n) {
            /* half panel: int_{t_{m-1}}^{t_m} from the parabola through
             * (t_{m-1}, t_m, t_{m+1}) */
            std::copy(row(m - 1), row(m - 1) + n, r);
            r[m - 1] += 5.0 * h / 12.0;
            r[m] += 8.0 * h / 12.0;
            r[m + 1] -= h / 12.0;
        } else {
            /* last row with an odd interval count: 3/8 rule on the tail */
            std::copy(row(m - 3), row(m - 3) + n, r);
            r[m - 3] += 3.0 * h / 8.0;
            r[m - 2] += 9.0 * h / 8.0;
            r[m - 1] += 9.0 * h / 8.0;
            r[m] += 3.0 * h / 8.0;
        }
    }
    return W;
}

double path_variation(const std::vector<CDNumber>& g) {
    double v = 0.0;
    for (size_t k = 1; k < g.size(); ++k) v += cd_norm(cd_sub(g[k], g[k - 1]));
    return v;
}

double path_distance(const std::vector<CDNumber>& g, const std::vector<CDNumber>& w) {
    if (g.empty() || w.empty()) throw RangeError("path_distance: empty path");
    const int n = static_cast<int>(g.size()), m = static_cast<int>(w.size());
    const double inf = std::numeric_limits<double>::infinity();
    /* dp over matched index pairs; steps advance either index or both */
    std::vector<double> prev(m, inf), cur(m, inf);
    std::vector<CDNumber> dprev(m), dcur(m);
    for (int j = 0; j < m; ++j) dprev[j] = cd_sub(g[0], w[j]);
    prev[0] = 0.0;
    for (int j = 1; j < m; ++j) prev[j] = prev[j - 1] + cd_norm(cd_sub(dprev[j], dprev[j - 1]));
    for (int i = 1; i < n; ++i) {
        for (int j = 0; j < m; ++j) dcur[j] = cd_sub(g[i], w[j]);
        cur.assign(m, inf);
        for (int j = 0; j < m; ++j) {
            double best = prev[j] + cd_norm(cd_sub(dcur[j], dprev[j]));
            if (j > 0) {
                best = std::min(best, cur[j - 1] + cd_norm(cd_sub(dcur[j], dcur[j - 1])));
                best = std::min(best, prev[j - 1] + cd_norm(cd_sub(dcur[j], dprev[j - 1])));
            }
            cur[j] = best;
        }
        std::swap(prev, cur);
        std::swap(dprev, dcur);
    }
    return cd_norm(cd_sub(g[0], w[0])) + prev[m - 1];
}

CDNumber ray_symbol(const SigmaSpec& sg, const std::vector<double>& v0) {
    sg.validate();
    const int n = dim_of(sg.level);
    double norm2 = 0.0;
    for (double c : v0) norm2 += c * c;
    if (norm2 == 0.0) throw IncompatibleDirection("ray_symbol: zero direction");
    /* every moving coordinate must be seen by an active sigma component */
    std::vector<char> seen(v0.size(), 0);
    for (int j = 0; j < n; ++j)
        if (sg.psi[j] != 0.0 && sg.xi[j] < static_cast<int>(v0.size())) seen[sg.xi[j]] = 1;
    for (size_t mcoord = 0; mcoord < v0.size(); ++mcoord)
        if (v0[mcoord] != 0.0 && !seen[mcoord])
            throw IncompatibleDirection("ray_symbol: direction moves a coordinate outside sigma");
    CDNumber u(sg.level);
    for (int j = 0; j < n; ++j) {
        if (sg.psi[j] == 0.0) continue;
        const int coord = sg.xi[j];
        const double c = coord < static_cast<int>(v0.size()) ? v0[coord] : 0.0;
        if (c == 0.0) continue;
        const double wgt = sg.psi[j] * c / norm2;
        u[j] += (j >= 1) ? -wgt : wgt;
    }
    if (cd_norm(u) < 1e-14) throw IncompatibleDirection("ray_symbol: symbol is not invertible");
    return u;
}

namespace {

GridFunction cumulative_along(const GridFunction& g, int axis_index, QuadRule rule, bool from_end) {
    const Axis& ax = g.axis(axis_index);
    const std::vector<double> W = quad_cumulative_matrix(rule, ax.n, ax.h);
    GridFunction out(g.level(), g.s(), g.axes());
    out.assume_constant_off_axes = g.assume_constant_off_axes;
    out.z_max = g.z_max;
    out.tail_bound = g.tail_bound;
    const int n = ax.n;
    const size_t stride = g.stride(axis_index) * g.block();
    /* iterate over all samples with axis index 0, then walk the axis */
    std::vector<double> vals(n), cums(n);
    const int block = g.block();
    for (size_t f = 0; f < g.nsamples(); ++f) {
        if (g.multi_index(f)[axis_index] != 0) continue;
        const size_t base = f * block;
        for (int e = 0; e < block; ++e) {
            const double* src = g.raw().data() + base + e;
            for (int k = 0; k < n; ++k) vals[k] = src[k * stride];
            for (int msamp = 0; msamp < n; ++msamp) {
                const double* wrow = W.data() + static_cast<size_t>(msamp) * n;
                double acc = 0.0;
                for (int k = 0; k < n; ++k) acc += wrow[k] * vals[k];
                cums[msamp] = acc;
            }
            if (from_end) {
                const double total = cums[n - 1];
                for (int msamp = 0; msamp < n; ++msamp) cums[msamp] = total - cums[msamp];
            }
            double* dst = out.raw().data() + base + e;
            for (int k = 0; k < n; ++k) dst[k * stride] = cums[k];
        }
    }
    return out;
}

double end_slab_max(const GridFunction& g, int axis_index) {
    const Axis& ax = g.axis(axis_index);
    double m = 0.0;
    const size_t stride = g.stride(axis_index) * g.block();
    const int block = g.block();
    for (size_t f = 0; f < g.nsamples(); ++f) {
        if (g.multi_index(f)[axis_index] != ax.n - 1) continue;
        const double* src = g.raw().data() + f * block;
        for (int e = 0; e < block; ++e) m = std::max(m, std::fabs(src[e]));
    }
    (void)stride;
    return m;
}

} // namespace

GridFunction antideriv_from_base(const GridFunction& g, int axis_index, const SigmaSpec& sg,
                                 const std::vector<double>& v0, QuadRule rule) {
    const CDNumber u = ray_symbol(sg, v0);
    GridFunction cum = cumulative_along(g, axis_index, rule, false);
    return gf_scale_left(cd_inv(u), cum);
}

GridFunction antideriv_to_infinity(const GridFunction& g, int axis_index, const SigmaSpec& sg,
                                   const std::vector<double>& v0, QuadRule rule, double eps_tail) {
    const CDNumber u = ray_symbol(sg, v0);
    const double tail = end_slab_max(g, axis_index);
    if (tail > eps_tail)
        throw TailNotDecayed("antideriv_to_infinity: |g| = " + std::to_string(tail) +
                             " at the ray end exceeds the tail tolerance");
    GridFunction cum = cumulative_along(g, axis_index, rule, true);
    cum.tail_bound = std::max(cum.tail_bound, tail);
    return gf_scale_left(cd_inv(u), cum);
}

std::vector<std::pair<double, double>> operator_norm_decay(int n, double h,
                                                           const std::vector<double>& ks) {
    std::vector<std::pair<double, double>> out;
    const std::vector<double> W = quad_cumulative_matrix(QuadRule::Simpson, n, h);
    std::vector<double> f(n), cums(n);
    for (double k : ks) {
        double fmax = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = i * h;
            f[i] = std::sin(k * t) * std::exp(-t);
            fmax = std::max(fmax, std::fabs(f[i]));
        }
        for (int msamp = 0; msamp < n; ++msamp) {
            double acc = 0.0;
            const double* wrow = W.data() + static_cast<size_t>(msamp) * n;
            for (int i = 0; i < n; ++i) acc += wrow[i] * f[i];
            cums[msamp] = acc;
        }
        const double total = cums[n - 1];
        double imax = 0.0;
        for (int msamp = 0; msamp < n; ++msamp) imax = std::max(imax, std::fabs(total - cums[msamp]));
        out.emplace_back(k, imax / fmax);
    }
    return out;
}

} // namespace cdx
