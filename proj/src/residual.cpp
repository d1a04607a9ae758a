#include "cdx/residual.hpp"

#include <algorithm>
#include <cmath>

#include "cdx/errors.hpp"
#include "cdx/line_integral.hpp"

namespace cdx {

namespace {

std::vector<int> trims_for(const GridFunction& f, int tx, int ty, int tt) {
    std::vector<int> tr(static_cast<size_t>(f.naxes()), 0);
    for (int k = 0; k < f.naxes(); ++k) {
        const int slot = f.axis(k).slot;
        tr[static_cast<size_t>(k)] = slot == 0 ? tx : (slot == 1 ? ty : (slot == 2 ? tt : 0));
    }
    return tr;
}

ResidualRow make_row(const Scenario& sc, const DressingResult& dr, const char* id,
                     const GridFunction& res, const std::vector<int>& trim, double scale) {
    ResidualRow row;
    row.equation_id = id;
    row.h = sc.hx();
    row.res_linf = gf_norm_inf(res, trim);
    row.res_l2 = gf_norm_l2(res, trim);
    row.tail = dr.stats.tail_ratio;
    row.exact = row.res_linf <= 1e-12 * (scale + 1e-300);
    return row;
}

} // namespace

GridFunction moving_sigma_x(const GridFunction& w, const SigmaSpec& sg) {
    /* d/dx at fixed z on W(x, d) = K(x, x + d) is the x stencil minus the
     * offset stencil, coordinate by coordinate. */
    return gf_sub(apply_sigma(w, sg.with_slot(0)), apply_sigma(w, sg.with_slot(1)));
}

GridFunction moving_sigma_z(const GridFunction& w, const SigmaSpec& sg) {
    return apply_sigma(w, sg.with_slot(1));
}

GridFunction center_slice_slot1(const GridFunction& w) {
    GridFunction cur = w;
    for (;;) {
        int found = -1;
        for (int k = 0; k < cur.naxes(); ++k)
            if (cur.axis(k).slot == 1) {
                found = k;
                break;
            }
        if (found < 0) return cur;
        cur = gf_slice(cur, found, (cur.axis(found).n - 1) / 2);
    }
}

/* --------------------------------- kdv --------------------------------- */

ResidualRow residual_kdv_pair(const Scenario& sc, const DressingResult& dr) {
    const GridFunction sg = apply_sigma(dr.g, sc.sx);
    GridFunction res = gf_sub(sigma_power(dr.K, sc.sx, 2), sigma_power(dr.K, sc.sy, 2));
    res = gf_add(res, gf_scale(gf_mul_bcast(dr.K, sg), 2.0 * sc.p));
    return make_row(sc, dr, "kdv_pair", res, trims_for(res, 3, 3, 0), gf_norm_inf(dr.K));
}

ResidualRow residual_kdv_kernel(const Scenario& sc, const DressingResult& dr) {
    const GridFunction sg = apply_sigma(dr.g, sc.sx);

    GridFunction res = apply_l2(sc, dr.K);

    /* quadratic transport: partial derivatives hitting the kernel factor */
    {
        ProductExpr a(dr.K, sg);
        a.apply_partial(1, sc.sx);
        ProductExpr b(dr.K, sg);
        b.apply_partial(1, sc.sy);
        res = gf_add(res, gf_scale(gf_add(a.evaluate(), b.evaluate()), 6.0 * sc.p));
    }

    /* mixed-argument commutator restricted to the diagonal */
    {
        const GridFunction inner_x = moving_sigma_x(dr.Kmov, sc.sx);
        const GridFunction inner_z = moving_sigma_z(dr.Kmov, sc.sx);
        const GridFunction comm =
            gf_sub(moving_sigma_z(inner_x, sc.sx), moving_sigma_x(inner_z, sc.sx));
        const GridFunction commd = center_slice_slot1(comm);
        res = gf_sub(res, gf_scale(gf_mul_bcast(dr.K, commd), sc.p));
    }

    /* commutator of the two partial applications on K(x,y) K(x,x) */
    {
        ProductExpr a(dr.K, dr.g);
        a.apply_partial(2, sc.sx);
        a.apply_partial(1, sc.sx);
        ProductExpr b(dr.K, dr.g);
        b.apply_partial(1, sc.sx);
        b.apply_partial(2, sc.sx);
        res = gf_sub(res, gf_scale(gf_sub(a.evaluate(), b.evaluate()), sc.p));
    }

    return make_row(sc, dr, "kdv_kernel", res, trims_for(res, 5, 5, 1), gf_norm_inf(dr.K));
}

ResidualRow residual_kdv_diagonal(const Scenario& sc, const DressingResult& dr) {
    const GridFunction u = gf_scale(apply_sigma(dr.g, sc.sx), 2.0);
    GridFunction res = apply_sigma(u, sc.st);
    res = gf_add(res, gf_scale(apply_sigma(gf_mul(u, u), sc.sx), 3.0 * sc.p));
    res = gf_add(res, sigma_power(u, sc.sx, 3));
    return make_row(sc, dr, "kdv_diagonal", res, trims_for(res, 5, 0, 1), gf_norm_inf(u));
}

ResidualRow residual_schroedinger(const Scenario& sc, const DressingResult& dr) {
    if (sc.level != 2)
        throw PreconditionViolated(
            "residual_schroedinger: the eigen-relation is stated at level 2");
    if (sc.sx.psi[0] != 0.0)
        throw PreconditionViolated("residual_schroedinger: requires psi_0 = 0");

    int rayax = -1;
    for (int k = 0; k < dr.Kray.naxes(); ++k)
        if (dr.Kray.axis(k).slot == 3) rayax = k;
    if (rayax < 0) throw RangeError("residual_schroedinger: ray samples missing");
    const Axis rz = dr.Kray.axis(rayax);
    const std::vector<double> w = quad_weights(sc.rule, rz.n, rz.h);

    const ModeFamily fam(sc);
    const double q = fam.ray_speed();
    const double kappa = sc.modes[0].kappa;

    int span = 1;
    for (const auto& a : active_components(sc.sx)) span = std::max(span, (int)a[1] + 1);
    std::vector<double> v0(static_cast<size_t>(span), 0.0);
    for (const auto& a : active_components(sc.sx)) v0[static_cast<size_t>(a[1])] = a[2];
    const CDNumber uinv = cd_inv(ray_symbol(sc.sx, v0));

    /* bound profile phi0 = exp(-kappa theta); Phi = phi0 + u^{-1} int K phi0 */
    std::vector<Axis> axes;
    for (int k = 0; k < dr.Kray.naxes(); ++k)
        if (k != rayax) axes.push_back(dr.Kray.axis(k));
    GridFunction phi(sc.level, sc.s, axes);

    std::vector<double> c0(static_cast<size_t>(span), 0.0);
    const CDMatrix eye = CDMatrix::identity(sc.level, sc.s);
    const size_t n = phi.nsamples();
    for (size_t flat = 0; flat < n; ++flat) {
        const std::vector<int> mi = phi.multi_index(flat);
        std::fill(c0.begin(), c0.end(), 0.0);
        std::vector<int> mk(static_cast<size_t>(dr.Kray.naxes()), 0);
        int pos = 0;
        for (int k = 0; k < dr.Kray.naxes(); ++k) {
            if (k == rayax) continue;
            mk[static_cast<size_t>(k)] = mi[static_cast<size_t>(pos)];
            const Axis& ax = dr.Kray.axis(k);
            if (ax.slot == 0) c0[static_cast<size_t>(ax.coord)] = ax.value(mi[static_cast<size_t>(pos)]);
            ++pos;
        }
        const double thx = fam.theta(0, c0);
        CDMatrix acc(sc.level, sc.s);
        for (int i = 0; i < rz.n; ++i) {
            mk[static_cast<size_t>(rayax)] = i;
            const CDMatrix kv = dr.Kray.get(dr.Kray.flat_index(mk));
            const double p0 = std::exp(-kappa * (thx + rz.value(i) * q));
            acc = mat_add(acc, mat_scale(kv, w[static_cast<size_t>(i)] * p0));
        }
        CDMatrix val = mat_add(mat_scale(eye, std::exp(-kappa * thx)), mat_scale_left(uinv, acc));
        phi.set(flat, val);
    }

    double t4 = 0.0;
    for (const auto& a : active_components(sc.sx)) t4 += a[2] * a[2] * a[2] * a[2];
    const double tconst = kappa * kappa * t4;

    const GridFunction upot = gf_scale(apply_sigma(dr.g, sc.sx), 2.0);
    GridFunction res = sigma_power(phi, sc.sx, 2);
    res = gf_add(res, gf_mul(phi, gf_scale(upot, sc.p)));
    res = gf_add(res, gf_scale(phi, tconst));
    return make_row(sc, dr, "schroedinger_bound", res, trims_for(res, 3, 0, 0),
                    gf_norm_inf(phi) * tconst);
}

double schroedinger_plane_gap(int level, int n, double h, double k) {
    SigmaSpec sg = SigmaSpec::single(level, 1);
    std::vector<Axis> axes{Axis{0, 1, n, h, -1.2}};
    GridFunction phi = gf_sample(level, 1, axes, [&](const std::vector<double>& c) {
        CDMatrix m(level, 1);
        m.at(0, 0, 0) = std::cos(k * c[0]);
        return m;
    });
    GridFunction res = gf_add(sigma_power(phi, sg, 2), gf_scale(phi, -k * k));
    return gf_norm_inf(res, {3}) / (k * k);
}

/* --------------------------------- mkdv -------------------------------- */

ResidualRow residual_mkdv_pair_sum(const Scenario& sc, const DressingResult& dr) {
    /* (sigma_x + sigma_z) on the moving grid collapses to the plain x stencil */
    GridFunction res = apply_sigma(dr.K2mov, sc.sx);
    res = gf_add(res, gf_scale(gf_mul_bcast(dr.Kmov, dr.g), 2.0));
    return make_row(sc, dr, "mkdv_pair_sum", res, trims_for(res, 2, 0, 0),
                    gf_norm_inf(dr.Kmov));
}

ResidualRow residual_mkdv_pair_diff(const Scenario& sc, const DressingResult& dr) {
    GridFunction res = gf_sub(apply_sigma(dr.Kmov, sc.sx),
                              gf_scale(apply_sigma(dr.Kmov, sc.sx.with_slot(1)), 2.0));
    res = gf_add(res, gf_scale(gf_mul_bcast(dr.K2mov, dr.g), 0.5 * sc.p));
    return make_row(sc, dr, "mkdv_pair_diff", res, trims_for(res, 2, 2, 0),
                    gf_norm_inf(dr.Kmov));
}

ResidualRow residual_mkdv_kernel(const Scenario& sc, const DressingResult& dr) {
    const GridFunction gg = gf_mul(dr.g, dr.g);

    GridFunction res = apply_l2(sc, dr.K);
    const GridFunction t1 =
        gf_mul_bcast(gf_add(apply_sigma(dr.K, sc.sx), apply_sigma(dr.K, sc.sy)), gg);
    res = gf_sub(res, gf_scale(t1, 3.0 * sc.p));

    ProductExpr pe(dr.g, dr.g);
    pe.apply_partial(2, sc.sx);
    res = gf_sub(res, gf_scale(gf_mul_bcast(dr.K, pe.evaluate()), 3.0 * sc.p));

    return make_row(sc, dr, "mkdv_kernel", res, trims_for(res, 5, 5, 1), gf_norm_inf(dr.K));
}

ResidualRow residual_mkdv_diagonal(const Scenario& sc, const DressingResult& dr) {
    const GridFunction gg = gf_mul(dr.g, dr.g);
    GridFunction res = gf_add(apply_sigma(dr.g, sc.st), sigma_power(dr.g, sc.sx, 3));
    res = gf_sub(res, gf_scale(gf_mul(apply_sigma(dr.g, sc.sx), gg), 3.0 * sc.p));
    ProductExpr pe(dr.g, dr.g);
    pe.apply_partial(2, sc.sx);
    res = gf_sub(res, gf_scale(gf_mul(dr.g, pe.evaluate()), 3.0 * sc.p));
    return make_row(sc, dr, "mkdv_diagonal", res, trims_for(res, 4, 0, 1), gf_norm_inf(dr.g));
}

/* --------------------------------- heat -------------------------------- */

ResidualRow residual_heat_kernel(const Scenario& sc, const DressingResult& dr) {
    const GridFunction res = apply_l2(sc, dr.K);
    return make_row(sc, dr, "heat_kernel", res, trims_for(res, 3, 3, 1), gf_norm_inf(dr.K));
}

ResidualRow residual_heat_diagonal(const Scenario& sc, const DressingResult& dr) {
    GridFunction res = gf_add(apply_sigma(dr.g, sc.st), sigma_power(dr.g, sc.sx, 2));
    res = gf_add(res, gf_scale(gf_mul(dr.g, apply_sigma(dr.g, sc.sx)), 2.0 * sc.p));
    return make_row(sc, dr, "heat_diagonal", res, trims_for(res, 3, 0, 1), gf_norm_inf(dr.g));
}

/* ------------------------------ divergence ----------------------------- */

double divergence_gap(int level, int n, double h, bool solenoidal) {
    if (level < 2) throw PreconditionViolated("divergence_gap: needs level >= 2");
    std::vector<Axis> axes{Axis{0, 1, n, h, -0.5}, Axis{0, 2, n, h, -0.3},
                           Axis{0, 3, n, h, -0.4}};

    auto field = [&](const std::vector<double>& c, double* f) {
        if (solenoidal) {
            f[0] = c[2] - c[3];
            f[1] = c[3] - c[1];
            f[2] = c[1] - c[2];
        } else {
            f[0] = c[1] * c[1];
            f[1] = c[1] * c[2];
            f[2] = c[3];
        }
    };
    auto div_of = [&](const std::vector<double>& c) {
        return solenoidal ? 0.0 : 3.0 * c[1] + 1.0;
    };

    /* gf_sample hands the lambda axis-ordered values; field() wants them keyed
     * by coordinate id, so shift by one. */
    GridFunction u = gf_sample(level, 1, axes, [&](const std::vector<double>& x) {
        std::vector<double> c(4, 0.0);
        c[1] = x[0];
        c[2] = x[1];
        c[3] = x[2];
        CDMatrix m(level, 1);
        double f[3];
        field(c, f);
        m.at(0, 0, 1) = f[0];
        m.at(0, 0, 2) = f[1];
        m.at(0, 0, 3) = f[2];
        return m;
    });

    SigmaSpec sg;
    sg.level = level;
    sg.psi.assign(static_cast<size_t>(dim_of(level)), 0.0);
    sg.psi[1] = sg.psi[2] = sg.psi[3] = 1.0;
    sg.xi.resize(static_cast<size_t>(dim_of(level)));
    for (size_t j = 0; j < sg.xi.size(); ++j) sg.xi[j] = static_cast<int>(j);
    sg.slot = 0;

    const GridFunction su = apply_sigma(u, sg);

    double gap = 0.0;
    std::vector<double> c(4, 0.0);
    for (size_t flat = 0; flat < su.nsamples(); ++flat) {
        const std::vector<int> mi = su.multi_index(flat);
        for (int k = 0; k < su.naxes(); ++k)
            c[static_cast<size_t>(su.axis(k).coord)] = su.axis(k).value(mi[static_cast<size_t>(k)]);
        gap = std::max(gap, std::fabs(su.sample(flat)[0] - div_of(c)));
    }
    return gap;
}

/* -------------------------------- driver ------------------------------- */

std::vector<ResidualRow> residual_suite(const Scenario& sc, const DressingResult& dr) {
    std::vector<ResidualRow> rows;
    if (sc.equation == "kdv") {
        rows.push_back(residual_kdv_pair(sc, dr));
        rows.push_back(residual_kdv_kernel(sc, dr));
        rows.push_back(residual_kdv_diagonal(sc, dr));
        if (sc.level == 2 && sc.sx.psi[0] == 0.0 && active_components(sc.sx).size() == 1)
            rows.push_back(residual_schroedinger(sc, dr));
    } else if (sc.equation == "mkdv") {
        rows.push_back(residual_mkdv_pair_sum(sc, dr));
        rows.push_back(residual_mkdv_pair_diff(sc, dr));
        rows.push_back(residual_mkdv_kernel(sc, dr));
        rows.push_back(residual_mkdv_diagonal(sc, dr));
    } else {
        rows.push_back(residual_heat_kernel(sc, dr));
        rows.push_back(residual_heat_diagonal(sc, dr));
    }
    return rows;
}

std::vector<ResidualRow> refine_and_estimate(Scenario sc, const std::vector<int>& nxs,
                                             const SolveOptions& opt) {
    if (nxs.empty()) throw RangeError("refine_and_estimate: needs at least one lattice size");

    const int ny0 = sc.ny, nd0 = sc.ndelta, nx0 = nxs[0];
    const double ht0 = sc.ht;

    auto scale_odd = [](int n0, double f) {
        int m = static_cast<int>(std::lround((n0 - 1) * f)) + 1;
        if (m % 2 == 0) ++m;
        return m;
    };

    std::vector<ResidualRow> all, prev;
    double prev_h = 0.0;
    for (int nx : nxs) {
        Scenario s2 = sc;
        const double f = static_cast<double>(nx - 1) / static_cast<double>(nx0 - 1);
        s2.nx = nx;
        s2.ny = scale_odd(ny0, f);
        s2.ndelta = scale_odd(nd0, f);
        s2.ht = ht0 / f;
        const DressingResult dr = solve_dressing(s2, opt);
        std::vector<ResidualRow> rows = residual_suite(s2, dr);
        if (!prev.empty()) {
            for (auto& r : rows)
                for (const auto& p : prev)
                    if (p.equation_id == r.equation_id && !r.exact && !p.exact &&
                        r.res_linf > 0.0 && p.res_linf > 0.0 && prev_h != r.h)
                        r.order_est = std::log(p.res_linf / r.res_linf) / std::log(prev_h / r.h);
        }
        prev = rows;
        if (!rows.empty()) prev_h = rows[0].h;
        all.insert(all.end(), rows.begin(), rows.end());
    }
    return all;
}

/* ------------------------------------------------------------------ *
 * Differentiation identities of T(x, y) = int_sigma,x^inf F(z, y) K(x, z) dz
 * for a sigma with one active coordinate. With m exterior derivatives,
 * interior derivatives that hit one factor under the integral sign, and
 * Kd = K(x, x), |d the z = x restriction:
 *
 *   sigma_x^m T = 2s_x^m T + A_m                A_1 = -F(x,y) Kd
 *   1s_z^m T    = (-1)^m 2s_z^m T + B_m         B_1 = A_1
 *   A_2 = -sigma_x[F Kd] - (2s_x[F K])|d
 *   A_3 = -sigma_x^2[F Kd] - sigma_x((2s_x[F K])|d) - (2s_x^2[F K])|d
 *   B_2 = -1s_x[F Kd] + (2s_z[F K])|d
 *   B_3 = -1s_x^2[F Kd] + (1s_x 2s_z[F K])|d - (2s_z^2[F K])|d
 *   A_2 - B_2 = -2 2s_x[F Kd]
 *
 * Discretization: the ray grid moves with x (z = x + zeta along the active
 * coordinate), so the fixed-z x derivative is the grid x stencil minus the
 * grid ray stencil; boundary terms live on a small centered offset patch.
 * The ray and patch axes borrow slot 2 (these grids carry no time axis).
 * ------------------------------------------------------------------ */

namespace {

struct IdentityRig {
    int level, s, jc;
    double h, hz;
    int nx, ny, nz, nd, guard;
    double x0, y0, eps_tail;

    SigmaSpec sx, sz;
    std::vector<double> v0;

    const PairSampler* f_zy;
    const PairSampler* k_xz;

    IdentityRig(int level_, int s_, const PairSampler& f, const PairSampler& k,
                const SigmaSpec& sx_, const IdentityOptions& opt)
        : level(level_), s(s_), h(opt.h), sx(sx_), f_zy(&f), k_xz(&k) {
        const auto act = active_components(sx);
        if (act.size() != 1 || sx.slot != 0)
            throw PreconditionViolated(
                "antideriv_identity_gaps: sigma must have one active component in slot 0");
        jc = static_cast<int>(act[0][1]);
        hz = opt.ray_factor * opt.h;
        nx = static_cast<int>(std::lround((opt.x_hi - opt.x_lo) / h)) + 1;
        ny = opt.ny;
        nz = static_cast<int>(std::lround(opt.z_span / hz)) + 1;
        nd = opt.npatch;
        guard = opt.guard;
        x0 = opt.x_lo;
        y0 = opt.y_lo;
        eps_tail = opt.eps_tail;
        sz = sx.with_slot(2);
        v0.assign(static_cast<size_t>(dim_of(level)), 0.0);
        v0[static_cast<size_t>(jc)] = 1.0;
    }

    Axis ax_x() const { return Axis{0, jc, nx, h, x0}; }
    Axis ax_y() const { return Axis{1, jc, ny, h, y0}; }
    Axis ax_zeta() const { return Axis{2, jc, nz + guard, hz, -guard * hz}; }
    Axis ax_d() const { return Axis{2, jc, nd, h, -(nd - 1) / 2 * h}; }

    /* moving grids along the ray z = x + zeta */
    GridFunction sample_Fmov() const {
        return gf_sample(level, s, {ax_x(), ax_zeta(), ax_y()},
                         [&](const std::vector<double>& c) {
                             return (*f_zy)(c[0] + c[1], c[2]);
                         });
    }
    GridFunction sample_Kray() const {
        return gf_sample(level, s, {ax_x(), ax_zeta()}, [&](const std::vector<double>& c) {
            return (*k_xz)(c[0], c[0] + c[1]);
        });
    }
    /* centered patch z = x + d for the boundary terms */
    GridFunction sample_F3() const {
        return gf_sample(level, s, {ax_x(), ax_y(), ax_d()},
                         [&](const std::vector<double>& c) { return (*f_zy)(c[0], c[1]); });
    }
    GridFunction sample_Kpatch() const {
        return gf_sample(level, s, {ax_x(), ax_d()}, [&](const std::vector<double>& c) {
            return (*k_xz)(c[0], c[0] + c[1]);
        });
    }
    GridFunction sample_Fxy() const {
        return gf_sample(level, s, {ax_x(), ax_y()}, [&](const std::vector<double>& c) {
            return (*f_zy)(c[0], c[1]);
        });
    }
    GridFunction sample_Kdiag() const {
        return gf_sample(level, s, {ax_x()}, [&](const std::vector<double>& c) {
            return (*k_xz)(c[0], c[0]);
        });
    }

    /* interior sigma chains; word entries: 0 fixed-z x step, 1 z step */
    GridFunction chain(const GridFunction& f1, const GridFunction& f2, int factor,
                       const std::vector<int>& word) const {
        GridFunction acc;
        bool first = true;
        const int m = static_cast<int>(word.size());
        const int combos = 1 << m;
        for (int mask = 0; mask < combos; ++mask) {
            double coeff = 1.0;
            bool valid = true;
            ProductExpr pe(f1, f2);
            for (int st = 0; st < m; ++st) {
                const bool zstep = (word[static_cast<size_t>(st)] == 1);
                const bool alt = (mask >> st) & 1;
                if (zstep) {
                    if (alt) { valid = false; break; }
                    pe.apply_partial(factor, sz);
                } else if (alt) {
                    pe.apply_partial(factor, sz);
                    coeff = -coeff;
                } else {
                    pe.apply_partial(factor, sx);
                }
            }
            if (!valid) continue;
            GridFunction t = gf_scale(pe.evaluate(), coeff);
            acc = first ? std::move(t) : gf_add(acc, t);
            first = false;
        }
        return acc;
    }

    GridFunction integrate_slice(const GridFunction& integrand) const {
        int zidx = -1;
        for (int k = 0; k < integrand.naxes(); ++k)
            if (integrand.axis(k).slot == 2) zidx = k;
        GridFunction w =
            antideriv_to_infinity(integrand, zidx, sx, v0, QuadRule::Simpson, eps_tail);
        return gf_slice(w, zidx, guard);
    }

    GridFunction slice_center(const GridFunction& f) const {
        for (int k = 0; k < f.naxes(); ++k)
            if (f.axis(k).slot == 2) return gf_slice(f, k, (f.axis(k).n - 1) / 2);
        throw PreconditionViolated("slice_center: no offset axis");
    }
};

double identity_rel_gap(const GridFunction& a, const GridFunction& b, int xtrim) {
    const GridFunction d = gf_sub(a, b);
    std::vector<int> trim(static_cast<size_t>(d.naxes()), 0);
    for (int k = 0; k < d.naxes(); ++k)
        if (d.axis(k).slot == 0) trim[static_cast<size_t>(k)] = xtrim;
    const double scale = gf_norm_inf(a, trim) + gf_norm_inf(b, trim) + 1e-300;
    return gf_norm_inf(d, trim) / scale;
}

} // namespace

IdentityGaps antideriv_identity_gaps(int level, int s, const PairSampler& f_zy,
                                     const PairSampler& k_xz, const SigmaSpec& sx,
                                     int m, const IdentityOptions& opt) {
    if (m < 1 || m > 3)
        throw PreconditionViolated("antideriv_identity_gaps: m must be 1, 2 or 3");
    const IdentityRig rig(level, s, f_zy, k_xz, sx, opt);

    const GridFunction fmov = rig.sample_Fmov();
    const GridFunction kray = rig.sample_Kray();
    const GridFunction f3 = rig.sample_F3();
    const GridFunction kpatch = rig.sample_Kpatch();
    const GridFunction fxy = rig.sample_Fxy();
    const GridFunction kdiag = rig.sample_Kdiag();
    const GridFunction fkd = gf_mul_bcast(fxy, kdiag);

    const GridFunction t0 = rig.integrate_slice(gf_mul_bcast(fmov, kray));

    auto t_of = [&](int factor, const std::vector<int>& word) {
        return rig.integrate_slice(rig.chain(fmov, kray, factor, word));
    };
    auto patch_of = [&](const std::vector<int>& word) {
        return rig.chain(f3, kpatch, 2, word);
    };

    IdentityGaps out;
    out.m = m;
    out.h = rig.h;

    GridFunction lhs, rhs;
    if (m == 1) {
        lhs = apply_sigma(t0, rig.sx);
        rhs = gf_sub(t_of(2, {0}), fkd);
        out.gap_x = identity_rel_gap(lhs, rhs, 2);

        lhs = t_of(1, {1});
        rhs = gf_sub(gf_scale(t_of(2, {1}), -1.0), fkd);
        out.gap_z = identity_rel_gap(lhs, rhs, 2);
        return out;
    }

    if (m == 2) {
        const GridFunction p1 = rig.slice_center(patch_of({0}));
        lhs = sigma_power(t0, rig.sx, 2);
        const GridFunction a2 =
            gf_scale(gf_add(apply_sigma(fkd, rig.sx), p1), -1.0);
        rhs = gf_add(t_of(2, {0, 0}), a2);
        out.gap_x = identity_rel_gap(lhs, rhs, 3);

        ProductExpr pb(fxy, kdiag);
        pb.apply_partial(1, rig.sx);
        const GridFunction b2 = gf_add(gf_scale(pb.evaluate(), -1.0),
                                       rig.slice_center(patch_of({1})));
        lhs = t_of(1, {1, 1});
        rhs = gf_add(t_of(2, {1, 1}), b2);
        out.gap_z = identity_rel_gap(lhs, rhs, 3);

        ProductExpr pd(fxy, kdiag);
        pd.apply_partial(2, rig.sx);
        out.gap_d2 = identity_rel_gap(gf_sub(a2, b2), gf_scale(pd.evaluate(), -2.0), 3);
        return out;
    }

    const GridFunction p1 = rig.slice_center(patch_of({0}));
    const GridFunction p2 = rig.slice_center(patch_of({0, 0}));
    lhs = sigma_power(t0, rig.sx, 3);
    const GridFunction a3 = gf_scale(
        gf_add(sigma_power(fkd, rig.sx, 2), gf_add(apply_sigma(p1, rig.sx), p2)), -1.0);
    rhs = gf_add(t_of(2, {0, 0, 0}), a3);
    out.gap_x = identity_rel_gap(lhs, rhs, 4);

    ProductExpr pb2(fxy, kdiag);
    pb2.apply_partial(1, rig.sx);
    pb2.apply_partial(1, rig.sx);
    ProductExpr pmix(f3, kpatch);
    pmix.apply_partial(2, rig.sz);
    pmix.apply_partial(1, rig.sx);
    const GridFunction q2 = rig.slice_center(patch_of({1, 1}));
    const GridFunction b3 = gf_add(gf_scale(pb2.evaluate(), -1.0),
                                   gf_sub(rig.slice_center(pmix.evaluate()), q2));
    lhs = t_of(1, {1, 1, 1});
    rhs = gf_add(gf_scale(t_of(2, {1, 1, 1}), -1.0), b3);
    out.gap_z = identity_rel_gap(lhs, rhs, 4);
    return out;
}

} // namespace cdx
