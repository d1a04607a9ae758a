#include "cdx/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "cdx/errors.hpp"

namespace cdx {

namespace {

const SigmaSpec& pick_sigma(const Scenario& sc, int which) {
    if (which == 0) return sc.sx;
    if (which == 1) return sc.sy;
    return sc.st;
}

int coord_span(const SigmaSpec& sg) {
    int m = 0;
    for (const auto& a : active_components(sg)) m = std::max(m, static_cast<int>(a[1]) + 1);
    return m;
}

void require(bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
}

} // namespace

void Scenario::validate(bool enforce_zero_real_psi) const {
    require(equation == "kdv" || equation == "mkdv" || equation == "heat",
            "Scenario: equation must be one of kdv, mkdv, heat");
    require(level >= 1 && level <= kMaxLevel, "Scenario: level out of range");
    require(s >= 1, "Scenario: matrix size must be >= 1");

    sx.validate();
    sy.validate();
    st.validate();
    require(sx.level == level && sy.level == level && st.level == level,
            "Scenario: sigma levels must match the scenario level");
    require(sx.slot == 0, "Scenario: sx must act on slot 0");
    require(sy.slot == 1, "Scenario: sy must act on slot 1");
    require(st.slot == 2, "Scenario: st must act on slot 2");
    require(sy.psi == sx.psi && sy.xi == sx.xi,
            "Scenario: sy must share psi and xi with sx (same aligned form in"
            " the second slot); only the slot differs");

    require(!modes.empty(), "Scenario: at least one seed mode is required");
    for (const auto& m : modes) {
        require(m.kappa > 0.0, "Scenario: mode rates must be positive");
        require(m.amp.level() == level && m.amp.s() == s,
                "Scenario: mode amplitude shape must match level and s");
    }

    require(nx >= 7 && x_max > x_min, "Scenario: base lattice needs nx >= 7 and x_max > x_min");
    require(ny >= 1 && ny % 2 == 1, "Scenario: ny must be odd and positive");
    require(ndelta >= 1 && ndelta % 2 == 1, "Scenario: ndelta must be odd and positive");
    require(nz >= 5 && z_max > 0.0, "Scenario: ray needs nz >= 5 and z_max > 0");
    require(nt >= 1 && nt % 2 == 1, "Scenario: nt must be odd and positive");
    require(ht > 0.0, "Scenario: ht must be positive");
    require(eps_tail > 0.0, "Scenario: eps_tail must be positive");
    require(constraint_rel > 0.0, "Scenario: constraint_rel must be positive");

    if (enforce_zero_real_psi && equation != "heat") {
        if (sx.psi[0] != 0.0 || sy.psi[0] != 0.0)
            throw PreconditionViolated(
                "Scenario: the " + equation +
                " family requires psi_0 = 0 on the space sigmas (zero real part"
                " of the differential direction); set psi[0] = 0 or use heat");
    }
}

ModeFamily::ModeFamily(const Scenario& sc) : sc_(&sc) {}

double ModeFamily::theta(int which, const std::vector<double>& coords) const {
    const SigmaSpec& sg = pick_sigma(*sc_, which);
    double th = 0.0;
    for (const auto& a : active_components(sg)) {
        const size_t c = static_cast<size_t>(a[1]);
        if (c < coords.size()) th += a[2] * coords[c];
    }
    return th;
}

double ModeFamily::ray_speed() const {
    double q = 0.0;
    for (double w : sc_->sx.psi) q += w * w;
    return q;
}

CDMatrix ModeFamily::pair_value(double th_left, double th_right, double th_t) const {
    CDMatrix out(sc_->level, sc_->s);
    for (const auto& m : sc_->modes) {
        double ex;
        if (sc_->equation == "kdv")
            ex = -m.kappa * (th_left + th_right);
        else if (sc_->equation == "mkdv")
            ex = -m.kappa * (th_left + th_right) * 0.5;
        else
            ex = -m.kappa * (th_left - th_right) * (th_left - th_right);
        const double f = std::exp(ex + m.c * th_t);
        out = mat_add(out, mat_scale(m.amp, f));
    }
    return out;
}

double ModeFamily::pair_decay_rate() const {
    double k = 0.0;
    for (const auto& m : sc_->modes) k = std::max(k, m.kappa);
    return k;
}

void solve_dispersion(Scenario& sc) {
    if (sc.equation == "heat") {
        for (auto& m : sc.modes)
            if (m.solve_c) m.c = 0.0;
        return;
    }

    const double argf = (sc.equation == "mkdv") ? 0.5 : 1.0;
    const int nxc = coord_span(sc.sx);
    const int nyc = coord_span(sc.sy);
    const int ntc = coord_span(sc.st);

    std::vector<double> et(ntc, 0.0);
    for (const auto& a : active_components(sc.st)) et[static_cast<size_t>(a[1])] += a[2];
    const CDNumber st_unit = sigma_symbol(sc.st, et);
    const double denom = cd_norm2(st_unit);
    if (denom == 0.0)
        throw NoDispersionSolution("solve_dispersion: time sigma has zero symbol");

    for (auto& m : sc.modes) {
        if (!m.solve_c) continue;

        std::vector<double> ex(nxc, 0.0), ey(nyc, 0.0);
        for (const auto& a : active_components(sc.sx))
            ex[static_cast<size_t>(a[1])] += -m.kappa * argf * a[2];
        for (const auto& a : active_components(sc.sy))
            ey[static_cast<size_t>(a[1])] += -m.kappa * argf * a[2];

        const CDNumber sum = cd_add(sigma_symbol(sc.sx, ex), sigma_symbol(sc.sy, ey));
        const CDNumber rhs = cd_neg(cd_mul(sum, cd_mul(sum, sum)));

        double num = 0.0;
        for (int j = 0; j < rhs.dim(); ++j) num += rhs[j] * st_unit[j];
        const double c = num / denom;

        const CDNumber resid = cd_sub(rhs, cd_scale(st_unit, c));
        if (cd_norm(resid) > 1e-10 * (cd_norm(rhs) + 1.0))
            throw NoDispersionSolution(
                "solve_dispersion: cubic space symbol is not a real multiple of the"
                " time symbol; no real mode rate exists for this sigma triple");
        m.c = c;
    }
}

namespace {

std::vector<GridFunction> l1_parts(const Scenario& sc, const GridFunction& f) {
    std::vector<GridFunction> parts;
    if (sc.equation == "kdv") {
        parts.push_back(sigma_power(f, sc.sx, 2));
        parts.push_back(gf_scale(sigma_power(f, sc.sy, 2), -1.0));
    } else if (sc.equation == "mkdv") {
        parts.push_back(apply_sigma(f, sc.sx));
        parts.push_back(gf_scale(apply_sigma(f, sc.sy), -1.0));
    } else {
        parts.push_back(apply_sigma(f, sc.sx));
        parts.push_back(apply_sigma(f, sc.sy));
    }
    return parts;
}

std::vector<GridFunction> l2_parts(const Scenario& sc, const GridFunction& f) {
    const int m = (sc.equation == "heat") ? 2 : 3;
    static const double binom3[4] = {1.0, 3.0, 3.0, 1.0};
    static const double binom2[3] = {1.0, 2.0, 1.0};
    const double* binom = (m == 2) ? binom2 : binom3;

    std::vector<GridFunction> parts;
    parts.push_back(apply_sigma(f, sc.st));
    for (int k = 0; k <= m; ++k) {
        GridFunction t = sigma_power(f, sc.sx, m - k);
        t = sigma_power(t, sc.sy, k);
        parts.push_back(gf_scale(t, binom[k]));
    }
    return parts;
}

GridFunction sum_parts(const std::vector<GridFunction>& parts) {
    GridFunction acc = parts[0];
    for (size_t i = 1; i < parts.size(); ++i) acc = gf_add(acc, parts[i]);
    return acc;
}

} // namespace

GridFunction apply_l1(const Scenario& sc, const GridFunction& f) {
    return sum_parts(l1_parts(sc, f));
}

GridFunction apply_l2(const Scenario& sc, const GridFunction& f) {
    return sum_parts(l2_parts(sc, f));
}

GridFunction sample_seed(const Scenario& sc, const std::vector<Axis>& axes) {
    const ModeFamily fam(sc);
    int span[3] = {coord_span(sc.sx), coord_span(sc.sy), coord_span(sc.st)};
    for (const auto& ax : axes) {
        if (ax.slot < 0 || ax.slot > 2) throw RangeError("sample_seed: axis slot out of range");
        span[ax.slot] = std::max(span[ax.slot], ax.coord + 1);
    }

    GridFunction out(sc.level, sc.s, axes);
    std::vector<double> c0(span[0], 0.0), c1(span[1], 0.0), c2(span[2], 0.0);
    std::vector<double>* cs[3] = {&c0, &c1, &c2};

    const size_t n = out.nsamples();
    for (size_t flat = 0; flat < n; ++flat) {
        const std::vector<int> mi = out.multi_index(flat);
        for (int k = 0; k < out.naxes(); ++k) {
            const Axis& ax = out.axis(k);
            (*cs[ax.slot])[ax.coord] = ax.value(mi[k]);
        }
        out.set(flat, fam.pair_value(fam.theta(0, c0), fam.theta(1, c1), fam.theta(2, c2)));
    }
    return out;
}

ConstraintReport check_constraints(const Scenario& sc) {
    /* Modest dedicated lattice; the aligned forms only need enough samples for
     * the stencils of the highest operator order. */
    std::vector<Axis> axes;
    for (const auto& a : active_components(sc.sx))
        axes.push_back({0, static_cast<int>(a[1]), 13, 0.08, 0.3});
    for (const auto& a : active_components(sc.sy))
        axes.push_back({1, static_cast<int>(a[1]), 13, 0.08, 0.3});
    for (const auto& a : active_components(sc.st))
        axes.push_back({2, static_cast<int>(a[1]), 5, sc.ht, sc.t_center - 2.0 * sc.ht});

    const GridFunction F = sample_seed(sc, axes);

    std::vector<int> trim(axes.size());
    for (size_t i = 0; i < axes.size(); ++i) trim[i] = (axes[i].slot == 2) ? 1 : 3;

    ConstraintReport rep;
    rep.scale = gf_norm_inf(F, trim);
    if (rep.scale == 0.0) throw ConfigError("check_constraints: seed kernel vanishes on the lattice");

    /* Cancellation ratio: the norm of the sum against the summed norms of the
     * individual operator terms, so the measure is scale-free. */
    for (int which = 0; which < 2; ++which) {
        const std::vector<GridFunction> parts =
            (which == 0) ? l1_parts(sc, F) : l2_parts(sc, F);
        double denom = 0.0;
        for (const auto& p : parts) denom += gf_norm_inf(p, trim);
        const double num = gf_norm_inf(sum_parts(parts), trim);
        const double rel = (denom > 0.0) ? num / denom : num / rep.scale;
        (which == 0 ? rep.l1_rel : rep.l2_rel) = rel;
    }

    rep.pass = rep.l1_rel <= sc.constraint_rel && rep.l2_rel <= sc.constraint_rel;
    return rep;
}

} // namespace cdx
