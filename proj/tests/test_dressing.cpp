#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "cdx/dressing.hpp"
#include "cdx/errors.hpp"
#include "cdx/line_integral.hpp"
#include "cdx/scenario.hpp"

using namespace cdx;

namespace {

CDMatrix scalar_amp(int level, double re, int comp = 0) {
    CDMatrix m(level, 1);
    m.at(0, 0, comp) = re;
    return m;
}

Scenario base_scenario(const std::string& eq, int level, int comp) {
    Scenario sc;
    sc.equation = eq;
    sc.level = level;
    sc.sx = SigmaSpec::single(level, comp, 1.0, 0);
    sc.sy = SigmaSpec::single(level, comp, 1.0, 1);
    sc.st = SigmaSpec::single(level, comp, 1.0, 2);
    sc.x_min = 0.5;
    sc.x_max = 2.5;
    sc.nx = 9;
    sc.ny = 5;
    sc.ndelta = 5;
    sc.z_max = 6.0;
    sc.nz = 31;
    sc.nt = 3;
    sc.eps_tail = 1.0; /* short rays on purpose; decay is checked elsewhere */
    return sc;
}

CDNumber ray_inverse(const Scenario& sc) {
    int span = 1;
    for (const auto& a : active_components(sc.sx)) span = std::max(span, (int)a[1] + 1);
    std::vector<double> v0(static_cast<size_t>(span), 0.0);
    for (const auto& a : active_components(sc.sx)) v0[static_cast<size_t>(a[1])] = a[2];
    return cd_inv(ray_symbol(sc.sx, v0));
}

/* Re-evaluates the discrete equation
 *   K(x,y) = F(x,y) + pfac u^{-1} sum_j w_j F(th_z(j), th_y) S(x, z_j)
 * with S = K for the first hierarchy and S = K2 (recomputed from the ray
 * samples) for mkdv, and returns the worst relative mismatch over the grid. */
double fixed_point_gap(const Scenario& sc, const DressingResult& dr) {
    const ModeFamily fam(sc);
    const double hz = sc.z_max / (sc.nz - 1);
    const std::vector<double> w = quad_weights(sc.rule, sc.nz, hz);
    const double q = fam.ray_speed();
    const CDNumber uinv = ray_inverse(sc);
    const bool mkdv = sc.equation == "mkdv";
    const double pfac = mkdv ? sc.p / 4.0 : sc.p;

    int rayax = -1;
    for (int k = 0; k < dr.Kray.naxes(); ++k)
        if (dr.Kray.axis(k).slot == 3) rayax = k;
    REQUIRE(rayax >= 0);

    double worst = 0.0;
    std::vector<double> cx(4, 0.0), cy(4, 0.0), ct(4, 0.0);
    for (size_t flat = 0; flat < dr.K.nsamples(); ++flat) {
        const std::vector<int> mi = dr.K.multi_index(flat);
        std::fill(cx.begin(), cx.end(), 0.0);
        std::fill(cy.begin(), cy.end(), 0.0);
        std::fill(ct.begin(), ct.end(), 0.0);
        std::vector<int> mk(static_cast<size_t>(dr.Kray.naxes()), 0);
        int pos = 0;
        for (int k = 0; k < dr.K.naxes(); ++k) {
            const Axis& ax = dr.K.axis(k);
            const int idx = mi[static_cast<size_t>(k)];
            if (ax.slot == 0) cx[static_cast<size_t>(ax.coord)] = ax.value(idx);
            if (ax.slot == 1) cy[static_cast<size_t>(ax.coord)] = ax.value(idx);
            if (ax.slot == 2) ct[static_cast<size_t>(ax.coord)] = ax.value(idx);
            if (k != rayax) {
                mk[static_cast<size_t>(pos)] = idx;
                ++pos;
            }
        }
        /* rebuild the ray index vector with the ray position restored */
        std::vector<int> mr(static_cast<size_t>(dr.Kray.naxes()), 0);
        pos = 0;
        for (int k = 0; k < dr.Kray.naxes(); ++k) {
            if (k == rayax) continue;
            const Axis& ax = dr.Kray.axis(k);
            int src = -1, scan = 0;
            for (int k2 = 0; k2 < dr.K.naxes(); ++k2) {
                const Axis& a2 = dr.K.axis(k2);
                if (a2.slot == ax.slot && a2.coord == ax.coord) src = k2;
                (void)scan;
            }
            REQUIRE(src >= 0);
            mr[static_cast<size_t>(k)] = mi[static_cast<size_t>(src)];
        }

        const double thx = fam.theta(0, cx);
        const double thy = fam.theta(1, cy);
        const double tht = fam.theta(2, ct);

        std::vector<CDMatrix> kray(static_cast<size_t>(sc.nz));
        for (int j = 0; j < sc.nz; ++j) {
            mr[static_cast<size_t>(rayax)] = j;
            kray[static_cast<size_t>(j)] = dr.Kray.get(dr.Kray.flat_index(mr));
        }

        std::vector<CDMatrix> src = kray;
        if (mkdv) {
            /* second kernel on the ray: K2(x, z_i) = u^{-1} sum_j w_j F_ji K_j */
            std::vector<CDMatrix> k2(static_cast<size_t>(sc.nz));
            for (int i = 0; i < sc.nz; ++i) {
                CDMatrix acc(sc.level, sc.s);
                for (int j = 0; j < sc.nz; ++j) {
                    const CDMatrix f = fam.pair_value(thx + j * hz * q, thx + i * hz * q, tht);
                    acc = mat_add(acc,
                                  mat_scale(mat_mul(f, kray[static_cast<size_t>(j)]),
                                            w[static_cast<size_t>(j)]));
                }
                k2[static_cast<size_t>(i)] = mat_scale_left(uinv, acc);
            }
            src = k2;
        }

        CDMatrix acc(sc.level, sc.s);
        for (int j = 0; j < sc.nz; ++j) {
            const CDMatrix f = fam.pair_value(thx + j * hz * q, thy, tht);
            acc = mat_add(acc, mat_scale(mat_mul(f, src[static_cast<size_t>(j)]),
                                          w[static_cast<size_t>(j)]));
        }
        CDMatrix val =
            mat_add(fam.pair_value(thx, thy, tht), mat_scale(mat_scale_left(uinv, acc), pfac));

        const CDMatrix got = dr.K.get(flat);
        const double gap = mat_norm_inf(mat_sub(val, got));
        const double ref = mat_norm_inf(val) + 1.0;
        worst = std::max(worst, gap / ref);
    }
    return worst;
}

} // namespace

TEST_CASE("scalar product and norm on a constant grid") {
    std::vector<Axis> axes{Axis{0, 0, 3, 0.5, 0.0}};
    GridFunction f(1, 1, axes);
    CDMatrix one = CDMatrix::identity(1, 1);
    for (size_t i = 0; i < f.nsamples(); ++i) f.set(i, one);
    const CDNumber s = scalar_product(f, f);
    CHECK(s[0] == doctest::Approx(1.0)); /* trapezoid over [0,1] of 1 */
    CHECK(s[1] == doctest::Approx(0.0));
    CHECK(hilbert_norm(f) == doctest::Approx(1.0));
}

TEST_CASE("closure detection picks the cheapest faithful representation") {
    /* heat with a real direction and real amplitudes stays real */
    Scenario sh = base_scenario("heat", 2, 0);
    sh.modes.push_back(ModeSpec{1.0, scalar_amp(2, 0.4), 0.0, false});
    DressingResult dh = solve_dressing(sh);
    CHECK(dh.stats.closure == Closure::Real);

    /* kdv differentiates along an imaginary direction: span{1, i1} */
    Scenario sk = base_scenario("kdv", 2, 1);
    sk.modes.push_back(ModeSpec{1.0, scalar_amp(2, 1.0)});
    solve_dispersion(sk);
    DressingResult dk = solve_dressing(sk);
    CHECK(dk.stats.closure == Closure::Planar);

    /* two independent imaginary amplitude directions force the full engine */
    Scenario sf = base_scenario("kdv", 2, 1);
    sf.modes.push_back(ModeSpec{1.0, scalar_amp(2, 0.6, 1)});
    sf.modes.push_back(ModeSpec{1.2, scalar_amp(2, 0.4, 2)});
    solve_dispersion(sf);
    DressingResult df = solve_dressing(sf);
    CHECK(df.stats.closure == Closure::Full);
}

TEST_CASE("solved kernel satisfies the discrete integral equation") {
    SUBCASE("kdv, planar complex closure") {
        Scenario sc = base_scenario("kdv", 1, 1);
        sc.modes.push_back(ModeSpec{1.0, scalar_amp(1, 0.8)});
        solve_dispersion(sc);
        DressingResult dr = solve_dressing(sc);
        CHECK(fixed_point_gap(sc, dr) < 1e-12);
    }
    SUBCASE("kdv, full engine") {
        Scenario sc = base_scenario("kdv", 2, 1);
        sc.nx = 7;
        sc.nz = 21;
        sc.modes.push_back(ModeSpec{1.0, scalar_amp(2, 0.6, 1)});
        sc.modes.push_back(ModeSpec{1.2, scalar_amp(2, 0.4, 2)});
        solve_dispersion(sc);
        DressingResult dr = solve_dressing(sc);
        REQUIRE(dr.stats.closure == Closure::Full);
        CHECK(fixed_point_gap(sc, dr) < 1e-12);
    }
    SUBCASE("mkdv, both kernels") {
        Scenario sc = base_scenario("mkdv", 1, 1);
        sc.modes.push_back(ModeSpec{1.0, scalar_amp(1, 0.7, 1)});
        solve_dispersion(sc);
        DressingResult dr = solve_dressing(sc);
        CHECK(fixed_point_gap(sc, dr) < 1e-12);
    }
    SUBCASE("heat, non-separable assembly") {
        Scenario sc = base_scenario("heat", 2, 0);
        sc.nz = 21;
        sc.modes.push_back(ModeSpec{1.0, scalar_amp(2, 0.4), 0.0, false});
        DressingResult dr = solve_dressing(sc);
        CHECK(fixed_point_gap(sc, dr) < 1e-12);
    }
}

TEST_CASE("matrix-valued seed goes through the block solve") {
    Scenario sc = base_scenario("kdv", 1, 1);
    sc.s = 2;
    sc.nx = 7;
    CDMatrix amp(1, 2);
    amp.at(0, 0, 0) = 0.7;
    amp.at(0, 1, 0) = 0.2;
    amp.at(1, 0, 0) = -0.1;
    amp.at(1, 1, 0) = 0.5;
    sc.modes.push_back(ModeSpec{1.0, amp});
    solve_dispersion(sc);
    DressingResult dr = solve_dressing(sc);
    CHECK(fixed_point_gap(sc, dr) < 1e-12);
}

TEST_CASE("zero coupling returns the seed kernel") {
    Scenario sc = base_scenario("kdv", 1, 1);
    sc.p = 0.0;
    sc.modes.push_back(ModeSpec{1.0, scalar_amp(1, 0.8)});
    solve_dispersion(sc);
    DressingResult dr = solve_dressing(sc);
    const GridFunction f = sample_seed(sc, dr.K.axes());
    CHECK(gf_max_abs_diff(dr.K, f) < 1e-14);
}

TEST_CASE("coupling scale can be traded against amplitude scale") {
    Scenario a = base_scenario("kdv", 1, 1);
    a.p = 1.0;
    a.modes.push_back(ModeSpec{1.0, scalar_amp(1, 0.4)});
    solve_dispersion(a);

    Scenario b = a;
    b.p = 0.5;
    b.modes[0].amp = scalar_amp(1, 0.8);

    DressingResult da = solve_dressing(a);
    DressingResult db = solve_dressing(b);
    /* K(p/2, 2B) = 2 K(p, B) */
    const GridFunction twice = gf_scale(da.K, 2.0);
    CHECK(gf_max_abs_diff(twice, db.K) < 1e-12 * gf_norm_inf(twice));
}

TEST_CASE("planar and full engines agree on a nearly planar seed") {
    Scenario a = base_scenario("kdv", 2, 1);
    a.nx = 7;
    a.nz = 21;
    a.modes.push_back(ModeSpec{1.0, scalar_amp(2, 0.8)});
    solve_dispersion(a);

    Scenario b = a;
    b.modes[0].amp.at(0, 0, 2) = 1e-8; /* breaks the plane, perturbs K by O(1e-8) */

    DressingResult da = solve_dressing(a);
    DressingResult db = solve_dressing(b);
    REQUIRE(da.stats.closure == Closure::Planar);
    REQUIRE(db.stats.closure == Closure::Full);
    CHECK(gf_max_abs_diff(da.K, db.K) < 1e-6);
    CHECK(gf_max_abs_diff(da.K, db.K) > 0.0);
}

TEST_CASE("diagonal grid matches the ray base sample") {
    Scenario sc = base_scenario("kdv", 1, 1);
    sc.modes.push_back(ModeSpec{1.0, scalar_amp(1, 0.8)});
    solve_dispersion(sc);
    DressingResult dr = solve_dressing(sc);

    int rayax = -1;
    for (int k = 0; k < dr.Kray.naxes(); ++k)
        if (dr.Kray.axis(k).slot == 3) rayax = k;
    REQUIRE(rayax >= 0);
    const GridFunction base = gf_slice(dr.Kray, rayax, 0);
    CHECK(gf_max_abs_diff(base, dr.g) < 1e-10 * (gf_norm_inf(dr.g) + 1.0));
}

TEST_CASE("direct solve agrees with the iterated series when it converges") {
    Scenario sc = base_scenario("kdv", 1, 1);
    sc.x_min = 1.0;
    sc.x_max = 3.0;
    sc.modes.push_back(ModeSpec{1.0, scalar_amp(1, 0.05)});
    solve_dispersion(sc);
    SolveOptions opt;
    opt.neumann_check = true;
    DressingResult dr = solve_dressing(sc, opt);
    CHECK(dr.stats.spectral_max < 0.5);
    CHECK(dr.stats.neumann_gap >= 0.0);
    CHECK(dr.stats.neumann_gap < 1e-10);
}

TEST_CASE("thread count does not change the result") {
    Scenario sc = base_scenario("mkdv", 1, 1);
    sc.modes.push_back(ModeSpec{1.0, scalar_amp(1, 0.7, 1)});
    solve_dispersion(sc);
    SolveOptions one, four;
    four.threads = 4;
    DressingResult a = solve_dressing(sc, one);
    DressingResult b = solve_dressing(sc, four);
    CHECK(gf_max_abs_diff(a.K, b.K) == 0.0);
    CHECK(gf_max_abs_diff(a.K2, b.K2) == 0.0);
}

TEST_CASE("truncated ray with visible integrand is rejected") {
    Scenario sc = base_scenario("kdv", 1, 1);
    sc.z_max = 2.0;
    sc.nz = 11;
    sc.eps_tail = 1e-8;
    sc.modes.push_back(ModeSpec{1.0, scalar_amp(1, 0.2)});
    solve_dispersion(sc);
    CHECK_THROWS_AS(solve_dressing(sc), TailNotDecayed);
}

TEST_CASE("blown-up base system is rejected as singular") {
    Scenario sc = base_scenario("kdv", 1, 1);
    sc.x_min = -16.0;
    sc.x_max = -15.0;
    sc.nx = 7;
    sc.z_max = 12.0;
    sc.nz = 61;
    sc.modes.push_back(ModeSpec{1.0, scalar_amp(1, 1.0)});
    solve_dispersion(sc);
    CHECK_THROWS_AS(solve_dressing(sc), SingularOperator);
}

TEST_CASE("the dressed operator is linear over right scalar factors") {
    Scenario sc = base_scenario("kdv", 2, 1);
    sc.modes.push_back(ModeSpec{1.0, scalar_amp(2, 0.6, 1)});
    sc.modes.push_back(ModeSpec{1.2, scalar_amp(2, 0.4, 2)});
    solve_dispersion(sc);
    CHECK(right_linearity_gap(sc) < 1e-12);
}
