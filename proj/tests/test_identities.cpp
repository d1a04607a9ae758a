#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cdx/residual.hpp"

using namespace cdx;

/* Both sides of the order-m differentiation identities of the half-line
 * integral T(x,y) = int_sigma,x^inf F(z,y) K(x,z) dz, on manufactured
 * two-mode exponential factors with generic non-commuting constants.
 * Expected: every gap shrinks at the stencil rate under h -> h/2. */

namespace {

struct Manufactured {
    int level = 2;
    CDNumber cf1, cf2, ck1, ck2;
    double a1 = 1.3, b1 = 0.4, a2 = 0.9, b2 = 0.7;
    double c1 = 1.2, d1 = -0.35, c2 = 1.5, d2 = 0.25;

    Manufactured() {
        cf1 = CDNumber(level);
        cf1[0] = 1.0; cf1[1] = 0.3; cf1[2] = -0.2;
        cf2 = CDNumber(level);
        cf2[0] = -0.4; cf2[2] = 0.5; cf2[3] = 0.1;
        ck1 = CDNumber(level);
        ck1[0] = 0.5; ck1[1] = -0.4; ck1[3] = 0.25;
        ck2 = CDNumber(level);
        ck2[0] = 0.2; ck2[1] = 0.15; ck2[2] = 0.3;
    }

    static CDMatrix wrap1(int level, const CDNumber& v) {
        CDMatrix m(level, 1);
        for (int j = 0; j < v.dim(); ++j) m.at(0, 0, j) = v[j];
        return m;
    }

    PairSampler f_zy() const {
        return [this](double z1, double y1) {
            return wrap1(level, cd_add(cd_scale(cf1, std::exp(-a1 * z1 - b1 * y1)),
                                       cd_scale(cf2, std::exp(-a2 * z1 - b2 * y1))));
        };
    }
    PairSampler k_xz() const {
        return [this](double x1, double z1) {
            return wrap1(level, cd_add(cd_scale(ck1, std::exp(d1 * x1 - c1 * z1)),
                                       cd_scale(ck2, std::exp(d2 * x1 - c2 * z1))));
        };
    }
};

} // namespace

TEST_CASE("exterior and interior derivative transforms of the half-line integral") {
    const Manufactured mf;
    const PairSampler f = mf.f_zy();
    const PairSampler k = mf.k_xz();

    struct Variant {
        double psi;
        int jc;
    };
    for (Variant v : {Variant{1.0, 1}, Variant{0.8, 2}}) {
        CAPTURE(v.psi);
        CAPTURE(v.jc);
        const SigmaSpec sx = SigmaSpec::single(mf.level, v.jc, v.psi, 0);
        IdentityOptions coarse;
        IdentityOptions fine;
        fine.h = coarse.h / 2.0;

        for (int m = 1; m <= 3; ++m) {
            CAPTURE(m);
            const IdentityGaps gc = antideriv_identity_gaps(mf.level, 1, f, k, sx, m, coarse);
            const IdentityGaps gfi = antideriv_identity_gaps(mf.level, 1, f, k, sx, m, fine);
            MESSAGE("x-side m=" << m << " psi=" << v.psi << "  gap(h)=" << gc.gap_x
                                << "  gap(h/2)=" << gfi.gap_x << "  C=" << gc.gap_x / gc.h);
            MESSAGE("z-side m=" << m << " psi=" << v.psi << "  gap(h)=" << gc.gap_z
                                << "  gap(h/2)=" << gfi.gap_z << "  C=" << gc.gap_z / gc.h);
            CHECK(gc.gap_x < 0.05);
            CHECK(gfi.gap_x < gc.gap_x);
            CHECK(gfi.gap_x < 0.35 * gc.gap_x + 1e-11);
            CHECK(gc.gap_z < 0.05);
            CHECK(gfi.gap_z < gc.gap_z);
            CHECK(gfi.gap_z < 0.35 * gc.gap_z + 1e-11);
            if (m == 2) {
                MESSAGE("difference formula psi=" << v.psi << "  gap(h)=" << gc.gap_d2
                                                  << "  gap(h/2)=" << gfi.gap_d2);
                CHECK(gc.gap_d2 < 0.05);
                CHECK(gfi.gap_d2 < 0.35 * gc.gap_d2 + 1e-11);
            }
        }
    }
}

TEST_CASE("identity gaps on a zero first factor vanish") {
    const Manufactured mf;
    const PairSampler zero = [&](double, double) { return CDMatrix(mf.level, 1); };
    const PairSampler k = mf.k_xz();
    const SigmaSpec sx = SigmaSpec::single(mf.level, 1, 1.0, 0);
    IdentityOptions opt;
    opt.h = 0.1;
    for (int m = 1; m <= 3; ++m) {
        const IdentityGaps g = antideriv_identity_gaps(mf.level, 1, zero, k, sx, m, opt);
        CHECK(g.gap_x == 0.0);
        CHECK(g.gap_z == 0.0);
    }
}

TEST_CASE("identity gap rig rejects multi-active sigma and bad m") {
    const Manufactured mf;
    const PairSampler f = mf.f_zy();
    const PairSampler k = mf.k_xz();
    SigmaSpec two = SigmaSpec::single(mf.level, 1, 1.0, 0);
    two.psi[2] = 1.0;
    CHECK_THROWS_AS(antideriv_identity_gaps(mf.level, 1, f, k, two, 1), PreconditionViolated);
    const SigmaSpec sx = SigmaSpec::single(mf.level, 1, 1.0, 0);
    CHECK_THROWS_AS(antideriv_identity_gaps(mf.level, 1, f, k, sx, 4), PreconditionViolated);
}
