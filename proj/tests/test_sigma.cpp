#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cdx/errors.hpp"
#include "cdx/sigma.hpp"

using namespace cdx;

namespace {

/* smooth scalar bump and a partner, used to build matrix fields */
double bump(double x) { return std::exp(-x * x); }
double ripple(double x) { return std::sin(1.3 * x) + 0.25 * x; }

GridFunction quaternion_field_2d(int slot, int n, double h, double x0) {
    const auto fn = [](const std::vector<double>& c) {
        CDMatrix m(2, 1);
        m.at(0, 0, 0) = bump(c[0]) * ripple(c[1]);
        m.at(0, 0, 1) = 0.5 * bump(c[1]);
        m.at(0, 0, 3) = 0.2 * ripple(c[0]) * bump(c[0] + c[1]);
        return m;
    };
    return gf_sample(2, 1, {{slot, 1, n, h, x0}, {slot, 2, n, h, x0}}, fn);
}

} // namespace

TEST_CASE("single-component sigma is a signed derivative") {
    const auto fn = [](const std::vector<double>& c) {
        CDMatrix m(2, 1);
        m.at(0, 0, 0) = bump(c[0]);
        return m;
    };
    GridFunction f = gf_sample(2, 1, {{0, 1, 101, 0.02, -1.0}}, fn);
    f.assume_constant_off_axes = true;

    const SigmaSpec sg = SigmaSpec::single(2, 1);
    GridFunction s = apply_sigma(f, sg);
    GridFunction d = gf_derive(f, 0);
    /* sigma f = i_1^* (df) = -(df) i_1 for real df */
    for (size_t i = 0; i < s.nsamples(); ++i) {
        CHECK(s.sample(i)[1] == doctest::Approx(-d.sample(i)[0]).epsilon(1e-12));
        CHECK(s.sample(i)[0] == 0.0);
    }

    /* psi_0 = 1 with xi(0) = 1: the plain derivative, no generator wrap */
    SigmaSpec sg0 = SigmaSpec::single(2, 0);
    sg0.xi[0] = 1;
    sg0.xi[1] = 0;
    GridFunction s0 = apply_sigma(f, sg0);
    CHECK(gf_max_abs_diff(s0, d) == 0.0);
}

TEST_CASE("sigma respects the component-to-coordinate map") {
    /* psi_2 = 1.5 with xi(2) = 5: differentiate coordinate 5, wrap with i_2^* */
    SigmaSpec sg = SigmaSpec::single(3, 2, 1.5);
    sg.xi[2] = 5;
    sg.xi[5] = 2;
    const auto fn = [](const std::vector<double>& c) {
        CDMatrix m(3, 1);
        m.at(0, 0, 0) = ripple(c[0]);
        return m;
    };
    GridFunction f = gf_sample(3, 1, {{0, 5, 81, 0.025, -1.0}}, fn);
    f.assume_constant_off_axes = true;
    GridFunction s = apply_sigma(f, sg);
    GridFunction d = gf_derive(f, 0);
    for (size_t i = 0; i < s.nsamples(); ++i)
        CHECK(s.sample(i)[2] == doctest::Approx(-1.5 * d.sample(i)[0]).epsilon(1e-12));

    /* without the axis for coordinate 5 the application must refuse */
    GridFunction g = gf_sample(3, 1, {{0, 2, 81, 0.025, -1.0}}, fn);
    CHECK_THROWS_AS(apply_sigma(g, sg), UnmappedAxis);
    g.assume_constant_off_axes = true;
    GridFunction sz = apply_sigma(g, sg);
    CHECK(gf_norm_inf(sz) == 0.0);
}

TEST_CASE("hat variant conjugates") {
    GridFunction f = quaternion_field_2d(0, 41, 0.05, -1.0);
    SigmaSpec sg;
    sg.level = 2;
    sg.psi = {0.0, 1.0, 0.7, 0.0};
    sg.xi = {0, 1, 2, 3};
    sg.slot = 0;

    /* (sigma f)^* = sigma^ (f^*) */
    GridFunction lhs = apply_sigma(f, sg);
    for (size_t i = 0; i < lhs.nsamples(); ++i)
        for (int j = 1; j < lhs.comp_dim(); ++j) lhs.sample(i)[j] = -lhs.sample(i)[j];
    GridFunction fc = f;
    for (size_t i = 0; i < fc.nsamples(); ++i)
        for (int j = 1; j < fc.comp_dim(); ++j) fc.sample(i)[j] = -fc.sample(i)[j];
    GridFunction rhs = apply_sigma_hat(fc, sg);
    CHECK(gf_max_abs_diff(lhs, rhs) < 1e-15);
}

TEST_CASE("even sigma powers have real coefficients") {
    GridFunction f = quaternion_field_2d(0, 51, 0.04, -1.0);
    /* make it real-valued */
    for (size_t i = 0; i < f.nsamples(); ++i)
        for (int j = 1; j < f.comp_dim(); ++j) f.sample(i)[j] = 0.0;

    SigmaSpec sg;
    sg.level = 2;
    sg.psi = {0.0, 1.0, 0.7, 0.0};
    sg.xi = {0, 1, 2, 3};
    sg.slot = 0;

    for (int k = 1; k <= 2; ++k) {
        const RealCoeffReport rep = check_real_coefficients(f, sg, k);
        CAPTURE(k);
        CHECK(rep.leak < 1e-10);
        CHECK(rep.closed_form_diff < 1e-9);
    }

    SigmaSpec bad = sg;
    bad.psi[0] = 1.0;
    CHECK_THROWS_AS(check_real_coefficients(f, bad, 1), PreconditionViolated);
}

TEST_CASE("product rule splits into partial applications") {
    GridFunction f = quaternion_field_2d(0, 61, 1.0 / 30.0, -1.0);
    GridFunction g = quaternion_field_2d(0, 61, 1.0 / 30.0, -1.0);
    /* reshuffle g so the factors differ */
    for (size_t i = 0; i < g.nsamples(); ++i) {
        double* v = g.sample(i);
        std::swap(v[0], v[3]);
        v[1] *= -0.5;
    }

    SigmaSpec sg;
    sg.level = 2;
    sg.psi = {0.0, 1.0, -0.6, 0.0};
    sg.xi = {0, 1, 2, 3};
    sg.slot = 0;

    GridFunction whole = apply_sigma(gf_mul(f, g), sg);
    ProductExpr e1(f, g), e2(f, g);
    e1.apply_partial(1, sg);
    e2.apply_partial(2, sg);
    GridFunction split = gf_add(e1.evaluate(), e2.evaluate());

    /* stencil product rule holds to second order; compare at two spacings */
    const double err_coarse = gf_norm_inf(gf_sub(whole, split), {3, 3});
    CHECK(err_coarse < 5e-3);

    GridFunction f2 = quaternion_field_2d(0, 121, 1.0 / 60.0, -1.0);
    GridFunction g2 = quaternion_field_2d(0, 121, 1.0 / 60.0, -1.0);
    for (size_t i = 0; i < g2.nsamples(); ++i) {
        double* v = g2.sample(i);
        std::swap(v[0], v[3]);
        v[1] *= -0.5;
    }
    GridFunction whole2 = apply_sigma(gf_mul(f2, g2), sg);
    ProductExpr e3(f2, g2), e4(f2, g2);
    e3.apply_partial(1, sg);
    e4.apply_partial(2, sg);
    const double err_fine = gf_norm_inf(gf_sub(whole2, gf_add(e3.evaluate(), e4.evaluate())), {6, 6});
    CHECK(std::log2(err_coarse / err_fine) > 1.6);
}

TEST_CASE("real left factor passes through partial application") {
    /* F real: ^2 sigma {F K} = F (sigma K) exactly */
    const auto freal = [](const std::vector<double>& c) {
        CDMatrix m(2, 1);
        m.at(0, 0, 0) = ripple(c[0]) * bump(c[0]);
        return m;
    };
    GridFunction F = gf_sample(2, 1, {{1, 1, 31, 0.05, 0.0}}, freal);
    GridFunction K = quaternion_field_2d(1, 31, 0.05, 0.0);

    SigmaSpec sg;
    sg.level = 2;
    sg.psi = {0.0, 1.0, 0.8, 0.0};
    sg.xi = {0, 1, 2, 3};
    sg.slot = 1;

    GridFunction lhs = apply_partial_sigma(2, sg, F, K);
    GridFunction rhs = gf_mul_bcast(F, apply_sigma(K, sg));
    CHECK(gf_max_abs_diff(lhs, rhs) < 1e-15);
}

TEST_CASE("single-component chains collapse to signed plain derivatives") {
    const auto f1 = [](const std::vector<double>& c) {
        CDMatrix m(2, 1);
        m.at(0, 0, 0) = bump(c[0]);
        m.at(0, 0, 2) = 0.3 * ripple(c[0]);
        return m;
    };
    const auto k2 = [](const std::vector<double>& c) {
        CDMatrix m(2, 1);
        m.at(0, 0, 0) = bump(c[0] + 0.5 * c[1]);
        m.at(0, 0, 1) = 0.4 * bump(c[0] - c[1]);
        return m;
    };
    GridFunction F = gf_sample(2, 1, {{1, 1, 41, 0.05, 0.0}}, f1);
    GridFunction K = gf_sample(2, 1, {{0, 1, 41, 0.05, 0.0}, {1, 1, 41, 0.05, 0.0}}, k2);

    const SigmaSpec sx = SigmaSpec::single(2, 1, 1.0, 0);
    const SigmaSpec sz = SigmaSpec::single(2, 1, 1.0, 1);

    /* ^2 sigma_z^2 {F K} = i_1^*( i_1^*( F d^2K/dz^2 ) ) = -F Kzz */
    ProductExpr e(F, K);
    e.apply_partial(2, sz);
    e.apply_partial(2, sz);
    GridFunction got = e.evaluate();
    GridFunction kzz = gf_derive(gf_derive(K, 1), 1);
    GridFunction want = gf_scale(gf_mul_bcast(F, kzz), -1.0);
    CHECK(gf_max_abs_diff(got, want) < 1e-15);

    /* mixed chain ^1 sigma_x ( ^2 sigma_z {F K} ): F depends on z only, so
     * the x-derivative of F vanishes and the chain equals -Fz... no, the
     * first factor is differentiated in x and F carries no x axis. */
    ProductExpr m(F, K);
    m.apply_partial(2, sz);
    m.apply_partial(1, sx);
    F.assume_constant_off_axes = true;
    ProductExpr m2(F, K);
    m2.apply_partial(2, sz);
    m2.apply_partial(1, sx);
    CHECK_THROWS_AS(m.evaluate(), UnmappedAxis);
    GridFunction mixed = m2.evaluate();
    CHECK(gf_norm_inf(mixed) == 0.0);
}

TEST_CASE("symbol of an exponential mode") {
    SigmaSpec sg;
    sg.level = 2;
    sg.psi = {0.0, 1.0, 1.0, 0.0};
    sg.xi = {0, 1, 2, 3};
    sg.slot = 0;
    std::vector<double> expo(4, 0.0);
    expo[1] = -2.0;
    expo[2] = 0.5;
    const CDNumber u = sigma_symbol(sg, expo);
    CHECK(u[1] == doctest::Approx(2.0));
    CHECK(u[2] == doctest::Approx(-0.5));
    CHECK(u[0] == 0.0);
}
