#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "cdx/cd_matrix.hpp"
#include "cdx/errors.hpp"

using namespace cdx;

namespace {

CDMatrix random_mat(int level, int s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CDMatrix m(level, s);
    for (int r = 0; r < s; ++r)
        for (int c = 0; c < s; ++c)
            for (int j = 0; j < m.comp_dim(); ++j) m.at(r, c, j) = u(rng);
    return m;
}

} // namespace

TEST_CASE("identity and scalar") {
    std::mt19937_64 rng(1);
    const CDMatrix a = random_mat(3, 3, rng);
    const CDMatrix id = CDMatrix::identity(3, 3);
    CHECK(mat_norm_inf(mat_sub(mat_mul(id, a), a)) == 0.0);
    CHECK(mat_norm_inf(mat_sub(mat_mul(a, id), a)) == 0.0);

    const CDNumber z = CDNumber::basis(3, 5, 2.0);
    const CDMatrix zs = CDMatrix::scalar(3, 3, z);
    CHECK(mat_norm_inf(mat_sub(mat_mul(zs, a), mat_scale_left(z, a))) < 1e-14);
    CHECK(mat_norm_inf(mat_sub(mat_mul(a, zs), mat_scale_right(a, z))) < 1e-14);
}

TEST_CASE("hand-checked quaternion product") {
    /* A = [[i1, 1],[0, i2]], B = [[i2, 0],[i3, 1]]
     * AB = [[i1 i2 + i3, 1],[i2 i3, i2]] = [[2 i3, 1],[i1, i2]] */
    CDMatrix a(2, 2), b(2, 2);
    a.set(0, 0, CDNumber::basis(2, 1));
    a.set(0, 1, CDNumber::real(2, 1.0));
    a.set(1, 1, CDNumber::basis(2, 2));
    b.set(0, 0, CDNumber::basis(2, 2));
    b.set(1, 0, CDNumber::basis(2, 3));
    b.set(1, 1, CDNumber::real(2, 1.0));

    const CDMatrix p = mat_mul(a, b);
    CDMatrix want(2, 2);
    want.set(0, 0, CDNumber::basis(2, 3, 2.0));
    want.set(0, 1, CDNumber::real(2, 1.0));
    want.set(1, 0, CDNumber::basis(2, 1));
    want.set(1, 1, CDNumber::basis(2, 2));
    CHECK(mat_norm_inf(mat_sub(p, want)) == 0.0);
}

TEST_CASE("ring identities") {
    std::mt19937_64 rng(7);
    const CDMatrix a = random_mat(2, 2, rng), b = random_mat(2, 2, rng), c = random_mat(2, 2, rng);
    /* distributivity */
    CHECK(mat_norm_inf(mat_sub(mat_mul(a, mat_add(b, c)), mat_add(mat_mul(a, b), mat_mul(a, c)))) <
          1e-13);
    /* associativity holds over the quaternions */
    CHECK(mat_norm_inf(mat_sub(mat_mul(mat_mul(a, b), c), mat_mul(a, mat_mul(b, c)))) < 1e-13);
    /* conjugation is additive */
    CHECK(mat_norm_inf(mat_sub(mat_conj(mat_add(a, b)), mat_add(mat_conj(a), mat_conj(b)))) == 0.0);
}

TEST_CASE("norms and predicates") {
    CDMatrix m(2, 2);
    m.set(0, 1, CDNumber::basis(2, 1, -3.0));
    CHECK(mat_norm_inf(m) == doctest::Approx(3.0));
    CHECK(mat_norm2_sum(m) == doctest::Approx(9.0));
    CHECK(!is_real_matrix(m));
    CHECK(is_real_matrix(CDMatrix::identity(2, 2)));

    CDMatrix other(2, 3);
    CHECK_THROWS_AS(mat_mul(m, CDMatrix(3, 2)), ShapeMismatch);
    CHECK_THROWS_AS(mat_add(m, other), ShapeMismatch);
}
