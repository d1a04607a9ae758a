#ifndef CDX_CD_MATRIX_HPP
#define CDX_CD_MATRIX_HPP

#include <string>
#include <vector>

#include "cdx/cd_number.hpp"

namespace cdx {

/* Square s x s matrix with entries in A_r, stored flat as doubles with layout
 * [row][col][component], component fastest. The flat layout is shared with
 * GridFunction samples so grid code can work on raw spans. */
class CDMatrix {
public:
    CDMatrix() : level_(0), s_(1), a_(1, 0.0) {}

    CDMatrix(int level, int s)
        : level_(level), s_(s), a_(static_cast<size_t>(s) * s * dim_of(level), 0.0) {
        if (level < 0 || level > kMaxLevel) throw RangeError("CDMatrix: level must be in [0, 6]");
        if (s < 1) throw RangeError("CDMatrix: s must be >= 1");
    }

    static CDMatrix identity(int level, int s) {
        CDMatrix m(level, s);
        for (int i = 0; i < s; ++i) m.at(i, i, 0) = 1.0;
        return m;
    }

    static CDMatrix scalar(int level, int s, const CDNumber& z) {
        CDMatrix m(level, s);
        for (int i = 0; i < s; ++i) m.set(i, i, z);
        return m;
    }

    int level() const { return level_; }
    int s() const { return s_; }
    int comp_dim() const { return dim_of(level_); }
    size_t flat_size() const { return a_.size(); }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

    double& at(int r, int c, int comp) {
        return a_[(static_cast<size_t>(r) * s_ + c) * comp_dim() + comp];
    }
    double at(int r, int c, int comp) const {
        return a_[(static_cast<size_t>(r) * s_ + c) * comp_dim() + comp];
    }

    double* entry(int r, int c) { return &a_[(static_cast<size_t>(r) * s_ + c) * comp_dim()]; }
    const double* entry(int r, int c) const {
        return &a_[(static_cast<size_t>(r) * s_ + c) * comp_dim()];
    }

    CDNumber get(int r, int c) const {
        CDNumber z(level_);
        const double* e = entry(r, c);
        for (int j = 0; j < comp_dim(); ++j) z[j] = e[j];
        return z;
    }

    void set(int r, int c, const CDNumber& z) {
        if (z.level() != level_) throw ShapeMismatch("CDMatrix::set: level mismatch");
        double* e = entry(r, c);
        for (int j = 0; j < comp_dim(); ++j) e[j] = z[j];
    }

private:
    int level_;
    int s_;
    std::vector<double> a_;
};

CDMatrix mat_add(const CDMatrix& a, const CDMatrix& b);
CDMatrix mat_sub(const CDMatrix& a, const CDMatrix& b);
CDMatrix mat_scale(const CDMatrix& a, double s);

/* C_{ik} = sum_m A_{im} B_{mk}, accumulated in ascending m. */
CDMatrix mat_mul(const CDMatrix& a, const CDMatrix& b);

/* Left / right multiplication of every entry by a fixed algebra element. */
CDMatrix mat_scale_left(const CDNumber& c, const CDMatrix& a);
CDMatrix mat_scale_right(const CDMatrix& a, const CDNumber& c);

/* Entrywise conjugation. */
CDMatrix mat_conj(const CDMatrix& a);

/* Max over entries of the entry norm. */
double mat_norm_inf(const CDMatrix& a);
/* Sum over entries of the squared entry norm. */
double mat_norm2_sum(const CDMatrix& a);

bool is_real_matrix(const CDMatrix& a, double tol = 0.0);

std::string to_string(const CDMatrix& a);

} // namespace cdx

#endif
