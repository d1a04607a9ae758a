#ifndef CDX_GRID_HPP
#define CDX_GRID_HPP

#include <functional>
#include <vector>

#include "cdx/cd_matrix.hpp"

namespace cdx {

/* One sampled coordinate axis. slot tags which argument of the kernel the axis
 * belongs to: 0 = first (x), 1 = second (y or z), 2 = time. coord is the real
 * coordinate index inside that argument's A_r variable. */
struct Axis {
    int slot = 0;
    int coord = 0;
    int n = 0;
    double h = 0.0;
    double x0 = 0.0;

    double value(int i) const { return x0 + i * h; }
};

/* Dense tensor-product sampling of an s x s matrix field with A_r entries.
 * Sample layout: axes row-major (axis 0 slowest), then [row][col][component].
 * z_max / tail_bound record the half-line truncation the samples were built
 * with, so residual reports can carry the tail term alongside stencil error. */
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(int level, int s, std::vector<Axis> axes);

    int level() const { return level_; }
    int s() const { return s_; }
    int comp_dim() const { return dim_of(level_); }
    size_t block() const { return static_cast<size_t>(s_) * s_ * dim_of(level_); }

    const std::vector<Axis>& axes() const { return axes_; }
    const Axis& axis(int i) const { return axes_[i]; }
    int naxes() const { return static_cast<int>(axes_.size()); }
    int find_axis(int slot, int coord) const;

    size_t nsamples() const { return nsamples_; }
    size_t stride(int axis) const { return strides_[axis]; }

    double* sample(size_t flat) { return v_.data() + flat * block(); }
    const double* sample(size_t flat) const { return v_.data() + flat * block(); }

    size_t flat_index(const std::vector<int>& idx) const;
    std::vector<int> multi_index(size_t flat) const;

    CDMatrix get(size_t flat) const;
    void set(size_t flat, const CDMatrix& m);

    std::vector<double>& raw() { return v_; }
    const std::vector<double>& raw() const { return v_; }

    /* Axes not present are treated as constants by the differential operators
     * when this flag is set; otherwise touching them throws UnmappedAxis. */
    bool assume_constant_off_axes = false;

    double z_max = 0.0;
    double tail_bound = 0.0;

private:
    int level_ = 0;
    int s_ = 1;
    std::vector<Axis> axes_;
    std::vector<size_t> strides_;
    size_t nsamples_ = 1;
    std::vector<double> v_;
};

bool same_layout(const GridFunction& a, const GridFunction& b);

GridFunction gf_add(const GridFunction& a, const GridFunction& b);
GridFunction gf_sub(const GridFunction& a, const GridFunction& b);
GridFunction gf_scale(const GridFunction& a, double s);

/* Pointwise matrix product a(p) * b(p'), where b's axes must be a subset of
 * a's axes (matched by slot/coord and identical sampling); b is broadcast
 * over a's remaining axes. Operand order is preserved. */
GridFunction gf_mul(const GridFunction& a, const GridFunction& b);

/* True when every axis of `small` appears in `big` with identical sampling. */
bool gf_axes_contain(const GridFunction& big, const GridFunction& small);

/* Like gf_mul, but broadcasts whichever operand has the smaller axis set;
 * the result carries the superset layout. Operand order is preserved. */
GridFunction gf_mul_bcast(const GridFunction& a, const GridFunction& b);

/* Pointwise left/right multiplication by a constant algebra element. */
GridFunction gf_scale_left(const CDNumber& c, const GridFunction& a);
GridFunction gf_scale_right(const GridFunction& a, const CDNumber& c);

/* First derivative along the given axis: order-2 central stencil inside,
 * order-2 one-sided at the ends. Needs n >= 3 on that axis. */
GridFunction gf_derive(const GridFunction& f, int axis_index);

/* Fix one axis at a sample index and drop it. */
GridFunction gf_slice(const GridFunction& f, int axis_index, int at);

/* Diagonal restriction: for every slot-0 axis there must be a slot-1 axis with
 * the same coord and identical sampling; returns the field on the slot-0 axes
 * with the slot-1 indices tied to the slot-0 ones. Time axes pass through. */
GridFunction gf_diagonal(const GridFunction& f);

/* Sub-rectangle copy: keep [lo[k], lo[k]+len[k]) on each axis. */
GridFunction gf_window(const GridFunction& f, const std::vector<int>& lo,
                       const std::vector<int>& len);

/* Max entry norm over samples, skipping trim[k] samples at both ends of axis k
 * (trim may be empty for no trimming). */
double gf_norm_inf(const GridFunction& f, const std::vector<int>& trim = {});

/* Grid L2 norm sqrt( sum |f|^2 * prod h ) over the same interior. */
double gf_norm_l2(const GridFunction& f, const std::vector<int>& trim = {});

double gf_max_abs_diff(const GridFunction& a, const GridFunction& b);

/* Sample an analytic field: fn receives the coordinate values per axis. */
GridFunction gf_sample(int level, int s, std::vector<Axis> axes,
                       const std::function<CDMatrix(const std::vector<double>&)>& fn);

} // namespace cdx

#endif
