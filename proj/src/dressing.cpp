#include "cdx/dressing.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>
#include <thread>

#include <eigen3/Eigen/Dense>

#include "cdx/errors.hpp"
#include "cdx/line_integral.hpp"

namespace cdx {

namespace {

/* --------------------------- small utilities --------------------------- */

int sigma_coord_span(const SigmaSpec& sg) {
    int m = 0;
    for (const auto& a : active_components(sg)) m = std::max(m, static_cast<int>(a[1]) + 1);
    return m;
}

std::vector<Axis> make_axes(const SigmaSpec& sg, int slot, int n, double h, double x0) {
    std::vector<Axis> axes;
    for (const auto& a : active_components(sg))
        axes.push_back(Axis{slot, static_cast<int>(a[1]), n, h, x0});
    return axes;
}

/* Tolerance-union of sampled real values with index lookup. */
class ValueSet {
public:
    void add(double v) { raw_.push_back(v); }

    void finalize() {
        if (raw_.empty()) raw_.push_back(0.0);
        std::sort(raw_.begin(), raw_.end());
        double scale = 1.0;
        for (double v : raw_) scale = std::max(scale, std::fabs(v));
        tol_ = 1e-9 * scale;
        vals_.clear();
        for (double v : raw_)
            if (vals_.empty() || v - vals_.back() > tol_) vals_.push_back(v);
        raw_.clear();
    }

    int index(double v) const {
        auto it = std::lower_bound(vals_.begin(), vals_.end(), v - tol_);
        if (it == vals_.end() || std::fabs(*it - v) > tol_)
            throw RangeError("dressing: requested point is outside the solved set");
        return static_cast<int>(it - vals_.begin());
    }

    int size() const { return static_cast<int>(vals_.size()); }
    double at(int i) const { return vals_[static_cast<size_t>(i)]; }

private:
    std::vector<double> raw_, vals_;
    double tol_ = 1e-9;
};

void enumerate_thetas(const ModeFamily& fam, const SigmaSpec& sg, int which,
                      const std::vector<Axis>& axes, ValueSet& vs) {
    int span = sigma_coord_span(sg);
    for (const auto& ax : axes) span = std::max(span, ax.coord + 1);
    std::vector<double> coords(static_cast<size_t>(std::max(span, 1)), 0.0);

    if (axes.empty()) {
        vs.add(fam.theta(which, coords));
        return;
    }
    std::vector<int> idx(axes.size(), 0);
    for (;;) {
        for (size_t k = 0; k < axes.size(); ++k)
            coords[static_cast<size_t>(axes[k].coord)] = axes[k].value(idx[k]);
        vs.add(fam.theta(which, coords));
        size_t k = axes.size();
        while (k > 0) {
            --k;
            if (++idx[k] < axes[k].n) break;
            idx[k] = 0;
            if (k == 0) return;
        }
    }
}

/* Real matrix of left multiplication by a fixed algebra element. */
Eigen::MatrixXd left_mult_matrix(const CDNumber& c) {
    const int n = c.dim();
    const BasisTable& t = BasisTable::get(c.level());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int g = 0; g < n; ++g) {
        if (c[g] == 0.0) continue;
        for (int s = 0; s < n; ++s) m(t.idx(g, s), s) += c[g] * t.sgn(g, s);
    }
    return m;
}

/* Projection of the scenario data onto span{1, W}. */
struct PlanarMap {
    int level = 0;
    bool have_dir = false;
    std::vector<double> w; /* unit imaginary direction, w[0] = 0 */

    std::complex<double> fwd(const CDNumber& a) const {
        double im = 0.0;
        if (have_dir)
            for (size_t j = 1; j < w.size(); ++j) im += a[static_cast<int>(j)] * w[j];
        return {a[0], im};
    }

    CDNumber back(const std::complex<double>& z) const {
        CDNumber a(level);
        a[0] = z.real();
        if (have_dir)
            for (size_t j = 1; j < w.size(); ++j) a[static_cast<int>(j)] = z.imag() * w[j];
        return a;
    }
};

/* ----------------------- scalar-type abstraction ----------------------- */

template <typename S> struct Scalarize;

template <> struct Scalarize<double> {
    static double fwd(const PlanarMap&, const CDNumber& a) { return a[0]; }
    static CDNumber back(const PlanarMap& pm, double v) {
        CDNumber a(pm.level);
        a[0] = v;
        return a;
    }
};

template <> struct Scalarize<std::complex<double>> {
    static std::complex<double> fwd(const PlanarMap& pm, const CDNumber& a) { return pm.fwd(a); }
    static CDNumber back(const PlanarMap& pm, const std::complex<double>& v) { return pm.back(v); }
};

template <typename S> S sign_of(const S& v);
template <> double sign_of<double>(const double& v) { return v >= 0.0 ? 1.0 : -1.0; }
template <> std::complex<double> sign_of<std::complex<double>>(const std::complex<double>& v) {
    const double m = std::abs(v);
    return m == 0.0 ? std::complex<double>(1.0, 0.0) : v / m;
}

/* 1-norm reciprocal condition estimate (Hager) on a factored system. */
template <typename Mat>
double rcond_estimate(const Eigen::PartialPivLU<Mat>& lu, const Mat& a) {
    using S = typename Mat::Scalar;
    using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
    const int n = static_cast<int>(a.rows());

    double anorm = 0.0;
    for (int c = 0; c < n; ++c) anorm = std::max(anorm, a.col(c).cwiseAbs().sum());
    if (anorm == 0.0) return 0.0;

    Vec x = Vec::Constant(n, S(1.0 / n));
    double est = 0.0;
    int last = -1;
    for (int it = 0; it < 5; ++it) {
        Vec y = lu.solve(x);
        const double y1 = y.cwiseAbs().sum();
        if (!std::isfinite(y1)) return 0.0;
        est = std::max(est, y1);
        Vec xi(n);
        for (int i = 0; i < n; ++i) xi[i] = sign_of<S>(y[i]);
        Vec z = lu.adjoint().solve(xi);
        int jmax = 0;
        double zmax = 0.0;
        for (int i = 0; i < n; ++i) {
            const double m = std::abs(z[i]);
            if (m > zmax) {
                zmax = m;
                jmax = i;
            }
        }
        if (jmax == last) break;
        const double zdotx = std::abs((z.adjoint() * x)(0, 0));
        if (it > 0 && zmax <= zdotx) break;
        x.setZero();
        x[jmax] = S(1.0);
        last = jmax;
    }
    const double rc = 1.0 / (anorm * est);
    return std::isfinite(rc) ? rc : 0.0;
}

/* ------------------------------ solver ------------------------------- */

struct SepMode {
    double rate = 0.0; /* F factor exp(rate * theta) in each argument */
    double c = 0.0;
    CDMatrix amp;
};

struct UnitResult {
    std::vector<CDMatrix> ray, at;
    std::vector<CDMatrix> ray2, at2;
    double rcond = 1.0;
    double tail = 0.0;
    double spectral = 0.0;
    double neumann = -1.0;
};

class Solver {
public:
    Solver(const Scenario& sc, const SolveOptions& opt)
        : sc_(sc), opt_(opt), fam_(sc), level_(sc.level), dim_(dim_of(sc.level)), s_(sc.s) {
        hz_ = sc.z_max / (sc.nz - 1);
        w_ = quad_weights(sc.rule, sc.nz, hz_);
        q_ = fam_.ray_speed();

        int span = sigma_coord_span(sc.sx);
        v0_.assign(static_cast<size_t>(span), 0.0);
        for (const auto& a : active_components(sc.sx))
            v0_[static_cast<size_t>(a[1])] = a[2];
        u_ = ray_symbol(sc.sx, v0_);
        uinv_ = cd_inv(u_);

        zeta_.resize(static_cast<size_t>(sc.nz));
        for (int i = 0; i < sc.nz; ++i) zeta_[static_cast<size_t>(i)] = i * hz_;

        mkdv_ = (sc.equation == "mkdv");
        separable_ = (sc.equation != "heat");
        if (separable_) {
            const double argf = mkdv_ ? 0.5 : 1.0;
            for (const auto& m : sc.modes)
                smodes_.push_back(SepMode{-m.kappa * argf, m.c, m.amp});
        }
        detect_closure();
    }

    DressingResult run();

    Closure closure() const { return closure_; }

private:
    void detect_closure();

    CDMatrix seed(double thl, double thr, double tht) const {
        return fam_.pair_value(thl, thr, tht);
    }

    template <typename S>
    void solve_unit_planar(double thx, double tht, const std::vector<double>& targets,
                           bool neumann, unsigned nseed, UnitResult& out) const;
    void solve_unit_full(double thx, double tht, const std::vector<double>& targets, bool neumann,
                         unsigned nseed, UnitResult& out) const;

    const Scenario& sc_;
    const SolveOptions& opt_;
    ModeFamily fam_;
    int level_, dim_, s_;
    double hz_ = 0.0, q_ = 0.0;
    std::vector<double> w_, zeta_, v0_;
    CDNumber u_, uinv_;
    PlanarMap pm_;
    Closure closure_ = Closure::Full;
    bool mkdv_ = false, separable_ = false;
    std::vector<SepMode> smodes_;
};

void Solver::detect_closure() {
    std::vector<CDNumber> gens;
    gens.push_back(uinv_);
    for (const auto& m : sc_.modes)
        for (int r = 0; r < s_; ++r)
            for (int c = 0; c < s_; ++c) gens.push_back(m.amp.get(r, c));

    pm_.level = level_;
    pm_.w.assign(static_cast<size_t>(dim_), 0.0);
    bool real = true, planar = true;
    for (const auto& a : gens) {
        double im2 = 0.0;
        for (int j = 1; j < dim_; ++j) im2 += a[j] * a[j];
        if (im2 <= 1e-28 * (cd_norm2(a) + 1.0)) continue;
        real = false;
        if (!pm_.have_dir) {
            const double im = std::sqrt(im2);
            for (int j = 1; j < dim_; ++j) pm_.w[static_cast<size_t>(j)] = a[j] / im;
            pm_.have_dir = true;
        } else {
            double dot = 0.0;
            for (int j = 1; j < dim_; ++j) dot += a[j] * pm_.w[static_cast<size_t>(j)];
            double res2 = 0.0;
            for (int j = 1; j < dim_; ++j) {
                const double r = a[j] - dot * pm_.w[static_cast<size_t>(j)];
                res2 += r * r;
            }
            if (res2 > 1e-24 * im2) planar = false;
        }
    }
    closure_ = real ? Closure::Real : (planar ? Closure::Planar : Closure::Full);
}

/* Planar (and real) engine: the system closes on span{1, W} ~ C, so the
 * blocks are plain scalars of type S. */
template <typename S>
void Solver::solve_unit_planar(double thx, double tht, const std::vector<double>& targets,
                               bool neumann, unsigned nseed, UnitResult& out) const {
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
    const int nz = sc_.nz;
    const int ns = nz * s_;

    std::vector<double> thz(static_cast<size_t>(nz));
    for (int i = 0; i < nz; ++i) thz[static_cast<size_t>(i)] = thx + zeta_[static_cast<size_t>(i)] * q_;

    const S up = Scalarize<S>::fwd(pm_, uinv_);

    auto fhat = [&](double l, double r) {
        Mat f(s_, s_);
        const CDMatrix m = seed(l, r, tht);
        for (int a = 0; a < s_; ++a)
            for (int b = 0; b < s_; ++b) f(a, b) = Scalarize<S>::fwd(pm_, m.get(a, b));
        return f;
    };

    /* C[(i,a),(j,b)] = w_j u^{-1} F(th_z(j), th_z(i))_{ab}; the equation matrix
     * is p C for the first hierarchy and (p/4) C C for the second. */
    Mat c0 = Mat::Zero(ns, ns);
    if (separable_) {
        for (const auto& m : smodes_) {
            Mat ua(s_, s_);
            for (int a = 0; a < s_; ++a)
                for (int b = 0; b < s_; ++b) ua(a, b) = up * Scalarize<S>::fwd(pm_, m.amp.get(a, b));
            std::vector<double> el(static_cast<size_t>(nz));
            for (int i = 0; i < nz; ++i)
                el[static_cast<size_t>(i)] = std::exp(m.rate * thz[static_cast<size_t>(i)]);
            const double tf = std::exp(m.c * tht);
            for (int i = 0; i < nz; ++i)
                for (int j = 0; j < nz; ++j) {
                    const double g = w_[static_cast<size_t>(j)] * el[static_cast<size_t>(j)] *
                                     el[static_cast<size_t>(i)] * tf;
                    c0.block(i * s_, j * s_, s_, s_) += g * ua;
                }
        }
    } else {
        for (int i = 0; i < nz; ++i)
            for (int j = 0; j < nz; ++j)
                c0.block(i * s_, j * s_, s_, s_) =
                    (w_[static_cast<size_t>(j)] * up) *
                    fhat(thz[static_cast<size_t>(j)], thz[static_cast<size_t>(i)]);
    }

    Mat a;
    if (mkdv_)
        a = (sc_.p / 4.0) * (c0 * c0).eval();
    else
        a = sc_.p * c0;

    Mat rhs(ns, s_);
    for (int i = 0; i < nz; ++i)
        rhs.block(i * s_, 0, s_, s_) = fhat(thx, thz[static_cast<size_t>(i)]);

    Mat sys = Mat::Identity(ns, ns) - a;
    Eigen::PartialPivLU<Mat> lu(sys);
    out.rcond = rcond_estimate(lu, sys);
    Mat k = lu.solve(rhs);

    if (neumann) {
        std::mt19937_64 rng(nseed);
        std::normal_distribution<double> nd(0.0, 1.0);
        Vec v(ns);
        for (int i = 0; i < ns; ++i) v[i] = S(nd(rng));
        double rho = 0.0;
        v /= v.norm();
        for (int it = 0; it < 40; ++it) {
            Vec nv = a * v;
            const double r = nv.norm();
            if (it >= 35) rho = std::max(rho, r);
            if (r == 0.0) break;
            v = nv / r;
        }
        out.spectral = rho;
        if (rho < opt_.spectral_limit && rho > 0.0) {
            Mat y = rhs, term = rhs;
            for (int t = 0; t < opt_.neumann_max_terms; ++t) {
                term = (a * term).eval();
                y += term;
                if (term.cwiseAbs().maxCoeff() <= opt_.neumann_tol * y.cwiseAbs().maxCoeff()) break;
            }
            const double kn = k.cwiseAbs().maxCoeff();
            out.neumann = (y - k).cwiseAbs().maxCoeff() / (kn + 1e-300);
        }
    }

    Mat h;
    if (mkdv_) h = c0 * k;

    auto pack = [&](const Mat& blockcol, int i) {
        CDMatrix m(level_, s_);
        for (int r = 0; r < s_; ++r)
            for (int c = 0; c < s_; ++c)
                m.set(r, c, Scalarize<S>::back(pm_, blockcol(i * s_ + r, c)));
        return m;
    };

    out.ray.resize(static_cast<size_t>(nz));
    for (int i = 0; i < nz; ++i) out.ray[static_cast<size_t>(i)] = pack(k, i);
    if (mkdv_) {
        out.ray2.resize(static_cast<size_t>(nz));
        for (int i = 0; i < nz; ++i) out.ray2[static_cast<size_t>(i)] = pack(h, i);
    }

    /* Evaluate K (and the second kernel) at the requested external points and
     * track the end-slab to peak ratio of the truncated integrand. */
    const Mat& src = mkdv_ ? h : k;
    const double pfac = mkdv_ ? sc_.p / 4.0 : sc_.p;
    out.at.resize(targets.size());
    if (mkdv_) out.at2.resize(targets.size());
    for (size_t t = 0; t < targets.size(); ++t) {
        const double thy = targets[t];
        Mat acc = Mat::Zero(s_, s_);
        Mat acc2 = Mat::Zero(s_, s_);
        double peak = 0.0, end = 0.0;
        for (int j = 0; j < nz; ++j) {
            const Mat fj = fhat(thz[static_cast<size_t>(j)], thy);
            const double wj = w_[static_cast<size_t>(j)];
            acc += wj * (fj * src.block(j * s_, 0, s_, s_));
            if (mkdv_) acc2 += wj * (fj * k.block(j * s_, 0, s_, s_));
            const double mag = fj.cwiseAbs().maxCoeff() *
                               src.block(j * s_, 0, s_, s_).cwiseAbs().maxCoeff();
            peak = std::max(peak, mag);
            if (j == nz - 1) end = mag;
        }
        if (peak > 0.0) out.tail = std::max(out.tail, end / peak);
        Mat val = fhat(thx, thy) + pfac * (up * acc);
        out.at[t] = pack(val, 0);
        if (mkdv_) {
            Mat val2 = up * acc2;
            out.at2[t] = pack(val2, 0);
        }
    }
}

/* Generic engine: real-linear blocks over all components. */
void Solver::solve_unit_full(double thx, double tht, const std::vector<double>& targets,
                             bool neumann, unsigned nseed, UnitResult& out) const {
    const int nz = sc_.nz;
    const int bs = s_ * dim_;
    const int nsys = nz * bs;

    std::vector<double> thz(static_cast<size_t>(nz));
    for (int i = 0; i < nz; ++i) thz[static_cast<size_t>(i)] = thx + zeta_[static_cast<size_t>(i)] * q_;

    const Eigen::MatrixXd lu_inv = left_mult_matrix(uinv_);

    /* per-entry block of C: w_j L(u^{-1}) L(F_ab) */
    Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(nsys, nsys);
    for (int i = 0; i < nz; ++i)
        for (int j = 0; j < nz; ++j) {
            const CDMatrix f = seed(thz[static_cast<size_t>(j)], thz[static_cast<size_t>(i)], tht);
            for (int a = 0; a < s_; ++a)
                for (int b = 0; b < s_; ++b) {
                    const Eigen::MatrixXd blk =
                        w_[static_cast<size_t>(j)] * (lu_inv * left_mult_matrix(f.get(a, b)));
                    c0.block(i * bs + a * dim_, j * bs + b * dim_, dim_, dim_) += blk;
                }
        }

    Eigen::MatrixXd a;
    if (mkdv_)
        a = (sc_.p / 4.0) * (c0 * c0).eval();
    else
        a = sc_.p * c0;

    Eigen::MatrixXd rhs(nsys, s_);
    for (int i = 0; i < nz; ++i) {
        const CDMatrix f = seed(thx, thz[static_cast<size_t>(i)], tht);
        for (int r = 0; r < s_; ++r)
            for (int c = 0; c < s_; ++c)
                for (int m = 0; m < dim_; ++m)
                    rhs(i * bs + r * dim_ + m, c) = f.at(r, c, m);
    }

    Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(nsys, nsys) - a;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
    out.rcond = rcond_estimate(lu, sys);
    Eigen::MatrixXd k = lu.solve(rhs);

    if (neumann) {
        std::mt19937_64 rng(nseed);
        std::normal_distribution<double> nd(0.0, 1.0);
        Eigen::VectorXd v(nsys);
        for (int i = 0; i < nsys; ++i) v[i] = nd(rng);
        v /= v.norm();
        double rho = 0.0;
        for (int it = 0; it < 40; ++it) {
            Eigen::VectorXd nv = a * v;
            const double r = nv.norm();
            if (it >= 35) rho = std::max(rho, r);
            if (r == 0.0) break;
            v = nv / r;
        }
        out.spectral = rho;
        if (rho < opt_.spectral_limit && rho > 0.0) {
            Eigen::MatrixXd y = rhs, term = rhs;
            for (int t = 0; t < opt_.neumann_max_terms; ++t) {
                term = (a * term).eval();
                y += term;
                if (term.cwiseAbs().maxCoeff() <= opt_.neumann_tol * y.cwiseAbs().maxCoeff()) break;
            }
            const double kn = k.cwiseAbs().maxCoeff();
            out.neumann = (y - k).cwiseAbs().maxCoeff() / (kn + 1e-300);
        }
    }

    Eigen::MatrixXd h;
    if (mkdv_) h = c0 * k;

    auto unpack = [&](const Eigen::MatrixXd& src, int i) {
        CDMatrix m(level_, s_);
        for (int r = 0; r < s_; ++r)
            for (int c = 0; c < s_; ++c)
                for (int cm = 0; cm < dim_; ++cm) m.at(r, c, cm) = src(i * bs + r * dim_ + cm, c);
        return m;
    };

    out.ray.resize(static_cast<size_t>(nz));
    for (int i = 0; i < nz; ++i) out.ray[static_cast<size_t>(i)] = unpack(k, i);
    if (mkdv_) {
        out.ray2.resize(static_cast<size_t>(nz));
        for (int i = 0; i < nz; ++i) out.ray2[static_cast<size_t>(i)] = unpack(h, i);
    }

    const Eigen::MatrixXd& src = mkdv_ ? h : k;
    const double pfac = mkdv_ ? sc_.p / 4.0 : sc_.p;
    out.at.resize(targets.size());
    if (mkdv_) out.at2.resize(targets.size());
    for (size_t t = 0; t < targets.size(); ++t) {
        const double thy = targets[t];
        CDMatrix acc(level_, s_), acc2(level_, s_);
        double peak = 0.0, end = 0.0;
        for (int j = 0; j < nz; ++j) {
            const CDMatrix fj = seed(thz[static_cast<size_t>(j)], thy, tht);
            const double wj = w_[static_cast<size_t>(j)];
            const CDMatrix kj = unpack(src, j);
            acc = mat_add(acc, mat_scale(mat_mul(fj, kj), wj));
            if (mkdv_) acc2 = mat_add(acc2, mat_scale(mat_mul(fj, unpack(k, j)), wj));
            const double mag = mat_norm_inf(fj) * mat_norm_inf(kj);
            peak = std::max(peak, mag);
            if (j == nz - 1) end = mag;
        }
        if (peak > 0.0) out.tail = std::max(out.tail, end / peak);
        CDMatrix val = mat_add(seed(thx, thy, tht), mat_scale(mat_scale_left(uinv_, acc), pfac));
        out.at[t] = val;
        if (mkdv_) out.at2[t] = mat_scale_left(uinv_, acc2);
    }
}

DressingResult Solver::run() {
    const double hx = sc_.hx();

    const std::vector<Axis> ax_x = make_axes(sc_.sx, 0, sc_.nx, hx, sc_.x_min);
    const std::vector<Axis> ax_y =
        make_axes(sc_.sy, 1, sc_.ny, hx, sc_.patch_center - (sc_.ny - 1) / 2 * hx);
    const std::vector<Axis> ax_d = make_axes(sc_.sy, 1, sc_.ndelta, hx, -(sc_.ndelta - 1) / 2 * hx);
    std::vector<Axis> ax_t;
    for (const auto& a : active_components(sc_.st))
        ax_t.push_back(Axis{2, static_cast<int>(a[1]), sc_.nt, sc_.ht,
                            sc_.t_center - (sc_.nt - 1) / 2 * sc_.ht});
    const Axis ax_ray{3, 0, sc_.nz, hz_, 0.0};

    bool time_matters = false;
    for (const auto& m : sc_.modes)
        if (m.c != 0.0) time_matters = true;

    ValueSet xs, ts, ys, ds;
    enumerate_thetas(fam_, sc_.sx, 0, ax_x, xs);
    enumerate_thetas(fam_, sc_.sy, 1, ax_y, ys);
    enumerate_thetas(fam_, sc_.sy, 1, ax_d, ds);
    if (time_matters)
        enumerate_thetas(fam_, sc_.st, 2, ax_t, ts);
    else
        ts.add(0.0);
    xs.finalize();
    ys.finalize();
    ds.finalize();
    ts.finalize();

    const int nabs = ys.size(), nmov = ds.size();
    const size_t nunits = static_cast<size_t>(xs.size()) * ts.size();

    std::vector<UnitResult> units(nunits);
    size_t nstride = nunits;
    if (opt_.neumann_check)
        nstride = std::max<size_t>(1, nunits / std::max(1, opt_.neumann_subsample));

    auto work = [&](size_t lo, size_t step) {
        for (size_t uidx = lo; uidx < nunits; uidx += step) {
            const double thx = xs.at(static_cast<int>(uidx) / ts.size());
            const double tht = ts.at(static_cast<int>(uidx) % ts.size());
            std::vector<double> targets;
            targets.reserve(static_cast<size_t>(nabs + nmov + 1));
            for (int i = 0; i < nabs; ++i) targets.push_back(ys.at(i));
            for (int i = 0; i < nmov; ++i) targets.push_back(thx + ds.at(i));
            targets.push_back(thx);
            const bool nm = opt_.neumann_check && (uidx % nstride == 0);
            const unsigned nseed = 0x9e3779b9u + static_cast<unsigned>(uidx);
            if (closure_ == Closure::Real)
                solve_unit_planar<double>(thx, tht, targets, nm, nseed, units[uidx]);
            else if (closure_ == Closure::Planar)
                solve_unit_planar<std::complex<double>>(thx, tht, targets, nm, nseed, units[uidx]);
            else
                solve_unit_full(thx, tht, targets, nm, nseed, units[uidx]);
        }
    };

    const int nthreads = std::max(1, opt_.threads);
    if (nthreads == 1 || nunits < 2) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back(work, static_cast<size_t>(t), static_cast<size_t>(nthreads));
        for (auto& th : pool) th.join();
    }

    SolveStats st;
    st.closure = closure_;
    st.solves = nunits;
    for (const auto& u : units) {
        st.rcond_min = std::min(st.rcond_min, u.rcond);
        st.tail_ratio = std::max(st.tail_ratio, u.tail);
        st.spectral_max = std::max(st.spectral_max, u.spectral);
        if (u.neumann >= 0.0) st.neumann_gap = std::max(st.neumann_gap, u.neumann);
    }
    if (st.rcond_min < opt_.rcond_min) {
        std::ostringstream msg;
        msg << "solve_dressing: base system is numerically singular (rcond "
            << st.rcond_min << " < " << opt_.rcond_min << ")";
        throw SingularOperator(msg.str());
    }
    if (st.tail_ratio > sc_.eps_tail) {
        std::ostringstream msg;
        msg << "solve_dressing: truncated integrand does not decay on the ray"
               " (end/peak ratio "
            << st.tail_ratio << " > eps_tail " << sc_.eps_tail
            << "); extend z_max or check the mode family";
        throw TailNotDecayed(msg.str());
    }

    /* -------------------------- sample the grids -------------------------- */

    const int tsn = ts.size();
    auto unit_of = [&](double thx, double tht) -> const UnitResult& {
        const int ux = xs.index(thx);
        const int ut = time_matters ? ts.index(tht) : 0;
        return units[static_cast<size_t>(ux) * tsn + ut];
    };

    const int span0 = std::max(sigma_coord_span(sc_.sx), 1);
    const int span1 = std::max(sigma_coord_span(sc_.sy), 1);
    const int span2 = std::max(sigma_coord_span(sc_.st), 1);

    enum class YKind { Abs, Mov, Diag, Ray };
    auto fill = [&](GridFunction& gf, YKind kind, bool second) {
        const size_t n = gf.nsamples();
        std::vector<double> c0(static_cast<size_t>(span0), 0.0);
        std::vector<double> c1(static_cast<size_t>(span1), 0.0);
        std::vector<double> c2(static_cast<size_t>(span2), 0.0);
        for (size_t flat = 0; flat < n; ++flat) {
            const std::vector<int> mi = gf.multi_index(flat);
            std::fill(c0.begin(), c0.end(), 0.0);
            std::fill(c1.begin(), c1.end(), 0.0);
            std::fill(c2.begin(), c2.end(), 0.0);
            int rayi = 0;
            for (int k = 0; k < gf.naxes(); ++k) {
                const Axis& ax = gf.axis(k);
                if (ax.slot == 0) c0[static_cast<size_t>(ax.coord)] = ax.value(mi[k]);
                else if (ax.slot == 1) c1[static_cast<size_t>(ax.coord)] = ax.value(mi[k]);
                else if (ax.slot == 2) c2[static_cast<size_t>(ax.coord)] = ax.value(mi[k]);
                else rayi = mi[k];
            }
            const double thx = fam_.theta(0, c0);
            const double tht = fam_.theta(2, c2);
            const UnitResult& u = unit_of(thx, tht);
            const CDMatrix* val = nullptr;
            switch (kind) {
                case YKind::Abs: {
                    const int t = ys.index(fam_.theta(1, c1));
                    val = second ? &u.at2[static_cast<size_t>(t)] : &u.at[static_cast<size_t>(t)];
                    break;
                }
                case YKind::Mov: {
                    const int t = nabs + ds.index(fam_.theta(1, c1));
                    val = second ? &u.at2[static_cast<size_t>(t)] : &u.at[static_cast<size_t>(t)];
                    break;
                }
                case YKind::Diag: {
                    const int t = nabs + nmov;
                    val = second ? &u.at2[static_cast<size_t>(t)] : &u.at[static_cast<size_t>(t)];
                    break;
                }
                case YKind::Ray:
                    val = second ? &u.ray2[static_cast<size_t>(rayi)]
                                 : &u.ray[static_cast<size_t>(rayi)];
                    break;
            }
            gf.set(flat, *val);
        }
        gf.z_max = sc_.z_max;
        gf.tail_bound = st.tail_ratio;
    };

    auto cat = [](std::initializer_list<std::vector<Axis>> parts) {
        std::vector<Axis> all;
        for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
        return all;
    };

    DressingResult res;
    res.K = GridFunction(level_, s_, cat({ax_x, ax_y, ax_t}));
    res.Kmov = GridFunction(level_, s_, cat({ax_x, ax_d, ax_t}));
    res.Kray = GridFunction(level_, s_, cat({ax_x, {ax_ray}, ax_t}));
    res.g = GridFunction(level_, s_, cat({ax_x, ax_t}));
    fill(res.K, YKind::Abs, false);
    fill(res.Kmov, YKind::Mov, false);
    fill(res.Kray, YKind::Ray, false);
    fill(res.g, YKind::Diag, false);
    if (mkdv_) {
        res.K2 = GridFunction(level_, s_, cat({ax_x, ax_y, ax_t}));
        res.K2mov = GridFunction(level_, s_, cat({ax_x, ax_d, ax_t}));
        res.g2 = GridFunction(level_, s_, cat({ax_x, ax_t}));
        fill(res.K2, YKind::Abs, true);
        fill(res.K2mov, YKind::Mov, true);
        fill(res.g2, YKind::Diag, true);
    }
    res.stats = st;
    return res;
}

} // namespace

DressingResult solve_dressing(const Scenario& sc, const SolveOptions& opt) {
    sc.validate(false);
    Solver solver(sc, opt);
    return solver.run();
}

CDNumber scalar_product(const GridFunction& f, const GridFunction& g) {
    if (!same_layout(f, g)) throw ShapeMismatch("scalar_product: layouts differ");
    const int level = f.level();
    CDNumber acc(level);
    const size_t n = f.nsamples();
    const size_t es = static_cast<size_t>(f.s()) * f.s();
    const int dim = f.comp_dim();
    CDNumber a(level), b(level);
    for (size_t flat = 0; flat < n; ++flat) {
        /* trapezoid weight: half at each axis end */
        double wgt = 1.0;
        const std::vector<int> mi = f.multi_index(flat);
        for (int k = 0; k < f.naxes(); ++k) {
            const Axis& ax = f.axis(k);
            if (ax.n == 1) continue;
            wgt *= ax.h * ((mi[k] == 0 || mi[k] == ax.n - 1) ? 0.5 : 1.0);
        }
        const double* pf = f.sample(flat);
        const double* pg = g.sample(flat);
        for (size_t e = 0; e < es; ++e) {
            for (int j = 0; j < dim; ++j) {
                a[j] = pf[e * dim + j];
                b[j] = pg[e * dim + j];
            }
            acc = cd_add(acc, cd_scale(cd_mul(cd_conj(a), b), wgt));
        }
    }
    return acc;
}

double hilbert_norm(const GridFunction& f) {
    const CDNumber s = scalar_product(f, f);
    return std::sqrt(std::max(0.0, s[0]));
}

double right_linearity_gap(const Scenario& sc, unsigned seed) {
    sc.validate(false);
    const ModeFamily fam(sc);
    const double hz = sc.z_max / (sc.nz - 1);
    const std::vector<double> w = quad_weights(sc.rule, sc.nz, hz);
    const double q = fam.ray_speed();

    int span = sigma_coord_span(sc.sx);
    std::vector<double> v0(static_cast<size_t>(span), 0.0);
    for (const auto& a : active_components(sc.sx)) v0[static_cast<size_t>(a[1])] = a[2];
    const CDNumber uinv = cd_inv(ray_symbol(sc.sx, v0));

    const double thx = 0.5 * (sc.x_min + sc.x_max);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const int dim = dim_of(sc.level);

    std::vector<CDMatrix> h(static_cast<size_t>(sc.nz), CDMatrix(sc.level, sc.s));
    for (auto& m : h)
        for (int r = 0; r < sc.s; ++r)
            for (int c = 0; c < sc.s; ++c)
                for (int j = 0; j < dim; ++j) m.at(r, c, j) = nd(rng);
    CDNumber cst(sc.level);
    for (int j = 0; j < dim; ++j) cst[j] = nd(rng);

    auto apply = [&](const std::vector<CDMatrix>& f) {
        CDMatrix acc(sc.level, sc.s);
        for (int j = 0; j < sc.nz; ++j) {
            const CDMatrix fj = fam.pair_value(thx + j * hz * q, thx, 0.0);
            acc = mat_add(acc, mat_scale(mat_mul(fj, f[static_cast<size_t>(j)]),
                                         w[static_cast<size_t>(j)]));
        }
        return mat_scale(mat_scale_left(uinv, acc), sc.p);
    };

    std::vector<CDMatrix> hc(h.size(), CDMatrix(sc.level, sc.s));
    for (size_t i = 0; i < h.size(); ++i) hc[i] = mat_scale_right(h[i], cst);

    const CDMatrix lhs = apply(hc);
    const CDMatrix rhs = mat_scale_right(apply(h), cst);
    const double scale = mat_norm_inf(rhs) + 1e-300;
    return mat_norm_inf(mat_sub(lhs, rhs)) / scale;
}

GridFunction miura_transform(const GridFunction& v, const SigmaSpec& sx) {
    return gf_sub(gf_scale(gf_mul(v, v), -1.0), apply_sigma(v, sx));
}

} // namespace cdx
