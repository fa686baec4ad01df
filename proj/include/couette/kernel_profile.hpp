#pragma once
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "couette/airy_spectral.hpp"
#include "couette/common.hpp"
#include "couette/field.hpp"
#include "couette/specfun.hpp"

// Attractor profile: boundary density h, boundary flux g, Fourier kernel
// f(k, eta) and the physical profile on a half-plane grid.
namespace couette::kernel {

// Coefficient rows a^q_j, q = 0 .. 3M+2, for the expansions
//   int_0^tau H_{-1/2}(tau-s) d_s^q h(s) ds = sum_j a^q_j H_{kappa_q + 3j}(tau)
// with kappa = 1/2, 5/2, 3/2 for q = 0, 1, 2 mod 3. Seed a^0_0 = i.
inline std::vector<std::vector<cplx>> taylor_coefficients(int M) {
    if (M < 0) throw std::invalid_argument("taylor_coefficients: M must be >= 0");
    std::vector<std::vector<cplx>> a;
    a.push_back({I});
    for (int m = 0; m <= M; ++m) {
        const std::vector<cplx>& r0 = a[3 * m];  // j = 0..2m
        std::vector<cplx> r1(2 * m + 1);
        for (int j = 0; j < 2 * m; ++j) r1[j] = -0.25 * r0[j] + (3.5 + 3.0 * j) * r0[j + 1];
        r1[2 * m] = -0.25 * r0[2 * m];
        std::vector<cplx> r2(2 * m + 2);
        r2[0] = 2.5 * r1[0];
        for (int j = 1; j <= 2 * m; ++j) r2[j] = (2.5 + 3.0 * j) * r1[j] - 0.25 * r1[j - 1];
        r2[2 * m + 1] = -0.25 * r1[2 * m];
        a.push_back(r1);
        a.push_back(r2);
        if (m == M) break;
        std::vector<cplx> r3(2 * m + 3);
        r3[0] = 1.5 * r2[0];
        for (int j = 1; j <= 2 * m + 1; ++j) r3[j] = (1.5 + 3.0 * j) * r2[j] - 0.25 * r2[j - 1];
        r3[2 * m + 2] = -0.25 * r2[2 * m + 1];
        a.push_back(r3);
    }
    return a;
}

// d_s^{3m} h(0) = a^{3m}_0 / 2, m = 0..M; the other derivatives vanish.
inline std::vector<cplx> taylor_derivatives(int M) {
    const auto a = taylor_coefficients(M);
    std::vector<cplx> d(M + 1);
    for (int m = 0; m <= M; ++m) d[m] = 0.5 * a[3 * m][0];
    return d;
}

inline cplx taylor_eval(const std::vector<cplx>& d3m, double s) {
    cplx sum = 0;
    double term = 1.0;  // s^{3m} / (3m)!
    for (std::size_t m = 0; m < d3m.size(); ++m) {
        sum += d3m[m] * term;
        term *= s * s * s / double((3 * m + 1) * (3 * m + 2) * (3 * m + 3));
    }
    return sum;
}

enum class HMethod { volterra, laplace_inversion };

inline std::string to_string(HMethod m) { return m == HMethod::volterra ? "volterra" : "laplace-inversion"; }

// h(s) on a uniform grid, Taylor polynomial below s_pin.
struct BoundaryDensity {
    double ds = 0.0;
    std::vector<cplx> h;       // h(j ds)
    std::vector<cplx> taylor;  // d_s^{3m} h(0)
    double s_pin = 0.3;
    HMethod method = HMethod::volterra;
    double residual = 0.0;     // max |LHS - RHS| of the integral equation on the grid

    double s_max() const { return ds * double(h.size() - 1); }

    cplx operator()(double s) const {
        if (s < 0.0 || s > s_max() * (1.0 + 1e-12))
            throw std::out_of_range("BoundaryDensity: s outside the solved range");
        if (s <= s_pin) return taylor_eval(taylor, s);
        // four-point Lagrange interpolation
        const std::size_t n = h.size();
        long j = long(std::floor(s / ds)) - 1;
        j = std::clamp<long>(j, 0, long(n) - 4);
        const double x = s / ds - double(j);
        const double l0 = -(x - 1) * (x - 2) * (x - 3) / 6.0, l1 = x * (x - 2) * (x - 3) / 2.0;
        const double l2 = -x * (x - 1) * (x - 3) / 2.0, l3 = x * (x - 1) * (x - 2) / 6.0;
        return l0 * h[j] + l1 * h[j + 1] + l2 * h[j + 2] + l3 * h[j + 3];
    }
};

namespace detail {

inline double E3(double x) { return std::exp(-x * x * x / 12.0); }

// Product integration with piecewise-linear E(tau - s) h(s) and exact
// moments of (tau - s)^{-1/2}; nodes s <= s_pin are fixed by the Taylor data.
inline std::vector<cplx> volterra_solve(double s_max, std::size_t n, const std::vector<cplx>& taylor,
                                        double s_pin, double& residual) {
    const double d = s_max / double(n - 1);
    std::vector<cplx> h(n);
    std::vector<double> E(n), w0(n), w1(n);
    for (std::size_t i = 0; i < n; ++i) E[i] = E3(d * double(i));
    // weights depend only on the offset q = i - j (a = q d, b = (q-1) d)
    for (std::size_t q = 1; q < n; ++q) {
        const double a = d * double(q), b = d * double(q - 1);
        const double I0 = 2.0 * (std::sqrt(a) - std::sqrt(b));
        const double I1 = (2.0 / 3.0) * (a * std::sqrt(a) - b * std::sqrt(b));
        w0[q] = (I1 - b * I0) / d;  // node j  (far end)
        w1[q] = (a * I0 - I1) / d;  // node j+1
    }
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = d * double(i);
        if (tau <= s_pin || i == 0) { h[i] = taylor_eval(taylor, tau); continue; }
        cplx acc = 0;
        for (std::size_t j = 0; j < i; ++j) {
            const std::size_t q = i - j;
            acc += w0[q] * E[q] * h[j];
            if (j + 1 < i) acc += w1[q] * E[q - 1] * h[j + 1];
        }
        const cplx rhs = I * std::sqrt(tau) * E[i];
        h[i] = (rhs - acc) / (w1[1] * E[0]);
    }
    // residual on pinned nodes measures Taylor/quadrature consistency
    for (std::size_t i = 1; i < n && d * double(i) <= s_pin; ++i) {
        cplx acc = 0;
        for (std::size_t j = 0; j < i; ++j) {
            const std::size_t q = i - j;
            acc += w0[q] * E[q] * h[j] + w1[q] * E[q - 1] * h[j + 1];
        }
        residual = std::max(residual, std::abs(acc - I * std::sqrt(d * double(i)) * E[i]));
    }
    return h;
}

// Laplace transform of h: i L[H_{1/2}] / L[H_{-1/2}].
inline cplx laplace_h(cplx lambda) {
    using namespace specfun;
    const bool far = std::abs(lambda) > 40.0;
    const LaplaceMethod m = far ? LaplaceMethod::asymptotic : LaplaceMethod::quadrature;
    const int nt = far ? 10 : 1;
    return I * laplace_H({0.5}, lambda, nt, m) / laplace_H({-0.5}, lambda, nt, m);
}

// Bromwich integral on the rays sigma0 + r e^{+-i phi}; h is purely
// imaginary, so h(s) = -(i/pi) Re J(s), J = integral on the upper ray.
inline std::vector<cplx> laplace_solve(double s_max, std::size_t n, const std::vector<cplx>& taylor, double s_pin) {
    const double phi = 0.6 * pi, sigma0 = 1.0;
    const double rmax = 110.0 / s_pin;
    std::vector<double> br{0.0};
    while (br.back() < rmax) {
        const double r = br.back();
        br.push_back(std::min(rmax, r + std::max(0.8, 0.07 * r)));
    }
    const GLRule& g = gauss_legendre<20>();
    std::vector<cplx> lam, wf;
    const cplx dir = expi(phi);
    for (std::size_t p = 0; p + 1 < br.size(); ++p) {
        const double c = 0.5 * (br[p] + br[p + 1]), hw = 0.5 * (br[p + 1] - br[p]);
        for (std::size_t i = 0; i < g.x.size(); ++i) lam.push_back(sigma0 + (c + hw * g.x[i]) * dir);
        for (std::size_t i = 0; i < g.x.size(); ++i) wf.push_back(hw * g.w[i] * dir);
    }
    std::vector<cplx> F(lam.size());
    parallel_for(lam.size(), [&](std::size_t i) { F[i] = laplace_h(lam[i]) * wf[i]; });
    const double d = s_max / double(n - 1);
    std::vector<cplx> h(n);
    parallel_for(n, [&](std::size_t j) {
        const double s = d * double(j);
        if (s <= s_pin) { h[j] = taylor_eval(taylor, s); return; }
        cplx J = 0;
        for (std::size_t i = 0; i < lam.size(); ++i) J += std::exp(lam[i] * s) * F[i];
        h[j] = -(I / pi) * J.real();
    });
    return h;
}

}  // namespace detail

// Solves int_0^tau (tau-s)^{-1/2} e^{-(tau-s)^3/12} h(s) ds = i tau^{1/2} e^{-tau^3/12}.
// richardson: combine with a half-resolution Volterra solve to cancel the
// O(ds^2) error (n_points - 1 must then be even).
inline BoundaryDensity solve_h(double s_max = 10.0, std::size_t n_points = 4001,
                               HMethod method = HMethod::volterra, bool richardson = true) {
    if (s_max < 6.0) throw std::invalid_argument("solve_h: s_max must be >= 6");
    if (n_points < 200) throw std::invalid_argument("solve_h: n_points must be >= 200");
    BoundaryDensity b;
    b.taylor = taylor_derivatives(5);
    b.method = method;
    b.ds = s_max / double(n_points - 1);
    if (method == HMethod::laplace_inversion) {
        b.h = detail::laplace_solve(s_max, n_points, b.taylor, b.s_pin);
        return b;
    }
    double res = 0.0;
    b.h = detail::volterra_solve(s_max, n_points, b.taylor, b.s_pin, res);
    b.residual = res;
    if (richardson && (n_points - 1) % 2 == 0) {
        double res2 = 0.0;
        const auto coarse = detail::volterra_solve(s_max, (n_points - 1) / 2 + 1, b.taylor, b.s_pin, res2);
        BoundaryDensity c;
        c.h = coarse;
        c.ds = 2.0 * b.ds;
        c.taylor = b.taylor;
        c.s_pin = b.s_pin;
        std::vector<cplx> corr(b.h.size());
        for (std::size_t i = 0; i < b.h.size(); ++i) {
            const double s = b.ds * double(i);
            corr[i] = s <= b.s_pin ? b.h[i] : b.h[i] + (b.h[i] - c(s)) / 3.0;
        }
        b.h = corr;
    }
    return b;
}

// g(k) = sgn(k) |k| h(|k|^{2/3}), odd in k.
inline cplx g_of_k(const BoundaryDensity& h, double k) {
    if (k == 0.0) return 0.0;
    const double ak = std::abs(k);
    return (k > 0 ? 1.0 : -1.0) * ak * h(std::pow(ak, 2.0 / 3.0));
}

// Exponent of the characteristic kernel at xi = l/k in (0, 1).
inline double kernel_exponent(double k, double eta, double xi) {
    const double p = k + eta;
    return -p * p * (1.0 - std::pow(xi, 2.0 / 3.0)) + k * p * (1.0 - std::pow(xi, 4.0 / 3.0)) -
           k * k * (1.0 - xi * xi) / 3.0;
}

// Upper bound of kernel_exponent: -(1 - xi^{2/3}) eta^2 / 4.
inline double kernel_exponent_bound(double eta, double xi) { return -0.25 * (1.0 - std::pow(xi, 2.0 / 3.0)) * eta * eta; }

inline double kernel_K(double k, double eta, double xi) {
    if (!(xi > 0.0 && xi < 1.0)) throw std::domain_error("kernel_K: xi must lie in (0, 1)");
    return std::pow(xi, -1.0 / 3.0) * std::exp(kernel_exponent(k, eta, xi));
}

namespace detail {

// Breakpoints on [0, 1] in eps = 1 - (l/k)^{2/3}: geometric toward 0 where
// the factor exp(-eps eta^2) concentrates, uniform spacing to follow h.
inline std::vector<double> eps_breaks(double k, double eta) {
    std::vector<double> br{0.0};
    const double e0 = 0.05 / (1.0 + eta * eta);
    const double step = std::min(0.1, 0.4 / std::max(1.0, std::pow(k, 2.0 / 3.0)));
    double e = e0;
    while (e < step) { br.push_back(e); e *= 2.0; }
    for (double x = step; x < 1.0 - 1e-12; x += step) br.push_back(x);
    br.push_back(1.0);
    return br;
}

}  // namespace detail

// f(k, eta) with the l-integral written in eps = 1 - (l/|k|)^{2/3}:
//   k > 0: -2i(k+eta) e^{-(eta+k/2)^2 - k^2/12}
//          + k int_0^1 exp(-eps (eta + eps k/2)^2 - k^2 eps^3/12) h(k^{2/3}(1-eps)) deps
// and f(k, eta) = -f(-k, -eta) for k < 0.
inline cplx fhat(const BoundaryDensity& h, double k, double eta) {
    if (k < 0.0) return -fhat(h, -k, -eta);
    const cplx lead = -2.0 * I * (k + eta) * std::exp(-(eta + 0.5 * k) * (eta + 0.5 * k) - k * k / 12.0);
    if (k == 0.0) return lead;
    const double k23 = std::pow(k, 2.0 / 3.0);
    auto f = [&](double e) -> cplx {
        const double q = eta + 0.5 * e * k;
        return std::exp(-e * q * q - k * k * e * e * e / 12.0) * h(k23 * (1.0 - e));
    };
    return lead + k * integrate_panels<20>(f, detail::eps_breaks(k, eta));
}

// Integral of f(k, .) over the real line by eta = tan(theta); f decays like 1/eta^2.
inline cplx fhat_eta_integral(const BoundaryDensity& h, double k, int panels = 64) {
    auto f = [&](double th) -> cplx {
        const double c = std::cos(th);
        return fhat(h, k, std::tan(th)) / (c * c);
    };
    return integrate<20>(f, -0.5 * pi, 0.5 * pi, panels);
}

// Horizontal Fourier transform of the profile at wavenumber k and height
// Y >= 0 (inverse transform in eta of f, with eps = v^2):
//   (Y - ik) e^{-Y^2/4 - ikY/2 - k^2/12} / (2 sqrt(pi))
//   + (k/sqrt(pi)) int_0^1 exp(-Y^2/(4v^2) - ik v^2 Y/2 - k^2 v^6/12) h(k^{2/3}(1-v^2)) dv
// Conjugate for k < 0 (the profile is real).
class KernelSlice {
public:
    KernelSlice(const BoundaryDensity& h, double k, int panels = 40) : k_(std::abs(k)), conj_(k < 0) {
        const GLRule& g = gauss_legendre<20>();
        const double k23 = std::pow(k_, 2.0 / 3.0);
        for (int p = 0; p < panels; ++p)
            for (std::size_t i = 0; i < g.x.size(); ++i) {
                const double v = (p + 0.5 + 0.5 * g.x[i]) / panels;
                v_.push_back(v);
                wh_.push_back(0.5 / panels * g.w[i] * std::exp(-k_ * k_ * std::pow(v, 6) / 12.0) *
                              (k_ == 0.0 ? cplx{} : h(k23 * (1.0 - v * v))));
            }
    }

    cplx operator()(double Y) const {
        const double k = k_;
        cplx val = (Y - I * k) * std::exp(cplx{-Y * Y / 4.0 - k * k / 12.0, -k * Y / 2.0}) / (2.0 * std::sqrt(pi));
        if (k > 0.0) {
            cplx s = 0;
            for (std::size_t i = 0; i < v_.size(); ++i) {
                const double v = v_[i], v2 = v * v;
                if (Y > 0.0 && Y * Y / (4.0 * v2) > 700.0) continue;
                s += wh_[i] * std::exp(cplx{-(Y > 0.0 ? Y * Y / (4.0 * v2) : 0.0), -k * v2 * Y / 2.0});
            }
            val += k / std::sqrt(pi) * s;
        }
        return conj_ ? std::conj(val) : val;
    }

private:
    double k_;
    bool conj_;
    std::vector<double> v_;
    std::vector<cplx> wh_;
};

struct KernelProfile {
    HalfPlaneField omega;
    double M2 = 0.0;
    double residual = 0.0;        // ||L Omega|| / ||Omega||, filled by the caller with the operator
    double boundary_max = 0.0;    // max |Omega(X, 0)| / max |Omega|
    double imag_max = 0.0;        // realness diagnostic of the inverse transform
    double tail_fraction = 0.0;   // |slice at k_max| / |slice at 0| on the summation grid
    int oversample = 1;           // summation grid is this many times finer in X
    bool flagged = false;
};

// Second moment of a field: integral of Y * Omega (trapezoid in Y, periodic sum in X).
inline double second_moment(const HalfPlaneField& f) {
    const auto& g = f.grid;
    double s = 0.0;
    for (int j = 0; j <= g.NY; ++j) {
        double row = 0.0;
        for (int i = 0; i < g.NX; ++i) row += f.at(i, j);
        const double w = (j == 0 || j == g.NY) ? 0.5 : 1.0;
        s += w * g.Y(j) * row;
    }
    return s * g.dX() * g.dY();
}

// Oversampling factor for build_kernel: doubles until the finest wavenumber reaches
// k^{2/3} >= 28 (slices there are below 1e-14 of the k = 0 slice) or the h grid ends.
inline int auto_oversample(const HalfPlaneGrid& g, const BoundaryDensity& h) {
    int q = 1;
    auto s_of = [&](int qq) { return std::pow(g.k(qq * g.NX / 2), 2.0 / 3.0); };
    while (s_of(q) < 28.0 && s_of(2 * q) <= h.s_max()) q *= 2;
    return q;
}

// Real field on g from its horizontal Fourier slices slice(k, Ys) at k >= 0. The slices are
// summed on an X grid q times finer and then subsampled, so grid values are point values of
// the field rather than a band-limited projection whose Gibbs ripple would dominate
// polynomially weighted norms. The Nyquist mode of the fine grid is dropped so the
// inverse stays real. Returns the fine-grid spectrum in spec_out when given.
template <class SliceFn>
HalfPlaneField field_from_slices(const HalfPlaneGrid& g, int q, SliceFn&& slice, std::vector<cplx>* spec_out = nullptr) {
    if (g.NX % 2) throw std::invalid_argument("field_from_slices: NX must be even");
    HalfPlaneGrid fine = g;
    fine.NX = g.NX * q;
    const int nk = fine.NX / 2 + 1;
    std::vector<double> Ys(g.rows());
    for (int j = 0; j <= g.NY; ++j) Ys[j] = g.Y(j);
    std::vector<cplx> spec(std::size_t(nk) * g.rows());
    parallel_for(nk - 1, [&](std::size_t m) {
        const std::vector<cplx> col = slice(fine.k(int(m)), Ys);
        for (int j = 0; j <= g.NY; ++j) spec[std::size_t(j) * nk + m] = col[j];
    });
    const HalfPlaneField full = inverse_rows(fine, spec);
    HalfPlaneField out(g);
    for (int j = 0; j <= g.NY; ++j)
        for (int i = 0; i < g.NX; ++i) out.at(i, j) = full.at(q * i, j);
    if (spec_out) *spec_out = std::move(spec);
    return out;
}

// Profile on the grid from its (k, Y) slices, see field_from_slices.
inline KernelProfile build_kernel(const HalfPlaneGrid& g, const BoundaryDensity& h, int oversample = 0,
                                  int panels = 40) {
    if (g.NX % 2) throw std::invalid_argument("build_kernel: NX must be even");
    const int q = oversample > 0 ? oversample : auto_oversample(g, h);
    const int nk = g.NX * q / 2 + 1;
    if (std::pow(g.k(g.NX * q / 2), 2.0 / 3.0) > h.s_max())
        throw std::out_of_range("build_kernel: k range exceeds the h grid");
    std::vector<cplx> spec;
    auto slice = [&](double k, const std::vector<double>& Ys) {
        const KernelSlice ks(h, k, panels);
        std::vector<cplx> col(Ys.size());
        for (std::size_t j = 0; j < Ys.size(); ++j) col[j] = ks(Ys[j]);
        return col;
    };
    KernelProfile kp{field_from_slices(g, q, slice, &spec)};
    kp.oversample = q;
    double mx = 0.0, b = 0.0;
    for (double v : kp.omega.v) mx = std::max(mx, std::abs(v));
    for (int i = 0; i < g.NX; ++i) b = std::max(b, std::abs(kp.omega.at(i, 0)));
    kp.boundary_max = b / mx;
    for (int i = 0; i < g.NX; ++i) kp.omega.at(i, 0) = 0.0;  // Dirichlet row
    kp.M2 = second_moment(kp.omega);
    // the k = 0 slice is real; its imaginary part measures the slice quadrature
    double im = 0.0;
    for (int j = 0; j <= g.NY; ++j) im = std::max(im, std::abs(spec[std::size_t(j) * nk].imag()));
    kp.imag_max = im;
    double top = 0.0, base = 0.0;
    for (int j = 0; j <= g.NY; ++j) {
        top = std::max(top, std::abs(spec[std::size_t(j) * nk + nk - 2]));
        base = std::max(base, std::abs(spec[std::size_t(j) * nk]));
    }
    kp.tail_fraction = top / base;
    kp.flagged = kp.tail_fraction > 1e-6;
    return kp;
}

// Partial sums of the Airy-series slice at wavenumber l and height Y:
//   |l|^{2/3} sum_{n<=N} A_n^{-2} exp(e^{i pi/3 s} xi_n |l|^{2/3})
//                        Ai(e^{i pi/6 s} |l|^{1/3} Y + xi_n) Ai'(xi_n),  s = sgn(l)
struct SeriesProbe {
    std::vector<cplx> partial;   // partial sums S_1..S_N
    cplx cesaro = 0;             // mean of the partial sums
    std::vector<double> term_abs;
};

inline SeriesProbe conjecture_series(double l, double Y, int N) {
    if (l == 0.0) throw std::invalid_argument("conjecture_series: l must be nonzero");
    const double s = l > 0 ? 1.0 : -1.0, al = std::abs(l);
    SeriesProbe r;
    cplx sum = 0, acc = 0;
    for (int n = 1; n <= N; ++n) {
        const double xi = specfun::airy_zero(n, std::max(N, 64));
        const cplx A2 = spectral::normalization_integral(xi, s);
        const cplx term = std::pow(al, 2.0 / 3.0) / A2 * std::exp(expi(s * pi / 3.0) * xi * std::pow(al, 2.0 / 3.0)) *
                          specfun::airy(expi(s * pi / 6.0) * std::cbrt(al) * Y + xi) * specfun::airy_deriv(xi);
        sum += term;
        acc += sum;
        r.partial.push_back(sum);
        r.term_abs.push_back(std::abs(term));
    }
    r.cesaro = acc / double(N);
    return r;
}

// Horizontal Fourier slice of the n-th series term without its coefficient:
//   |l|^{2/3} exp(e^{i pi/3 s} xi_n |l|^{2/3}) Ai(e^{i pi/6 s} |l|^{1/3} Y + xi_n),  s = sgn(l).
inline std::vector<cplx> series_term_slice(int n, double l, const std::vector<double>& Ys) {
    std::vector<cplx> out(Ys.size());
    if (l == 0.0) return out;
    const double s = l > 0 ? 1.0 : -1.0, al = std::abs(l), xi = specfun::airy_zero(n, std::max(n, 64));
    const cplx pre = std::pow(al, 2.0 / 3.0) * std::exp(expi(s * pi / 3.0) * xi * std::pow(al, 2.0 / 3.0));
    for (std::size_t j = 0; j < Ys.size(); ++j) out[j] = pre * specfun::airy(expi(s * pi / 6.0) * std::cbrt(al) * Ys[j] + xi);
    return out;
}

// The n-th series term as a real field on g (oversampled like build_kernel).
inline HalfPlaneField series_term_field(const HalfPlaneGrid& g, int n, int oversample = 4) {
    return field_from_slices(g, oversample, [n](double k, const std::vector<double>& Ys) { return series_term_slice(n, k, Ys); });
}

}  // namespace couette::kernel
