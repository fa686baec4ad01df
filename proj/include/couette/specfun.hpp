#pragma once
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <quadmath.h>

#include "couette/common.hpp"

// Complex Airy function Ai and Ai', real zeros of Ai, Gamma, and the Laplace
// transform of H_kappa(tau) = tau^kappa exp(-tau^3/12).
namespace couette::specfun {

struct AiryPair {
    Scaled ai;   // Ai(z)
    Scaled aip;  // Ai'(z), same exponent convention as ai
};

namespace detail {

using q128 = __float128;

struct QC {
    q128 re = 0, im = 0;
};
inline QC operator+(QC a, QC b) { return {a.re + b.re, a.im + b.im}; }
inline QC operator-(QC a, QC b) { return {a.re - b.re, a.im - b.im}; }
inline QC operator*(QC a, QC b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
inline QC operator*(QC a, q128 s) { return {a.re * s, a.im * s}; }
inline q128 qabs2(QC a) { return a.re * a.re + a.im * a.im; }

// Ai(0) and -Ai'(0) to quad precision.
inline const q128 ai0 = strtoflt128("0.355028053887817239260063186004183176397979174199", nullptr);
inline const q128 aip0 = strtoflt128("0.258819403792806798405183560189203963479091138354", nullptr);

// Maclaurin series in quad precision. Used only for |z| <= 10 where the
// largest term is below 1e9 * |Ai|, so 113-bit arithmetic leaves > 17 digits.
inline void maclaurin_q(cplx zd, cplx& ai, cplx& aip) {
    const QC z{zd.real(), zd.imag()};
    const QC z2 = z * z, z3 = z2 * z;
    // f = sum a_k z^{3k}, g = sum b_k z^{3k+1}
    QC f{1, 0}, g = z, fp{0, 0}, gp{1, 0};
    QC tf{1, 0}, tg = z;  // current terms a_k z^{3k}, b_k z^{3k+1}
    QC tfp{0, 0}, tgp{1, 0};
    const q128 eps = 1e-36Q;
    for (int k = 0; k < 400; ++k) {
        const q128 a = 1.0Q / ((3 * k + 2) * q128(3 * k + 3));
        const q128 b = 1.0Q / ((3 * k + 3) * q128(3 * k + 4));
        // derivative terms: d/dz z^{3k+3} = (3k+3) z^{3k+2}
        tfp = tf * z2 * (a * (3 * k + 3));
        tf = tf * z3 * a;
        tgp = tg * z2 * (b * (3 * k + 4));
        tg = tg * z3 * b;
        f = f + tf; g = g + tg; fp = fp + tfp; gp = gp + tgp;
        const q128 scale = qabs2(f) + qabs2(g) + 1;
        if (qabs2(tf) + qabs2(tg) + qabs2(tfp) + qabs2(tgp) < eps * eps * scale && k > 2) break;
    }
    const QC a = f * ai0 - g * aip0;
    const QC ap = fp * ai0 - gp * aip0;
    ai = {double(a.re), double(a.im)};
    aip = {double(ap.re), double(ap.im)};
}

// Lattice of (Ai, Ai') at spacing h on |z| <= radius, centers for Taylor
// re-centering. Built once and read-only afterwards.
struct Lattice {
    static constexpr double h = 0.5;
    static constexpr int half = 20;  // indices -half..half on each axis
    std::vector<cplx> ai, aip;
    std::vector<char> valid;

    Lattice() {
        const int n = 2 * half + 1;
        ai.assign(n * n, {});
        aip.assign(n * n, {});
        valid.assign(n * n, 0);
        for (int i = -half; i <= half; ++i)
            for (int j = -half; j <= half; ++j) {
                const cplx z0{i * h, j * h};
                if (std::abs(z0) > 9.8) continue;
                const int id = (i + half) * n + (j + half);
                maclaurin_q(z0, ai[id], aip[id]);
                valid[id] = 1;
            }
    }
    static const Lattice& get() {
        static const Lattice lat;
        return lat;
    }
};

// Taylor expansion about the nearest lattice point; |z| < 9.
inline void airy_taylor(cplx z, cplx& ai, cplx& aip) {
    const Lattice& L = Lattice::get();
    const int n = 2 * Lattice::half + 1;
    const int i = int(std::lround(z.real() / Lattice::h));
    const int j = int(std::lround(z.imag() / Lattice::h));
    const int id = (i + Lattice::half) * n + (j + Lattice::half);
    const cplx z0{i * Lattice::h, j * Lattice::h};
    const cplx d = z - z0;
    // c_{n+2} = (z0 c_n + c_{n-1}) / ((n+1)(n+2)) from Ai'' = z Ai
    cplx cm1{0, 0}, c0 = L.ai[id], c1 = L.aip[id];
    cplx s = c0 + c1 * d, sp = c1;
    cplx dn = d;    // d^{n}, n = 1
    cplx dnm1 = 1;  // d^{n-1}
    cplx cprev = c0, ccur = c1;
    cm1 = 0;
    int quiet = 0;
    for (int k = 1; k < 80; ++k) {
        // ccur = c_k, cprev = c_{k-1}; produce c_{k+1} from c_{k-1}, c_{k-2}
        const cplx cnext = (z0 * cprev + cm1) / double(k * (k + 1));
        cm1 = cprev;
        cprev = ccur;
        ccur = cnext;
        dnm1 = dn;
        dn *= d;
        const cplx term = ccur * dn, dterm = double(k + 1) * ccur * dnm1;
        s += term;
        sp += dterm;
        if (std::abs(term) <= 1e-18 * std::abs(s) && std::abs(dterm) <= 1e-18 * std::abs(sp)) {
            if (++quiet >= 3) break;
        } else {
            quiet = 0;
        }
    }
    ai = s;
    aip = sp;
}

// Asymptotic expansion for |z| >= 9, |arg z| <= 2pi/3.
inline AiryPair airy_asymptotic(cplx z) {
    const cplx zeta = (2.0 / 3.0) * std::pow(z, 1.5);
    const cplx inv = 1.0 / zeta;
    cplx su = 1.0, sv = 1.0;
    double u = 1.0;
    cplx p = 1.0;
    double last = 1.0;
    for (int k = 1; k < 60; ++k) {
        u *= double(6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (double(2 * k - 1) * 216.0 * k);
        const double v = -double(6 * k + 1) / (6 * k - 1) * u;
        p *= -inv;
        const cplx tu = u * p, tv = v * p;
        const double mag = std::abs(tv);
        if (mag > last) break;  // asymptotic series: stop at smallest term
        su += tu;
        sv += tv;
        last = mag;
        if (mag < 1e-17) break;
    }
    const double c = 0.5 / std::sqrt(pi);
    const cplx phase = expi(-zeta.imag());
    const cplx q = std::pow(z, 0.25);
    return {{c / q * su * phase, -zeta.real()}, {-c * q * sv * phase, -zeta.real()}};
}

}  // namespace detail

// Ai(z) and Ai'(z) as scaled values; exact for arguments of any size.
inline AiryPair airy_scaled(cplx z) {
    const double r = std::abs(z);
    if (r < 9.0) {
        cplx a, ap;
        detail::airy_taylor(z, a, ap);
        return {{a, 0.0}, {ap, 0.0}};
    }
    const double th = std::arg(z);
    if (std::abs(th) <= 2.0 * pi / 3.0) return detail::airy_asymptotic(z);
    // Ai(z) = -w Ai(w z) - conj(w) Ai(conj(w) z), w = exp(2 pi i / 3)
    const cplx w = expi(2.0 * pi / 3.0), wb = std::conj(w);
    const AiryPair p1 = detail::airy_asymptotic(w * z);
    const AiryPair p2 = detail::airy_asymptotic(wb * z);
    return {p1.ai * (-w) + p2.ai * (-wb), p1.aip * (-w * w) + p2.aip * (-wb * wb)};
}

inline cplx airy(cplx z) { return airy_scaled(z).ai.value(); }
inline cplx airy_deriv(cplx z) { return airy_scaled(z).aip.value(); }
inline double airy(double x) { return airy(cplx{x, 0.0}).real(); }
inline double airy_deriv(double x) { return airy_deriv(cplx{x, 0.0}).real(); }

// n-th negative zero of Ai, 1 <= n <= n_max.
inline double airy_zero(int n, int n_max = 64) {
    if (n < 1 || n > n_max)
        throw std::out_of_range("airy_zero: index " + std::to_string(n) + " outside [1, " +
                                std::to_string(n_max) + "]");
    const double t = 3.0 * pi * (4.0 * n - 1.0) / 8.0;
    const double seed = -std::pow(t, 2.0 / 3.0) * (1.0 + 5.0 / 48.0 / (t * t));
    const double hw = 0.25 * pi / std::sqrt(std::abs(seed));
    double lo = seed - hw, hi = seed + hw;
    double flo = airy(lo), fhi = airy(hi);
    if (flo * fhi > 0.0) throw std::runtime_error("airy_zero: seed bracket lost");
    double x = seed;
    for (int it = 0; it < 100; ++it) {
        const double f = airy(x), fp = airy_deriv(x);
        if (f == 0.0) return x;
        if ((f < 0) == (flo < 0)) { lo = x; flo = f; } else { hi = x; }
        double xn = x - f / fp;
        if (!(xn > std::min(lo, hi) && xn < std::max(lo, hi))) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) < 1e-15 * std::abs(x)) return xn;
        x = xn;
    }
    return x;
}

inline double gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("gamma: argument must be positive");
    return std::tgamma(x);
}

struct HkappaSpec {
    double kappa = 0.5;
};

enum class LaplaceMethod { quadrature, asymptotic };

namespace detail {

inline void check_kappa(const HkappaSpec& s) {
    if (!(s.kappa > -1.0)) throw std::domain_error("laplace_H: kappa must exceed -1");
}

// First Re-exponent crossing: smallest x with a*x + b*x^3 >= target.
inline double decay_cutoff(double a, double b, double target) {
    double x = 1e-3;
    while (a * x + b * x * x * x < target) x *= 1.25;
    return x;
}

}  // namespace detail

// Integral of H_kappa(tau) exp(-lambda tau) over tau > 0.
// quadrature: along the ray arg tau = -arg(lambda)/4, which keeps both
// exponentials decaying for |arg lambda| < 2pi/3 (arg = -pi/6 at the edge).
// asymptotic: the first n_terms terms of the large-|lambda| expansion.
inline cplx laplace_H(const HkappaSpec& spec, cplx lambda, int n_terms = 1,
                      LaplaceMethod method = LaplaceMethod::quadrature) {
    detail::check_kappa(spec);
    const double kap = spec.kappa;
    if (method == LaplaceMethod::asymptotic) {
        if (std::abs(std::arg(lambda)) >= 2.0 * pi / 3.0)
            throw std::domain_error("laplace_H: argument outside |arg| < 2pi/3");
        cplx s = 0.0;
        double c = 1.0;  // (-1/12)^m / m!
        for (int m = 0; m < n_terms; ++m) {
            s += c * std::tgamma(kap + 3 * m + 1) * std::exp(-(kap + 3.0 * m + 1.0) * std::log(lambda));
            c *= -1.0 / 12.0 / (m + 1);
        }
        return s;
    }
    if (lambda.imag() < 0.0) return std::conj(laplace_H(spec, std::conj(lambda), n_terms, method));
    const double arg = std::arg(lambda);
    if (arg >= 2.0 * pi / 3.0 || (arg == pi))
        throw std::domain_error("laplace_H: argument outside |arg| < 2pi/3");
    const double th = -arg / 4.0;
    const cplx rot = expi(th), lr = lambda * rot, rot3 = rot * rot * rot;
    const double a = lr.real(), b = rot3.real() / 12.0;
    const double xmax = detail::decay_cutoff(std::max(a, 0.0), b, 60.0 + 2.0 * std::abs(kap));
    const double umax = std::sqrt(xmax);
    // tau = rot * u^2; the u-integrand 2 u^{2 kappa + 1} is smooth for kappa = +-1/2
    auto f = [&](double u) -> cplx {
        const double x = u * u;
        if (x == 0.0) return 0.0;
        return 2.0 * std::pow(u, 2.0 * kap + 1.0) * std::exp(-lr * x - rot3 * (x * x * x / 12.0));
    };
    const double phase = std::abs(lr.imag()) * xmax + std::abs(rot3.imag()) * xmax * xmax * xmax / 12.0;
    const int panels = std::max(48, int(phase / 3.0) + 1);
    return std::exp(I * (th * (kap + 1.0))) * integrate<20>(f, 0.0, umax, panels);
}

// Remainder laplace_H - (n_terms-term expansion) for real lambda > 0, computed
// as the integral of tau^kappa e^{-lambda tau} [e^{-x} - sum_{m<n}(-x)^m/m!],
// x = tau^3/12. The bracket is summed as a series tail for x < 1 so that no
// cancellation between the transform and its expansion occurs.
inline double laplace_H_remainder(const HkappaSpec& spec, double lambda, int n_terms) {
    detail::check_kappa(spec);
    if (!(lambda > 0.0)) throw std::domain_error("laplace_H_remainder: lambda must be positive");
    const double kap = spec.kappa;
    auto bracket = [n_terms](double x) {
        if (x < 1.0) {
            double term = 1.0, s = 0.0;
            for (int m = 1; m <= n_terms; ++m) term *= -x / m;
            for (int m = n_terms; m < n_terms + 60; ++m) {
                s += term;
                if (std::abs(term) < 1e-20 * std::abs(s)) break;
                term *= -x / (m + 1);
            }
            return s;
        }
        double p = 0.0, term = 1.0;
        for (int m = 0; m < n_terms; ++m) { p += term; term *= -x / (m + 1); }
        return std::exp(-x) - p;
    };
    const double tmax = (80.0 + std::abs(kap) + 3.0 * n_terms * 4.0) / lambda;
    auto f = [&](double u) {
        const double t = u * u;
        if (t == 0.0) return 0.0;
        return 2.0 * std::pow(u, 2.0 * kap + 1.0) * std::exp(-lambda * t) * bracket(t * t * t / 12.0);
    };
    return integrate<20>(f, 0.0, std::sqrt(tmax), 64);
}

}  // namespace couette::specfun
