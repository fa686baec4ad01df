#pragma once
#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace couette {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

inline constexpr const char* library_version = "0.1.0";

inline cplx expi(double theta) { return {std::cos(theta), std::sin(theta)}; }

// Complex number carried as m * exp(e). Keeps Airy products finite when the
// individual factors over- or underflow.
struct Scaled {
    cplx m{0.0, 0.0};
    double e = 0.0;

    cplx value() const {
        if (m == cplx{0.0, 0.0}) return {0.0, 0.0};
        if (e > 709.0) {
            const double inf = std::numeric_limits<double>::infinity();
            return {std::copysign(inf, m.real()), std::copysign(inf, m.imag())};
        }
        return m * std::exp(e);
    }
    double log_abs() const { return std::log(std::abs(m)) + e; }
};

inline Scaled operator*(const Scaled& a, const Scaled& b) { return {a.m * b.m, a.e + b.e}; }
inline Scaled operator/(const Scaled& a, const Scaled& b) { return {a.m / b.m, a.e - b.e}; }
inline Scaled operator*(const Scaled& a, cplx c) { return {a.m * c, a.e}; }
inline Scaled operator+(const Scaled& a, const Scaled& b) {
    if (a.m == cplx{}) return b;
    if (b.m == cplx{}) return a;
    if (a.e >= b.e) return {a.m + b.m * std::exp(b.e - a.e), a.e};
    return {a.m * std::exp(a.e - b.e) + b.m, b.e};
}
inline Scaled operator-(const Scaled& a, const Scaled& b) { return a + Scaled{-b.m, b.e}; }

// Gauss-Legendre rule on [-1, 1], full node set built from the Boost half rule.
struct GLRule {
    std::vector<double> x, w;
};

template <unsigned N>
const GLRule& gauss_legendre() {
    static const GLRule rule = [] {
        using G = boost::math::quadrature::gauss<double, N>;
        GLRule r;
        const auto& ab = G::abscissa();
        const auto& wt = G::weights();
        for (std::size_t i = ab.size(); i-- > 0;) {
            if (ab[i] == 0.0) continue;
            r.x.push_back(-ab[i]);
            r.w.push_back(wt[i]);
        }
        for (std::size_t i = 0; i < ab.size(); ++i) {
            r.x.push_back(ab[i]);
            r.w.push_back(wt[i]);
        }
        return r;
    }();
    return rule;
}

// Composite Gauss-Legendre over the breakpoints b[0] < b[1] < ... of a
// real parameter; f may return double or cplx.
template <unsigned N = 20, class F>
auto integrate_panels(F&& f, const std::vector<double>& breaks) {
    using R = decltype(f(0.0));
    const GLRule& g = gauss_legendre<N>();
    R sum{};
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double a = breaks[p], b = breaks[p + 1];
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        R part{};
        for (std::size_t i = 0; i < g.x.size(); ++i) part += g.w[i] * f(c + h * g.x[i]);
        sum += h * part;
    }
    return sum;
}

template <unsigned N = 20, class F>
auto integrate(F&& f, double a, double b, int panels = 1) {
    std::vector<double> br(panels + 1);
    for (int i = 0; i <= panels; ++i) br[i] = a + (b - a) * i / panels;
    return integrate_panels<N>(std::forward<F>(f), br);
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * double(i) / double(n - 1);
    return v;
}

// Breakpoints on [a, b] clustered toward a with ratio q between panel widths.
inline std::vector<double> graded_breaks(double a, double b, int panels, double q) {
    std::vector<double> br(panels + 1);
    double total = 0.0, w = 1.0;
    for (int i = 0; i < panels; ++i) { total += w; w *= q; }
    br[0] = a;
    w = (b - a) / total;
    for (int i = 0; i < panels; ++i) { br[i + 1] = br[i] + w; w *= q; }
    br[panels] = b;
    return br;
}

// Process-wide worker count; 0 means hardware concurrency.
inline std::atomic<unsigned>& thread_setting() {
    static std::atomic<unsigned> n{0};
    return n;
}

inline unsigned worker_count() {
    const unsigned s = thread_setting().load();
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return s == 0 ? hw : s;
}

// Runs body(i) for i in [0, n). Iterations must be independent.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const unsigned nt = std::min<std::size_t>(worker_count(), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) body(i);
        });
    for (auto& th : pool) th.join();
}

struct LineFit {
    double slope = 0.0, intercept = 0.0;
};

// Least-squares line through (x_i, y_i).
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    const double d = n * sxx - sx * sx;
    LineFit f;
    f.slope = (n * sxy - sx * sy) / d;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

// Slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) { lx[i] = std::log(x[i]); ly[i] = std::log(y[i]); }
    return fit_line(lx, ly).slope;
}

// Thomas algorithm for a complex tridiagonal system; sub[0] and sup[n-1] unused.
inline void solve_tridiagonal(const std::vector<cplx>& sub, const std::vector<cplx>& diag,
                              const std::vector<cplx>& sup, std::vector<cplx>& rhs) {
    const std::size_t n = diag.size();
    std::vector<cplx> c(n);
    cplx beta = diag[0];
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        c[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i + 1] * rhs[i + 1];
}

}  // namespace couette
