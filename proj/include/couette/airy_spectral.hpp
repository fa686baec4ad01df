#pragma once
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "couette/common.hpp"
#include "couette/specfun.hpp"

// Eigen-system of nu (d_y^2 - k^2) - i k y on the half-line, Dirichlet at 0.
namespace couette::spectral {

// Samples on y >= 0 with quadrature weights w for the integral over the grid.
struct HalfLineSamples {
    std::vector<double> y, w;
    std::vector<cplx> v;

    std::size_t size() const { return y.size(); }
    bool uniform() const { return uniform_step > 0.0; }
    double uniform_step = 0.0;  // > 0 iff y is an equispaced grid starting at 0

    // Equispaced grid 0..ymax with Simpson weights (intervals forced even).
    static HalfLineSamples uniform_grid(double ymax, std::size_t intervals) {
        if (intervals % 2) ++intervals;
        HalfLineSamples s;
        const double h = ymax / double(intervals);
        s.uniform_step = h;
        s.y.resize(intervals + 1);
        s.w.resize(intervals + 1);
        s.v.assign(intervals + 1, {});
        for (std::size_t i = 0; i <= intervals; ++i) {
            s.y[i] = h * double(i);
            s.w[i] = (i == 0 || i == intervals) ? h / 3.0 : (i % 2 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
        }
        return s;
    }

    // Composite 20-point Gauss-Legendre nodes on [0, ymax].
    static HalfLineSamples gl_panels(double ymax, int panels) {
        const GLRule& g = gauss_legendre<20>();
        HalfLineSamples s;
        const double h = ymax / panels;
        for (int p = 0; p < panels; ++p)
            for (std::size_t i = 0; i < g.x.size(); ++i) {
                s.y.push_back(h * (p + 0.5 + 0.5 * g.x[i]));
                s.w.push_back(0.5 * h * g.w[i]);
            }
        s.v.assign(s.y.size(), {});
        return s;
    }

    template <class F>
    HalfLineSamples& fill(F&& f) {
        for (std::size_t i = 0; i < y.size(); ++i) v[i] = f(y[i]);
        return *this;
    }

    double l2() const {
        double s = 0;
        for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * std::norm(v[i]);
        return std::sqrt(s);
    }
};

// Integral of f * g over the grid (no conjugation).
inline cplx bilinear(const HalfLineSamples& f, const std::vector<cplx>& g) {
    cplx s = 0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f.w[i] * f.v[i] * g[i];
    return s;
}

struct EigenMode {
    int n = 1;
    double xi = 0;     // n-th zero of Ai
    cplx lambda;       // eigenvalue
    cplx A2;           // normalization integral
    cplx C;            // principal sqrt of (|k|/nu)^{1/3} / A2
    double nu = 1, k = 1;

    double sgn() const { return k > 0 ? 1.0 : -1.0; }
    double scale() const { return std::cbrt(std::abs(k) / nu); }
};

// Airy-scaled extent beyond which |Ai(e^{i s pi/6} y + xi)|^2 stays below
// 1e-14 of its peak on the real y axis (decay like exp(-0.47 y^{3/2})).
inline double airy_decay_extent(double xi, double sgn) {
    const cplx rot = expi(sgn * pi / 6.0);
    double peak = 0.0;
    for (double y = 0.0;; y += 0.25) {
        const double m = std::norm(specfun::airy(rot * y + xi));
        peak = std::max(peak, m);
        if (y > 2.0 * std::sqrt(std::abs(xi)) + 2.0 && m < 1e-14 * peak) return y;
    }
}

// Integral of Ai(e^{i s pi/6} y + xi)^2 over y > 0 by quadrature along the real y axis.
// The integrand grows like e^{1.11 n} before decaying, so this loses all digits
// beyond n ~ 10; it serves only as a check of the closed form below.
inline cplx normalization_quadrature(double xi, double sgn) {
    const cplx rot = expi(sgn * pi / 6.0);
    auto f = [&](double y) { const cplx a = specfun::airy(rot * y + xi); return a * a; };
    const double ymax = airy_decay_extent(xi, sgn);
    return integrate<20>(f, 0.0, ymax, int(std::ceil(ymax / 0.25)));
}

// Same integral in closed form: rotating the ray onto the real axis and using
// (u Ai^2 - Ai'^2)' = Ai^2 gives e^{-i s pi/6} Ai'(xi)^2 at a zero xi of Ai.
inline cplx normalization_integral(double xi, double sgn) {
    const double d = specfun::airy_deriv(xi);
    return expi(-sgn * pi / 6.0) * d * d;
}

inline EigenMode eigen_mode(int n, double nu, double k, int n_max = 64) {
    if (n < 1) throw std::invalid_argument("eigen_mode: n must be >= 1");
    if (!(nu > 0)) throw std::invalid_argument("eigen_mode: nu must be positive");
    if (k == 0.0) throw std::invalid_argument("eigen_mode: k = 0 has no Airy eigen-system");
    EigenMode m;
    m.n = n;
    m.nu = nu;
    m.k = k;
    m.xi = specfun::airy_zero(n, std::max(n_max, n));
    const double ak = std::abs(k);
    m.lambda = -nu * k * k + expi(m.sgn() * pi / 3.0) * std::cbrt(nu) * std::pow(ak, 2.0 / 3.0) * m.xi;
    m.A2 = normalization_integral(m.xi, m.sgn());
    m.C = std::sqrt(m.scale() / m.A2);
    return m;
}

inline cplx eigenfunction(const EigenMode& m, double y) {
    return m.C * specfun::airy(expi(m.sgn() * pi / 6.0) * (m.scale() * y) + m.xi);
}

// Adjoint eigenfunction, chosen as conj(e_n) so that (e_m, e*_n) = delta_mn
// with the conjugating L^2 product.
inline cplx adjoint_eigenfunction(const EigenMode& m, double y) {
    return std::conj(m.C) * specfun::airy(expi(-m.sgn() * pi / 6.0) * (m.scale() * y) + m.xi);
}

// Physical y-extent that captures every listed mode to 1e-14.
inline double modes_extent(const std::vector<EigenMode>& modes) {
    double y = 0.0;
    for (const auto& m : modes) y = std::max(y, airy_decay_extent(m.xi, m.sgn()) / m.scale());
    return y;
}

inline std::vector<EigenMode> eigen_modes(int count, double nu, double k) {
    std::vector<EigenMode> modes(count);
    parallel_for(count, [&](std::size_t i) { modes[i] = eigen_mode(int(i) + 1, nu, k, count); });
    return modes;
}

// Mode values on the sample grid.
inline std::vector<cplx> sample_mode(const EigenMode& m, const HalfLineSamples& s) {
    std::vector<cplx> e(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) e[i] = eigenfunction(m, s.y[i]);
    return e;
}

struct Expansion {
    std::vector<cplx> coeffs;
    bool flagged = false;      // grid too coarse or too short for the highest mode
    double resolution = 0.0;   // largest node gap in Airy-oscillation units
};

// c_n = (f, e*_n) = integral of f e_n.
inline Expansion expand(const HalfLineSamples& f, const std::vector<EigenMode>& modes) {
    Expansion r;
    r.coeffs.resize(modes.size());
    parallel_for(modes.size(), [&](std::size_t i) { r.coeffs[i] = bilinear(f, sample_mode(modes[i], f)); });
    if (!modes.empty() && f.size() > 1) {
        const EigenMode& top = modes.back();
        double gap = 0.0;
        for (std::size_t i = 1; i < f.size(); ++i) gap = std::max(gap, f.y[i] - f.y[i - 1]);
        const double wav = std::sqrt(std::abs(top.xi) + top.scale() * f.y.back()) * top.scale();
        r.resolution = gap * wav;
        const double tail = std::abs(f.v.back()) * std::abs(eigenfunction(top, f.y.back()));
        r.flagged = r.resolution > 1.0 || tail > 1e-8;
    }
    return r;
}

// Sum over n of x^n c_n e_n(y): Abel-weighted reconstruction.
inline cplx abel_reconstruct(const Expansion& ex, const std::vector<EigenMode>& modes, double y, double x) {
    cplx s = 0;
    double w = 1.0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        w *= x;
        s += w * ex.coeffs[i] * eigenfunction(modes[i], y);
    }
    return s;
}

struct ModeEvolution {
    HalfLineSamples field;
    double truncation = 0.0;  // |exp(lambda_N t)| |c_N|
};

inline double min_expansion_time(double nu, double k) {
    return 1e-3 / (std::cbrt(nu) * std::pow(std::abs(k), 2.0 / 3.0));
}

// Truncated eigen-expansion sum_{n<=N} exp(lambda_n t) c_n e_n.
inline ModeEvolution evolve_mode(const HalfLineSamples& w0, double t, double nu, double k,
                                 const std::vector<EigenMode>& modes) {
    if (!(t > 0)) throw std::invalid_argument("evolve_mode: t must be positive");
    if (t < min_expansion_time(nu, k))
        throw std::invalid_argument("evolve_mode: t below the expansion's small-time limit");
    const Expansion ex = expand(w0, modes);
    ModeEvolution r{w0, 0.0};
    std::fill(r.field.v.begin(), r.field.v.end(), cplx{});
    for (std::size_t n = 0; n < modes.size(); ++n) {
        const cplx a = std::exp(modes[n].lambda * t) * ex.coeffs[n];
        for (std::size_t i = 0; i < w0.size(); ++i) r.field.v[i] += a * eigenfunction(modes[n], w0.y[i]);
    }
    if (!modes.empty()) r.truncation = std::abs(std::exp(modes.back().lambda * t) * ex.coeffs.back());
    return r;
}

inline ModeEvolution evolve_mode(const HalfLineSamples& w0, double t, double nu, double k, int N = 32) {
    return evolve_mode(w0, t, nu, k, eigen_modes(N, nu, k));
}

// Crank-Nicolson in time with the compact fourth-order (Numerov) Laplacian,
// Dirichlet at both ends of the uniform grid:
//   B u_t = (nu/h^2) D u - B(a u),  B = I + D/12,  a(y) = horizontal nu k^2 + i k y.
// horizontal = 0 drops the x-diffusion (vertical viscosity only).
// Returns the state at each of the increasing times; steps of at most dt are
// shortened so that every requested time is hit exactly.
inline std::vector<HalfLineSamples> cn_mode_trajectory(const HalfLineSamples& w0, const std::vector<double>& times,
                                                       double nu, double k, double dt, double horizontal = 1.0) {
    if (!w0.uniform()) throw std::invalid_argument("cn_mode_solver: needs a uniform grid");
    if (!(dt > 0)) throw std::invalid_argument("cn_mode_solver: dt must be positive");
    if (!std::is_sorted(times.begin(), times.end())) throw std::invalid_argument("cn_mode_trajectory: times must increase");
    std::vector<HalfLineSamples> outs;
    const double h = w0.uniform_step;
    const std::size_t n = w0.size();
    std::vector<cplx> u(w0.v.begin(), w0.v.end());
    if (n >= 3) u[0] = u[n - 1] = 0.0;
    const std::size_t m = n >= 3 ? n - 2 : 0;  // interior unknowns
    auto a = [&](std::size_t i) { return cplx{horizontal * nu * k * k, k * w0.y[i]}; };
    // M = (nu/h^2) D - B diag(a): row i couples i-1, i, i+1
    std::vector<cplx> Ml(m), Md(m), Mu(m);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t i = r + 1;
        const double c = nu / (h * h);
        Ml[r] = c - a(i - 1) / 12.0;
        Md[r] = -2.0 * c - a(i) * (10.0 / 12.0);
        Mu[r] = c - a(i + 1) / 12.0;
    }
    std::vector<cplx> Ll(m), Ld(m), Lu(m), rhs(m);
    double now = 0.0, built = -1.0;
    for (double T : times) {
        if (T > now && m > 0) {
            const int steps = std::max(1, int(std::ceil((T - now) / dt - 1e-12)));
            const double tau = (T - now) / steps;
            if (tau != built) {
                for (std::size_t r = 0; r < m; ++r) {
                    Ll[r] = 1.0 / 12.0 - 0.5 * tau * Ml[r];
                    Ld[r] = 10.0 / 12.0 - 0.5 * tau * Md[r];
                    Lu[r] = 1.0 / 12.0 - 0.5 * tau * Mu[r];
                }
                built = tau;
            }
            for (int s = 0; s < steps; ++s) {
                for (std::size_t r = 0; r < m; ++r) {
                    const std::size_t i = r + 1;
                    rhs[r] = (1.0 / 12.0 + 0.5 * tau * Ml[r]) * u[i - 1] + (10.0 / 12.0 + 0.5 * tau * Md[r]) * u[i] +
                             (1.0 / 12.0 + 0.5 * tau * Mu[r]) * u[i + 1];
                }
                solve_tridiagonal(Ll, Ld, Lu, rhs);
                for (std::size_t r = 0; r < m; ++r) u[r + 1] = rhs[r];
            }
            now = T;
        }
        HalfLineSamples out = w0;
        out.v = u;
        outs.push_back(std::move(out));
    }
    return outs;
}

inline HalfLineSamples cn_mode_solver(const HalfLineSamples& w0, double t, double nu, double k, double dt,
                                      double horizontal = 1.0) {
    return cn_mode_trajectory(w0, {std::max(t, 0.0)}, nu, k, dt, horizontal).front();
}

}  // namespace couette::spectral
