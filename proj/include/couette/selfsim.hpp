#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include "couette/common.hpp"
#include "couette/field.hpp"

namespace couette::selfsim {

// ---------------------------------------------------------------------------
// Grid operators. X is periodic and spectral; Y uses fourth-order stencils on
// j = 0..NY with Dirichlet rows at both ends and odd reflection across them.

namespace detail {

// Unnormalized real FFTs of all rows at once.
class RowTransform {
public:
    explicit RowTransform(const HalfPlaneGrid& g)
        : nx_(g.NX), nk_(g.NX / 2 + 1), rows_(g.rows()), real_(std::size_t(nx_) * rows_),
          spec_(std::size_t(nk_) * rows_) {
        fwd_ = fftw_plan_many_dft_r2c(1, &nx_, rows_, real_.data(), nullptr, 1, nx_,
                                      reinterpret_cast<fftw_complex*>(spec_.data()), nullptr, 1, nk_, FFTW_ESTIMATE);
        inv_ = fftw_plan_many_dft_c2r(1, &nx_, rows_, reinterpret_cast<fftw_complex*>(spec_.data()), nullptr, 1, nk_,
                                      real_.data(), nullptr, 1, nx_, FFTW_ESTIMATE);
    }
    RowTransform(const RowTransform&) = delete;
    RowTransform& operator=(const RowTransform&) = delete;
    ~RowTransform() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }

    void forward(const std::vector<double>& in, std::vector<cplx>& out) {
        std::copy(in.begin(), in.end(), real_.begin());
        fftw_execute(fwd_);
        out = spec_;
        for (int j = 0; j < rows_; ++j) out[std::size_t(j) * nk_ + nk_ - 1] = 0.0;  // Nyquist
    }
    // includes the 1/NX normalization
    void inverse(const std::vector<cplx>& in, std::vector<double>& out) {
        spec_ = in;
        for (int j = 0; j < rows_; ++j) {
            spec_[std::size_t(j) * nk_] = spec_[std::size_t(j) * nk_].real();
            spec_[std::size_t(j) * nk_ + nk_ - 1] = 0.0;
        }
        fftw_execute(inv_);
        out.resize(real_.size());
        const double s = 1.0 / nx_;
        for (std::size_t n = 0; n < real_.size(); ++n) out[n] = real_[n] * s;
    }

private:
    int nx_, nk_, rows_;
    std::vector<double> real_;
    std::vector<cplx> spec_;
    fftw_plan fwd_, inv_;
};

// Sine transform in Y of every X mode: rows 1..NY-1 of a spectral array.
class ColumnSine {
public:
    explicit ColumnSine(const HalfPlaneGrid& g) : nk_(g.NX / 2 + 1), ny_(g.NY), buf_(std::size_t(2 * nk_) * (ny_ - 1)) {
        const int n = ny_ - 1;
        const fftw_r2r_kind kind = FFTW_RODFT00;
        plan_ = fftw_plan_many_r2r(1, &n, 2 * nk_, buf_.data(), nullptr, 2 * nk_, 1, buf_.data(), nullptr, 2 * nk_, 1,
                                   &kind, FFTW_ESTIMATE);
    }
    ColumnSine(const ColumnSine&) = delete;
    ColumnSine& operator=(const ColumnSine&) = delete;
    ~ColumnSine() { fftw_destroy_plan(plan_); }

    // in-place on rows 1..NY-1; unnormalized (applying twice multiplies by 2 NY)
    void apply(std::vector<cplx>& S) {
        const double* src = reinterpret_cast<const double*>(S.data()) + 2 * nk_;
        std::copy(src, src + buf_.size(), buf_.begin());
        fftw_execute(plan_);
        std::copy(buf_.begin(), buf_.end(), reinterpret_cast<double*>(S.data()) + 2 * nk_);
    }

private:
    int nk_, ny_;
    std::vector<double> buf_;
    fftw_plan plan_;
};

// Fourth-order central first derivative in Y. parity = -1 reflects oddly across
// Y = 0 and Y = LY (fields vanishing there), +1 evenly (products of two odd fields).
inline void d1_y(const HalfPlaneGrid& g, const std::vector<double>& f, std::vector<double>& out, int parity) {
    const int nx = g.NX, ny = g.NY;
    const double c = 1.0 / (12.0 * g.dY());
    out.assign(f.size(), 0.0);
    auto val = [&](int i, int j) {
        if (j < 0) return parity * f[std::size_t(-j) * nx + i];
        if (j > ny) return parity * f[std::size_t(2 * ny - j) * nx + i];
        return f[std::size_t(j) * nx + i];
    };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i < nx; ++i)
            out[std::size_t(j) * nx + i] =
                c * (-val(i, j + 2) + 8.0 * val(i, j + 1) - 8.0 * val(i, j - 1) + val(i, j - 2));
}

// Fourth-order central second derivative in Y with odd reflection.
inline void d2_y(const HalfPlaneGrid& g, const std::vector<double>& f, std::vector<double>& out) {
    const int nx = g.NX, ny = g.NY;
    const double c = 1.0 / (12.0 * g.dY() * g.dY());
    out.assign(f.size(), 0.0);
    auto val = [&](int i, int j) {
        if (j < 0) return -f[std::size_t(-j) * nx + i];
        if (j > ny) return -f[std::size_t(2 * ny - j) * nx + i];
        return f[std::size_t(j) * nx + i];
    };
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out[std::size_t(j) * nx + i] = c * (-val(i, j + 2) + 16.0 * val(i, j + 1) - 30.0 * val(i, j) +
                                                16.0 * val(i, j - 1) - val(i, j - 2));
}

// Spectral X derivative of order 1 or 2.
inline std::vector<double> dx(RowTransform& T, const HalfPlaneGrid& g, const std::vector<double>& f, int order) {
    std::vector<cplx> S;
    T.forward(f, S);
    const int nk = g.NX / 2 + 1;
    for (int j = 0; j < g.rows(); ++j)
        for (int m = 0; m < nk; ++m) {
            const double k = g.k(m);
            S[std::size_t(j) * nk + m] *= order == 1 ? cplx{0.0, k} : cplx{-k * k, 0.0};
        }
    std::vector<double> out;
    T.inverse(S, out);
    return out;
}

// Eigenvalue of the compact (Numerov) second difference on sine mode s.
inline double compact_symbol(const HalfPlaneGrid& g, int s) {
    const double c = 2.0 * std::cos(pi * s / g.NY) - 2.0;
    return c / (g.dY() * g.dY()) / (1.0 + c / 12.0);
}

}  // namespace detail

// Solves ((1+t)^{-2} d_X^2 + d_Y^2) phi = omega with phi = 0 at Y = 0 and Y = LY.
// X is spectral; d_Y^2 is the compact fourth-order difference (1,-2,1)/h^2 applied
// through (1,10,1)/12, diagonalized by the sine transform. The X-mean mode is
// solved like the others, so non-decaying input only enters through the Y cap.
class PoissonSolver {
public:
    explicit PoissonSolver(const HalfPlaneGrid& g) : g_(g), T_(g), S_(g) {}

    // spectral solve in place on X-spectra (rows 0 and NY forced to zero)
    void solve_spectral(std::vector<cplx>& S, double t) {
        const int nk = g_.NX / 2 + 1;
        const double eps = 1.0 / ((1.0 + t) * (1.0 + t));
        for (int m = 0; m < nk; ++m) {
            S[m] = 0.0;
            S[std::size_t(g_.NY) * nk + m] = 0.0;
        }
        S_.apply(S);
        const double norm = 1.0 / (2.0 * g_.NY);
        for (int s = 1; s < g_.NY; ++s) {
            const double lam = detail::compact_symbol(g_, s);
            for (int m = 0; m < nk; ++m) {
                const double k = g_.k(m);
                S[std::size_t(s) * nk + m] *= norm / (lam - eps * k * k);
            }
        }
        S_.apply(S);
    }

    HalfPlaneField solve(const HalfPlaneField& omega, double t) {
        std::vector<cplx> S;
        T_.forward(omega.v, S);
        solve_spectral(S, t);
        HalfPlaneField phi(g_);
        T_.inverse(S, phi.v);
        return phi;
    }

private:
    HalfPlaneGrid g_;
    detail::RowTransform T_;
    detail::ColumnSine S_;
};

inline HalfPlaneField laplace_inverse_dirichlet(const HalfPlaneField& omega, double t) {
    PoissonSolver P(omega.grid);
    return P.solve(omega, t);
}

// The discrete operator inverted by PoissonSolver, applied to phi at interior rows:
// (1+t)^{-2} d_X^2 phi + B^{-1} delta^2 phi, with B = (1,10,1)/12.
inline HalfPlaneField apply_compact_laplacian(const HalfPlaneField& phi, double t) {
    const auto& g = phi.grid;
    detail::RowTransform T(g);
    const auto fxx = detail::dx(T, g, phi.v, 2);
    HalfPlaneField out(g);
    const int nx = g.NX, ny = g.NY;
    const double h2 = g.dY() * g.dY();
    std::vector<double> sub(ny - 1, 1.0 / 12.0), dia(ny - 1, 10.0 / 12.0), sup(ny - 1, 1.0 / 12.0), rhs(ny - 1);
    for (int i = 0; i < nx; ++i) {
        for (int j = 1; j < ny; ++j)
            rhs[j - 1] = (phi.at(i, j + 1) - 2.0 * phi.at(i, j) + phi.at(i, j - 1)) / h2;
        // Thomas solve with the constant compact matrix
        std::vector<double> c(ny - 1), d(ny - 1);
        c[0] = sup[0] / dia[0];
        d[0] = rhs[0] / dia[0];
        for (int j = 1; j < ny - 1; ++j) {
            const double den = dia[j] - sub[j] * c[j - 1];
            c[j] = sup[j] / den;
            d[j] = (rhs[j] - sub[j] * d[j - 1]) / den;
        }
        for (int j = ny - 3; j >= 0; --j) d[j] -= c[j] * d[j + 1];
        for (int j = 1; j < ny; ++j) out.at(i, j) = d[j - 1];
    }
    const double eps = 1.0 / ((1.0 + t) * (1.0 + t));
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) out.at(i, j) += eps * fxx[std::size_t(j) * nx + i];
    return out;
}

// L_t Omega = (1+t)^{-2} d_X^2 + d_Y^2 + (3/2) X d_X + (1/2) Y d_Y + 5/2 - Y d_X;
// the limit operator L drops the d_X^2 term. Boundary rows of the result are zero.
inline HalfPlaneField apply_operator(const HalfPlaneField& f, std::optional<double> t) {
    const auto& g = f.grid;
    detail::RowTransform T(g);
    const auto fx = detail::dx(T, g, f.v, 1);
    std::vector<double> fxx;
    if (t) fxx = detail::dx(T, g, f.v, 2);
    std::vector<double> fy, fyy;
    detail::d1_y(g, f.v, fy, -1);
    detail::d2_y(g, f.v, fyy);
    HalfPlaneField out(g);
    const double eps = t ? 1.0 / ((1.0 + *t) * (1.0 + *t)) : 0.0;
    for (int j = 1; j < g.NY; ++j)
        for (int i = 0; i < g.NX; ++i) {
            const std::size_t n = std::size_t(j) * g.NX + i;
            const double X = g.X(i), Y = g.Y(j);
            out.v[n] = fyy[n] + (1.5 * X - Y) * fx[n] + 0.5 * Y * fy[n] + 2.5 * f.v[n];
            if (t) out.v[n] += eps * fxx[n];
        }
    return out;
}

inline HalfPlaneField apply_Lt(const HalfPlaneField& f, double t) { return apply_operator(f, t); }
inline HalfPlaneField apply_L(const HalfPlaneField& f) { return apply_operator(f, std::nullopt); }

// N_t Omega = nu^{-3/2} (1+t)^{-5/2} (phi_Y Omega_X - phi_X Omega_Y), phi = Delta_t^{-1} Omega,
// evaluated in the divergence form d_X(phi_Y Omega) - d_Y(phi_X Omega).
inline HalfPlaneField apply_Nt(const HalfPlaneField& f, double t, double nu) {
    const auto& g = f.grid;
    detail::RowTransform T(g);
    const HalfPlaneField phi = laplace_inverse_dirichlet(f, t);
    const auto phix = detail::dx(T, g, phi.v, 1);
    std::vector<double> phiy;
    detail::d1_y(g, phi.v, phiy, -1);
    std::vector<double> a(f.v.size()), b(f.v.size());
    for (std::size_t n = 0; n < a.size(); ++n) {
        a[n] = phiy[n] * f.v[n];
        b[n] = phix[n] * f.v[n];
    }
    const auto ax = detail::dx(T, g, a, 1);
    std::vector<double> by;
    detail::d1_y(g, b, by, +1);
    const double pref = std::pow(nu, -1.5) * std::pow(1.0 + t, -2.5);
    HalfPlaneField out(g);
    for (int j = 1; j < g.NY; ++j)
        for (int i = 0; i < g.NX; ++i) {
            const std::size_t n = std::size_t(j) * g.NX + i;
            out.v[n] = pref * (ax[n] - by[n]);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Norms and moments (trapezoid in Y, periodic sum in X).

inline double trapezoid_sum(const HalfPlaneField& f, const std::function<double(double X, double Y, double v)>& w) {
    const auto& g = f.grid;
    double s = 0.0;
    for (int j = 0; j <= g.NY; ++j) {
        double row = 0.0;
        for (int i = 0; i < g.NX; ++i) row += w(g.X(i), g.Y(j), f.at(i, j));
        s += (j == 0 || j == g.NY ? 0.5 : 1.0) * row;
    }
    return s * g.dX() * g.dY();
}

inline double weighted_norm(const HalfPlaneField& f, int m) {
    if (m < 0) throw std::invalid_argument("weighted_norm: m must be nonnegative");
    return std::sqrt(trapezoid_sum(f, [m](double X, double Y, double v) {
        return v * v * std::pow(1.0 + X * X + Y * Y, m);
    }));
}

// Share of the weighted norm carried by the outer tenth of the box in X or Y.
inline double weighted_tail_fraction(const HalfPlaneField& f, int m) {
    const auto& g = f.grid;
    const double all = weighted_norm(f, m);
    if (all == 0.0) return 0.0;
    const double outer = std::sqrt(trapezoid_sum(f, [&](double X, double Y, double v) {
        const bool edge = std::abs(X) > 0.9 * g.LX || Y > 0.9 * g.LY;
        return edge ? v * v * std::pow(1.0 + X * X + Y * Y, m) : 0.0;
    }));
    return outer / all;
}

// p = infinity gives the grid maximum, a lower bound of the true supremum.
inline double lp_norm(const HalfPlaneField& f, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f.v) m = std::max(m, std::abs(v));
        return m;
    }
    return std::pow(trapezoid_sum(f, [p](double, double, double v) { return std::pow(std::abs(v), p); }), 1.0 / p);
}

struct Moments {
    double M = 0.0, M1 = 0.0, M2 = 0.0;
};

inline Moments moments(const HalfPlaneField& f) {
    return {trapezoid_sum(f, [](double, double, double v) { return v; }),
            trapezoid_sum(f, [](double X, double, double v) { return X * v; }),
            trapezoid_sum(f, [](double, double Y, double v) { return Y * v; })};
}

// Norms of the original vorticity w(t,x,y) = nu^{-3/2}(1+t)^{-5/2} Omega(X,Y),
// X = x / sqrt(nu (1+t)^3), Y = y / sqrt(nu (1+t)), so dx dy = nu (1+t)^2 dX dY.
inline double original_lp_norm(const HalfPlaneField& f, double p, double t, double nu) {
    const double amp = std::pow(nu, -1.5) * std::pow(1.0 + t, -2.5);
    const double area = nu * (1.0 + t) * (1.0 + t);
    if (std::isinf(p)) return amp * lp_norm(f, p);
    return amp * std::pow(area, 1.0 / p) * lp_norm(f, p);
}

// ---------------------------------------------------------------------------
// Initial data.

// Dirichlet-compatible bump Y exp(-a (X-x0)^2 - b (Y-y0)^2), zero on both Y ends.
struct Bump {
    double amplitude = 1.0, a = 1.0, b = 1.0, x0 = 0.0, y0 = 0.0;
};

inline HalfPlaneField make_bumps(const HalfPlaneGrid& g, const std::vector<Bump>& bumps) {
    HalfPlaneField f(g);
    for (int j = 1; j < g.NY; ++j)
        for (int i = 0; i < g.NX; ++i) {
            const double X = g.X(i), Y = g.Y(j);
            double v = 0.0;
            for (const auto& b : bumps)
                v += b.amplitude * Y * std::exp(-b.a * (X - b.x0) * (X - b.x0) - b.b * (Y - b.y0) * (Y - b.y0));
            f.at(i, j) = v;
        }
    return f;
}

// Single bump rescaled to M2 = m2.
inline HalfPlaneField normalized_bump(const HalfPlaneGrid& g, Bump b, double m2 = 1.0) {
    b.amplitude = 1.0;
    HalfPlaneField f = make_bumps(g, {b});
    const double s = m2 / moments(f).M2;
    for (double& v : f.v) v *= s;
    return f;
}

// Difference of two bumps with the second scaled so that M2 = 0.
inline HalfPlaneField m2_free_bumps(const HalfPlaneGrid& g, Bump p, Bump q) {
    p.amplitude = q.amplitude = 1.0;
    const double mp = moments(make_bumps(g, {p})).M2, mq = moments(make_bumps(g, {q})).M2;
    q.amplitude = -mp / mq;
    return make_bumps(g, {p, q});
}

// ---------------------------------------------------------------------------
// Time stepping in tau = ln(1+t):
//   d_tau Omega = D Omega + E(Omega),  D = e^{-2 tau} d_X^2 + d_Y^2 (implicit),
//   E = d_X((3/2 X - Y + p phi_Y) Omega) + Omega + (1/2) Y d_Y Omega - d_Y(p phi_X Omega) - sponge Omega,
// p = nu^{-3/2} e^{-5 tau/2}. The conservative X-drift makes the discrete M2 exact up to
// terms at the box edges: sum over X of a spectral derivative vanishes, and the Y
// stencils are exact on the weight Y.

enum class Scheme { rk3, imex_cn };

inline std::string to_string(Scheme s) { return s == Scheme::rk3 ? "rk3" : "imex-cn"; }
inline Scheme parse_scheme(const std::string& s) {
    if (s == "rk3" || s == "rk3-explicit-diffusion-implicit") return Scheme::rk3;
    if (s == "imex-cn") return Scheme::imex_cn;
    throw std::invalid_argument("unknown scheme: " + s);
}

struct StepperOptions {
    double nu = 1.0;
    bool nonlinear = true;
    bool limit_operator = false;  // use L (no X-diffusion) instead of L_t
    double sponge_strength = 40.0;
    double sponge_width = 0.1;    // fraction of LX at each end
    double cfl = 0.9;
    // implicit damping mu_k = hyper_strength * (drift rate at k_max) * (k / k_max)^16 on X modes;
    // it acts on the top quarter of the band and keeps the contraction from piling
    // energy at the cutoff, where no physical X-dissipation exists for the limit operator
    double hyper_strength = 1.0;
};

class Stepper {
public:
    Stepper(const HalfPlaneGrid& g, StepperOptions opt)
        : g_(g), opt_(opt), nk_(g.NX / 2 + 1), T_(g), P_(g), sponge_(g.NX, 0.0), chi_(g.NX), dchi_(g.NX) {
        if (g.NX % 2 || g.NX < 8 || g.NY < 8) throw std::invalid_argument("Stepper: grid too small or NX odd");
        if (!(opt.nu > 0.0)) throw std::invalid_argument("Stepper: nu must be positive");
        // In the outer band the drift coordinate X is replaced by chi(X), which falls
        // smoothly (C^2) to 0 at the seam X = +-LX; a sawtooth coefficient there makes the
        // spectral transport operator amplify round-off into the inflowing data.
        const double w = opt.sponge_width * g.LX;
        for (int i = 0; i < g.NX; ++i) {
            const double X = g.X(i), d = std::abs(X) - (g.LX - w);
            chi_[i] = X;
            dchi_[i] = 1.0;
            if (d > 0.0) {
                const double s = d / w;
                const double step = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
                const double dstep = 30.0 * s * s * (1.0 - s) * (1.0 - s) / w;
                chi_[i] = X * (1.0 - step);
                dchi_[i] = (1.0 - step) - std::abs(X) * dstep;
                sponge_[i] = opt.sponge_strength * s * s;
            }
        }
    }

    const HalfPlaneGrid& grid() const { return g_; }
    const StepperOptions& options() const { return opt_; }

    // Largest stable step for the explicit part at this state.
    double stable_step(const HalfPlaneField& f, double tau) {
        double vx = 1.5 * g_.LX + g_.LY, vy = 0.5 * g_.LY;
        if (opt_.nonlinear) {
            const HalfPlaneField phi = P_.solve(f, std::expm1(tau));
            const auto phix = detail::dx(T_, g_, phi.v, 1);
            std::vector<double> phiy;
            detail::d1_y(g_, phi.v, phiy, -1);
            const double p = nonlinear_prefactor(tau);
            double mx = 0.0, my = 0.0;
            for (std::size_t n = 0; n < phix.size(); ++n) {
                mx = std::max(mx, std::abs(phiy[n]));
                my = std::max(my, std::abs(phix[n]));
            }
            vx += p * mx;
            vy += p * my;
        }
        const double rate = vx * g_.k(nk_ - 2) + vy * 1.3722 / g_.dY() + 1.0 + opt_.sponge_strength;
        return opt_.cfl * std::sqrt(3.0) / rate;
    }

    // One step of size dtau from tau; the state is replaced.
    void step(HalfPlaneField& f, double tau, double dtau, Scheme scheme) {
        std::vector<cplx> u;
        T_.forward(f.v, u);
        if (scheme == Scheme::rk3) {
            static constexpr double gam[3] = {8.0 / 15.0, 5.0 / 12.0, 3.0 / 4.0};
            static constexpr double zet[3] = {0.0, -17.0 / 60.0, -5.0 / 12.0};
            static constexpr double al[3] = {4.0 / 15.0, 1.0 / 15.0, 1.0 / 6.0};
            static constexpr double c0[3] = {0.0, 8.0 / 15.0, 2.0 / 3.0};
            static constexpr double c1[3] = {8.0 / 15.0, 2.0 / 3.0, 1.0};
            std::vector<cplx> E, Eprev, rhs;
            HalfPlaneField cur = f;
            for (int s = 0; s < 3; ++s) {
                const double ts = tau + c0[s] * dtau;
                explicit_term(cur, ts, E);
                rhs.assign(u.size(), 0.0);
                for (std::size_t n = 0; n < u.size(); ++n)
                    rhs[n] = dtau * (gam[s] * E[n] + (s ? zet[s] * Eprev[n] : cplx{}));
                // diffusion coefficient at the stage midpoint
                const double tm = tau + 0.5 * (c0[s] + c1[s]) * dtau;
                implicit_solve(u, rhs, al[s] * dtau, al[s] * dtau, tm);
                Eprev.swap(E);
                T_.inverse(u, cur.v);
                enforce_dirichlet(cur);
            }
            f = std::move(cur);
        } else {
            std::vector<cplx> E, rhs(u.size());
            explicit_term(f, tau, E);
            if (!ab_prev_ || std::abs(ab_tau_ - tau) > 1e-12 * std::max(1.0, tau) || std::abs(ab_dt_ - dtau) > 1e-14) {
                for (std::size_t n = 0; n < u.size(); ++n) rhs[n] = dtau * E[n];
            } else {
                for (std::size_t n = 0; n < u.size(); ++n) rhs[n] = dtau * (1.5 * E[n] - 0.5 * (*ab_prev_)[n]);
            }
            implicit_solve(u, rhs, 0.5 * dtau, 0.5 * dtau, tau + 0.5 * dtau);
            ab_prev_ = std::move(E);
            ab_tau_ = tau + dtau;
            ab_dt_ = dtau;
            T_.inverse(u, f.v);
            enforce_dirichlet(f);
        }
        for (double v : f.v)
            if (!std::isfinite(v)) throw std::runtime_error("step rejected: non-finite value");
    }

    double nonlinear_prefactor(double tau) const {
        return opt_.nonlinear ? std::pow(opt_.nu, -1.5) * std::exp(-2.5 * tau) : 0.0;
    }

private:
    double hyper(int m) const {
        const double kmax = g_.k(nk_ - 2), r = g_.k(m) / kmax;
        const double rate = (1.5 * g_.LX + g_.LY) * kmax;
        return opt_.hyper_strength * rate * std::pow(r, 16);
    }

    void enforce_dirichlet(HalfPlaneField& f) const {
        for (int i = 0; i < g_.NX; ++i) {
            f.at(i, 0) = 0.0;
            f.at(i, g_.NY) = 0.0;
        }
    }

    // X-spectra of the explicit term at the state f.
    void explicit_term(const HalfPlaneField& f, double tau, std::vector<cplx>& E) {
        const std::size_t N = f.v.size();
        const int nx = g_.NX;
        const double p = nonlinear_prefactor(tau);
        std::vector<double> flux(N), local(N, 0.0);
        std::vector<double> fy;
        detail::d1_y(g_, f.v, fy, -1);
        std::vector<double> phix, phiy;
        if (p != 0.0) {
            const HalfPlaneField phi = P_.solve(f, std::expm1(tau));
            phix = detail::dx(T_, g_, phi.v, 1);
            detail::d1_y(g_, phi.v, phiy, -1);
            std::vector<double> q(N), qy;
            for (std::size_t n = 0; n < N; ++n) q[n] = p * phix[n] * f.v[n];
            detail::d1_y(g_, q, qy, +1);
            for (std::size_t n = 0; n < N; ++n) local[n] -= qy[n];
        }
        for (int j = 0; j <= g_.NY; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t n = std::size_t(j) * nx + i;
                const double Y = g_.Y(j);
                const double vx = 1.5 * chi_[i] - Y + (p != 0.0 ? p * phiy[n] : 0.0);
                flux[n] = vx * f.v[n];
                local[n] += (2.5 - 1.5 * dchi_[i] - sponge_[i]) * f.v[n] + 0.5 * Y * fy[n];
            }
        std::vector<cplx> F;
        T_.forward(flux, F);
        T_.forward(local, E);
        for (int j = 0; j <= g_.NY; ++j)
            for (int m = 0; m < nk_; ++m) {
                const std::size_t n = std::size_t(j) * nk_ + m;
                E[n] += cplx{0.0, g_.k(m)} * F[n];
            }
    }

    // Solves (I - b D) u_new = (I + a D) u + r per X mode, with D = eps d_X^2 + B^{-1} delta^2 / h^2,
    // by multiplying through by B: (B - b(delta^2/h^2 - eps k^2 B)) u_new = B(u + r) + a(delta^2/h^2 - eps k^2 B) u.
    void implicit_solve(std::vector<cplx>& u, const std::vector<cplx>& r, double a, double b, double tau) {
        const double eps = opt_.limit_operator ? 0.0 : std::exp(-2.0 * tau);
        const int ny = g_.NY, n = ny - 1;
        const double ih2 = 1.0 / (g_.dY() * g_.dY());
        std::vector<cplx> sub(n), dia(n), sup(n), rhs(n);
        std::vector<cplx> w(u.size());
        for (std::size_t q = 0; q < u.size(); ++q) w[q] = u[q] + r[q];
        auto at = [&](const std::vector<cplx>& v, int j, int m) -> cplx {
            return (j <= 0 || j >= ny) ? cplx{} : v[std::size_t(j) * nk_ + m];
        };
        for (int m = 0; m < nk_ - 1; ++m) {
            const double ek2 = eps * g_.k(m) * g_.k(m) + hyper(m);
            // B = (1,10,1)/12; operator A = delta^2/h^2 - ek2 B
            const double Aoff = ih2 - ek2 / 12.0, Adia = -2.0 * ih2 - ek2 * 10.0 / 12.0;
            for (int j = 1; j < ny; ++j) {
                sub[j - 1] = 1.0 / 12.0 - b * Aoff;
                sup[j - 1] = 1.0 / 12.0 - b * Aoff;
                dia[j - 1] = 10.0 / 12.0 - b * Adia;
                const cplx wl = at(w, j - 1, m), wc = at(w, j, m), wr = at(w, j + 1, m);
                const cplx ul = at(u, j - 1, m), uc = at(u, j, m), ur = at(u, j + 1, m);
                rhs[j - 1] = (wl + 10.0 * wc + wr) / 12.0 + a * (Aoff * (ul + ur) + Adia * uc);
            }
            solve_tridiagonal(sub, dia, sup, rhs);
            for (int j = 1; j < ny; ++j) u[std::size_t(j) * nk_ + m] = rhs[j - 1];
        }
        for (int m = 0; m < nk_; ++m) {
            u[m] = 0.0;
            u[std::size_t(ny) * nk_ + m] = 0.0;
            for (int j = 0; j <= ny; ++j) u[std::size_t(j) * nk_ + nk_ - 1] = 0.0;
        }
    }

    HalfPlaneGrid g_;
    StepperOptions opt_;
    int nk_;
    detail::RowTransform T_;
    PoissonSolver P_;
    std::vector<double> sponge_, chi_, dchi_;
    std::optional<std::vector<cplx>> ab_prev_;
    double ab_tau_ = 0.0, ab_dt_ = 0.0;
};

// ---------------------------------------------------------------------------
// Runs and diagnostics.

struct SimConfig {
    HalfPlaneGrid grid;
    double nu = 1.0;
    int m = 6;
    double dtau = 0.01;
    double tau_end = 4.0;
    Scheme scheme = Scheme::rk3;
    bool nonlinear = true;
    bool limit_operator = false;
    int output_every = 10;  // steps of size dtau between diagnostic rows
    std::vector<double> snapshot_taus;

    void validate() const {
        if (!(nu > 0.0)) throw std::invalid_argument("config: nu must be positive");
        if (!(dtau > 0.0)) throw std::invalid_argument("config: dtau must be positive");
        if (!(tau_end >= 0.0)) throw std::invalid_argument("config: tau_end must be nonnegative");
        if (m < 0) throw std::invalid_argument("config: m must be nonnegative");
        if (output_every < 1) throw std::invalid_argument("config: output_every must be positive");
        if (grid.NX % 2 || grid.NX < 8 || grid.NY < 8 || !(grid.LX > 0.0) || !(grid.LY > 0.0))
            throw std::invalid_argument("config: invalid grid");
    }
};

// L1, L2 and Linf are norms of the original vorticity; L2m, the moments and
// dist_kernel = ||Omega - M2 Omega_bar||_{L2(m)} are self-similar quantities.
struct DiagnosticRow {
    double t, tau, L1, L2, L2m, Linf, M, M1, M2, dist_kernel;
    double dist_tail;  // weighted tail fraction of Omega - M2 Omega_bar
};

inline DiagnosticRow diagnose(const HalfPlaneField& f, double tau, const SimConfig& c, const HalfPlaneField* kernel) {
    const double t = std::expm1(tau);
    const Moments mo = moments(f);
    DiagnosticRow r{t, tau, original_lp_norm(f, 1.0, t, c.nu), original_lp_norm(f, 2.0, t, c.nu),
                    weighted_norm(f, c.m), original_lp_norm(f, std::numeric_limits<double>::infinity(), t, c.nu),
                    mo.M, mo.M1, mo.M2, std::nan(""), std::nan("")};
    if (kernel) {
        HalfPlaneField d = f;
        for (std::size_t n = 0; n < d.v.size(); ++n) d.v[n] -= mo.M2 * kernel->v[n];
        r.dist_kernel = weighted_norm(d, c.m);
        r.dist_tail = weighted_tail_fraction(d, c.m);
    }
    return r;
}

struct Snapshot {
    double tau;
    HalfPlaneField field;
};

struct RunResult {
    std::vector<DiagnosticRow> rows;
    std::vector<Snapshot> snapshots;
    HalfPlaneField final_state;
    long substeps = 0;
    double max_l1_rise = 0.0;   // largest relative increase of the original L1 norm over one substep
    double max_m2_drift = 0.0;  // largest |M2 - M2(0)| / |M2(0)| over all substeps
    bool diverged = false;
    std::string message;
};

// Integrates from tau = 0 to tau_end in steps of dtau, each split into equal
// substeps that respect the explicit stability limit. Divergence stops the run
// and returns the rows gathered so far.
inline RunResult run(const SimConfig& c, HalfPlaneField f0, const HalfPlaneField* kernel = nullptr,
                     const std::function<void(const DiagnosticRow&)>& on_row = {}) {
    c.validate();
    StepperOptions o;
    o.nu = c.nu;
    o.nonlinear = c.nonlinear;
    o.limit_operator = c.limit_operator;
    Stepper S(c.grid, o);
    RunResult res;
    res.final_state = std::move(f0);
    HalfPlaneField& f = res.final_state;
    const double m2_0 = moments(f).M2;
    double l1_prev = original_lp_norm(f, 1.0, 0.0, c.nu);
    const long nsteps = std::lround(std::ceil(c.tau_end / c.dtau - 1e-9));
    std::vector<double> snaps = c.snapshot_taus;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    auto emit = [&](double tau) {
        res.rows.push_back(diagnose(f, tau, c, kernel));
        if (on_row) on_row(res.rows.back());
    };
    emit(0.0);
    while (next_snap < snaps.size() && snaps[next_snap] <= 0.0) res.snapshots.push_back({0.0, f}), ++next_snap;
    double tau = 0.0;
    try {
        for (long s = 0; s < nsteps; ++s) {
            const double dt = std::min(c.dtau, c.tau_end - tau);
            const int nsub = std::max(1, int(std::ceil(dt / S.stable_step(f, tau))));
            const double h = dt / nsub;
            for (int q = 0; q < nsub; ++q) {
                S.step(f, tau, h, c.scheme);
                tau += h;
                ++res.substeps;
                const double l1 = original_lp_norm(f, 1.0, std::expm1(tau), c.nu);
                if (l1_prev > 0.0) res.max_l1_rise = std::max(res.max_l1_rise, (l1 - l1_prev) / l1_prev);
                l1_prev = l1;
                if (m2_0 != 0.0) res.max_m2_drift = std::max(res.max_m2_drift, std::abs(moments(f).M2 - m2_0) / std::abs(m2_0));
            }
            if ((s + 1) % c.output_every == 0 || s + 1 == nsteps) emit(tau);
            while (next_snap < snaps.size() && snaps[next_snap] <= tau + 1e-12)
                res.snapshots.push_back({tau, f}), ++next_snap;
        }
    } catch (const std::runtime_error& e) {
        res.diverged = true;
        res.message = e.what();
    }
    return res;
}

}  // namespace couette::selfsim
