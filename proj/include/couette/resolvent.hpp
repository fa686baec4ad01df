#pragma once
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "couette/airy_spectral.hpp"
#include "couette/common.hpp"
#include "couette/field.hpp"
#include "couette/specfun.hpp"

// Fourier-Laplace solution of  d_t f - d_y^2 f + y d_x f = 0  on y > 0,
// f(y = 0) = 0, mode by mode in the horizontal wavenumber k.
namespace couette::resolvent {

using spectral::HalfLineSamples;

inline const cplx rot1 = expi(pi / 6.0);        // e^{i pi/6}
inline const cplx rot5 = expi(5.0 * pi / 6.0);  // e^{i 5pi/6}

// Homogeneous solutions of i(k^{2/3} lambda + k y) f - f'' = 0:
//   A(y) = Ai(e^{i pi/6}(lambda + k^{1/3} y))           (decays as y -> inf)
//   B(y) = rho A(y) - Ai(e^{i 5pi/6}(lambda + k^{1/3} y)),  B(0) = 0,
//   rho  = Ai(e^{i 5pi/6} lambda) / Ai(e^{i pi/6} lambda).
struct ResolventPair {
    double k;
    cplx lambda;
    cplx rho;

    ResolventPair(double k_, cplx lambda_) : k(k_), lambda(lambda_) {
        if (!(k > 0)) throw std::invalid_argument("ResolventPair: k must be positive");
        const cplx den = specfun::airy(rot1 * lambda);
        if (std::abs(den) < 1e-12) {
            // nearest pole e^{-i pi/6} xi_n
            int best = 1;
            double dist = 1e300;
            for (int n = 1; n <= 64; ++n) {
                const double d = std::abs(lambda - std::conj(rot1) * specfun::airy_zero(n));
                if (d < dist) { dist = d; best = n; }
            }
            throw std::domain_error("ResolventPair: lambda is at the pole e^{-i pi/6} xi_" + std::to_string(best));
        }
        rho = specfun::airy(rot5 * lambda) / den;
    }

    cplx arg(double y) const { return lambda + std::cbrt(k) * y; }
    cplx A(double y) const { return specfun::airy(rot1 * arg(y)); }
    cplx B(double y) const { return rho * A(y) - specfun::airy(rot5 * arg(y)); }
    cplx dA(double y) const { return rot1 * std::cbrt(k) * specfun::airy_deriv(rot1 * arg(y)); }
    cplx dB(double y) const { return rho * dA(y) - rot5 * std::cbrt(k) * specfun::airy_deriv(rot5 * arg(y)); }
};

// A'(0) B(0) - A(0) B'(0); equals k^{1/3} / (2 pi) for every admissible lambda.
inline cplx wronskian(const ResolventPair& p) { return p.dA(0.0) * p.B(0.0) - p.A(0.0) * p.dB(0.0); }

inline cplx wronskian(double k, cplx lambda) { return wronskian(ResolventPair(k, lambda)); }

// Horizontal mode of the initial datum on z >= 0, supported in [0, z_max].
struct ModeInitialData {
    double k = 0.0;
    std::function<cplx(double)> f0;
    double z_max = 10.0;
    cplx m1, m3;  // integrals of z f0 and z^3 f0
};

inline ModeInitialData make_mode_data(double k, std::function<cplx(double)> f0, double z_max) {
    ModeInitialData d{k, std::move(f0), z_max, {}, {}};
    const int panels = std::max(8, int(std::ceil(z_max / 0.25)));
    d.m1 = integrate<20>([&](double z) { return z * d.f0(z); }, 0.0, z_max, panels);
    d.m3 = integrate<20>([&](double z) { return z * z * z * d.f0(z); }, 0.0, z_max, panels);
    return d;
}

// Solution of i(k^{2/3} lambda + k y) f - f'' = f0 with f(0) = 0, f -> 0:
//   f = -2 pi k^{-1/3} (A(y) int_0^y B f0 + B(y) int_y^inf A f0).
// The integrals are accumulated with Gauss-Legendre between consecutive nodes.
inline HalfLineSamples resolvent_solve(const ResolventPair& p, const ModeInitialData& d, const HalfLineSamples& ys) {
    const std::size_t n = ys.size();
    std::vector<double> nodes(ys.y);
    if (nodes.back() < d.z_max) nodes.push_back(d.z_max);
    const std::size_t m = nodes.size();
    auto piece = [&](std::size_t i, auto&& g) {
        const double a = nodes[i], b = nodes[i + 1];
        const int panels = std::max(1, int(std::ceil((b - a) / 0.25)));
        return integrate<20>(g, a, b, panels);
    };
    std::vector<cplx> below(m, 0.0), above(m, 0.0);
    auto fb = [&](double z) { return z > d.z_max ? cplx{} : p.B(z) * d.f0(z); };
    auto fa = [&](double z) { return z > d.z_max ? cplx{} : p.A(z) * d.f0(z); };
    for (std::size_t i = 0; i + 1 < m; ++i) below[i + 1] = below[i] + piece(i, fb);
    for (std::size_t i = m - 1; i-- > 0;) above[i] = above[i + 1] + piece(i, fa);
    HalfLineSamples out = ys;
    const double c = -2.0 * pi / std::cbrt(p.k);
    for (std::size_t i = 0; i < n; ++i) out.v[i] = c * (p.A(nodes[i]) * below[i] + p.B(nodes[i]) * above[i]);
    return out;
}

// Whole-line kernel of the mode equation:
//   G(y, z) = (4 pi t)^{-1/2} exp(-(y-z)^2/(4t) - i k t (y+z)/2 - k^2 t^3/12).
inline cplx whole_line_kernel(double t, double k, double y, double z) {
    const double d = y - z;
    return std::exp(cplx{-d * d / (4.0 * t) - k * k * t * t * t / 12.0, -k * t * (y + z) / 2.0}) /
           std::sqrt(4.0 * pi * t);
}

// Convolution of data on [z_lo, z_hi] with the whole-line kernel.
inline std::vector<cplx> whole_plane_propagate(const std::function<cplx(double)>& f0, double z_lo, double z_hi,
                                               double t, double k, const std::vector<double>& ys) {
    if (!(t > 0)) throw std::invalid_argument("whole_plane_propagate: t must be positive");
    const double w = std::min({0.5 * std::sqrt(t), 0.25, 3.0 / (std::abs(k) * t + 1e-300)});
    const int panels = std::max(4, int(std::ceil((z_hi - z_lo) / w)));
    std::vector<cplx> out(ys.size());
    parallel_for(ys.size(), [&](std::size_t i) {
        out[i] = integrate<20>([&](double z) { return whole_line_kernel(t, k, ys[i], z) * f0(z); }, z_lo, z_hi, panels);
    });
    return out;
}

// Left side of the Airy pair identity,
//   int_R e^{i k^{2/3} lambda t} Ai(e^{i pi/6}(lambda + k^{1/3} y)) Ai(e^{i 5pi/6}(lambda + k^{1/3} z)) dlambda,
// on a contour lifted to Im lambda = T^2/4 (T = k^{2/3} t) with rays at
// angles pi/12 and 11pi/12 beyond |Re lambda| = 1; e^{i T lambda} then decays
// on both rays. Integrand entire, so the lift is exact.
struct PairIntegral {
    cplx value;
    bool converged = true;
};

inline PairIntegral airy_pair_integral_ex(double t, double k, double y, double z) {
    if (!(t > 0 && k > 0 && y > z && z >= 0))
        throw std::invalid_argument("airy_pair_integral: need t > 0, k > 0, y > z >= 0");
    const double T = std::pow(k, 2.0 / 3.0) * t, a = std::cbrt(k) * y, b = std::cbrt(k) * z;
    const double h = 0.25 * T * T, x0 = 1.0;
    auto integrand = [&](cplx lam) -> Scaled {
        const Scaled e{expi(T * lam.real()), -T * lam.imag()};
        return e * specfun::airy_scaled(rot1 * (lam + a)).ai * specfun::airy_scaled(rot5 * (lam + b)).ai;
    };
    const GLRule& g = gauss_legendre<20>();
    // central segment
    cplx sum = 0;
    {
        const int panels = std::max(4, int(std::ceil(2.0 * x0 * T / 4.0)));
        sum += integrate_panels<20>([&](double x) { return integrand({x, h}).value(); }, linspace(-x0, x0, panels + 1));
    }
    const double ang = pi / 12.0, sa = std::sin(ang);
    const double rmax = 45.0 / (T * sa) + 10.0;
    bool ok = true;
    for (int side : {-1, 1}) {
        const cplx dir = side > 0 ? expi(ang) : expi(pi - ang);
        const cplx start{side * x0, h};
        double r = 0.0, last = 0.0;
        while (r < rmax) {
            const double w = std::min({4.0 / T, 0.5 + 0.25 * r, rmax - r});
            const double c = r + 0.5 * w;
            cplx part = 0;
            for (std::size_t i = 0; i < g.x.size(); ++i)
                part += g.w[i] * integrand(start + (c + 0.5 * w * g.x[i]) * dir).value();
            part *= 0.5 * w * dir;
            // rays run outward on the right, inward on the left
            sum += side > 0 ? part : -part;
            last = std::abs(part);
            r += w;
        }
        if (!std::isfinite(last) || last > 1e-10 * std::abs(sum)) ok = false;
    }
    return {sum, ok && std::isfinite(sum.real())};
}

inline cplx airy_pair_integral(double t, double k, double y, double z) { return airy_pair_integral_ex(t, k, y, z).value; }

// Closed form carried by the identity: -k^{-1/3} G(y, z) as printed; the
// evaluated integral carries the opposite sign (see the identity test).
inline cplx airy_pair_closed_form(double t, double k, double y, double z) {
    return -whole_line_kernel(t, k, y, z) / std::cbrt(k);
}

// Contour L1 + L2 + L3 in the lambda plane, lifted by delta above the real axis.
struct ContourSpec {
    double delta = pi / 200.0;
    int l2_min_panels = 4;      // 20-point panels on L2 (>= 64 nodes)
    double envelope = 1e-14;    // ray truncation where e^{-T sin(delta) r} drops below this
};

struct ContourNode {
    cplx lambda, weight;  // weight includes dlambda
};

inline std::vector<ContourNode> contour_nodes(double T, const ContourSpec& spec) {
    const double d = spec.delta;
    if (!(d > 0 && d < pi / 100.0)) throw std::invalid_argument("ContourSpec: delta must lie in (0, pi/100)");
    if (!(std::sin(d) < 0.5 * std::abs(specfun::airy_zero(1)))) throw std::invalid_argument("ContourSpec: sin(delta) too large");
    const GLRule& g = gauss_legendre<20>();
    std::vector<ContourNode> nodes;
    // L2: cos(delta) x + i sin(delta), x in [-1, 1]
    const int p2 = std::max(spec.l2_min_panels, int(std::ceil(2.0 * T / 4.0)));
    for (int p = 0; p < p2; ++p) {
        const double a = -1.0 + 2.0 * p / p2, b = -1.0 + 2.0 * (p + 1) / p2;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * g.x[i];
            nodes.push_back({cplx{std::cos(d) * x, std::sin(d)}, 0.5 * (b - a) * g.w[i] * std::cos(d)});
        }
    }
    // L1: -e^{-i delta} r and L3: e^{i delta} r, r >= 1; both traversed so
    // that the whole contour runs left to right
    const double rmax = 1.0 - std::log(spec.envelope) / (T * std::sin(d)) + 8.0 / T;
    for (int side : {-1, 1}) {
        const cplx dir = side > 0 ? expi(d) : -expi(-d);
        double r = 1.0;
        while (r < rmax) {
            const double w = std::min({4.0 / T, 0.5 + 0.25 * r, rmax - r});
            for (std::size_t i = 0; i < g.x.size(); ++i) {
                const double rr = r + 0.5 * w * (1.0 + g.x[i]);
                // L1 is traversed inward: dlambda = -dir dr
                nodes.push_back({rr * dir, (side > 0 ? 1.0 : -1.0) * 0.5 * w * g.w[i] * dir});
            }
            r += w;
        }
    }
    return nodes;
}

// Common factor of the pole-ratio terms at each node: e^{i T lambda} rho w.
inline std::vector<Scaled> ratio_factors(const std::vector<ContourNode>& nodes, double T) {
    std::vector<Scaled> f(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t i) {
        const cplx lam = nodes[i].lambda;
        const Scaled e{expi(T * lam.real()), -T * lam.imag()};
        const Scaled num = specfun::airy_scaled(rot5 * lam).ai;
        const Scaled den = specfun::airy_scaled(rot1 * lam).ai;
        f[i] = e * (num / den) * nodes[i].weight;
    });
    return f;
}

// Pole-ratio kernel without the moment factor:
//   e^{i pi/6} k^{2/3} int e^{i k^{2/3} lambda t} rho Ai(e^{i pi/6}(lambda + k^{1/3} y)) Ai'(e^{i pi/6} lambda) dlambda.
inline std::vector<cplx> ratio_kernel(double t, double k, const std::vector<double>& ys, const ContourSpec& spec = {}) {
    const double T = std::pow(k, 2.0 / 3.0) * t, a = std::cbrt(k);
    const auto nodes = contour_nodes(T, spec);
    auto fac = ratio_factors(nodes, T);
    for (std::size_t i = 0; i < nodes.size(); ++i) fac[i] = fac[i] * specfun::airy_scaled(rot1 * nodes[i].lambda).aip;
    std::vector<cplx> out(ys.size());
    parallel_for(ys.size(), [&](std::size_t j) {
        cplx s = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            s += (fac[i] * specfun::airy_scaled(rot1 * (nodes[i].lambda + a * ys[j])).ai).value();
        out[j] = rot1 * std::pow(k, 2.0 / 3.0) * s;
    });
    return out;
}

// Mode solution split into a pole-ratio term T1, the Gaussian main term T2
// and third-order Taylor remainders T3, T3' (pole-ratio) and T4 (Gaussian):
//   f = -T1 + T2 - T3 - T3' + T4.
// T3' carries the Ai part of Ai''' (w) = Ai(w) + w Ai'(w).
struct TTerms {
    std::vector<cplx> T1, T2, T3, T3p, T4;

    std::vector<cplx> total() const {
        std::vector<cplx> f(T1.size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = -T1[i] + T2[i] - T3[i] - T3p[i] + T4[i];
        return f;
    }
};

// Q(u) = int_u^inf (z - u)^2 f0(z) dz; the remainder terms reduce to
// int_0^inf H(u) Q(u) du after the substitution u = s z.
struct RemainderWeights {
    std::vector<double> u, w;
    std::vector<cplx> Q;
};

inline RemainderWeights remainder_weights(const ModeInitialData& d) {
    RemainderWeights r;
    const int panels = std::max(8, int(std::ceil(d.z_max / 0.25)));
    const GLRule& g = gauss_legendre<20>();
    const double hw = d.z_max / panels;
    for (int p = 0; p < panels; ++p)
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            r.u.push_back(hw * (p + 0.5 + 0.5 * g.x[i]));
            r.w.push_back(0.5 * hw * g.w[i]);
        }
    r.Q.resize(r.u.size());
    parallel_for(r.u.size(), [&](std::size_t i) {
        const double u = r.u[i];
        const int pp = std::max(2, int(std::ceil((d.z_max - u) / 0.25)));
        r.Q[i] = integrate<20>([&](double z) { return (z - u) * (z - u) * d.f0(z); }, u, d.z_max, pp);
    });
    return r;
}

inline TTerms t_decomposition(const ModeInitialData& d, double t, const std::vector<double>& ys,
                              const ContourSpec& spec = {}) {
    const double k = d.k;
    if (!(k > 0)) throw std::invalid_argument("t_decomposition: needs k > 0");
    if (!(t > 0)) throw std::invalid_argument("t_decomposition: t must be positive");
    const std::size_t ny = ys.size();
    TTerms r;
    r.T1 = ratio_kernel(t, k, ys, spec);
    for (auto& v : r.T1) v *= d.m1;
    r.T2.resize(ny);
    for (std::size_t j = 0; j < ny; ++j)
        r.T2[j] = (ys[j] / (2.0 * t) - I * k * t / 2.0) * whole_line_kernel(t, k, ys[j], 0.0) * d.m1;

    const RemainderWeights rw = remainder_weights(d);
    // T4 = (1/2) int d_u^3 G(y, u) Q(u) du, d_u^3 G = (p^3 - 3p/(2t)) G, p = (y-u)/(2t) - i k t/2
    r.T4.resize(ny);
    parallel_for(ny, [&](std::size_t j) {
        cplx s = 0;
        for (std::size_t i = 0; i < rw.u.size(); ++i) {
            const cplx p = (ys[j] - rw.u[i]) / (2.0 * t) - I * k * t / 2.0;
            s += rw.w[i] * (p * p * p - 1.5 * p / t) * whole_line_kernel(t, k, ys[j], rw.u[i]) * rw.Q[i];
        }
        r.T4[j] = 0.5 * s;
    });

    // T3  = (1/2) e^{i 2pi/3} k^{4/3} int e rho A_y int (lambda + k^{1/3}u) Ai'(w_u) Q du dlambda
    // T3' = (i/2) k^{4/3}              int e rho A_y int Ai(w_u) Q du dlambda,  w_u = e^{i pi/6}(lambda + k^{1/3} u)
    const double T = std::pow(k, 2.0 / 3.0) * t, a = std::cbrt(k);
    const auto nodes = contour_nodes(T, spec);
    const auto fac = ratio_factors(nodes, T);
    std::vector<Scaled> J3(nodes.size()), J3p(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t i) {
        Scaled s3, s3p;
        for (std::size_t q = 0; q < rw.u.size(); ++q) {
            const cplx arg = nodes[i].lambda + a * rw.u[q];
            const auto ap = specfun::airy_scaled(rot1 * arg);
            s3 = s3 + ap.aip * (arg * rw.w[q] * rw.Q[q]);
            s3p = s3p + ap.ai * (rw.w[q] * rw.Q[q]);
        }
        J3[i] = fac[i] * s3;
        J3p[i] = fac[i] * s3p;
    });
    r.T3.resize(ny);
    r.T3p.resize(ny);
    const cplx c3 = 0.5 * expi(2.0 * pi / 3.0) * std::pow(k, 4.0 / 3.0), c3p = 0.5 * I * std::pow(k, 4.0 / 3.0);
    parallel_for(ny, [&](std::size_t j) {
        cplx s3 = 0, s3p = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const Scaled Ay = specfun::airy_scaled(rot1 * (nodes[i].lambda + a * ys[j])).ai;
            s3 += (J3[i] * Ay).value();
            s3p += (J3p[i] * Ay).value();
        }
        r.T3[j] = c3 * s3;
        r.T3p[j] = c3p * s3p;
    });
    return r;
}

// k = 0: heat equation with Dirichlet wall, odd-reflection kernel.
inline std::vector<cplx> heat_mode(const ModeInitialData& d, double t, const std::vector<double>& ys) {
    std::vector<cplx> out(ys.size());
    const int panels = std::max(8, int(std::ceil(d.z_max / std::min(0.25, 0.5 * std::sqrt(t)))));
    for (std::size_t j = 0; j < ys.size(); ++j)
        out[j] = integrate<20>(
            [&](double z) { return (whole_line_kernel(t, 0.0, ys[j], z) - whole_line_kernel(t, 0.0, ys[j], -z)) * d.f0(z); },
            0.0, d.z_max, panels);
    return out;
}

enum class Backend { time_stepping, eigen_expansion, t_decomposition };

inline std::string to_string(Backend b) {
    switch (b) {
        case Backend::time_stepping: return "time-stepping";
        case Backend::eigen_expansion: return "eigen-expansion";
        default: return "t-decomposition";
    }
}

inline Backend parse_backend(const std::string& s) {
    if (s == "time-stepping") return Backend::time_stepping;
    if (s == "eigen-expansion" || s == "eigen") return Backend::eigen_expansion;
    if (s == "t-decomposition" || s == "T-decomposition") return Backend::t_decomposition;
    throw std::invalid_argument("unknown backend: " + s);
}

struct StepControl {
    double dt = 2.5e-3;     // Crank-Nicolson step
    double dy = 0.025;      // grid step of the time-stepping backend
    int modes = 32;         // eigen-expansion truncation
    ContourSpec contour{};
};

// Mode solution at the points ys (ys must be multiples of dy for time stepping).
// Negative k: the mode at -k with data g is conj of the mode at k with data conj(g).
inline std::vector<cplx> evolve_mode_linear(const ModeInitialData& d, double t, const std::vector<double>& ys,
                                            Backend backend, const StepControl& ctl = {}) {
    if (!(t > 0)) throw std::invalid_argument("evolve_mode_linear: t must be positive");
    if (d.k < 0) {
        ModeInitialData c = d;
        c.k = -d.k;
        c.f0 = [f = d.f0](double z) { return std::conj(f(z)); };
        c.m1 = std::conj(d.m1);
        c.m3 = std::conj(d.m3);
        auto v = evolve_mode_linear(c, t, ys, backend, ctl);
        for (auto& x : v) x = std::conj(x);
        return v;
    }
    if (d.k == 0.0) return heat_mode(d, t, ys);
    switch (backend) {
        case Backend::t_decomposition: return t_decomposition(d, t, ys, ctl.contour).total();
        case Backend::eigen_expansion: {
            const auto modes = spectral::eigen_modes(ctl.modes, 1.0, d.k);
            const double ext = std::max(spectral::modes_extent(modes), d.z_max);
            auto w0 = HalfLineSamples::gl_panels(ext, int(std::ceil(ext / 0.1)));
            w0.fill([&](double z) { return z > d.z_max ? cplx{} : d.f0(z); });
            const auto ex = spectral::expand(w0, modes);
            // eigenvalues include -k^2 from x-diffusion, absent here
            const double undo = d.k * d.k * t;
            std::vector<cplx> out(ys.size());
            for (std::size_t n = 0; n < modes.size(); ++n) {
                const cplx a = std::exp(modes[n].lambda * t + undo) * ex.coeffs[n];
                for (std::size_t j = 0; j < ys.size(); ++j) out[j] += a * spectral::eigenfunction(modes[n], ys[j]);
            }
            return out;
        }
        default: {
            const double ymax = std::max({12.0, 8.0 * std::sqrt(t), d.z_max + 4.0, ys.empty() ? 0.0 : ys.back() + 4.0});
            auto intervals = std::size_t(std::ceil(ymax / ctl.dy));
            intervals += intervals % 2;
            auto w0 = HalfLineSamples::uniform_grid(ctl.dy * double(intervals), intervals);
            w0.fill([&](double z) { return z > d.z_max ? cplx{} : d.f0(z); });
            const auto sol = spectral::cn_mode_solver(w0, t, 1.0, d.k, ctl.dt, 0.0);
            std::vector<cplx> out(ys.size());
            for (std::size_t j = 0; j < ys.size(); ++j) {
                const double q = ys[j] / w0.uniform_step;
                const auto i = std::size_t(std::llround(q));
                if (std::abs(q - double(i)) > 1e-6) throw std::invalid_argument("evolve_mode_linear: ys off the stepping grid");
                out[j] = sol.v[i];
            }
            return out;
        }
    }
}

// Linear evolution of a half-plane field (x periodic, y on the field grid):
// Fourier in x, one mode solve per wavenumber, inverse transform.
inline HalfPlaneField evolve_halfplane_linear(const HalfPlaneField& f0, double t, Backend backend,
                                              const StepControl& ctl = {}) {
    const auto& g = f0.grid;
    const int nk = g.NX / 2 + 1;
    auto S = forward_rows(f0);
    std::vector<double> ys(g.rows());
    for (int j = 0; j < g.rows(); ++j) ys[j] = g.Y(j);
    StepControl c = ctl;
    if (backend == Backend::time_stepping) c.dy = g.dY();
    std::vector<cplx> out(S.size());
    parallel_for(std::size_t(nk - 1), [&](std::size_t m) {
        std::vector<cplx> col(g.rows());
        for (int j = 0; j < g.rows(); ++j) col[j] = S[std::size_t(j) * nk + m];
        // cubic interpolation of the column, zero at the wall
        auto f = [&col, &g](double z) -> cplx {
            const double q = z / g.dY();
            long i = std::clamp<long>(long(std::floor(q)) - 1, 0, long(col.size()) - 4);
            const double x = q - double(i);
            const double l0 = -(x - 1) * (x - 2) * (x - 3) / 6.0, l1 = x * (x - 2) * (x - 3) / 2.0;
            const double l2 = -x * (x - 1) * (x - 3) / 2.0, l3 = x * (x - 1) * (x - 2) / 6.0;
            return l0 * col[i] + l1 * col[i + 1] + l2 * col[i + 2] + l3 * col[i + 3];
        };
        const auto d = make_mode_data(g.k(int(m)), f, g.LY);
        const auto v = evolve_mode_linear(d, t, ys, backend, c);
        for (int j = 0; j < g.rows(); ++j) out[std::size_t(j) * nk + m] = v[j];
    });
    auto r = inverse_rows(g, out);
    for (int i = 0; i < g.NX; ++i) r.at(i, 0) = 0.0;
    return r;
}

// Horizontal Fourier transform of the attractor profile from the long-time
// limit of the mode solution with unit vertical moment:
//   -e^{i pi/6} l^{2/3} int e^{i l^{2/3} lambda} rho Ai(e^{i pi/6}(lambda + l^{1/3} Y)) Ai'(e^{i pi/6} lambda) dlambda
//   + (Y - i l) exp(-Y^2/4 - i l Y/2 - l^2/12) / (4 sqrt(pi)),
// conjugated for l < 0.
inline std::vector<cplx> main_profile_fourier(double l, const std::vector<double>& Ys, const ContourSpec& spec = {}) {
    if (l == 0.0) throw std::invalid_argument("main_profile_fourier: l must be nonzero");
    const double al = std::abs(l);
    auto r = ratio_kernel(1.0, al, Ys, spec);
    for (std::size_t j = 0; j < Ys.size(); ++j) {
        const double Y = Ys[j];
        const cplx gauss = (Y - I * al) * std::exp(cplx{-Y * Y / 4.0 - al * al / 12.0, -al * Y / 2.0}) / (4.0 * std::sqrt(pi));
        r[j] = -r[j] + gauss;
        if (l < 0) r[j] = std::conj(r[j]);
    }
    return r;
}

inline cplx main_profile_fourier(double l, double Y, const ContourSpec& spec = {}) {
    return main_profile_fourier(l, std::vector<double>{Y}, spec)[0];
}

// L2 norm in (x, y) over time of the linear solution with real data f0(x, y), given
// through its x-transform f0hat(k, y) = int f0 e^{-ikx} dx. By Plancherel and
// conjugation symmetry ||f||^2 = (1/pi) int_0^inf ||fhat(k)||^2 dk; the k-integral uses
// Gauss-Legendre panels in log k on [k_min, k_max] plus the constant extension on [0, k_min].
struct DecayControl {
    double dt = 5e-3;
    double t_ref = 5.0;  // step stays dt up to t_ref, then grows like t
    double dy = 0.025;
    double k_min = 1e-5, k_max = 8.0;
    int k_panels = 16;
};

struct DecayCurve {
    std::vector<double> t, l2;
};

inline DecayCurve linear_l2_decay(const std::function<cplx(double, double)>& f0hat, double z_max,
                                  const std::vector<double>& times, const DecayControl& ctl = {}) {
    if (times.empty() || !(times.front() > 0.0)) throw std::invalid_argument("linear_l2_decay: times must be positive");
    const double ymax = std::max({12.0, 8.0 * std::sqrt(times.back()), z_max + 4.0});
    auto intervals = std::size_t(std::ceil(ymax / ctl.dy));
    auto grid = HalfLineSamples::uniform_grid(ctl.dy * double(intervals), intervals);
    const GLRule& gl = gauss_legendre<8>();
    std::vector<double> ks, wk;
    const double u0 = std::log(ctl.k_min), u1 = std::log(ctl.k_max), du = (u1 - u0) / ctl.k_panels;
    for (int p = 0; p < ctl.k_panels; ++p)
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            const double k = std::exp(u0 + du * (p + 0.5 + 0.5 * gl.x[i]));
            ks.push_back(k);
            wk.push_back(0.5 * du * gl.w[i] * k);
        }
    ks.push_back(ctl.k_min);  // the mode carrying the [0, k_min] piece
    wk.push_back(ctl.k_min);
    std::vector<std::vector<double>> sq(ks.size());
    parallel_for(ks.size(), [&](std::size_t q) {
        HalfLineSamples w0 = grid;
        w0.fill([&](double y) { return y > z_max ? cplx{} : f0hat(ks[q], y); });
        // surviving modes vary on the scale t, so the step grows with t
        const double n0 = w0.l2();
        double now = 0.0;
        for (double T : times) {
            if (w0.l2() > 1e-30 * n0) {
                const double dt = ctl.dt * std::max(1.0, now / ctl.t_ref);
                w0 = spectral::cn_mode_trajectory(w0, {T - now}, 1.0, ks[q], dt, 0.0).front();
            }
            now = T;
            sq[q].push_back(std::pow(w0.l2(), 2));
        }
    });
    DecayCurve c{times, std::vector<double>(times.size(), 0.0)};
    for (std::size_t q = 0; q < ks.size(); ++q)
        for (std::size_t j = 0; j < times.size(); ++j) c.l2[j] += wk[q] * sq[q][j];
    for (auto& v : c.l2) v = std::sqrt(v / pi);
    return c;
}

}  // namespace couette::resolvent
