#include <catch_amalgamated.hpp>

#include <random>

#include "couette/kernel_profile.hpp"
#include "couette/selfsim.hpp"

using namespace couette;
using namespace couette::kernel;

namespace {

const BoundaryDensity& density() {
    static const BoundaryDensity h = solve_h(10.0, 4001);
    return h;
}

// h on the range the default grid needs (k up to pi NX q / (2 LX)).
const BoundaryDensity& wide_density() {
    static const BoundaryDensity h = solve_h(36.0, 14401);
    return h;
}

double l2(const HalfPlaneField& f) {
    double s = 0;
    for (double v : f.v) s += v * v;
    return std::sqrt(s);
}

double kernel_residual(const HalfPlaneField& w) { return l2(selfsim::apply_L(w)) / l2(w); }

}  // namespace

TEST_CASE("Taylor coefficients from the recursion") {
    const auto a = taylor_coefficients(1);
    CHECK(std::abs(a[0][0] - I) < 1e-15);
    CHECK(std::abs(a[1][0] - (-0.25 * I)) < 1e-15);
    CHECK(std::abs(a[2][0] - (-0.625 * I)) < 1e-15);
    CHECK(std::abs(a[2][1] - (I / 16.0)) < 1e-15);
    CHECK(std::abs(a[3][0] - (-15.0 / 16.0 * I)) < 1e-15);
    const auto d = taylor_derivatives(1);
    CHECK(std::abs(d[0] - 0.5 * I) < 1e-15);
    CHECK(std::abs(d[1] - (-15.0 / 32.0 * I)) < 1e-15);
    CHECK_THROWS(taylor_coefficients(-1));
}

TEST_CASE("Boundary density at the origin and residual") {
    const auto& h = density();
    CHECK(std::abs(h(0.0) - 0.5 * I) < 1e-6);
    CHECK(h.residual < 1e-6);
    CHECK_THROWS(h(-0.1));
    CHECK_THROWS(h(10.5));
    CHECK_THROWS(solve_h(3.0));
    CHECK_THROWS(solve_h(10.0, 50));
}

TEST_CASE("Small-tau consistency of the integral equation") {
    // With h = i/2 + O(s^3) the left side equals i tau^{1/2} (1 + O(tau^3)).
    std::vector<double> ts, rs;
    for (double tau : {0.05, 0.1, 0.2}) {
        const double lhs = 2.0 * 0.5 * std::sqrt(tau);  // integral of (tau-s)^{-1/2} i/2 = i tau^{1/2}
        const double rhs = std::sqrt(tau) * std::exp(-tau * tau * tau / 12.0);
        ts.push_back(tau);
        rs.push_back(std::abs(lhs - rhs));
    }
    CHECK(std::abs(loglog_slope(ts, rs) - 3.5) < 0.05);
}

TEST_CASE("Volterra and Laplace-inversion solutions agree") {
    const auto& hv = density();
    const auto hl = solve_h(10.0, 4001, HMethod::laplace_inversion);
    double d = 0, m = 0;
    for (double s = 0; s <= 6.0; s += 0.01) {
        d = std::max(d, std::abs(hv(s) - hl(s)));
        m = std::max(m, std::abs(hv(s)));
    }
    CHECK(d <= 1e-4 * m);
    CHECK(to_string(HMethod::laplace_inversion) == "laplace-inversion");
}

TEST_CASE("Boundary density decays") {
    const auto& h = density();
    double prev = 1e300;
    for (double a : {1.0, 4.0, 7.0}) {
        double mx = 0;
        for (double s = a; s <= a + 3.0; s += 0.01) mx = std::max(mx, (1 + s * s) * std::abs(h(s)));
        CHECK(mx < prev);
        prev = mx;
    }
}

TEST_CASE("Boundary flux g") {
    const auto& h = density();
    CHECK(g_of_k(h, 0.0) == cplx{});
    CHECK(std::abs(g_of_k(h, 1.0) - h(1.0)) < 1e-15);
    for (double k : {0.3, 1.0, 5.0}) CHECK(g_of_k(h, -k) == -g_of_k(h, k));
}

TEST_CASE("Characteristic kernel bounds") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> K(0.01, 10.0), E(-20.0, 20.0), X(1e-6, 1.0 - 1e-6);
    int bad = 0;
    for (int n = 0; n < 10000; ++n) {
        const double k = K(rng), eta = E(rng), xi = X(rng);
        if (kernel_exponent(k, eta, xi) > kernel_exponent_bound(eta, xi) + 1e-12 * (1 + eta * eta + k * k)) ++bad;
        if (!(kernel_K(k, eta, xi) > 0.0)) ++bad;
    }
    CHECK(bad == 0);
    CHECK(std::abs(kernel_K(2.0, 1.5, 1.0 - 1e-12) - 1.0) < 1e-9);
    CHECK_THROWS(kernel_K(1.0, 0.0, 1.0));
}

TEST_CASE("Fourier kernel at k = 0 and normalization") {
    const auto& h = density();
    for (double eta : {-2.0, -0.3, 0.0, 0.7, 3.0})
        CHECK(std::abs(fhat(h, 0.0, eta) - (-2.0 * I * eta * std::exp(-eta * eta))) < 1e-15);
    const double e = 1e-4;
    CHECK(std::abs((fhat(h, 0.0, e) - fhat(h, 0.0, -e)) / (2 * e) - (-2.0 * I)) < 1e-6);
}

TEST_CASE("Central antisymmetry of the Fourier kernel") {
    const auto& h = density();
    for (double k : {0.4, 2.0})
        for (double eta : {-1.0, 0.5}) CHECK(fhat(h, -k, -eta) == -fhat(h, k, eta));
}

TEST_CASE("Fourier kernel has zero eta-integral") {
    const auto& h = density();
    for (double k : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        double sup = 0;
        for (double eta = -10; eta <= 10; eta += 0.01) sup = std::max(sup, std::abs(fhat(h, k, eta)));
        INFO("k = " << k);
        CHECK(std::abs(fhat_eta_integral(h, k)) <= 1e-5 * sup);
    }
}

TEST_CASE("Fourier kernel solves the transport equation") {
    // (3/2) k f_k + (eta/2 - k) f_eta + (eta^2 - 1/2) f = g(k)
    const auto& h = density();
    const double d = 1e-4;
    for (double k : {0.5, 1.0, 2.0})
        for (double eta : {-1.0, 0.0, 1.0}) {
            const cplx fk = (fhat(h, k + d, eta) - fhat(h, k - d, eta)) / (2 * d);
            const cplx fe = (fhat(h, k, eta + d) - fhat(h, k, eta - d)) / (2 * d);
            const cplx lhs = 1.5 * k * fk + (0.5 * eta - k) * fe + (eta * eta - 0.5) * fhat(h, k, eta);
            const cplx g = g_of_k(h, k);
            CHECK(std::abs(lhs - g) <= 1e-3 * std::abs(g));
        }
}

TEST_CASE("Reduced boundary identity for g") {
    // int_0^k (k^{2/3}-l^{2/3})^{-1/2} e^{-(k^{2/3}-l^{2/3})^3/12} g(l) l^{-4/3} dl = (3i/2) k^{1/3} e^{-k^2/12},
    // integrated in l with the substitution k^{2/3} - l^{2/3} = u^2 (dl = -3 u l^{1/3} du).
    const auto& h = density();
    for (double k : {0.5, 1.0, 2.0}) {
        const double s = std::pow(k, 2.0 / 3.0);
        auto f = [&](double u) -> cplx {
            const double l = std::pow(s - u * u, 1.5);
            if (l <= 0.0) return 0.0;
            return std::exp(-std::pow(u, 6) / 12.0) * g_of_k(h, l) * std::pow(l, -4.0 / 3.0) * 3.0 * std::cbrt(l);
        };
        const cplx lhs = integrate<20>(f, 0.0, std::sqrt(s), 40);
        const cplx rhs = 1.5 * I * std::cbrt(k) * std::exp(-k * k / 12.0);
        CHECK(std::abs(lhs - rhs) <= 1e-5 * std::abs(rhs));
    }
}

TEST_CASE("Profile slice at k = 0 has unit vertical moment") {
    const KernelSlice s(density(), 0.0);
    const cplx m2 = integrate<20>([&](double Y) { return Y * s(Y); }, 0.0, 40.0, 80);
    CHECK(std::abs(m2 - 1.0) < 1e-12);
    const KernelSlice a(density(), 1.3), b(density(), -1.3);
    CHECK(std::abs(b(0.8) - std::conj(a(0.8))) < 1e-15);
}

TEST_CASE("Kernel on the default grid") {
    const HalfPlaneGrid g;
    const auto kp = build_kernel(g, wide_density());
    CHECK_FALSE(kp.flagged);
    CHECK(kp.boundary_max <= 1e-4);
    CHECK(std::abs(kp.M2 - 1.0) <= 1e-3);
    CHECK(kp.imag_max < 1e-10);
    const double r = kernel_residual(kp.omega);
    CHECK(r <= 5e-3);
    // residual falls under refinement
    HalfPlaneGrid c = g;
    c.NX /= 2;
    c.NY /= 2;
    const double rc = kernel_residual(build_kernel(c, wide_density()).omega);
    CHECK(std::log2(rc / r) >= 1.5);
}

TEST_CASE("Coarse kernel still satisfies the wall condition") {
    HalfPlaneGrid g;
    g.NX = 128;
    g.NY = 48;
    const auto kp = build_kernel(g, density());
    CHECK(kp.boundary_max <= 1e-3);
    CHECK(std::abs(kp.M2 - 1.0) <= 1e-3);
    CHECK_THROWS(build_kernel(HalfPlaneGrid{}, density(), 8));
}

TEST_CASE("Series term magnitudes decay like exp(xi_n |l|^{2/3} / 2)") {
    for (double l : {0.5, 1.0, 3.0}) {
        const auto p = conjecture_series(l, 1.0, 40);
        std::vector<double> x, y;
        for (int n = 5; n <= 40; ++n) {
            x.push_back(0.5 * specfun::airy_zero(n) * std::pow(l, 2.0 / 3.0));
            y.push_back(std::log(p.term_abs[n - 1]));
        }
        INFO("l = " << l);
        CHECK(std::abs(fit_line(x, y).slope - 1.0) < 0.1);
    }
    CHECK_THROWS(conjecture_series(0.0, 1.0, 4));
}

TEST_CASE("Series term slices solve the transformed steady equation") {
    // In Fourier: F_YY - (3/2) l F_l + (1/2) Y F_Y + F - i l Y F = 0
    const double e = 1e-3;
    auto F = [](double l, double Y) { return series_term_slice(1, l, {Y})[0]; };
    for (double l : {0.5, 1.0, 2.0})
        for (double Y : {0.5, 1.5}) {
            const cplx f = F(l, Y);
            const cplx fyy = (F(l, Y + e) - 2.0 * f + F(l, Y - e)) / (e * e);
            const cplx fy = (F(l, Y + e) - F(l, Y - e)) / (2 * e);
            const cplx fl = (F(l + e, Y) - F(l - e, Y)) / (2 * e);
            CHECK(std::abs(fyy - 1.5 * l * fl + 0.5 * Y * fy + f - I * l * Y * f) <= 1e-5 * std::abs(f));
        }
}

// The term decays only like |X|^{-5/3} (its slice has an l^{2/3} cusp), so on the
// periodic box the grid residual stays O(1).
TEST_CASE("First series term has small grid residual", "[!shouldfail]") {
    HalfPlaneGrid g;
    g.NX = 256;
    g.NY = 96;
    CHECK(kernel_residual(series_term_field(g, 1)) <= 1e-3);
}
