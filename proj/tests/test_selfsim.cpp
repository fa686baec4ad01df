#include <catch_amalgamated.hpp>

#include "couette/kernel_profile.hpp"
#include "couette/selfsim.hpp"

using namespace couette;
using namespace couette::selfsim;

namespace {

HalfPlaneGrid small_grid() {
    HalfPlaneGrid g;
    g.NX = 128;
    g.NY = 64;
    return g;
}

template <class F>
HalfPlaneField sample(const HalfPlaneGrid& g, F&& f) {
    HalfPlaneField out(g);
    for (int j = 0; j <= g.NY; ++j)
        for (int i = 0; i < g.NX; ++i) out.at(i, j) = f(g.X(i), g.Y(j));
    return out;
}

double max_abs(const HalfPlaneField& f) {
    double m = 0;
    for (double v : f.v) m = std::max(m, std::abs(v));
    return m;
}

double max_diff_interior(const HalfPlaneField& a, const HalfPlaneField& b) {
    double m = 0;
    for (int j = 1; j < a.grid.NY; ++j)
        for (int i = 0; i < a.grid.NX; ++i) m = std::max(m, std::abs(a.at(i, j) - b.at(i, j)));
    return m;
}

double l2_diff(const HalfPlaneField& a, const HalfPlaneField& b) {
    double s = 0;
    for (std::size_t n = 0; n < a.v.size(); ++n) s += (a.v[n] - b.v[n]) * (a.v[n] - b.v[n]);
    return std::sqrt(s * a.grid.dX() * a.grid.dY());
}

// Dense Gaussian elimination with partial pivoting.
std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
        std::swap(A[c], A[p]);
        std::swap(b[c], b[p]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = A[r][c] / A[c][c];
            for (std::size_t q = c; q < n; ++q) A[r][q] -= f * A[c][q];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t q = r + 1; q < n; ++q) s -= A[r][q] * x[q];
        x[r] = s / A[r][r];
    }
    return x;
}

}  // namespace

TEST_CASE("Poisson solve inverts the discrete operator") {
    const HalfPlaneGrid g = small_grid();
    const auto w = sample(g, [](double X, double Y) { return Y * std::exp(-X * X - (Y - 1) * (Y - 1)) * (1 + 0.3 * X); });
    for (double t : {0.0, 2.0, 50.0}) {
        const auto phi = laplace_inverse_dirichlet(w, t);
        const auto back = apply_compact_laplacian(phi, t);
        double num = 0, den = 0;
        for (int j = 1; j < g.NY; ++j)
            for (int i = 0; i < g.NX; ++i) {
                num += std::pow(back.at(i, j) - w.at(i, j), 2);
                den += std::pow(w.at(i, j), 2);
            }
        CHECK(std::sqrt(num / den) <= 1e-8);
        for (int i = 0; i < g.NX; ++i) CHECK((phi.at(i, 0) == 0.0 && phi.at(i, g.NY) == 0.0));
    }
}

TEST_CASE("Poisson solve matches a dense solve on a separable mode") {
    // omega = sin(a Y) e^{-Y} cos(b X) with b a grid wavenumber: one dense system in Y
    HalfPlaneGrid g;
    g.NX = 32;
    g.NY = 64;
    const double a = 1.3, b = g.k(3), t = 0.5, eps = 1.0 / ((1 + t) * (1 + t));
    const auto w = sample(g, [&](double X, double Y) { return std::sin(a * Y) * std::exp(-Y) * std::cos(b * X); });
    const auto phi = laplace_inverse_dirichlet(w, t);
    const int n = g.NY - 1;
    const double h2 = g.dY() * g.dY();
    // (delta^2 / h^2) phi - eps b^2 B phi = B omega on interior rows, B = (1, 10, 1)/12
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    std::vector<double> rhs(n);
    for (int r = 0; r < n; ++r) {
        const int j = r + 1;
        A[r][r] = -2.0 / h2 - eps * b * b * 10.0 / 12.0;
        if (r > 0) A[r][r - 1] = 1.0 / h2 - eps * b * b / 12.0;
        if (r + 1 < n) A[r][r + 1] = 1.0 / h2 - eps * b * b / 12.0;
        auto om = [&](int jj) { return std::sin(a * g.Y(jj)) * std::exp(-g.Y(jj)); };
        rhs[r] = (om(j - 1) + 10.0 * om(j) + om(j + 1)) / 12.0;
    }
    const auto y = dense_solve(A, rhs);
    double err = 0, mx = 0;
    for (int j = 1; j < g.NY; ++j)
        for (int i = 0; i < g.NX; ++i) {
            err = std::max(err, std::abs(phi.at(i, j) - y[j - 1] * std::cos(b * g.X(i))));
            mx = std::max(mx, std::abs(phi.at(i, j)));
        }
    CHECK(err <= 1e-6 * mx);
}

TEST_CASE("Poisson solve converges at fourth order to a sine mode") {
    // omega = sin(pi n Y / LY) cos(b X): phi = -omega / ((pi n / LY)^2 + eps b^2)
    std::vector<double> errs;
    for (int ny : {32, 64}) {
        HalfPlaneGrid g;
        g.NX = 32;
        g.NY = ny;
        const double q = 3.0 * pi / g.LY, b = g.k(2), t = 1.0, eps = 0.25;
        const auto w = sample(g, [&](double X, double Y) { return std::sin(q * Y) * std::cos(b * X); });
        const auto phi = laplace_inverse_dirichlet(w, t);
        double e = 0;
        for (int j = 0; j <= g.NY; ++j)
            for (int i = 0; i < g.NX; ++i) e = std::max(e, std::abs(phi.at(i, j) + w.at(i, j) / (q * q + eps * b * b)));
        errs.push_back(e);
    }
    CHECK(errs[1] < 1e-5);
    CHECK(std::log2(errs[0] / errs[1]) > 3.7);
}

TEST_CASE("Poisson solve tends to the one-dimensional solve as t grows") {
    const HalfPlaneGrid g = small_grid();
    const auto w = sample(g, [](double X, double Y) { return Y * std::exp(-0.2 * X * X - Y * Y); });
    const auto lim = laplace_inverse_dirichlet(w, 1e8);
    double prev = 1e300;
    for (double t : {1.0, 10.0, 100.0}) {
        const double d = max_diff_interior(laplace_inverse_dirichlet(w, t), lim);
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev < 1e-3 * max_abs(lim));
}

TEST_CASE("Operators on a Gaussian match symbolic derivatives") {
    // f = Y e^{-X^2-Y^2}; Y derivatives are fourth order, X derivatives spectral
    const double t = 0.7, eps = 1.0 / ((1 + t) * (1 + t));
    auto f_of = [](double X, double Y) { return Y * std::exp(-X * X - Y * Y); };
    auto exact_of = [&](double X, double Y) {
        const double e = std::exp(-X * X - Y * Y);
        const double fx = -2 * X * Y * e, fxx = (4 * X * X - 2) * Y * e;
        const double fy = (1 - 2 * Y * Y) * e, fyy = (4 * Y * Y * Y - 6 * Y) * e;
        return eps * fxx + fyy + 1.5 * X * fx + 0.5 * Y * fy + 2.5 * Y * e - Y * fx;
    };
    auto rel_error = [&](int ny) {
        HalfPlaneGrid h;
        h.NX = 128;
        h.NY = ny;
        const auto exact = sample(h, exact_of);
        return max_diff_interior(apply_Lt(sample(h, f_of), t), exact) / max_abs(exact);
    };
    const double e1 = rel_error(384), e2 = rel_error(768);
    CHECK(std::log2(e1 / e2) >= 3.5);
    CHECK(e2 <= 1e-6);
    HalfPlaneGrid g;
    g.NX = 128;
    g.NY = 384;
    const auto f = sample(g, f_of);
    const auto Lt = apply_Lt(f, t);
    // L_t - L = (1+t)^{-2} d_X^2
    const auto L = apply_L(f);
    const auto fxx = sample(g, [&](double X, double Y) { return eps * (4 * X * X - 2) * Y * std::exp(-X * X - Y * Y); });
    HalfPlaneField diff(g);
    for (std::size_t n = 0; n < diff.v.size(); ++n) diff.v[n] = Lt.v[n] - L.v[n];
    CHECK(max_diff_interior(diff, fxx) <= 1e-9 * max_abs(fxx));
}

TEST_CASE("Linear operator is linear and maps zero to zero") {
    const HalfPlaneGrid g = small_grid();
    const auto f = sample(g, [](double X, double Y) { return Y * std::exp(-X * X - (Y - 1) * (Y - 1)); });
    auto s = f;
    for (double& v : s.v) v *= 3.7;
    const auto a = apply_Lt(f, 1.0), b = apply_Lt(s, 1.0);
    for (std::size_t n = 0; n < a.v.size(); ++n) CHECK(std::abs(b.v[n] - 3.7 * a.v[n]) <= 1e-12 * (1 + std::abs(b.v[n])));
    CHECK(max_abs(apply_L(HalfPlaneField(g))) == 0.0);
}

TEST_CASE("Nonlinear term: M2 neutrality, quadratic scaling and prefactor") {
    const HalfPlaneGrid g = small_grid();
    const auto f = sample(g, [](double X, double Y) {
        return Y * std::exp(-X * X - (Y - 1) * (Y - 1)) - 0.5 * Y * std::exp(-(X - 1) * (X - 1) - Y * Y);
    });
    const auto N = apply_Nt(f, 0.5, 1.0);
    const double m2 = moments(N).M2;
    const double scale = trapezoid_sum(N, [](double, double Y, double v) { return Y * std::abs(v); });
    CHECK(scale > 0.0);
    CHECK(std::abs(m2) <= 1e-6 * scale);
    auto f2 = f;
    for (double& v : f2.v) v *= 2.0;
    const auto N2 = apply_Nt(f2, 0.5, 1.0);
    for (std::size_t n = 0; n < N.v.size(); ++n) CHECK(std::abs(N2.v[n] - 4.0 * N.v[n]) <= 1e-12 * (1 + std::abs(N2.v[n])));
    // nu^{3/2} halved doubles the output
    const auto Nh = apply_Nt(f, 0.5, std::pow(0.5, 2.0 / 3.0));
    for (std::size_t n = 0; n < N.v.size(); ++n) CHECK(std::abs(Nh.v[n] - 2.0 * N.v[n]) <= 1e-12 * (1 + std::abs(Nh.v[n])));
}

TEST_CASE("Weighted norms and moments") {
    HalfPlaneGrid g;
    g.NX = 256;
    g.NY = 192;
    // f = Y e^{-X^2-Y^2}: ||f||^2_{L2(1)} = int Y^2 (1+X^2+Y^2) e^{-2X^2-2Y^2}
    const auto f = sample(g, [](double X, double Y) { return Y * std::exp(-X * X - Y * Y); });
    const double sx0 = std::sqrt(pi / 2), sx2 = std::sqrt(pi / 2) / 4;    // int e^{-2X^2}, int X^2 e^{-2X^2}
    const double sy2 = std::sqrt(pi / 2) / 8, sy4 = 3 * std::sqrt(pi / 2) / 32;  // over Y > 0
    const double exact1 = sx0 * sy2 + sx2 * sy2 + sx0 * sy4;
    CHECK(std::abs(weighted_norm(f, 1) - std::sqrt(exact1)) <= 1e-6 * std::sqrt(exact1));
    CHECK(std::abs(weighted_norm(f, 0) - lp_norm(f, 2.0)) < 1e-14);
    for (int m = 0; m < 6; ++m) CHECK(weighted_norm(f, m + 1) >= weighted_norm(f, m));
    const auto mo = moments(f);
    CHECK(std::abs(mo.M1) < 1e-14);
    CHECK(std::abs(mo.M2 - std::sqrt(pi) * std::sqrt(pi) / 4) < 1e-10);  // int e^{-X^2} * int Y^2 e^{-Y^2}
    CHECK(std::abs(lp_norm(f, std::numeric_limits<double>::infinity()) - max_abs(f)) == 0.0);
    CHECK_THROWS(weighted_norm(f, -1));
    CHECK_THROWS(lp_norm(f, 0.5));
}

TEST_CASE("Initial data helpers") {
    const HalfPlaneGrid g = small_grid();
    const auto f = normalized_bump(g, {1.0, 1.0, 1.0, 0.5, 0.0}, 0.3);
    CHECK(std::abs(moments(f).M2 - 0.3) < 1e-14);
    const auto z = m2_free_bumps(g, {1.0, 1.0, 1.0, 0.0, 0.0}, {1.0, 2.0, 2.0, 0.0, 0.0});
    CHECK(std::abs(moments(z).M2) < 1e-14);
    for (int i = 0; i < g.NX; ++i) CHECK((f.at(i, 0) == 0.0 && f.at(i, g.NY) == 0.0));
}

TEST_CASE("Scheme names") {
    CHECK(parse_scheme("imex-cn") == Scheme::imex_cn);
    CHECK(parse_scheme("rk3-explicit-diffusion-implicit") == Scheme::rk3);
    CHECK(to_string(Scheme::rk3) == "rk3");
    CHECK_THROWS(parse_scheme("euler"));
}

TEST_CASE("Runs conserve M2, keep the wall row and do not raise L1") {
    for (Scheme sc : {Scheme::rk3, Scheme::imex_cn}) {
        SimConfig c;
        c.grid = small_grid();
        c.tau_end = 1.0;
        c.dtau = 0.02;
        c.scheme = sc;
        c.output_every = 5;
        const auto f0 = normalized_bump(c.grid, {1.0, 1.0, 1.0, 0.5, 0.0}, 1.0);
        const auto r = run(c, f0);
        INFO(to_string(sc));
        REQUIRE_FALSE(r.diverged);
        CHECK(r.max_m2_drift <= 1e-6);
        CHECK(r.max_l1_rise <= 0.0);
        for (int i = 0; i < c.grid.NX; ++i) CHECK(r.final_state.at(i, 0) == 0.0);
        for (std::size_t n = 1; n < r.rows.size(); ++n) CHECK(r.rows[n].L1 <= r.rows[n - 1].L1);
        CHECK(r.rows.size() == 11);
    }
}

TEST_CASE("Linear original-variable L2 norm does not grow") {
    SimConfig c;
    c.grid = small_grid();
    c.nonlinear = false;
    c.tau_end = 1.0;
    c.dtau = 0.05;
    c.output_every = 1;
    const auto r = run(c, normalized_bump(c.grid, {1.0, 1.0, 1.0, 0.0, 0.0}));
    for (std::size_t n = 1; n < r.rows.size(); ++n) CHECK(r.rows[n].L2 <= r.rows[n - 1].L2);
}

TEST_CASE("Time stepping self-converges at second order or better") {
    const HalfPlaneGrid g = small_grid();
    const auto f0 = normalized_bump(g, {1.0, 1.0, 1.0, 0.0, 0.0}, 1.0);
    for (Scheme sc : {Scheme::rk3, Scheme::imex_cn}) {
        StepperOptions o;
        Stepper S(g, o);
        const double h0 = 0.5 * S.stable_step(f0, 0.0), T = 0.2;
        auto advance = [&](double h) {
            Stepper st(g, o);
            auto f = f0;
            const int n = int(std::lround(T / h));
            for (int s = 0; s < n; ++s) st.step(f, s * h, h, sc);
            return f;
        };
        const double h = T / std::ceil(T / h0);
        const auto a = advance(h), b = advance(h / 2), c = advance(h / 4);
        const double order = std::log2(l2_diff(a, b) / l2_diff(b, c));
        INFO(to_string(sc) << " order " << order);
        CHECK(order >= 2.0 - 0.1);
    }
}

TEST_CASE("Linear flow in self-similar variables does not depend on nu") {
    SimConfig c;
    c.grid = small_grid();
    c.nonlinear = false;
    c.tau_end = 0.3;
    c.dtau = 0.05;
    const auto f0 = normalized_bump(c.grid, {1.0, 1.0, 1.0, 0.0, 0.0});
    const auto a = run(c, f0).final_state;
    c.nu = 0.01;
    const auto b = run(c, f0).final_state;
    CHECK(max_diff_interior(a, b) == 0.0);
}

TEST_CASE("Nonlinear and linear trajectories agree to first order") {
    SimConfig c;
    c.grid = small_grid();
    c.tau_end = 0.5;
    c.dtau = 0.05;
    std::vector<double> amps, rel;
    for (double A : {1.0, 0.1, 0.01}) {
        const auto f0 = normalized_bump(c.grid, {1.0, 1.0, 1.0, 0.5, 0.0}, A);
        c.nonlinear = true;
        const auto nl = run(c, f0).final_state;
        c.nonlinear = false;
        const auto li = run(c, f0).final_state;
        amps.push_back(A);
        rel.push_back(l2_diff(nl, li) / lp_norm(li, 2.0));
    }
    CHECK(rel[2] < 1e-3);
    CHECK(std::abs(loglog_slope(amps, rel) - 1.0) < 0.2);
}

TEST_CASE("Linear-limit run approaches the profile") {
    SimConfig c;
    c.grid = small_grid();
    c.nonlinear = false;
    c.limit_operator = true;
    // On this coarse box the m = 6 weight puts most of the norm in the box tails;
    // m = 2 keeps the tail fraction near 1%.
    c.m = 2;
    c.tau_end = 3.0;
    c.dtau = 0.05;
    c.output_every = 10;
    const auto kp = kernel::build_kernel(c.grid, kernel::solve_h(10.0, 4001));
    const auto r = run(c, normalized_bump(c.grid, {1.0, 1.0, 1.0, 0.0, 0.0}), &kp.omega);
    REQUIRE_FALSE(r.diverged);
    // after the initial transient the distance falls monotonically
    for (std::size_t n = 1; n < r.rows.size(); ++n)
        if (r.rows[n - 1].tau >= 1.0) CHECK(r.rows[n].dist_kernel < r.rows[n - 1].dist_kernel);
    CHECK(r.rows.back().dist_kernel < 0.25 * r.rows.front().dist_kernel);
}

TEST_CASE("Config validation") {
    SimConfig c;
    c.nu = 0.0;
    CHECK_THROWS(c.validate());
    c = {};
    c.grid.NX = 7;
    CHECK_THROWS(c.validate());
    c = {};
    c.output_every = 0;
    CHECK_THROWS(c.validate());
}
