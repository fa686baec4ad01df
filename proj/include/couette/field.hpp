#pragma once
#include <cstddef>
#include <vector>

#include <fftw3.h>

#include "couette/common.hpp"

namespace couette {

// Half-plane grid: X periodic on [-LX, LX) with NX points, Y_j = j LY / NY, j = 0..NY.
struct HalfPlaneGrid {
    double LX = 12.0, LY = 12.0;
    int NX = 512, NY = 192;

    double dX() const { return 2.0 * LX / NX; }
    double dY() const { return LY / NY; }
    double X(int i) const { return -LX + dX() * i; }
    double Y(int j) const { return dY() * j; }
    int rows() const { return NY + 1; }
    // nonnegative wavenumber of FFT index m
    double k(int m) const { return pi * m / LX; }
};

// Real field stored row-major by Y: v[j * NX + i].
struct HalfPlaneField {
    HalfPlaneGrid grid;
    std::vector<double> v;

    explicit HalfPlaneField(const HalfPlaneGrid& g = {}) : grid(g), v(std::size_t(g.NX) * g.rows(), 0.0) {}
    double& at(int i, int j) { return v[std::size_t(j) * grid.NX + i]; }
    double at(int i, int j) const { return v[std::size_t(j) * grid.NX + i]; }
};

// Row spectra: S[j * (NX/2+1) + m] = dX sum_i f(X_i, Y_j) e^{-i k_m X_i},
// the grid version of the integral of f e^{-ikX}.
inline std::vector<cplx> forward_rows(const HalfPlaneField& f) {
    const auto& g = f.grid;
    const int nk = g.NX / 2 + 1;
    std::vector<cplx> S(std::size_t(nk) * g.rows());
    std::vector<double> in(g.NX);
    std::vector<cplx> out(nk);
    fftw_plan plan = fftw_plan_dft_r2c_1d(g.NX, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    for (int j = 0; j < g.rows(); ++j) {
        for (int i = 0; i < g.NX; ++i) in[i] = f.at(i, j);
        fftw_execute_dft_r2c(plan, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
        for (int m = 0; m < nk; ++m) S[std::size_t(j) * nk + m] = out[m] * g.dX() * (m % 2 ? -1.0 : 1.0);
    }
    fftw_destroy_plan(plan);
    return S;
}

// Inverse of forward_rows: f(X_i) = (1/2LX) sum over m of S_m e^{i k_m X_i},
// negative m by conjugation. The Nyquist column is ignored.
inline HalfPlaneField inverse_rows(const HalfPlaneGrid& g, const std::vector<cplx>& S) {
    const int nk = g.NX / 2 + 1;
    HalfPlaneField f(g);
    std::vector<cplx> in(nk);
    std::vector<double> out(g.NX);
    fftw_plan plan = fftw_plan_dft_c2r_1d(g.NX, reinterpret_cast<fftw_complex*>(in.data()), out.data(), FFTW_ESTIMATE);
    for (int j = 0; j < g.rows(); ++j) {
        for (int m = 0; m < nk; ++m) in[m] = S[std::size_t(j) * nk + m] * (m % 2 ? -1.0 : 1.0);
        in[0] = in[0].real();
        in[nk - 1] = 0.0;
        fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(in.data()), out.data());
        for (int i = 0; i < g.NX; ++i) f.at(i, j) = out[i] / (2.0 * g.LX);
    }
    fftw_destroy_plan(plan);
    return f;
}

}  // namespace couette
