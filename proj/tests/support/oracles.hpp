#pragma once

// Non-rigorous numerical oracles used only by tests: dense matrix
// exponential, a classic RK4 integrator, and helpers for sampling.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracles {

using DMat = std::vector<std::vector<double>>;
using DVec = std::vector<double>;

inline DMat dmat(std::size_t n) { return DMat(n, DVec(n, 0.0)); }

inline DMat mul(const DMat& a, const DMat& b) {
    std::size_t n = a.size();
    DMat c = dmat(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

inline DMat add(const DMat& a, const DMat& b) {
    std::size_t n = a.size();
    DMat c = dmat(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i][j] = a[i][j] + b[i][j];
    return c;
}

inline DMat scale(const DMat& a, double s) {
    DMat c = a;
    for (auto& row : c)
        for (auto& x : row) x *= s;
    return c;
}

inline DMat identity(std::size_t n) {
    DMat c = dmat(n);
    for (std::size_t i = 0; i < n; ++i) c[i][i] = 1.0;
    return c;
}

// scaling and squaring with a long Taylor series
inline DMat expm(const DMat& a, double t = 1.0) {
    std::size_t n = a.size();
    double norm = 0;
    for (const auto& row : a)
        for (double x : row) norm = std::max(norm, std::fabs(x * t));
    int s = 0;
    while (norm > 0.25) { norm *= 0.5; ++s; }
    DMat b = scale(a, t / std::ldexp(1.0, s));
    DMat term = identity(n), sum = identity(n);
    for (int k = 1; k <= 20; ++k) {
        term = scale(mul(term, b), 1.0 / k);
        sum = add(sum, term);
    }
    for (int i = 0; i < s; ++i) sum = mul(sum, sum);
    return sum;
}

inline DVec matvec(const DMat& a, const DVec& x) {
    DVec y(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
    return y;
}

// spectral norm and smallest singular value through the Gram matrix (Jacobi)
inline void sym_eig_range(DMat s, double& lmin, double& lmax) {
    std::size_t n = s.size();
    for (int sweep = 0; sweep < 50; ++sweep)
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(s[p][q]) < 1e-300) continue;
                double theta = (s[q][q] - s[p][p]) / (2 * s[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
                double c = 1 / std::sqrt(t * t + 1), sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double skp = s[k][p], skq = s[k][q];
                    s[k][p] = c * skp - sn * skq;
                    s[k][q] = sn * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double spk = s[p][k], sqk = s[q][k];
                    s[p][k] = c * spk - sn * sqk;
                    s[q][k] = sn * spk + c * sqk;
                }
            }
    lmin = s[0][0];
    lmax = s[0][0];
    for (std::size_t i = 1; i < n; ++i) {
        lmin = std::min(lmin, s[i][i]);
        lmax = std::max(lmax, s[i][i]);
    }
}

inline double opnorm(const DMat& a) {
    DMat g = dmat(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
            for (std::size_t k = 0; k < a.size(); ++k) g[i][j] += a[k][i] * a[k][j];
    double lmin, lmax;
    sym_eig_range(g, lmin, lmax);
    return std::sqrt(std::max(0.0, lmax));
}

inline double smallest_sv(const DMat& a) {
    DMat g = dmat(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
            for (std::size_t k = 0; k < a.size(); ++k) g[i][j] += a[k][i] * a[k][j];
    double lmin, lmax;
    sym_eig_range(g, lmin, lmax);
    return std::sqrt(std::max(0.0, lmin));
}

// fixed-step RK4 for a generic right-hand side
inline DVec rk4(const std::function<DVec(const DVec&)>& f, DVec x, double T, int steps) {
    double h = T / steps;
    for (int s = 0; s < steps; ++s) {
        DVec k1 = f(x);
        DVec x2 = x;
        for (std::size_t i = 0; i < x.size(); ++i) x2[i] = x[i] + 0.5 * h * k1[i];
        DVec k2 = f(x2);
        for (std::size_t i = 0; i < x.size(); ++i) x2[i] = x[i] + 0.5 * h * k2[i];
        DVec k3 = f(x2);
        for (std::size_t i = 0; i < x.size(); ++i) x2[i] = x[i] + h * k3[i];
        DVec k4 = f(x2);
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return x;
}

}  // namespace oracles
