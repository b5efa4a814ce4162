#pragma once

// Euclidean logarithmic norm l(A), logarithmic minimum m_l(A) = -l(-A),
// and the growth envelopes they certify for flows.
//
// l(A) is the top eigenvalue of the symmetric part (A+A^T)/2.  Eigenvalue
// bounds for a symmetric interval matrix S are obtained by diagonalizing
// the midpoint with cyclic Jacobi (non-rigorous) and then correcting
// rigorously through the Rayleigh quotient in the rotated frame: for any
// symmetric M in S and B = Q^T M Q, P = Q^T Q,
//     spec(M)  =  { u^T B u / u^T P u }  in  gersh(B) / gersh(P),
// where gersh() are Gershgorin bounds of the interval products.  A direct
// Gershgorin bound on S is the fallback.

#include <vmel/interval.hpp>
#include <vmel/linalg.hpp>

#include <utility>

namespace vmel {

struct SymEigBounds {
    double lambda_min_lower;
    double lambda_max_upper;
};

namespace detail {

// cyclic Jacobi on a small symmetric matrix; returns the accumulated rotation
inline std::vector<double> jacobi_rotations(std::vector<double> a, std::size_t n) {
    std::vector<double> q(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) q[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 30; ++sweep) {
        double off = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
        if (off < 1e-300) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t r = p + 1; r < n; ++r) {
                double apq = a[p * n + r];
                if (apq == 0.0) continue;
                double theta = (a[r * n + r] - a[p * n + p]) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k * n + p], akr = a[k * n + r];
                    a[k * n + p] = c * akp - s * akr;
                    a[k * n + r] = s * akp + c * akr;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p * n + k], ark = a[r * n + k];
                    a[p * n + k] = c * apk - s * ark;
                    a[r * n + k] = s * apk + c * ark;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double qkp = q[k * n + p], qkr = q[k * n + r];
                    q[k * n + p] = c * qkp - s * qkr;
                    q[k * n + r] = s * qkp + c * qkr;
                }
            }
    }
    return q;
}

// Gershgorin bounds for the symmetric members of an interval matrix
inline std::pair<double, double> gershgorin(const IMatrix& s) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.rows(); ++i) {
        Interval radius(0.0);
        for (std::size_t j = 0; j < s.cols(); ++j)
            if (j != i) radius += Interval(s(i, j).mag());
        lo = std::min(lo, (s(i, i) - radius).lo);
        hi = std::max(hi, (s(i, i) + radius).hi);
    }
    return {lo, hi};
}

}  // namespace detail

// Bounds on the spectrum of every symmetric point matrix contained in s.
inline SymEigBounds sym_eig_bounds(const IMatrix& s) {
    const std::size_t n = s.rows();
    if (s.cols() != n) throw DimensionMismatch();
    if (n == 0) return {0.0, 0.0};
    if (n == 1) return {s(0, 0).lo, s(0, 0).hi};

    auto [glo, ghi] = detail::gershgorin(s);

    std::vector<double> mid(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) mid[i * n + j] = 0.5 * (s(i, j).mid() + s(j, i).mid());
    std::vector<double> qf = detail::jacobi_rotations(mid, n);

    IMatrix q(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) q(i, j) = Interval(qf[i * n + j]);
    IMatrix qt = q.transpose();
    auto [bl, bh] = detail::gershgorin(qt * s * q);
    auto [pl, ph] = detail::gershgorin(qt * q);
    if (pl <= 0.0) return {glo, ghi};  // rotation too far from orthogonal

    auto div_lo = [](double num, double dl, double dh) {
        return (num <= 0 ? Interval(num) / Interval(dl) : Interval(num) / Interval(dh)).lo;
    };
    auto div_hi = [](double num, double dl, double dh) {
        return (num >= 0 ? Interval(num) / Interval(dl) : Interval(num) / Interval(dh)).hi;
    };
    double lo = std::max(glo, div_lo(bl, pl, ph));
    double hi = std::min(ghi, div_hi(bh, pl, ph));
    return {lo, hi};
}

// upper bound for the logarithmic norm l(M), all M in a
inline double lognorm_upper(const IMatrix& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch();
    IMatrix sym = Interval(0.5) * (a + a.transpose());
    return sym_eig_bounds(sym).lambda_max_upper;
}

// lower bound for the logarithmic minimum m_l(M) = -l(-M), by construction
inline double ml_lower(const IMatrix& a) { return -lognorm_upper(-a); }

// tight spectral norm bound through the eigenvalues of A^T A
inline double mat_opnorm_tight(const IMatrix& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    double cheap = mat_opnorm_sup(a);
    SymEigBounds eb = sym_eig_bounds(a.transpose() * a);
    if (eb.lambda_max_upper < 0) return cheap;
    double tight = sqrt(Interval(0.0, eb.lambda_max_upper)).hi;
    return std::min(cheap, tight);
}

namespace detail {

// plain double Gauss-Jordan inverse, used only to pick a preconditioner
inline bool dense_inverse(std::vector<double>& a, std::size_t n) {
    std::vector<double> inv(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(a[i * n + k]) > std::fabs(a[piv * n + k])) piv = i;
        if (a[piv * n + k] == 0.0) return false;
        if (piv != k)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a[k * n + j], a[piv * n + j]);
                std::swap(inv[k * n + j], inv[piv * n + j]);
            }
        double d = a[k * n + k];
        for (std::size_t j = 0; j < n; ++j) {
            a[k * n + j] /= d;
            inv[k * n + j] /= d;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k) continue;
            double m = a[i * n + k];
            if (m == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a[i * n + j] -= m * a[k * n + j];
                inv[i * n + j] -= m * inv[k * n + j];
            }
        }
    }
    a = std::move(inv);
    return true;
}

}  // namespace detail

// Lower bound for m(M) = smallest singular value, all M in a.  Two routes:
// eigenvalue bounds of the Gram matrix (tight for thin matrices) and a
// Neumann-series bound through an approximate midpoint inverse Y,
//     m(M) >= (1 - |YA - I|) / |Y|,
// which survives wide entries.  Returns 0 when neither route verifies
// invertibility.
inline double mat_m_lower(const IMatrix& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch();
    const std::size_t n = a.rows();
    if (n == 0) return 0.0;

    double best = 0.0;
    SymEigBounds eb = sym_eig_bounds(a.transpose() * a);
    if (eb.lambda_min_lower > 0.0) best = sqrt(Interval(eb.lambda_min_lower)).lo;

    std::vector<double> y(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) y[i * n + j] = a(i, j).mid();
    if (detail::dense_inverse(y, n)) {
        IMatrix yi(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) yi(i, j) = Interval(y[i * n + j]);
        double eta = mat_opnorm_sup(yi * a - IMatrix::identity(n));
        if (eta < 1.0) {
            double ynorm = mat_opnorm_tight(yi);
            if (ynorm > 0.0)
                best = std::max(best, ((Interval(1.0) - Interval(eta)) / Interval(ynorm)).lo);
        }
    }
    return best;
}

// enclosure of exp(L t) d0 for t, d0 >= 0; pass an upper log-norm bound for
// upper envelopes and a lower m_l bound for lower envelopes
inline Interval growth_envelope(double L, const Interval& t, const Interval& d0) {
    if (t.lo < 0) throw DomainError("growth envelope needs t >= 0");
    if (d0.lo < 0) throw DomainError("growth envelope needs d0 >= 0");
    return exp(Interval(L) * t) * d0;
}

}  // namespace vmel
