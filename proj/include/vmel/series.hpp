#pragma once

// Taylor series arithmetic over an expression DAG, generic in the
// coefficient ring.  Two rings are used: plain intervals (power matching,
// scalar expansions) and second-order jets (the integrator's simultaneous
// expansion of the flow and its variationals).

#include <vmel/expr.hpp>
#include <vmel/jet.hpp>

namespace vmel {

struct IntervalRing {
    using T = Interval;
    Interval proto;  // unused, kept for a uniform interface
    T zero() const { return Interval(0.0); }
    T lift(const Interval& c) const { return c; }
    T add(const T& a, const T& b) const { return a + b; }
    T sub(const T& a, const T& b) const { return a - b; }
    T neg(const T& a) const { return -a; }
    T mul(const T& a, const T& b) const { return a * b; }
    T scale(const T& a, const Interval& c) const { return a * c; }
    T div0(const T& a, const T& b) const { return a / b; }
    T sqrt0(const T& a) const { return sqrt(a); }
    void sincos0(const T& a, T& s, T& c) const { s = sin(a); c = cos(a); }
    T exp0(const T& a) const { return exp(a); }
};

struct JetRing {
    using T = ScalarJet2;
    std::size_t params = 0;
    T zero() const { return ScalarJet2(params); }
    T lift(const Interval& c) const { return jetops::constant(c, params); }
    T add(const T& a, const T& b) const { return jetops::add(a, b); }
    T sub(const T& a, const T& b) const { return jetops::sub(a, b); }
    T neg(const T& a) const { return jetops::neg(a); }
    T mul(const T& a, const T& b) const { return jetops::mul(a, b); }
    T scale(const T& a, const Interval& c) const {
        ScalarJet2 r(a.params());
        r.v = a.v * c;
        for (std::size_t i = 0; i < a.g.size(); ++i) r.g[i] = a.g[i] * c;
        for (std::size_t i = 0; i < a.h.size(); ++i) r.h[i] = a.h[i] * c;
        return r;
    }
    T div0(const T& a, const T& b) const { return jetops::div(a, b); }
    T sqrt0(const T& a) const { return jetops::sqrt_jet(a); }
    void sincos0(const T& a, T& s, T& c) const { s = jetops::sin_jet(a); c = jetops::cos_jet(a); }
    T exp0(const T& a) const { return jetops::exp_jet(a); }
};

// Per-node Taylor coefficients up to a fixed order.  Coefficient k of every
// node is produced in one pass once the variable coefficients of order k are
// known, so the caller can interleave passes with the ODE recurrence
// x_{k+1} = f_k / (k+1).
template <class Ring>
class SeriesEvaluator {
public:
    using T = typename Ring::T;

    SeriesEvaluator(const ExprDag& dag, Ring ring, std::size_t order)
        : dag_(dag), ring_(std::move(ring)), order_(order) {
        coeff_.assign(dag.nodes().size(), {});
        aux_.assign(dag.nodes().size(), {});
        for (auto& c : coeff_) c.assign(order_ + 1, ring_.zero());
        for (auto& c : aux_) c.assign(order_ + 1, ring_.zero());
        var_.assign(dag.arity(), std::vector<T>(order_ + 1, ring_.zero()));
    }

    std::size_t order() const { return order_; }

    void set_var_coeff(std::size_t var, std::size_t k, const T& value) { var_[var][k] = value; }

    // compute coefficient k of every node (variable coefficients of orders
    // <= k must be set)
    void pass(std::size_t k) {
        const auto& nodes = dag_.nodes();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const ExprNode& n = nodes[i];
            switch (n.op) {
                case Op::var: coeff_[i][k] = var_[n.var][k]; break;
                case Op::constant: coeff_[i][k] = (k == 0) ? ring_.lift(n.value) : ring_.zero(); break;
                case Op::add: coeff_[i][k] = ring_.add(coeff_[n.a][k], coeff_[n.b][k]); break;
                case Op::sub: coeff_[i][k] = ring_.sub(coeff_[n.a][k], coeff_[n.b][k]); break;
                case Op::neg: coeff_[i][k] = ring_.neg(coeff_[n.a][k]); break;
                case Op::mul: coeff_[i][k] = convolve(coeff_[n.a], coeff_[n.b], k); break;
                case Op::sqr: coeff_[i][k] = convolve(coeff_[n.a], coeff_[n.a], k); break;
                case Op::div: {
                    // w_k = (a_k - sum_{j<k} w_j b_{k-j}) / b_0
                    T s = coeff_[n.a][k];
                    for (std::size_t j = 0; j < k; ++j)
                        s = ring_.sub(s, ring_.mul(coeff_[i][j], coeff_[n.b][k - j]));
                    coeff_[i][k] = ring_.div0(s, coeff_[n.b][0]);
                    break;
                }
                case Op::sqrt_: {
                    if (k == 0) {
                        coeff_[i][0] = ring_.sqrt0(coeff_[n.a][0]);
                    } else {
                        T s = coeff_[n.a][k];
                        for (std::size_t j = 1; j < k; ++j)
                            s = ring_.sub(s, ring_.mul(coeff_[i][j], coeff_[i][k - j]));
                        coeff_[i][k] = ring_.div0(s, ring_.scale(coeff_[i][0], Interval(2.0)));
                    }
                    break;
                }
                case Op::sin_:
                case Op::cos_: {
                    // aux_ holds the partner series (cos for sin nodes and
                    // vice versa); both advance by the joint recurrence
                    if (k == 0) {
                        T s, c;
                        ring_.sincos0(coeff_[n.a][0], s, c);
                        coeff_[i][0] = (n.op == Op::sin_) ? s : c;
                        aux_[i][0] = (n.op == Op::sin_) ? c : s;
                    } else {
                        T s_acc = ring_.zero(), a_acc = ring_.zero();
                        for (std::size_t j = 1; j <= k; ++j) {
                            T ju = ring_.scale(coeff_[n.a][j], Interval(double(j)));
                            s_acc = ring_.add(s_acc, ring_.mul(ju, aux_[i][k - j]));
                            a_acc = ring_.add(a_acc, ring_.mul(ju, coeff_[i][k - j]));
                        }
                        Interval inv_k = Interval(1.0) / Interval(double(k));
                        if (n.op == Op::sin_) {
                            coeff_[i][k] = ring_.scale(s_acc, inv_k);
                            aux_[i][k] = ring_.neg(ring_.scale(a_acc, inv_k));
                        } else {
                            coeff_[i][k] = ring_.neg(ring_.scale(s_acc, inv_k));
                            aux_[i][k] = ring_.scale(a_acc, inv_k);
                        }
                    }
                    break;
                }
                case Op::exp_: {
                    if (k == 0) {
                        coeff_[i][0] = ring_.exp0(coeff_[n.a][0]);
                    } else {
                        T acc = ring_.zero();
                        for (std::size_t j = 1; j <= k; ++j)
                            acc = ring_.add(acc, ring_.mul(ring_.scale(coeff_[n.a][j], Interval(double(j))),
                                                           coeff_[i][k - j]));
                        coeff_[i][k] = ring_.scale(acc, Interval(1.0) / Interval(double(k)));
                    }
                    break;
                }
            }
        }
    }

    const T& output_coeff(std::size_t out, std::size_t k) const {
        return coeff_[dag_.outputs()[out]][k];
    }

private:
    T convolve(const std::vector<T>& a, const std::vector<T>& b, std::size_t k) const {
        T s = ring_.mul(a[0], b[k]);
        for (std::size_t j = 1; j <= k; ++j) s = ring_.add(s, ring_.mul(a[j], b[k - j]));
        return s;
    }

    const ExprDag& dag_;
    Ring ring_;
    std::size_t order_;
    std::vector<std::vector<T>> coeff_;
    std::vector<std::vector<T>> aux_;
    std::vector<std::vector<T>> var_;
};

// interval-coefficient polynomial helpers (univariate)
using Poly = std::vector<Interval>;

inline Interval poly_eval(const Poly& p, const Interval& x) {
    Interval acc(0.0);
    for (std::size_t i = p.size(); i-- > 0;) acc = acc * x + p[i];
    return acc;
}

inline Poly poly_derivative(const Poly& p) {
    if (p.size() <= 1) return Poly{Interval(0.0)};
    Poly d(p.size() - 1);
    for (std::size_t i = 1; i < p.size(); ++i) d[i - 1] = Interval(double(i)) * p[i];
    return d;
}

}  // namespace vmel
