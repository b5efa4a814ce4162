#pragma once

// Expression DAGs: the only vector-field interface of the library.  Every
// field is a list of scalar expressions over named variables, built through
// the combinators below or parsed from text.  Nodes are hash-consed so
// shared subexpressions are evaluated once.

#include <vmel/interval.hpp>
#include <vmel/linalg.hpp>

#include <cctype>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace vmel {

enum class Op : std::uint8_t { var, constant, add, sub, mul, div, neg, sqr, sqrt_, sin_, cos_, exp_ };

using NodeId = std::uint32_t;

struct ExprNode {
    Op op;
    NodeId a = 0, b = 0;   // children (a for unary)
    std::uint32_t var = 0; // for Op::var
    Interval value;        // for Op::constant
};

class ExprDag {
public:
    explicit ExprDag(std::vector<std::string> var_names) : vars_(std::move(var_names)) {}

    std::size_t arity() const { return vars_.size(); }
    const std::vector<std::string>& var_names() const { return vars_; }
    const std::vector<ExprNode>& nodes() const { return nodes_; }
    const std::vector<NodeId>& outputs() const { return outputs_; }
    std::size_t output_count() const { return outputs_.size(); }

    NodeId var(std::uint32_t i) {
        if (i >= vars_.size()) throw error("variable index out of range");
        ExprNode n{Op::var};
        n.var = i;
        return intern(n);
    }
    NodeId var(const std::string& name) {
        for (std::uint32_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == name) return var(i);
        throw error("unknown variable: " + name);
    }
    NodeId constant(const Interval& v) {
        ExprNode n{Op::constant};
        n.value = v;
        return intern(n);
    }
    NodeId constant(double v) { return constant(Interval(v)); }

    NodeId add(NodeId x, NodeId y) { return binary(Op::add, x, y); }
    NodeId sub(NodeId x, NodeId y) { return binary(Op::sub, x, y); }
    NodeId mul(NodeId x, NodeId y) { return binary(Op::mul, x, y); }
    NodeId div(NodeId x, NodeId y) { return binary(Op::div, x, y); }
    NodeId neg(NodeId x) {
        check(x);
        if (nodes_[x].op == Op::constant) return constant(-nodes_[x].value);
        return unary(Op::neg, x);
    }
    NodeId sqr_node(NodeId x) { return unary(Op::sqr, x); }
    NodeId sqrt_node(NodeId x) { return unary(Op::sqrt_, x); }
    NodeId sin_node(NodeId x) { return unary(Op::sin_, x); }
    NodeId cos_node(NodeId x) { return unary(Op::cos_, x); }
    NodeId exp_node(NodeId x) { return unary(Op::exp_, x); }

    // integer powers are expanded by repeated squaring at build time
    NodeId pow_node(NodeId x, int k) {
        if (k == 0) return constant(1.0);
        if (k < 0) return div(constant(1.0), pow_node(x, -k));
        if (k == 1) return x;
        NodeId half = pow_node(x, k / 2);
        NodeId sq = sqr_node(half);
        return (k % 2 == 0) ? sq : mul(sq, x);
    }

    void set_outputs(std::vector<NodeId> out) { outputs_ = std::move(out); }
    void push_output(NodeId id) { outputs_.push_back(id); }

    // plain interval evaluation over a box
    IVector eval(const IVector& x) const {
        if (x.size() != arity()) throw DimensionMismatch();
        std::vector<Interval> val(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const ExprNode& n = nodes_[i];
            switch (n.op) {
                case Op::var: val[i] = x[n.var]; break;
                case Op::constant: val[i] = n.value; break;
                case Op::add: val[i] = val[n.a] + val[n.b]; break;
                case Op::sub: val[i] = val[n.a] - val[n.b]; break;
                case Op::mul: val[i] = val[n.a] * val[n.b]; break;
                case Op::div: val[i] = val[n.a] / val[n.b]; break;
                case Op::neg: val[i] = -val[n.a]; break;
                case Op::sqr: val[i] = sqr(val[n.a]); break;
                case Op::sqrt_: val[i] = sqrt(val[n.a]); break;
                case Op::sin_: val[i] = sin(val[n.a]); break;
                case Op::cos_: val[i] = cos(val[n.a]); break;
                case Op::exp_: val[i] = exp(val[n.a]); break;
            }
        }
        IVector out(outputs_.size());
        for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = val[outputs_[k]];
        return out;
    }

    // field with every output negated (time reversal)
    ExprDag negated() const {
        ExprDag d = *this;
        std::vector<NodeId> out;
        out.reserve(outputs_.size());
        for (NodeId o : outputs_) out.push_back(d.neg(o));
        d.outputs_ = std::move(out);
        return d;
    }

private:
    NodeId unary(Op op, NodeId x) {
        check(x);
        ExprNode n{op};
        n.a = x;
        return intern(n);
    }
    NodeId binary(Op op, NodeId x, NodeId y) {
        check(x);
        check(y);
        ExprNode n{op};
        n.a = x;
        n.b = y;
        return intern(n);
    }
    void check(NodeId id) const {
        if (id >= nodes_.size()) throw error("expression node out of range");
    }
    NodeId intern(const ExprNode& n) {
        auto key = std::make_tuple(static_cast<int>(n.op), n.a, n.b, n.var, n.value.lo, n.value.hi);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        nodes_.push_back(n);
        NodeId id = static_cast<NodeId>(nodes_.size() - 1);
        memo_.emplace(key, id);
        return id;
    }

    std::vector<std::string> vars_;
    std::vector<ExprNode> nodes_;
    std::vector<NodeId> outputs_;
    std::map<std::tuple<int, NodeId, NodeId, std::uint32_t, double, double>, NodeId> memo_;
};

// ---------------------------------------------------------------------------
// Text form.  Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := atom ('^' int)?
//   atom   := number | '[' number ',' number ']' | ident | ident '(' expr ')'
//            | '(' expr ')'
// Numbers may be decimal or hex floats; interval literals carry both ends.
// ---------------------------------------------------------------------------

class ExprParser {
public:
    ExprParser(ExprDag& dag, const std::string& text) : dag_(dag), s_(text) {}

    NodeId parse() {
        NodeId r = expr();
        skip_ws();
        if (pos_ != s_.size()) throw error("trailing characters in expression: " + s_.substr(pos_));
        return r;
    }

private:
    NodeId expr() {
        NodeId lhs = term();
        for (;;) {
            skip_ws();
            if (match('+')) lhs = dag_.add(lhs, term());
            else if (match('-')) lhs = dag_.sub(lhs, term());
            else return lhs;
        }
    }
    NodeId term() {
        NodeId lhs = factor();
        for (;;) {
            skip_ws();
            if (match('*')) lhs = dag_.mul(lhs, factor());
            else if (match('/')) lhs = dag_.div(lhs, factor());
            else return lhs;
        }
    }
    NodeId factor() {
        skip_ws();
        if (match('-')) return dag_.neg(factor());
        return power();
    }
    NodeId power() {
        NodeId base = atom();
        skip_ws();
        if (match('^')) {
            skip_ws();
            bool negexp = match('-');
            int k = 0;
            if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
                throw error("integer exponent expected");
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) k = k * 10 + (s_[pos_++] - '0');
            return dag_.pow_node(base, negexp ? -k : k);
        }
        return base;
    }
    NodeId atom() {
        skip_ws();
        if (match('(')) {
            NodeId r = expr();
            expect(')');
            return r;
        }
        if (match('[')) {
            double lo = number();
            skip_ws();
            expect(',');
            double hi = number();
            skip_ws();
            expect(']');
            return dag_.constant(Interval(lo, hi));
        }
        if (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
            return dag_.constant(Interval(number()));
        std::string id = ident();
        skip_ws();
        if (match('(')) {
            NodeId arg = expr();
            expect(')');
            if (id == "sin") return dag_.sin_node(arg);
            if (id == "cos") return dag_.cos_node(arg);
            if (id == "exp") return dag_.exp_node(arg);
            if (id == "sqrt") return dag_.sqrt_node(arg);
            if (id == "sqr") return dag_.sqr_node(arg);
            throw error("unknown function: " + id);
        }
        return dag_.var(id);
    }
    double number() {
        skip_ws();
        const char* start = s_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(start, &end);
        if (end == start) throw error("number expected at: " + s_.substr(pos_));
        pos_ += static_cast<std::size_t>(end - start);
        return v;
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        if (start == pos_) throw error("identifier expected at: " + s_.substr(start));
        return s_.substr(start, pos_ - start);
    }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool match(char c) {
        if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
        return false;
    }
    void expect(char c) {
        if (!match(c)) throw error(std::string("expected '") + c + "' in expression");
    }

    ExprDag& dag_;
    const std::string& s_;
    std::size_t pos_ = 0;
};

inline NodeId parse_expression(ExprDag& dag, const std::string& text) {
    ExprParser p(dag, text);
    return p.parse();
}

inline ExprDag parse_field(const std::vector<std::string>& var_names, const std::vector<std::string>& exprs) {
    ExprDag dag(var_names);
    for (const auto& e : exprs) dag.push_output(parse_expression(dag, e));
    return dag;
}

// serialize one output as text (hex floats, bit-exact round trip)
inline std::string serialize_node(const ExprDag& dag, NodeId id) {
    const ExprNode& n = dag.nodes()[id];
    switch (n.op) {
        case Op::var: return dag.var_names()[n.var];
        case Op::constant:
            if (n.value.is_point()) return hex_double(n.value.lo);
            return "[" + hex_double(n.value.lo) + "," + hex_double(n.value.hi) + "]";
        case Op::add: return "(" + serialize_node(dag, n.a) + " + " + serialize_node(dag, n.b) + ")";
        case Op::sub: return "(" + serialize_node(dag, n.a) + " - " + serialize_node(dag, n.b) + ")";
        case Op::mul: return "(" + serialize_node(dag, n.a) + " * " + serialize_node(dag, n.b) + ")";
        case Op::div: return "(" + serialize_node(dag, n.a) + " / " + serialize_node(dag, n.b) + ")";
        case Op::neg: return "(-" + serialize_node(dag, n.a) + ")";
        case Op::sqr: return "sqr(" + serialize_node(dag, n.a) + ")";
        case Op::sqrt_: return "sqrt(" + serialize_node(dag, n.a) + ")";
        case Op::sin_: return "sin(" + serialize_node(dag, n.a) + ")";
        case Op::cos_: return "cos(" + serialize_node(dag, n.a) + ")";
        case Op::exp_: return "exp(" + serialize_node(dag, n.a) + ")";
    }
    throw error("unreachable");
}

inline std::vector<std::string> serialize_field(const ExprDag& dag) {
    std::vector<std::string> out;
    out.reserve(dag.output_count());
    for (NodeId o : dag.outputs()) out.push_back(serialize_node(dag, o));
    return out;
}

// textual substitution: replace the variables of `outer` by the outputs of
// `inner`, producing a DAG over inner's variables (used by tests as the
// composition oracle)
inline ExprDag substitute(const ExprDag& outer, const ExprDag& inner) {
    if (outer.arity() != inner.output_count()) throw DimensionMismatch();
    ExprDag out = inner;
    std::vector<NodeId> mapped(outer.nodes().size());
    for (std::size_t i = 0; i < outer.nodes().size(); ++i) {
        const ExprNode& n = outer.nodes()[i];
        switch (n.op) {
            case Op::var: mapped[i] = out.outputs()[n.var]; break;
            case Op::constant: mapped[i] = out.constant(n.value); break;
            case Op::add: mapped[i] = out.add(mapped[n.a], mapped[n.b]); break;
            case Op::sub: mapped[i] = out.sub(mapped[n.a], mapped[n.b]); break;
            case Op::mul: mapped[i] = out.mul(mapped[n.a], mapped[n.b]); break;
            case Op::div: mapped[i] = out.div(mapped[n.a], mapped[n.b]); break;
            case Op::neg: mapped[i] = out.neg(mapped[n.a]); break;
            case Op::sqr: mapped[i] = out.sqr_node(mapped[n.a]); break;
            case Op::sqrt_: mapped[i] = out.sqrt_node(mapped[n.a]); break;
            case Op::sin_: mapped[i] = out.sin_node(mapped[n.a]); break;
            case Op::cos_: mapped[i] = out.cos_node(mapped[n.a]); break;
            case Op::exp_: mapped[i] = out.exp_node(mapped[n.a]); break;
        }
    }
    std::vector<NodeId> new_outputs;
    for (NodeId o : outer.outputs()) new_outputs.push_back(mapped[o]);
    out.set_outputs(new_outputs);
    return out;
}

}  // namespace vmel
