#include "semigroup/expression.hpp"

#include "semigroup/errors.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace semigroup {
namespace detail {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sin, Cos };

struct ExprNode {
    Op op;
    double value = 0.0;
    int var = -1;
    std::shared_ptr<const ExprNode> a, b;
};

using NodePtr = std::shared_ptr<const ExprNode>;

namespace {

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr constant(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Const;
    n->value = v;
    return n;
}

NodePtr variable(int k) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Var;
    n->var = k;
    return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

// Smart constructors fold constants so derivatives stay small.
NodePtr add(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return constant(a->value + b->value);
    return make(Op::Add, a, b);
}
NodePtr sub(NodePtr a, NodePtr b) {
    if (is_const(b, 0.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return constant(a->value - b->value);
    if (is_const(a, 0.0)) return make(Op::Neg, b);
    return make(Op::Sub, a, b);
}
NodePtr mul(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return constant(a->value * b->value);
    return make(Op::Mul, a, b);
}
NodePtr div(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0)) return constant(0.0);
    if (is_const(b, 1.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return constant(a->value / b->value);
    return make(Op::Div, a, b);
}
NodePtr neg(NodePtr a) {
    if (a->op == Op::Const) return constant(-a->value);
    return make(Op::Neg, a);
}
NodePtr pow_node(NodePtr a, NodePtr b) {
    if (is_const(b, 0.0)) return constant(1.0);
    if (is_const(b, 1.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return constant(std::pow(a->value, b->value));
    return make(Op::Pow, a, b);
}
NodePtr unary(Op op, NodePtr a) {
    if (a->op == Op::Const) {
        switch (op) {
            case Op::Exp: return constant(std::exp(a->value));
            case Op::Log: return constant(std::log(a->value));
            case Op::Sin: return constant(std::sin(a->value));
            case Op::Cos: return constant(std::cos(a->value));
            default: break;
        }
    }
    return make(op, a);
}

double eval(const ExprNode& n, const Vec& x) {
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return x(n.var);
        case Op::Add: return eval(*n.a, x) + eval(*n.b, x);
        case Op::Sub: return eval(*n.a, x) - eval(*n.b, x);
        case Op::Mul: return eval(*n.a, x) * eval(*n.b, x);
        case Op::Div: return eval(*n.a, x) / eval(*n.b, x);
        case Op::Pow: return std::pow(eval(*n.a, x), eval(*n.b, x));
        case Op::Neg: return -eval(*n.a, x);
        case Op::Exp: return std::exp(eval(*n.a, x));
        case Op::Log: return std::log(eval(*n.a, x));
        case Op::Sin: return std::sin(eval(*n.a, x));
        case Op::Cos: return std::cos(eval(*n.a, x));
    }
    return 0.0;
}

NodePtr derive(const NodePtr& n, int k) {
    switch (n->op) {
        case Op::Const: return constant(0.0);
        case Op::Var: return constant(n->var == k ? 1.0 : 0.0);
        case Op::Add: return add(derive(n->a, k), derive(n->b, k));
        case Op::Sub: return sub(derive(n->a, k), derive(n->b, k));
        case Op::Mul: return add(mul(derive(n->a, k), n->b), mul(n->a, derive(n->b, k)));
        case Op::Div:
            return div(sub(mul(derive(n->a, k), n->b), mul(n->a, derive(n->b, k))),
                       mul(n->b, n->b));
        case Op::Pow: {
            NodePtr da = derive(n->a, k);
            NodePtr db = derive(n->b, k);
            if (n->b->op == Op::Const) {
                return mul(mul(constant(n->b->value), pow_node(n->a, constant(n->b->value - 1.0))), da);
            }
            // d(a^b) = a^b (b' log a + b a'/a)
            return mul(n, add(mul(db, unary(Op::Log, n->a)), div(mul(n->b, da), n->a)));
        }
        case Op::Neg: return neg(derive(n->a, k));
        case Op::Exp: return mul(n, derive(n->a, k));
        case Op::Log: return div(derive(n->a, k), n->a);
        case Op::Sin: return mul(unary(Op::Cos, n->a), derive(n->a, k));
        case Op::Cos: return neg(mul(unary(Op::Sin, n->a), derive(n->a, k)));
    }
    return constant(0.0);
}

void print(const ExprNode& n, std::ostringstream& os) {
    auto bin = [&](const char* sym) {
        os << '(';
        print(*n.a, os);
        os << sym;
        print(*n.b, os);
        os << ')';
    };
    auto fn = [&](const char* name) {
        os << name << '(';
        print(*n.a, os);
        os << ')';
    };
    switch (n.op) {
        case Op::Const: os << n.value; break;
        case Op::Var: os << 'x' << (n.var + 1); break;
        case Op::Add: bin("+"); break;
        case Op::Sub: bin("-"); break;
        case Op::Mul: bin("*"); break;
        case Op::Div: bin("/"); break;
        case Op::Pow: bin("^"); break;
        case Op::Neg: os << "(-"; print(*n.a, os); os << ')'; break;
        case Op::Exp: fn("exp"); break;
        case Op::Log: fn("log"); break;
        case Op::Sin: fn("sin"); break;
        case Op::Cos: fn("cos"); break;
    }
}

class Parser {
public:
    Parser(const std::string& text, int dim) : s_(text), dim_(dim) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("expression '" + s_ + "': " + what + " at position " + std::to_string(pos_));
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    NodePtr expr() {
        NodePtr left = term();
        while (true) {
            if (accept('+')) left = add(left, term());
            else if (accept('-')) left = sub(left, term());
            else return left;
        }
    }
    NodePtr term() {
        NodePtr left = signed_factor();
        while (true) {
            if (accept('*')) left = mul(left, signed_factor());
            else if (accept('/')) left = div(left, signed_factor());
            else return left;
        }
    }
    NodePtr signed_factor() {
        if (accept('-')) return neg(signed_factor());
        if (accept('+')) return signed_factor();
        return power();
    }
    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return pow_node(base, signed_factor());
        return base;
    }
    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (accept('(')) {
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(s_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("bad number");
            }
            pos_ += used;
            return constant(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const std::string id = s_.substr(start, pos_ - start);
            if (accept('(')) return call(id);
            return identifier(id, start);
        }
        fail("unexpected character");
    }
    NodePtr call(const std::string& name) {
        NodePtr a = expr();
        if (name == "pow") {
            expect(',');
            NodePtr b = expr();
            expect(')');
            return pow_node(a, b);
        }
        expect(')');
        if (name == "exp") return unary(Op::Exp, a);
        if (name == "log") return unary(Op::Log, a);
        if (name == "sin") return unary(Op::Sin, a);
        if (name == "cos") return unary(Op::Cos, a);
        fail("unknown function '" + name + "'");
    }
    NodePtr identifier(const std::string& id, std::size_t start) {
        int index = -1;
        if (id == "x") index = 0;
        else if (id == "y") index = 1;
        else if (id == "z") index = 2;
        else if (id.size() > 1 && id[0] == 'x' &&
                 id.find_first_not_of("0123456789", 1) == std::string::npos) {
            index = std::stoi(id.substr(1)) - 1;
        } else if (id == "pi") {
            return constant(M_PI);
        }
        if (index < 0 || index >= dim_) {
            pos_ = start;
            fail("unknown variable '" + id + "' for dimension " + std::to_string(dim_));
        }
        return variable(index);
    }

    std::string s_;
    int dim_;
    std::size_t pos_ = 0;
};

}  // namespace
}  // namespace detail

Expression::Expression() : node_(detail::constant(0.0)) {}
Expression::Expression(std::shared_ptr<const detail::ExprNode> node) : node_(std::move(node)) {}

Expression Expression::parse(const std::string& text, int dim) {
    return Expression(detail::Parser(text, dim).parse());
}

Expression Expression::constant(double value) { return Expression(detail::constant(value)); }

double Expression::operator()(const Vec& x) const { return detail::eval(*node_, x); }

Expression Expression::derivative(int variable) const {
    return Expression(detail::derive(node_, variable));
}

bool Expression::is_constant() const { return node_->op == detail::Op::Const; }

std::string Expression::str() const {
    std::ostringstream os;
    os.precision(17);
    detail::print(*node_, os);
    return os.str();
}

ExpressionVector::ExpressionVector(const std::vector<std::string>& components, int dim) {
    for (const auto& text : components) {
        components_.push_back(Expression::parse(text, dim));
        std::vector<Expression> row;
        for (int k = 0; k < dim; ++k) row.push_back(components_.back().derivative(k));
        partials_.push_back(std::move(row));
    }
}

Vec ExpressionVector::operator()(const Vec& x) const {
    Vec out(size());
    for (int i = 0; i < size(); ++i) out(i) = components_[i](x);
    return out;
}

Mat ExpressionVector::jacobian(const Vec& x) const {
    const int dim = static_cast<int>(x.size());
    Mat j(size(), dim);
    for (int i = 0; i < size(); ++i)
        for (int k = 0; k < dim; ++k) j(i, k) = partials_[i][k](x);
    return j;
}

}  // namespace semigroup
