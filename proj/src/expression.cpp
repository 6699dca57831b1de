#include "polyma/expression.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace polyma {

struct Expression::Node {
    enum Kind { Const, Var, Unary, Binary, Call } kind = Const;
    double value = 0.0;
    int var = 0;
    char op = 0;
    std::string fn;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

struct Parser {
    std::string s;
    size_t pos = 0;

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    char peek() {
        skip();
        return pos < s.size() ? s[pos] : '\0';
    }

    NodePtr make_const(double v) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Const;
        n->value = v;
        return n;
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        while (true) {
            char c = peek();
            if (c != '+' && c != '-') break;
            ++pos;
            NodePtr rhs = parse_term();
            auto n = std::make_shared<Node>();
            n->kind = Node::Binary;
            n->op = c;
            n->args = {lhs, rhs};
            lhs = n;
        }
        return lhs;
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_power();
        while (true) {
            char c = peek();
            if (c != '*' && c != '/') break;
            ++pos;
            NodePtr rhs = parse_power();
            auto n = std::make_shared<Node>();
            n->kind = Node::Binary;
            n->op = c;
            n->args = {lhs, rhs};
            lhs = n;
        }
        return lhs;
    }

    NodePtr parse_power() {
        NodePtr base = parse_unary();
        if (peek() == '^') {
            ++pos;
            NodePtr exp = parse_power();  // right associative
            auto n = std::make_shared<Node>();
            n->kind = Node::Binary;
            n->op = '^';
            n->args = {base, exp};
            return n;
        }
        return base;
    }

    NodePtr parse_unary() {
        if (peek() == '-') {
            ++pos;
            NodePtr inner = parse_unary();
            auto n = std::make_shared<Node>();
            n->kind = Node::Unary;
            n->op = '-';
            n->args = {inner};
            return n;
        }
        if (peek() == '+') {
            ++pos;
            return parse_unary();
        }
        return parse_primary();
    }

    NodePtr parse_primary() {
        skip();
        if (pos >= s.size()) fail("ExpressionError", "unexpected end of expression");
        char c = s[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t end;
            double v = std::stod(s.substr(pos), &end);
            pos += end;
            return make_const(v);
        }
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_expr();
            if (!eat(')')) fail("ExpressionError", "missing closing parenthesis");
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            std::string name = s.substr(start, pos - start);
            if (name == "pi") return make_const(M_PI);
            if (name == "x1" || name == "x2" || name == "x3") {
                auto n = std::make_shared<Node>();
                n->kind = Node::Var;
                n->var = name[1] - '1';
                return n;
            }
            static const std::map<std::string, int> arity = {
                {"abs", 1},  {"sqrt", 1}, {"sin", 1},  {"cos", 1},   {"tan", 1},
                {"asin", 1}, {"acos", 1}, {"atan", 1}, {"atan2", 2}, {"min", 2},
                {"max", 2},  {"exp", 1},  {"log", 1}};
            auto it = arity.find(name);
            if (it == arity.end())
                fail("ExpressionError", "unknown identifier '" + name + "'");
            if (!eat('(')) fail("ExpressionError", "expected '(' after '" + name + "'");
            auto n = std::make_shared<Node>();
            n->kind = Node::Call;
            n->fn = name;
            n->args.push_back(parse_expr());
            for (int a = 1; a < it->second; ++a) {
                if (!eat(',')) fail("ExpressionError", "expected ',' in '" + name + "'");
                n->args.push_back(parse_expr());
            }
            if (!eat(')')) fail("ExpressionError", "missing ')' after '" + name + "'");
            return n;
        }
        fail("ExpressionError", std::string("unexpected character '") + c + "'");
    }
};

double eval_node(const Node& n, const Vec& x) {
    switch (n.kind) {
        case Node::Const:
            return n.value;
        case Node::Var:
            return n.var < x.size() ? x(n.var) : 0.0;
        case Node::Unary:
            return -eval_node(*n.args[0], x);
        case Node::Binary: {
            double a = eval_node(*n.args[0], x);
            double b = eval_node(*n.args[1], x);
            switch (n.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                case '^': return std::pow(a, b);
            }
            return 0;
        }
        case Node::Call: {
            double a = eval_node(*n.args[0], x);
            if (n.fn == "abs") return std::abs(a);
            if (n.fn == "sqrt") return std::sqrt(a);
            if (n.fn == "sin") return std::sin(a);
            if (n.fn == "cos") return std::cos(a);
            if (n.fn == "tan") return std::tan(a);
            if (n.fn == "asin") return std::asin(a);
            if (n.fn == "acos") return std::acos(a);
            if (n.fn == "atan") return std::atan(a);
            if (n.fn == "exp") return std::exp(a);
            if (n.fn == "log") return std::log(a);
            double b = eval_node(*n.args[1], x);
            if (n.fn == "atan2") return std::atan2(a, b);
            if (n.fn == "min") return std::min(a, b);
            if (n.fn == "max") return std::max(a, b);
            return 0;
        }
    }
    return 0;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
    Parser p;
    p.s = text;
    Expression e;
    e.root_ = p.parse_expr();
    p.skip();
    if (p.pos != text.size())
        fail("ExpressionError", "trailing input at position " + std::to_string(p.pos));
    e.text_ = text;
    return e;
}

double Expression::eval(const Vec& x) const { return eval_node(*root_, x); }

ScalarField Expression::as_field() const {
    auto root = root_;
    return ScalarField::from([root](const Vec& x) { return eval_node(*root, x); });
}

}  // namespace polyma
