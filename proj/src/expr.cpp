#include "fisherrao/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace fisherrao::expr {

ParseError::ParseError(const std::string& message, std::size_t offset)
    : std::runtime_error(message + " at offset " + std::to_string(offset)), offset_(offset) {}

EvalError::EvalError(const std::string& message, std::size_t offset)
    : std::runtime_error(message + " at offset " + std::to_string(offset)), offset_(offset) {}

Expr::Expr(std::shared_ptr<const Node> root, std::vector<std::string> variables)
    : root_(std::move(root)), variables_(std::move(variables)) {}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Parser {
    std::string_view src;
    std::size_t pos = 0;
    const std::vector<std::string>& vars;
    std::size_t depth = 0;

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= src.size();
    }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    bool consume(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    struct DepthGuard {
        Parser& parser;
        explicit DepthGuard(Parser& p) : parser(p) {
            if (++parser.depth > kMaxDepth)
                throw ParseError("expression exceeds maximum depth", parser.pos);
        }
        ~DepthGuard() { --parser.depth; }
    };

    std::shared_ptr<const Node> make(Node node) {
        return std::make_shared<const Node>(std::move(node));
    }

    std::shared_ptr<const Node> parse_expr() {
        DepthGuard guard(*this);
        auto lhs = parse_term();
        for (;;) {
            skip_ws();
            const std::size_t at = pos;
            if (consume('+')) {
                lhs = make({NodeKind::Binary, at, 0.0, 0, {}, BinaryOp::Add, CallFn::Exp, lhs,
                            parse_term()});
            } else if (consume('-')) {
                lhs = make({NodeKind::Binary, at, 0.0, 0, {}, BinaryOp::Sub, CallFn::Exp, lhs,
                            parse_term()});
            } else {
                return lhs;
            }
        }
    }

    std::shared_ptr<const Node> parse_term() {
        DepthGuard guard(*this);
        auto lhs = parse_unary();
        for (;;) {
            skip_ws();
            const std::size_t at = pos;
            if (consume('*')) {
                lhs = make({NodeKind::Binary, at, 0.0, 0, {}, BinaryOp::Mul, CallFn::Exp, lhs,
                            parse_unary()});
            } else if (consume('/')) {
                lhs = make({NodeKind::Binary, at, 0.0, 0, {}, BinaryOp::Div, CallFn::Exp, lhs,
                            parse_unary()});
            } else {
                return lhs;
            }
        }
    }

    std::shared_ptr<const Node> parse_unary() {
        DepthGuard guard(*this);
        skip_ws();
        const std::size_t at = pos;
        if (consume('-'))
            return make({NodeKind::Unary, at, 0.0, 0, {}, BinaryOp::Add, CallFn::Exp,
                         parse_unary(), nullptr});
        return parse_power();
    }

    std::shared_ptr<const Node> parse_power() {
        DepthGuard guard(*this);
        auto base = parse_primary();
        skip_ws();
        const std::size_t at = pos;
        if (consume('^')) {
            // right-associative; the exponent may carry a unary minus
            return make({NodeKind::Binary, at, 0.0, 0, {}, BinaryOp::Pow, CallFn::Exp, base,
                         parse_exponent()});
        }
        return base;
    }

    std::shared_ptr<const Node> parse_exponent() {
        DepthGuard guard(*this);
        skip_ws();
        const std::size_t at = pos;
        if (consume('-'))
            return make({NodeKind::Unary, at, 0.0, 0, {}, BinaryOp::Add, CallFn::Exp,
                         parse_exponent(), nullptr});
        return parse_power();
    }

    std::shared_ptr<const Node> parse_primary() {
        DepthGuard guard(*this);
        skip_ws();
        if (pos >= src.size()) throw ParseError("unexpected end of expression", pos);
        const std::size_t at = pos;
        const char c = src[pos];

        if (c == '(') {
            ++pos;
            auto inner = parse_expr();
            if (!consume(')')) throw ParseError("unbalanced parentheses", at);
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        throw ParseError(std::string("unexpected character '") + c + "'", at);
    }

    std::shared_ptr<const Node> parse_number() {
        const std::size_t at = pos;
        const char* begin = src.data() + pos;
        char* end = nullptr;
        const double value = std::strtod(begin, &end);
        if (end == begin) throw ParseError("malformed number", at);
        std::size_t len = static_cast<std::size_t>(end - begin);
        pos += len;
        // strtod accepts inf/nan spellings only via letters, which we never
        // reach here, but it can overflow on long literals.
        if (!std::isfinite(value)) throw ParseError("number literal out of range", at);
        if (pos < src.size() &&
            (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '.'))
            throw ParseError("malformed number", at);
        return make({NodeKind::Number, at, value, 0, {}, BinaryOp::Add, CallFn::Exp, nullptr,
                     nullptr});
    }

    std::shared_ptr<const Node> parse_name() {
        const std::size_t at = pos;
        while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) ||
                                    src[pos] == '_'))
            ++pos;
        const std::string name(src.substr(at, pos - at));

        skip_ws();
        if (pos < src.size() && src[pos] == '(') {
            CallFn fn;
            if (name == "exp") fn = CallFn::Exp;
            else if (name == "log") fn = CallFn::Log;
            else if (name == "sqrt") fn = CallFn::Sqrt;
            else if (name == "abs") fn = CallFn::Abs;
            else throw ParseError("unknown function '" + name + "'", at);
            ++pos;
            auto arg = parse_expr();
            if (!consume(')')) throw ParseError("unbalanced parentheses", at);
            return make({NodeKind::Call, at, 0.0, 0, {}, BinaryOp::Add, fn, arg, nullptr});
        }

        for (std::size_t slot = 0; slot < vars.size(); ++slot) {
            if (vars[slot] == name)
                return make({NodeKind::Variable, at, 0.0, slot, name, BinaryOp::Add,
                             CallFn::Exp, nullptr, nullptr});
        }
        throw ParseError("unknown variable '" + name + "'", at);
    }
};

}  // namespace

Expr parse(std::string_view source, const std::vector<std::string>& allowed_vars) {
    Parser parser{source, 0, allowed_vars};
    if (parser.at_end()) throw ParseError("empty expression", 0);
    auto root = parser.parse_expr();
    if (!parser.at_end())
        throw ParseError(std::string("unexpected character '") + parser.peek() + "'",
                         parser.pos);
    return Expr(std::move(root), allowed_vars);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

bool is_integer(double x) { return std::isfinite(x) && x == std::floor(x); }

double eval_node(const Node& node, std::span<const double> values) {
    switch (node.kind) {
        case NodeKind::Number:
            return node.number;
        case NodeKind::Variable:
            return values[node.var_slot];
        case NodeKind::Unary:
            return -eval_node(*node.lhs, values);
        case NodeKind::Call: {
            const double a = eval_node(*node.lhs, values);
            switch (node.fn) {
                case CallFn::Exp: {
                    const double r = std::exp(a);
                    if (!std::isfinite(r)) throw EvalError("exp overflow", node.offset);
                    return r;
                }
                case CallFn::Log:
                    if (!(a > 0.0)) throw EvalError("log of a nonpositive value", node.offset);
                    return std::log(a);
                case CallFn::Sqrt:
                    if (a < 0.0) throw EvalError("sqrt of a negative value", node.offset);
                    return std::sqrt(a);
                case CallFn::Abs:
                    return std::fabs(a);
            }
            break;
        }
        case NodeKind::Binary: {
            const double a = eval_node(*node.lhs, values);
            const double b = eval_node(*node.rhs, values);
            double r = 0.0;
            switch (node.op) {
                case BinaryOp::Add: r = a + b; break;
                case BinaryOp::Sub: r = a - b; break;
                case BinaryOp::Mul: r = a * b; break;
                case BinaryOp::Div:
                    if (b == 0.0) throw EvalError("division by zero", node.offset);
                    r = a / b;
                    break;
                case BinaryOp::Pow:
                    if (is_integer(b)) {
                        if (a == 0.0 && b < 0.0)
                            throw EvalError("zero raised to a negative power", node.offset);
                    } else if (!(a > 0.0)) {
                        throw EvalError("non-integer power of a nonpositive base",
                                        node.offset);
                    }
                    r = std::pow(a, b);
                    break;
            }
            if (!std::isfinite(r)) throw EvalError("non-finite result", node.offset);
            return r;
        }
    }
    throw EvalError("corrupt expression node", node.offset);
}

}  // namespace

double Expr::eval(std::span<const double> values) const {
    if (!root_) throw EvalError("empty expression", 0);
    if (values.size() != variables_.size())
        throw EvalError("binding count does not match the variable list", 0);
    return eval_node(*root_, values);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Node& node) {
    switch (node.kind) {
        case NodeKind::Binary:
            switch (node.op) {
                case BinaryOp::Add:
                case BinaryOp::Sub: return 1;
                case BinaryOp::Mul:
                case BinaryOp::Div: return 2;
                case BinaryOp::Pow: return 4;
            }
            return 1;
        case NodeKind::Unary:
            return 3;
        default:
            return 5;
    }
}

void print_node(const Node& node, std::string& out);

void print_child(const Node& child, int parent_prec, bool needs_parens_on_tie,
                 std::string& out) {
    const int child_prec = precedence(child);
    const bool parens =
        child_prec < parent_prec || (child_prec == parent_prec && needs_parens_on_tie);
    if (parens) out += '(';
    print_node(child, out);
    if (parens) out += ')';
}

void print_node(const Node& node, std::string& out) {
    switch (node.kind) {
        case NodeKind::Number: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", node.number);
            out += buf;
            return;
        }
        case NodeKind::Variable:
            out += node.var_name;
            return;
        case NodeKind::Unary:
            out += '-';
            print_child(*node.lhs, precedence(node), false, out);
            return;
        case NodeKind::Call:
            switch (node.fn) {
                case CallFn::Exp: out += "exp("; break;
                case CallFn::Log: out += "log("; break;
                case CallFn::Sqrt: out += "sqrt("; break;
                case CallFn::Abs: out += "abs("; break;
            }
            print_node(*node.lhs, out);
            out += ')';
            return;
        case NodeKind::Binary: {
            const int prec = precedence(node);
            const char* op = "";
            switch (node.op) {
                case BinaryOp::Add: op = " + "; break;
                case BinaryOp::Sub: op = " - "; break;
                case BinaryOp::Mul: op = "*"; break;
                case BinaryOp::Div: op = "/"; break;
                case BinaryOp::Pow: op = "^"; break;
            }
            if (node.op == BinaryOp::Pow) {
                // right-associative: parenthesize an equal-precedence base
                print_child(*node.lhs, prec, true, out);
                out += op;
                print_child(*node.rhs, prec, false, out);
            } else {
                print_child(*node.lhs, prec, false, out);
                out += op;
                print_child(*node.rhs, prec, true, out);
            }
            return;
        }
    }
}

}  // namespace

std::string Expr::print() const {
    std::string out;
    if (root_) print_node(*root_, out);
    return out;
}

bool structurally_equal(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case NodeKind::Number: {
            // bit equality keeps the round-trip property honest about -0.0
            return a.number == b.number && std::signbit(a.number) == std::signbit(b.number);
        }
        case NodeKind::Variable:
            return a.var_slot == b.var_slot && a.var_name == b.var_name;
        case NodeKind::Unary:
            return structurally_equal(*a.lhs, *b.lhs);
        case NodeKind::Call:
            return a.fn == b.fn && structurally_equal(*a.lhs, *b.lhs);
        case NodeKind::Binary:
            return a.op == b.op && structurally_equal(*a.lhs, *b.lhs) &&
                   structurally_equal(*a.rhs, *b.rhs);
    }
    return false;
}

}  // namespace fisherrao::expr
