#include "reqgen/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "reqgen/csv.hpp"
#include "reqgen/errors.hpp"

namespace reqgen {

std::string primitive_to_string(const Primitive& p) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::int64_t>) return csv::format_int(v);
            else if constexpr (std::is_same_v<T, double>) return csv::format_double(v);
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else return v;
        },
        p);
}

std::string value_to_string(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::int64_t>) return csv::format_int(x);
            else if constexpr (std::is_same_v<T, double>) return csv::format_double(x);
            else if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::string>) return x;
            else if constexpr (std::is_same_v<T, ExprLocation>) return csv::format_int(x.node);
            else {
                std::string out;
                for (std::size_t i = 0; i < x.items.size(); ++i) {
                    if (i) out += ';';
                    out += primitive_to_string(x.items[i]);
                }
                return out;
            }
        },
        v);
}

bool truthy(const Value& v) {
    return std::visit(
        [](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::int64_t>) return x != 0;
            else if constexpr (std::is_same_v<T, double>) return x != 0.0;
            else if constexpr (std::is_same_v<T, bool>) return x;
            else if constexpr (std::is_same_v<T, std::string>) return !x.empty();
            else if constexpr (std::is_same_v<T, ExprLocation>) return true;
            else return !x.items.empty();
        },
        v);
}

ValueSet make_set(std::vector<Primitive> items) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    return ValueSet{std::move(items)};
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

struct Token {
    enum class Kind { number_int, number_real, identifier, op, lparen, rparen, comma, end };
    Kind kind = Kind::end;
    std::string text;
    std::int64_t int_value = 0;
    double real_value = 0.0;
    std::size_t pos = 0;
};

[[noreturn]] void parse_fail(const std::string& what, std::size_t pos) {
    fail(Errc::parse_error, what + " at position " + std::to_string(pos));
}

std::vector<Token> lex(const std::string& text) {
    std::vector<Token> out;
    std::size_t i = 0;
    const auto n = text.size();
    while (i < n) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t;
        t.pos = i;
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t j = i;
            bool is_real = false;
            while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j < n && text[j] == '.') {
                is_real = true;
                ++j;
                while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            }
            if (j < n && (text[j] == 'e' || text[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < n && (text[k] == '+' || text[k] == '-')) ++k;
                if (k < n && std::isdigit(static_cast<unsigned char>(text[k]))) {
                    is_real = true;
                    j = k;
                    while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
                }
            }
            t.text = text.substr(i, j - i);
            if (is_real) {
                t.kind = Token::Kind::number_real;
                t.real_value = csv::parse_double(t.text, "number");
            } else {
                t.kind = Token::Kind::number_int;
                t.int_value = csv::parse_int(t.text, "number");
            }
            i = j;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                ++j;
            t.kind = Token::Kind::identifier;
            t.text = text.substr(i, j - i);
            i = j;
        } else {
            switch (c) {
                case '(': t.kind = Token::Kind::lparen; t.text = "("; ++i; break;
                case ')': t.kind = Token::Kind::rparen; t.text = ")"; ++i; break;
                case ',': t.kind = Token::Kind::comma; t.text = ","; ++i; break;
                case '+': case '-': case '*': case '/': case '&':
                    t.kind = Token::Kind::op;
                    t.text = std::string(1, c);
                    ++i;
                    break;
                case '<': case '>':
                    t.kind = Token::Kind::op;
                    if (i + 1 < n && text[i + 1] == '=') {
                        t.text = std::string(1, c) + "=";
                        i += 2;
                    } else {
                        t.text = std::string(1, c);
                        ++i;
                    }
                    break;
                case '=': case '!':
                    if (i + 1 < n && text[i + 1] == '=') {
                        t.kind = Token::Kind::op;
                        t.text = std::string(1, c) + "=";
                        i += 2;
                    } else {
                        parse_fail(std::string("unexpected character '") + c + "'", i);
                    }
                    break;
                default: parse_fail(std::string("unexpected character '") + c + "'", i);
            }
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Token::Kind::end;
    end.pos = n;
    out.push_back(end);
    return out;
}

// ---------------------------------------------------------------------------
// Parser (recursive descent following Python's precedence ladder)

class Parser {
  public:
    explicit Parser(const std::string& text) : tokens_(lex(text)) {}

    ExprPtr parse() {
        ExprPtr e = parse_or();
        if (peek().kind != Token::Kind::end)
            parse_fail("unexpected trailing input '" + peek().text + "'", peek().pos);
        return e;
    }

  private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& advance() { return tokens_[pos_++]; }

    bool eat_op(const char* op) {
        if (peek().kind == Token::Kind::op && peek().text == op) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool eat_keyword(const char* kw) {
        if (peek().kind == Token::Kind::identifier && peek().text == kw) {
            ++pos_;
            return true;
        }
        return false;
    }

    static ExprPtr node(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

    static ExprPtr binary(std::string op, ExprPtr lhs, ExprPtr rhs) {
        ExprNode n;
        n.kind = ExprNode::Kind::binary;
        n.op = std::move(op);
        n.children = {std::move(lhs), std::move(rhs)};
        return node(std::move(n));
    }

    ExprPtr parse_or() {
        ExprPtr lhs = parse_and();
        while (eat_keyword("or")) lhs = binary("or", lhs, parse_and());
        return lhs;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_not();
        while (eat_keyword("and")) lhs = binary("and", lhs, parse_not());
        return lhs;
    }

    ExprPtr parse_not() {
        if (eat_keyword("not")) {
            ExprNode n;
            n.kind = ExprNode::Kind::unary;
            n.op = "not";
            n.children = {parse_not()};
            return node(std::move(n));
        }
        return parse_comparison();
    }

    bool at_comparison() const {
        if (peek().kind != Token::Kind::op) return false;
        const std::string& t = peek().text;
        return t == "<" || t == "<=" || t == ">" || t == ">=" || t == "==" || t == "!=";
    }

    ExprPtr parse_comparison() {
        ExprPtr lhs = parse_intersection();
        if (!at_comparison()) return lhs;
        const Token op = advance();
        ExprPtr rhs = parse_intersection();
        if (at_comparison())
            parse_fail("chained comparisons are not supported", peek().pos);
        return binary(op.text, lhs, rhs);
    }

    ExprPtr parse_intersection() {
        ExprPtr lhs = parse_additive();
        while (eat_op("&")) lhs = binary("&", lhs, parse_additive());
        return lhs;
    }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        for (;;) {
            if (eat_op("+")) lhs = binary("+", lhs, parse_multiplicative());
            else if (eat_op("-")) lhs = binary("-", lhs, parse_multiplicative());
            else return lhs;
        }
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_unary();
        for (;;) {
            if (eat_op("*")) lhs = binary("*", lhs, parse_unary());
            else if (eat_op("/")) lhs = binary("/", lhs, parse_unary());
            else return lhs;
        }
    }

    ExprPtr parse_unary() {
        if (eat_op("-")) {
            ExprNode n;
            n.kind = ExprNode::Kind::unary;
            n.op = "neg";
            n.children = {parse_unary()};
            return node(std::move(n));
        }
        if (eat_op("+")) return parse_unary();
        return parse_primary();
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        switch (t.kind) {
            case Token::Kind::number_int: {
                advance();
                ExprNode n;
                n.kind = ExprNode::Kind::literal;
                n.literal = t.int_value;
                return node(std::move(n));
            }
            case Token::Kind::number_real: {
                advance();
                ExprNode n;
                n.kind = ExprNode::Kind::literal;
                n.literal = t.real_value;
                return node(std::move(n));
            }
            case Token::Kind::lparen: {
                advance();
                ExprPtr inner = parse_or();
                if (peek().kind != Token::Kind::rparen)
                    parse_fail("expected ')'", peek().pos);
                advance();
                return inner;
            }
            case Token::Kind::identifier: {
                advance();
                if (t.text == "True" || t.text == "true") {
                    ExprNode n;
                    n.kind = ExprNode::Kind::literal;
                    n.literal = true;
                    return node(std::move(n));
                }
                if (t.text == "False" || t.text == "false") {
                    ExprNode n;
                    n.kind = ExprNode::Kind::literal;
                    n.literal = false;
                    return node(std::move(n));
                }
                if (peek().kind == Token::Kind::lparen) {
                    advance();
                    ExprNode n;
                    n.kind = ExprNode::Kind::call;
                    n.name = t.text;
                    if (peek().kind != Token::Kind::rparen) {
                        for (;;) {
                            n.children.push_back(parse_or());
                            if (peek().kind == Token::Kind::comma) {
                                advance();
                                continue;
                            }
                            break;
                        }
                    }
                    if (peek().kind != Token::Kind::rparen)
                        parse_fail("expected ')' after call arguments", peek().pos);
                    advance();
                    return node(std::move(n));
                }
                ExprNode n;
                n.kind = ExprNode::Kind::identifier;
                n.name = t.text;
                return node(std::move(n));
            }
            default: parse_fail("expected an expression, got '" + t.text + "'", t.pos);
        }
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

const std::set<std::string> kBuiltins = {"dtt", "stops", "len", "set"};

void collect_dependencies(const ExprPtr& e, std::set<std::string>& out) {
    switch (e->kind) {
        case ExprNode::Kind::identifier: out.insert(e->name); break;
        case ExprNode::Kind::literal: break;
        default:
            for (const ExprPtr& c : e->children) collect_dependencies(c, out);
    }
}

}  // namespace

ExprPtr parse_expression(const std::string& text) { return Parser(text).parse(); }

std::set<std::string> dependencies(const ExprPtr& expr) {
    std::set<std::string> out;
    collect_dependencies(expr, out);
    return out;
}

std::set<std::string> dependencies(const std::string& text) {
    return dependencies(parse_expression(text));
}

bool calls_function(const ExprPtr& expr, const std::string& name) {
    if (expr->kind == ExprNode::Kind::call && expr->name == name) return true;
    for (const ExprPtr& c : expr->children)
        if (calls_function(c, name)) return true;
    return false;
}

std::string print_expression(const ExprPtr& e) {
    switch (e->kind) {
        case ExprNode::Kind::literal: {
            if (std::holds_alternative<bool>(e->literal))
                return std::get<bool>(e->literal) ? "True" : "False";
            return value_to_string(e->literal);
        }
        case ExprNode::Kind::identifier: return e->name;
        case ExprNode::Kind::unary:
            if (e->op == "not") return "(not " + print_expression(e->children[0]) + ")";
            return "(-" + print_expression(e->children[0]) + ")";
        case ExprNode::Kind::binary: {
            const std::string op =
                (e->op == "and" || e->op == "or") ? " " + e->op + " " : " " + e->op + " ";
            return "(" + print_expression(e->children[0]) + op +
                   print_expression(e->children[1]) + ")";
        }
        case ExprNode::Kind::call: {
            std::string out = e->name + "(";
            for (std::size_t i = 0; i < e->children.size(); ++i) {
                if (i) out += ", ";
                out += print_expression(e->children[i]);
            }
            return out + ")";
        }
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Evaluator

namespace {

bool is_numeric(const Value& v) {
    return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
}

double as_real(const Value& v) {
    if (std::holds_alternative<std::int64_t>(v))
        return static_cast<double>(std::get<std::int64_t>(v));
    return std::get<double>(v);
}

[[noreturn]] void type_fail(const std::string& what) { fail(Errc::type_error, what); }

Value numeric_binary(const std::string& op, const Value& lhs, const Value& rhs) {
    if (!is_numeric(lhs) || !is_numeric(rhs))
        type_fail("operator '" + op + "' needs numeric operands");
    const bool both_int =
        std::holds_alternative<std::int64_t>(lhs) && std::holds_alternative<std::int64_t>(rhs);
    if (op == "/") {
        // True division, always real.
        const double d = as_real(rhs);
        if (d == 0.0) fail(Errc::division_by_zero, "division by zero");
        return as_real(lhs) / d;
    }
    if (both_int) {
        const std::int64_t a = std::get<std::int64_t>(lhs);
        const std::int64_t b = std::get<std::int64_t>(rhs);
        if (op == "+") return a + b;
        if (op == "-") return a - b;
        if (op == "*") return a * b;
    } else {
        const double a = as_real(lhs);
        const double b = as_real(rhs);
        if (op == "+") return a + b;
        if (op == "-") return a - b;
        if (op == "*") return a * b;
    }
    type_fail("unknown numeric operator '" + op + "'");
}

Value compare(const std::string& op, const Value& lhs, const Value& rhs) {
    if (is_numeric(lhs) && is_numeric(rhs)) {
        const double a = as_real(lhs);
        const double b = as_real(rhs);
        if (op == "<") return a < b;
        if (op == "<=") return a <= b;
        if (op == ">") return a > b;
        if (op == ">=") return a >= b;
        if (op == "==") return a == b;
        if (op == "!=") return a != b;
    }
    if (op == "==" || op == "!=") {
        // Same-kind structural equality for the non-numeric values.
        const bool eq = lhs == rhs;
        return op == "==" ? eq : !eq;
    }
    type_fail("operator '" + op + "' needs numeric operands");
}

}  // namespace

Value evaluate(const ExprPtr& expr, const Env& env, const EvalContext& ctx) {
    switch (expr->kind) {
        case ExprNode::Kind::literal: return expr->literal;
        case ExprNode::Kind::identifier: {
            const auto it = env.find(expr->name);
            if (it == env.end())
                fail(Errc::unbound_identifier, "identifier '" + expr->name + "' is not bound");
            return it->second;
        }
        case ExprNode::Kind::unary: {
            const Value v = evaluate(expr->children[0], env, ctx);
            if (expr->op == "not") return !truthy(v);
            if (!is_numeric(v)) type_fail("unary minus needs a numeric operand");
            if (std::holds_alternative<std::int64_t>(v)) return -std::get<std::int64_t>(v);
            return -std::get<double>(v);
        }
        case ExprNode::Kind::binary: {
            const std::string& op = expr->op;
            if (op == "and") {
                // Short-circuit, boolean result.
                if (!truthy(evaluate(expr->children[0], env, ctx))) return false;
                return truthy(evaluate(expr->children[1], env, ctx));
            }
            if (op == "or") {
                if (truthy(evaluate(expr->children[0], env, ctx))) return true;
                return truthy(evaluate(expr->children[1], env, ctx));
            }
            const Value lhs = evaluate(expr->children[0], env, ctx);
            const Value rhs = evaluate(expr->children[1], env, ctx);
            if (op == "&") {
                if (!std::holds_alternative<ValueSet>(lhs) ||
                    !std::holds_alternative<ValueSet>(rhs))
                    type_fail("operator '&' needs set operands");
                const auto& a = std::get<ValueSet>(lhs).items;
                const auto& b = std::get<ValueSet>(rhs).items;
                std::vector<Primitive> inter;
                std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                                      std::back_inserter(inter));
                return ValueSet{std::move(inter)};
            }
            if (op == "+" || op == "-" || op == "*" || op == "/")
                return numeric_binary(op, lhs, rhs);
            return compare(op, lhs, rhs);
        }
        case ExprNode::Kind::call: {
            const std::string& name = expr->name;
            if (name == "len") {
                if (expr->children.size() != 1) type_fail("len() takes exactly one argument");
                const Value v = evaluate(expr->children[0], env, ctx);
                if (std::holds_alternative<ValueArray>(v))
                    return static_cast<std::int64_t>(std::get<ValueArray>(v).items.size());
                if (std::holds_alternative<ValueSet>(v))
                    return static_cast<std::int64_t>(std::get<ValueSet>(v).items.size());
                if (std::holds_alternative<std::string>(v))
                    return static_cast<std::int64_t>(std::get<std::string>(v).size());
                type_fail("len() needs an array, set, or string");
            }
            if (name == "set") {
                if (expr->children.size() != 1) type_fail("set() takes exactly one argument");
                const Value v = evaluate(expr->children[0], env, ctx);
                if (std::holds_alternative<ValueArray>(v))
                    return make_set(std::get<ValueArray>(v).items);
                if (std::holds_alternative<ValueSet>(v)) return v;
                type_fail("set() needs an array or set");
            }
            if (name == "dtt") {
                if (expr->children.size() != 2) type_fail("dtt() takes exactly two arguments");
                if (!ctx.dtt)
                    fail(Errc::unknown_function, "dtt() is not available in this context");
                const Value a = evaluate(expr->children[0], env, ctx);
                const Value b = evaluate(expr->children[1], env, ctx);
                if (!std::holds_alternative<ExprLocation>(a) ||
                    !std::holds_alternative<ExprLocation>(b))
                    type_fail("dtt() needs two location arguments");
                return ctx.dtt(std::get<ExprLocation>(a), std::get<ExprLocation>(b));
            }
            if (name == "stops") {
                if (expr->children.size() != 1) type_fail("stops() takes exactly one argument");
                if (!ctx.stops)
                    fail(Errc::unknown_function, "stops() is not available in this context");
                const Value a = evaluate(expr->children[0], env, ctx);
                if (!std::holds_alternative<ExprLocation>(a))
                    type_fail("stops() needs a location argument");
                return ctx.stops(std::get<ExprLocation>(a), env);
            }
            fail(Errc::unknown_function, "unknown function '" + name + "'");
        }
    }
    type_fail("malformed expression node");
}

Value evaluate(const std::string& text, const Env& env, const EvalContext& ctx) {
    return evaluate(parse_expression(text), env, ctx);
}

}  // namespace reqgen
