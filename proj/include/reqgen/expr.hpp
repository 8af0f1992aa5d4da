#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "reqgen/geodesy.hpp"

namespace reqgen {

// A place on the network: the snapped node plus its coordinates. Node -1
// means "coordinate only" (not snapped yet).
struct ExprLocation {
    std::int64_t node = -1;
    LonLat pos;

    bool operator==(const ExprLocation& o) const { return node == o.node; }
};

// Primitive cell: the element type of arrays and sets.
using Primitive = std::variant<std::int64_t, double, bool, std::string>;

struct ValueArray {
    std::vector<Primitive> items;
    bool operator==(const ValueArray&) const = default;
};

// Sorted, duplicate-free.
struct ValueSet {
    std::vector<Primitive> items;
    bool operator==(const ValueSet&) const = default;
};

using Value =
    std::variant<std::int64_t, double, bool, std::string, ExprLocation, ValueArray, ValueSet>;

using Env = std::map<std::string, Value>;

// Human-readable rendering, used in error messages and CSV cells.
std::string value_to_string(const Value& v);
std::string primitive_to_string(const Primitive& p);

// Python-style truthiness: false for 0, 0.0, false, "", empty array/set.
bool truthy(const Value& v);

// Builds a set from array/set items: sorted, duplicates removed.
ValueSet make_set(std::vector<Primitive> items);

// ---------------------------------------------------------------------------
// AST

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class Kind { literal, identifier, unary, binary, call };
    Kind kind = Kind::literal;
    Value literal;                 // Kind::literal
    std::string name;              // identifier or call target
    std::string op;                // "+-*/&", comparisons, "and", "or", "not", "neg"
    std::vector<ExprPtr> children; // operands / call arguments
};

// Parses one expression. Operator precedence follows Python: or < and < not
// < comparisons < & < +- < */ < unary minus < call/atom. Chained comparisons
// (a < b < c) are rejected. Throws Errc::parse_error with the offending
// position in the message.
ExprPtr parse_expression(const std::string& text);

// Free identifiers in the expression, excluding builtin function names.
std::set<std::string> dependencies(const ExprPtr& expr);
std::set<std::string> dependencies(const std::string& text);

// True when the expression calls the given builtin anywhere.
bool calls_function(const ExprPtr& expr, const std::string& name);

// Fully parenthesised rendering that parses back to the same AST.
std::string print_expression(const ExprPtr& expr);

// Runtime hooks for the two network-aware builtins. A missing hook makes the
// corresponding call fail with Errc::unknown_function.
struct EvalContext {
    // Direct (shortest-path) drive travel time in seconds.
    std::function<double(const ExprLocation&, const ExprLocation&)> dtt;
    // Station ids reachable on foot; reads max_walking / walk_speed from env.
    std::function<ValueSet(const ExprLocation&, const Env&)> stops;
};

// Evaluates the AST against the environment. Numeric semantics are
// Python-like: '/' is true division yielding real, '+', '-', '*' keep
// integers exact, 'and'/'or'/'not' return booleans via truthiness, '&'
// intersects sets. Throws Errc::unbound_identifier, Errc::type_error,
// Errc::division_by_zero, Errc::unknown_function.
Value evaluate(const ExprPtr& expr, const Env& env, const EvalContext& ctx = {});

Value evaluate(const std::string& text, const Env& env, const EvalContext& ctx = {});

}  // namespace reqgen
