#pragma once

// Arithmetic expressions used by test-sequence step actions and by
// assessment predicates.
//
// Concrete syntax:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | primary
//   primary := number | identifier | 'sim_time' '(' ')' | 'step_time' '(' ')' | '(' expr ')'
//
// Bare identifiers are references: search parameters inside test sequences,
// channel names inside assessments.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sbst {

enum class BinaryOp { Add, Sub, Mul, Div };

class Expr {
public:
    enum class Kind { Constant, Reference, SimTime, StepTime, Negate, Binary };

    static Expr constant(double value);
    static Expr reference(std::string name);
    static Expr sim_time();
    static Expr step_time();
    static Expr negate(Expr operand);
    static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

    /// Throws sbst::Error with the offending position on malformed input.
    static Expr parse(std::string_view text);

    Kind kind() const;
    double value() const;             // Constant
    const std::string& name() const;  // Reference
    BinaryOp op() const;              // Binary
    const Expr& lhs() const;          // Binary, Negate (operand)
    const Expr& rhs() const;          // Binary

    /// Identifiers referenced anywhere in the tree, sorted, without duplicates.
    std::vector<std::string> references() const;
    bool uses_time() const;

    /// True if some division has a literal (or constant-folded) zero divisor.
    bool has_constant_zero_divisor() const;

    /// Replaces every reference found in `values` by a constant and folds
    /// constant subtrees. Folding never divides by zero; such nodes are kept.
    Expr substitute(const std::map<std::string, double, std::less<>>& values) const;

    std::string to_string() const;

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

/// Flattened postfix form of an Expr with references mapped to slot indices.
class BoundExpr {
public:
    /// `slot_of` maps a reference name to a slot index, or nullopt if the name
    /// is unknown (which throws sbst::Error).
    BoundExpr(const Expr& expr, const std::function<std::optional<std::size_t>(std::string_view)>& slot_of);

    /// Throws sbst::EvalError on division by zero.
    double evaluate(std::span<const double> slots, double sim_time, double step_time) const;

private:
    enum class Op { Push, Load, SimTime, StepTime, Neg, Add, Sub, Mul, Div };
    struct Instr {
        Op op;
        double value = 0.0;
        std::size_t slot = 0;
    };
    void emit(const Expr& e, const std::function<std::optional<std::size_t>(std::string_view)>& slot_of);

    std::vector<Instr> code_;
    std::size_t max_depth_ = 0;
};

}  // namespace sbst
