#include "sbst/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "sbst/error.hpp"
#include "sbst/format.hpp"

namespace sbst {

struct Expr::Node {
    Kind kind;
    double value = 0.0;
    std::string name;
    BinaryOp op = BinaryOp::Add;
    std::optional<Expr> lhs;
    std::optional<Expr> rhs;
};

Expr Expr::constant(double value) {
    return Expr(std::make_shared<const Node>(Node{Kind::Constant, value, {}, BinaryOp::Add, {}, {}}));
}

Expr Expr::reference(std::string name) {
    return Expr(std::make_shared<const Node>(Node{Kind::Reference, 0.0, std::move(name), BinaryOp::Add, {}, {}}));
}

Expr Expr::sim_time() { return Expr(std::make_shared<const Node>(Node{Kind::SimTime, 0.0, {}, BinaryOp::Add, {}, {}})); }

Expr Expr::step_time() { return Expr(std::make_shared<const Node>(Node{Kind::StepTime, 0.0, {}, BinaryOp::Add, {}, {}})); }

Expr Expr::negate(Expr operand) {
    return Expr(std::make_shared<const Node>(Node{Kind::Negate, 0.0, {}, BinaryOp::Add, std::move(operand), {}}));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
    return Expr(std::make_shared<const Node>(Node{Kind::Binary, 0.0, {}, op, std::move(lhs), std::move(rhs)}));
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
BinaryOp Expr::op() const { return node_->op; }
const Expr& Expr::lhs() const { return *node_->lhs; }
const Expr& Expr::rhs() const { return *node_->rhs; }

namespace {

void collect_refs(const Expr& e, std::set<std::string>& out) {
    switch (e.kind()) {
        case Expr::Kind::Reference: out.insert(e.name()); break;
        case Expr::Kind::Negate: collect_refs(e.lhs(), out); break;
        case Expr::Kind::Binary:
            collect_refs(e.lhs(), out);
            collect_refs(e.rhs(), out);
            break;
        default: break;
    }
}

double apply(BinaryOp op, double a, double b) {
    switch (op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div: return a / b;
    }
    return 0.0;
}

char op_char(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return '+';
        case BinaryOp::Sub: return '-';
        case BinaryOp::Mul: return '*';
        case BinaryOp::Div: return '/';
    }
    return '?';
}

int precedence(BinaryOp op) { return (op == BinaryOp::Add || op == BinaryOp::Sub) ? 1 : 2; }

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Expr parse() {
        Expr e = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    Expr expr() {
        Expr lhs = term();
        for (;;) {
            skip_ws();
            if (accept('+')) {
                lhs = Expr::binary(BinaryOp::Add, lhs, term());
            } else if (accept('-')) {
                lhs = Expr::binary(BinaryOp::Sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    Expr term() {
        Expr lhs = unary();
        for (;;) {
            skip_ws();
            if (accept('*')) {
                lhs = Expr::binary(BinaryOp::Mul, lhs, unary());
            } else if (accept('/')) {
                lhs = Expr::binary(BinaryOp::Div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    Expr unary() {
        skip_ws();
        if (accept('-')) return Expr::negate(unary());
        return primary();
    }

    Expr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (accept('(')) {
            Expr inner = expr();
            skip_ws();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::string ident = identifier();
            skip_ws();
            if (accept('(')) {
                skip_ws();
                if (!accept(')')) fail("functions take no arguments");
                if (ident == "sim_time") return Expr::sim_time();
                if (ident == "step_time") return Expr::step_time();
                fail("unknown function '" + ident + "'");
            }
            return Expr::reference(ident);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Expr number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        const auto literal = text_.substr(start, pos_ - start);
        try {
            return Expr::constant(parse_double(literal));
        } catch (const Error&) {
            pos_ = start;
            fail("malformed number '" + std::string(literal) + "'");
        }
    }

    std::string identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw Error("expression '" + std::string(text_) + "': " + what + " at offset " + std::to_string(pos_));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr Expr::parse(std::string_view text) { return Parser(text).parse(); }

std::vector<std::string> Expr::references() const {
    std::set<std::string> refs;
    collect_refs(*this, refs);
    return {refs.begin(), refs.end()};
}

bool Expr::uses_time() const {
    switch (kind()) {
        case Kind::SimTime:
        case Kind::StepTime: return true;
        case Kind::Negate: return lhs().uses_time();
        case Kind::Binary: return lhs().uses_time() || rhs().uses_time();
        default: return false;
    }
}

bool Expr::has_constant_zero_divisor() const {
    switch (kind()) {
        case Kind::Negate: return lhs().has_constant_zero_divisor();
        case Kind::Binary: {
            if (lhs().has_constant_zero_divisor() || rhs().has_constant_zero_divisor()) return true;
            if (op() != BinaryOp::Div) return false;
            const Expr folded = rhs().substitute({});
            return folded.kind() == Kind::Constant && folded.value() == 0.0;
        }
        default: return false;
    }
}

Expr Expr::substitute(const std::map<std::string, double, std::less<>>& values) const {
    switch (kind()) {
        case Kind::Reference: {
            auto it = values.find(name());
            return it == values.end() ? *this : constant(it->second);
        }
        case Kind::Negate: {
            Expr inner = lhs().substitute(values);
            if (inner.kind() == Kind::Constant) return constant(-inner.value());
            return negate(inner);
        }
        case Kind::Binary: {
            Expr a = lhs().substitute(values);
            Expr b = rhs().substitute(values);
            if (a.kind() == Kind::Constant && b.kind() == Kind::Constant &&
                !(op() == BinaryOp::Div && b.value() == 0.0)) {
                return constant(apply(op(), a.value(), b.value()));
            }
            return binary(op(), a, b);
        }
        default: return *this;
    }
}

std::string Expr::to_string() const {
    switch (kind()) {
        case Kind::Constant: return value() < 0 ? "(" + format_double(value()) + ")" : format_double(value());
        case Kind::Reference: return name();
        case Kind::SimTime: return "sim_time()";
        case Kind::StepTime: return "step_time()";
        case Kind::Negate: return "-(" + lhs().to_string() + ")";
        case Kind::Binary: {
            auto wrap = [&](const Expr& side, bool right) {
                std::string s = side.to_string();
                if (side.kind() == Kind::Binary) {
                    const int inner = precedence(side.op());
                    const int outer = precedence(op());
                    const bool needs = inner < outer ||
                                       (right && inner == outer && (op() == BinaryOp::Sub || op() == BinaryOp::Div));
                    if (needs) s = "(" + s + ")";
                }
                return s;
            };
            return wrap(lhs(), false) + " " + op_char(op()) + " " + wrap(rhs(), true);
        }
    }
    return {};
}

BoundExpr::BoundExpr(const Expr& expr, const std::function<std::optional<std::size_t>(std::string_view)>& slot_of) {
    emit(expr, slot_of);
    std::size_t depth = 0;
    for (const auto& ins : code_) {
        switch (ins.op) {
            case Op::Push:
            case Op::Load:
            case Op::SimTime:
            case Op::StepTime: ++depth; break;
            case Op::Neg: break;
            default: --depth; break;
        }
        max_depth_ = std::max(max_depth_, depth);
    }
}

void BoundExpr::emit(const Expr& e, const std::function<std::optional<std::size_t>(std::string_view)>& slot_of) {
    switch (e.kind()) {
        case Expr::Kind::Constant: code_.push_back({Op::Push, e.value(), 0}); break;
        case Expr::Kind::Reference: {
            const auto slot = slot_of(e.name());
            if (!slot) throw Error("unresolved reference '" + e.name() + "'");
            code_.push_back({Op::Load, 0.0, *slot});
            break;
        }
        case Expr::Kind::SimTime: code_.push_back({Op::SimTime}); break;
        case Expr::Kind::StepTime: code_.push_back({Op::StepTime}); break;
        case Expr::Kind::Negate:
            emit(e.lhs(), slot_of);
            code_.push_back({Op::Neg});
            break;
        case Expr::Kind::Binary: {
            emit(e.lhs(), slot_of);
            emit(e.rhs(), slot_of);
            static constexpr Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::Div};
            code_.push_back({ops[static_cast<int>(e.op())]});
            break;
        }
    }
}

double BoundExpr::evaluate(std::span<const double> slots, double sim_time, double step_time) const {
    // Expressions are small; a fixed stack avoids allocating per sample.
    double stack_buf[32] = {};
    std::vector<double> heap;
    double* stack = stack_buf;
    if (max_depth_ > std::size(stack_buf)) {
        heap.resize(max_depth_);
        stack = heap.data();
    }
    std::size_t sp = 0;
    for (const auto& ins : code_) {
        switch (ins.op) {
            case Op::Push: stack[sp++] = ins.value; break;
            case Op::Load: stack[sp++] = slots[ins.slot]; break;
            case Op::SimTime: stack[sp++] = sim_time; break;
            case Op::StepTime: stack[sp++] = step_time; break;
            case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
            case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
            case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
            case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
            case Op::Div:
                --sp;
                if (stack[sp] == 0.0) throw EvalError("division by zero");
                stack[sp - 1] /= stack[sp];
                break;
        }
    }
    return stack[0];
}

}  // namespace sbst
