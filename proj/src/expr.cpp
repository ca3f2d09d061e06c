#include "utweak/expr.hpp"

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace utweak {

namespace {

struct FuncInfo {
    const char* name;
    Func func;
    int arity;
};

constexpr FuncInfo kFuncs[] = {
    {"sin", Func::Sin, 1},        {"cos", Func::Cos, 1},
    {"tan", Func::Tan, 1},        {"atan", Func::Atan, 1},
    {"tanh", Func::Tanh, 1},      {"sinh", Func::Sinh, 1},
    {"cosh", Func::Cosh, 1},      {"exp", Func::Exp, 1},
    {"log", Func::Log, 1},        {"sqrt", Func::Sqrt, 1},
    {"smoothstep5", Func::Smoothstep5, 3}, {"indicator", Func::Indicator, 1},
};

using Node = Expr::Node;
using NodePtr = Expr::NodePtr;

NodePtr make(Expr::Kind k, std::vector<NodePtr> args = {}) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->args = std::move(args);
    return n;
}

class Parser {
public:
    Parser(std::string_view s, int dim) : s_(s), dim_(dim) {}

    NodePtr run() {
        NodePtr e = expression();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }
    [[noreturn]] void fail_at(const std::string& msg, std::size_t p) const {
        throw ParseError(msg, p);
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
        if (!accept(c)) {
            if (pos_ >= s_.size()) fail(std::string("expected '") + c + "' but input ended");
            fail(std::string("expected '") + c + "'");
        }
    }

    NodePtr expression() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make(Expr::Kind::Add, {lhs, term()});
            else if (accept('-'))
                lhs = make(Expr::Kind::Sub, {lhs, term()});
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make(Expr::Kind::Mul, {lhs, unary()});
            else if (accept('/'))
                lhs = make(Expr::Kind::Div, {lhs, unary()});
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Expr::Kind::Neg, {unary()});
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make(Expr::Kind::Pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expression();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, ++n;
            return n;
        };
        std::size_t n = digits();
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) fail_at("malformed number", start);
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (ec != std::errc() || ptr != s_.data() + pos_) fail_at("malformed number", start);
        auto node = std::make_shared<Node>();
        node->kind = Expr::Kind::Num;
        node->value = v;
        return node;
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        const std::string_view id = s_.substr(start, pos_ - start);

        if (id == "pi") {
            auto node = std::make_shared<Node>();
            node->kind = Expr::Kind::Num;
            node->value = std::numbers::pi;
            return node;
        }
        if (id.size() >= 2 && id[0] == 'x') {
            bool all_digits = true;
            for (std::size_t i = 1; i < id.size(); ++i)
                all_digits = all_digits && std::isdigit(static_cast<unsigned char>(id[i]));
            if (all_digits && id[1] != '0') {
                int idx = 0;
                std::from_chars(id.data() + 1, id.data() + id.size(), idx);
                if (idx > dim_ || id.size() > 6)
                    fail_at("variable " + std::string(id) + " exceeds dimension " +
                                std::to_string(dim_),
                            start);
                auto node = std::make_shared<Node>();
                node->kind = Expr::Kind::Var;
                node->index = idx - 1;
                return node;
            }
        }
        for (const auto& f : kFuncs) {
            if (id != f.name) continue;
            if (!accept('(')) fail("expected '(' after " + std::string(id));
            std::vector<NodePtr> args{expression()};
            while (accept(',')) args.push_back(expression());
            expect(')');
            if (static_cast<int>(args.size()) != f.arity)
                fail_at(std::string(f.name) + " takes " + std::to_string(f.arity) +
                            " argument(s), got " + std::to_string(args.size()),
                        start);
            auto node = std::make_shared<Node>();
            node->kind = Expr::Kind::Call;
            node->func = f.func;
            node->args = std::move(args);
            return node;
        }
        fail_at("unknown identifier '" + std::string(id) + "'", start);
    }

    std::string_view s_;
    int dim_;
    std::size_t pos_ = 0;
};

// Binding strength for printing: larger binds tighter.
int precedence(const Node& n) {
    switch (n.kind) {
        case Expr::Kind::Add:
        case Expr::Kind::Sub: return 1;
        case Expr::Kind::Mul:
        case Expr::Kind::Div: return 2;
        case Expr::Kind::Neg: return 3;
        case Expr::Kind::Pow: return 4;
        default: return 5;
    }
}

void print(const Node& n, std::string& out);

void print_wrapped(const Node& n, bool parens, std::string& out) {
    if (parens) out += '(';
    print(n, out);
    if (parens) out += ')';
}

void print(const Node& n, std::string& out) {
    const int p = precedence(n);
    switch (n.kind) {
        case Expr::Kind::Num:
            if (n.value == std::numbers::pi)
                out += "pi";
            else
                out += fmt::format("{}", n.value);
            return;
        case Expr::Kind::Var: out += fmt::format("x{}", n.index + 1); return;
        case Expr::Kind::Add:
        case Expr::Kind::Sub:
        case Expr::Kind::Mul:
        case Expr::Kind::Div: {
            static constexpr const char* ops = "+-*/";
            print_wrapped(*n.args[0], precedence(*n.args[0]) < p, out);
            out += ops[static_cast<int>(n.kind) - static_cast<int>(Expr::Kind::Add)];
            print_wrapped(*n.args[1], precedence(*n.args[1]) <= p, out);
            return;
        }
        case Expr::Kind::Neg:
            out += '-';
            print_wrapped(*n.args[0], precedence(*n.args[0]) < p, out);
            return;
        case Expr::Kind::Pow: {
            const Node& base = *n.args[0];
            // A negative literal base would print as "-2" and rebind.
            const bool base_parens = precedence(base) <= p ||
                                     (base.kind == Expr::Kind::Num && std::signbit(base.value));
            print_wrapped(base, base_parens, out);
            out += '^';
            print_wrapped(*n.args[1], precedence(*n.args[1]) < 3, out);
            return;
        }
        case Expr::Kind::Call:
            out += func_name(n.func);
            out += '(';
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) out += ',';
                print(*n.args[i], out);
            }
            out += ')';
            return;
    }
}

bool equal(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
    switch (a.kind) {
        case Expr::Kind::Num:
            if (!(a.value == b.value)) return false;
            break;
        case Expr::Kind::Var:
            if (a.index != b.index) return false;
            break;
        case Expr::Kind::Call:
            if (a.func != b.func) return false;
            break;
        default: break;
    }
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!equal(*a.args[i], *b.args[i])) return false;
    return true;
}

int max_var(const Node& n) {
    int m = n.kind == Expr::Kind::Var ? n.index : -1;
    for (const auto& a : n.args) m = std::max(m, max_var(*a));
    return m;
}

void compile(const Node& n, std::vector<Program::Instr>& code, int depth, int& max_depth) {
    using Op = Program::Op;
    max_depth = std::max(max_depth, depth + 1);
    switch (n.kind) {
        case Expr::Kind::Num: code.push_back({Op::Const, 0, n.value}); return;
        case Expr::Kind::Var: code.push_back({Op::Var, n.index}); return;
        case Expr::Kind::Neg:
            compile(*n.args[0], code, depth, max_depth);
            code.push_back({Op::Neg});
            return;
        case Expr::Kind::Pow: {
            compile(*n.args[0], code, depth, max_depth);
            if (auto c = Expr(n.args[1]).constant_value()) {
                if (*c == std::round(*c) && std::abs(*c) <= 64.0)
                    code.push_back({Op::PowInt, static_cast<int>(*c)});
                else
                    code.push_back({Op::PowReal, 0, *c});
                return;
            }
            compile(*n.args[1], code, depth + 1, max_depth);
            code.push_back({Op::Pow});
            return;
        }
        case Expr::Kind::Call:
            for (std::size_t i = 0; i < n.args.size(); ++i)
                compile(*n.args[i], code, depth + static_cast<int>(i), max_depth);
            code.push_back({Op::Call, 0, 0.0, n.func});
            return;
        default: {
            compile(*n.args[0], code, depth, max_depth);
            compile(*n.args[1], code, depth + 1, max_depth);
            static constexpr Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::Div};
            code.push_back({ops[static_cast<int>(n.kind) - static_cast<int>(Expr::Kind::Add)]});
            return;
        }
    }
}

}  // namespace

const char* func_name(Func f) {
    for (const auto& info : kFuncs)
        if (info.func == f) return info.name;
    return "?";
}

int func_arity(Func f) {
    for (const auto& info : kFuncs)
        if (info.func == f) return info.arity;
    return 0;
}

Expr Expr::parse(std::string_view src, int dim) {
    if (dim < 1) throw DimensionError("dimension must be positive");
    return Expr(Parser(src, dim).run());
}

Expr Expr::number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Num;
    n->value = v;
    return Expr(n);
}

Expr Expr::variable(int index) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Var;
    n->index = index;
    return Expr(n);
}

std::string Expr::to_string() const {
    std::string out;
    print(*root_, out);
    return out;
}

int Expr::max_variable() const { return max_var(*root_); }

std::optional<double> Expr::constant_value() const {
    if (!is_constant()) return std::nullopt;
    const Program p(*this);
    return p.eval<double>(nullptr);
}

std::optional<std::pair<int, int>> Expr::as_monomial() const {
    const Node& n = *root_;
    if (n.kind == Kind::Var) return std::pair{n.index, 1};
    if (n.kind == Kind::Pow && n.args[0]->kind == Kind::Var && n.args[1]->kind == Kind::Num &&
        n.args[1]->value == 2.0)
        return std::pair{n.args[0]->index, 2};
    if (n.kind == Kind::Mul && n.args[0]->kind == Kind::Var && n.args[1]->kind == Kind::Var &&
        n.args[0]->index == n.args[1]->index)
        return std::pair{n.args[0]->index, 2};
    return std::nullopt;
}

bool operator==(const Expr& a, const Expr& b) { return equal(*a.root_, *b.root_); }

Program::Program(const Expr& e) {
    int depth = 0;
    compile(e.root(), code_, 0, depth);
    if (depth > kMaxStack)
        throw ParseError("expression nests too deeply (" + std::to_string(depth) + " levels)", 0);
}

}  // namespace utweak
