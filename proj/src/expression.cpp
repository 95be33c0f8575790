#include "kolmo/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>
#include <vector>

namespace kolmo {

namespace {

enum class Op { kNum, kVar, kTime, kNeg, kAdd, kSub, kMul, kDiv, kPow, kSin, kCos, kExp, kAbs, kMin, kMax };

bool is_kink(Op op) { return op == Op::kAbs || op == Op::kMin || op == Op::kMax; }

}  // namespace

struct Expr::Node {
  Op op = Op::kNum;
  double value = 0.0;
  int var = 0;  // 0-based spatial index for kVar
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

struct Token {
  enum class Kind { kNum, kIdent, kSym, kEnd } kind;
  std::string text;
  double value = 0.0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r' || s_[pos_] == '\n')) {
      if (s_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= s_.size()) {
      tok_.kind = Token::Kind::kEnd;
      tok_.text = "<end>";
      return;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) throw ExprError("malformed number", line_, col_);
      tok_.kind = Token::Kind::kNum;
      tok_.value = v;
      tok_.text.assign(begin, end);
      pos_ += static_cast<std::size_t>(end - begin);
      col_ += static_cast<int>(end - begin);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = pos_;
      while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_')) ++j;
      tok_.kind = Token::Kind::kIdent;
      tok_.text = s_.substr(pos_, j - pos_);
      col_ += static_cast<int>(j - pos_);
      pos_ = j;
      return;
    }
    tok_.kind = Token::Kind::kSym;
    tok_.text = std::string(1, c);
    ++pos_;
    ++col_;
  }

  std::string s_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  Parser(const std::string& text, int n_vars) : lex_(text), n_vars_(n_vars) {}

  NodePtr run() {
    NodePtr e = sum();
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::kEnd)
      throw ExprError("unexpected '" + t.text + "'", t.line, t.col);
    return e;
  }

 private:
  [[noreturn]] void fail(const Token& t, const std::string& what) {
    throw ExprError(what, t.line, t.col);
  }

  bool eat_sym(const char* s) {
    if (lex_.peek().kind == Token::Kind::kSym && lex_.peek().text == s) {
      lex_.take();
      return true;
    }
    return false;
  }

  void expect_sym(const char* s, const char* ctx) {
    if (!eat_sym(s)) fail(lex_.peek(), std::string("expected '") + s + "' " + ctx);
  }

  NodePtr sum() {
    NodePtr e = product();
    for (;;) {
      if (eat_sym("+"))
        e = make(Op::kAdd, e, product());
      else if (eat_sym("-"))
        e = make(Op::kSub, e, product());
      else
        return e;
    }
  }

  NodePtr product() {
    NodePtr e = unary();
    for (;;) {
      if (eat_sym("*"))
        e = make(Op::kMul, e, unary());
      else if (eat_sym("/"))
        e = make(Op::kDiv, e, unary());
      else
        return e;
    }
  }

  NodePtr unary() {
    if (eat_sym("-")) return make(Op::kNeg, unary());
    if (eat_sym("+")) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (eat_sym("^")) return make(Op::kPow, base, unary());
    return base;
  }

  NodePtr atom() {
    Token t = lex_.take();
    if (t.kind == Token::Kind::kNum) {
      auto n = make(Op::kNum);
      const_cast<Expr::Node&>(*n).value = t.value;
      return n;
    }
    if (t.kind == Token::Kind::kSym && t.text == "(") {
      NodePtr e = sum();
      expect_sym(")", "to close '('");
      return e;
    }
    if (t.kind == Token::Kind::kIdent) return ident(t);
    fail(t, "expected a value, got '" + t.text + "'");
  }

  NodePtr ident(const Token& t) {
    const std::string& s = t.text;
    if (s == "t") return make(Op::kTime);
    if (s.size() >= 2 && s[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) digits = false;
      if (digits) {
        const int idx = std::atoi(s.c_str() + 1);
        if (idx < 1 || idx > n_vars_)
          fail(t, "variable " + s + " out of range (have x1..x" + std::to_string(n_vars_) + ")");
        auto n = make(Op::kVar);
        const_cast<Expr::Node&>(*n).var = idx - 1;
        return n;
      }
    }
    Op op;
    int arity;
    if (s == "sin") { op = Op::kSin; arity = 1; }
    else if (s == "cos") { op = Op::kCos; arity = 1; }
    else if (s == "exp") { op = Op::kExp; arity = 1; }
    else if (s == "abs") { op = Op::kAbs; arity = 1; }
    else if (s == "min") { op = Op::kMin; arity = 2; }
    else if (s == "max") { op = Op::kMax; arity = 2; }
    else fail(t, "unknown identifier '" + s + "'");
    expect_sym("(", ("after " + s).c_str());
    NodePtr a = sum();
    NodePtr b;
    if (arity == 2) {
      expect_sym(",", ("between arguments of " + s).c_str());
      b = sum();
    }
    expect_sym(")", ("to close " + s).c_str());
    return make(op, a, b);
  }

  Lexer lex_;
  int n_vars_;
};

double eval_node(const Expr::Node& n, const Vector& x, double t) {
  switch (n.op) {
    case Op::kNum: return n.value;
    case Op::kVar: return x(n.var);
    case Op::kTime: return t;
    case Op::kNeg: return -eval_node(*n.a, x, t);
    case Op::kAdd: return eval_node(*n.a, x, t) + eval_node(*n.b, x, t);
    case Op::kSub: return eval_node(*n.a, x, t) - eval_node(*n.b, x, t);
    case Op::kMul: return eval_node(*n.a, x, t) * eval_node(*n.b, x, t);
    case Op::kDiv: {
      const double d = eval_node(*n.b, x, t);
      if (d == 0.0) throw ExprError("division by zero", 0, 0);
      return eval_node(*n.a, x, t) / d;
    }
    case Op::kPow: return std::pow(eval_node(*n.a, x, t), eval_node(*n.b, x, t));
    case Op::kSin: return std::sin(eval_node(*n.a, x, t));
    case Op::kCos: return std::cos(eval_node(*n.a, x, t));
    case Op::kExp: return std::exp(eval_node(*n.a, x, t));
    case Op::kAbs: return std::fabs(eval_node(*n.a, x, t));
    case Op::kMin: return std::fmin(eval_node(*n.a, x, t), eval_node(*n.b, x, t));
    case Op::kMax: return std::fmax(eval_node(*n.a, x, t), eval_node(*n.b, x, t));
  }
  return 0.0;
}

// Precedence classes for the printer; higher binds tighter.
int prec(Op op) {
  switch (op) {
    case Op::kAdd:
    case Op::kSub: return 1;
    case Op::kMul:
    case Op::kDiv: return 2;
    case Op::kPow: return 4;
    default: return 5;  // atoms, calls, (-x) prints parenthesized
  }
}

void print_node(const Expr::Node& n, int parent_prec, std::string& out) {
  const int p = prec(n.op);
  switch (n.op) {
    case Op::kNum: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", n.value);
      out += buf;
      return;
    }
    case Op::kVar:
      out += "x" + std::to_string(n.var + 1);
      return;
    case Op::kTime:
      out += "t";
      return;
    case Op::kNeg:
      out += "(-";
      print_node(*n.a, 1, out);
      out += ")";
      return;
    case Op::kSin:
    case Op::kCos:
    case Op::kExp:
    case Op::kAbs:
    case Op::kMin:
    case Op::kMax: {
      const char* name = n.op == Op::kSin   ? "sin"
                         : n.op == Op::kCos ? "cos"
                         : n.op == Op::kExp ? "exp"
                         : n.op == Op::kAbs ? "abs"
                         : n.op == Op::kMin ? "min"
                                            : "max";
      out += name;
      out += "(";
      print_node(*n.a, 0, out);
      if (n.b) {
        out += ",";
        print_node(*n.b, 0, out);
      }
      out += ")";
      return;
    }
    default: break;
  }
  const bool need = p < parent_prec;
  if (need) out += "(";
  const char* sym = n.op == Op::kAdd   ? "+"
                    : n.op == Op::kSub ? "-"
                    : n.op == Op::kMul ? "*"
                    : n.op == Op::kDiv ? "/"
                                       : "^";
  if (n.op == Op::kPow) {
    print_node(*n.a, p + 1, out);  // pow is right associative
    out += sym;
    print_node(*n.b, p, out);
  } else {
    print_node(*n.a, p, out);
    out += sym;
    print_node(*n.b, p + 1, out);  // left associative
  }
  if (need) out += ")";
}

bool smooth_node(const Expr::Node& n) {
  if (is_kink(n.op)) return false;
  if (n.a && !smooth_node(*n.a)) return false;
  if (n.b && !smooth_node(*n.b)) return false;
  return true;
}

}  // namespace

Expr Expr::parse(const std::string& text, int n_space_vars) {
  Parser p(text, n_space_vars);
  Expr e;
  e.root_ = p.run();
  e.n_space_vars_ = n_space_vars;
  return e;
}

double Expr::eval(const Vector& x, double t) const {
  return eval_node(*root_, x, t);
}

std::string Expr::str() const {
  std::string out;
  print_node(*root_, 0, out);
  return out;
}

bool Expr::is_smooth() const { return root_ == nullptr || smooth_node(*root_); }

}  // namespace kolmo
