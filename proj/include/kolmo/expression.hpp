#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "kolmo/linalg.hpp"

namespace kolmo {

struct ExprError : std::runtime_error {
  ExprError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg), line(line_), col(col_) {}
  int line;
  int col;
};

/// Arithmetic expression over x1..xN and t.
///
/// Grammar: + - * / ^ (right assoc), unary minus, parentheses, numeric
/// literals, and the functions sin, cos, exp, abs, min, max. Printing is
/// canonical: parse-print-parse is a fixed point, which keeps serialized
/// configs stable.
class Expr {
 public:
  Expr() = default;

  static Expr parse(const std::string& text, int n_space_vars);

  bool empty() const { return root_ == nullptr; }

  /// Throws ExprError on division by zero.
  double eval(const Vector& x, double t) const;

  std::string str() const;

  int n_space_vars() const { return n_space_vars_; }

  /// False when the tree contains abs/min/max (kinks).
  bool is_smooth() const;

 private:
  struct Node;
  std::shared_ptr<const Node> root_;
  int n_space_vars_ = 0;
};

}  // namespace kolmo
