#ifndef CONCENTRA_EXPR_HPP
#define CONCENTRA_EXPR_HPP

#include <functional>
#include <memory>
#include <string>

#include "concentra/grid.hpp"

namespace concentra {

/// Callable scalar coefficient field (V, K, components of A).
using ScalarField = std::function<double(const Point&)>;

/// Small arithmetic expression over the coordinates x1..x3 with the
/// functions exp, sech, tanh, sin, cos, sqrt, abs and the operators
/// + - * / ^.  `x`, `y`, `z` alias x1, x2, x3; `pi` is the usual constant.
class Expr {
public:
  Expr() = default;

  /// Parses `text`; throws ValidationError with a position message on
  /// malformed input.
  static Expr parse(const std::string& text);

  double eval(const Point& p) const;
  double operator()(const Point& p) const { return eval(p); }

  const std::string& text() const { return text_; }
  bool empty() const { return !root_; }

  ScalarField field() const;

  struct Node;

private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

} // namespace concentra

#endif
