#include "concentra/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace concentra {

struct Expr::Node {
  enum Op {
    num,
    var,  // payload = axis
    add,
    sub,
    mul,
    divi,
    pow_,
    neg,
    f_exp,
    f_sech,
    f_tanh,
    f_sin,
    f_cos,
    f_sqrt,
    f_abs
  } op;
  double value = 0.0;
  int axis = 0;
  std::shared_ptr<const Node> a, b;

  double eval(const Point& p) const {
    switch (op) {
      case num: return value;
      case var: return p[axis];
      case add: return a->eval(p) + b->eval(p);
      case sub: return a->eval(p) - b->eval(p);
      case mul: return a->eval(p) * b->eval(p);
      case divi: return a->eval(p) / b->eval(p);
      case pow_: return std::pow(a->eval(p), b->eval(p));
      case neg: return -a->eval(p);
      case f_exp: return std::exp(a->eval(p));
      case f_sech: return 1.0 / std::cosh(a->eval(p));
      case f_tanh: return std::tanh(a->eval(p));
      case f_sin: return std::sin(a->eval(p));
      case f_cos: return std::cos(a->eval(p));
      case f_sqrt: return std::sqrt(a->eval(p));
      case f_abs: return std::abs(a->eval(p));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_node(Expr::Node n) { return std::make_shared<const Expr::Node>(std::move(n)); }

class Parser {
public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

private:
  const std::string& s_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) {
    throw ValidationError("expression parse error at position " + std::to_string(pos_) + ": " +
                          msg + " in \"" + s_ + "\"");
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (consume('+'))
        lhs = make_node({Expr::Node::add, 0, 0, lhs, term()});
      else if (consume('-'))
        lhs = make_node({Expr::Node::sub, 0, 0, lhs, term()});
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (consume('*'))
        lhs = make_node({Expr::Node::mul, 0, 0, lhs, unary()});
      else if (consume('/'))
        lhs = make_node({Expr::Node::divi, 0, 0, lhs, unary()});
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (consume('-')) return make_node({Expr::Node::neg, 0, 0, unary(), nullptr});
    consume('+');
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (consume('^')) {
      // right associative; exponent may carry a sign
      NodePtr e = consume('-') ? make_node({Expr::Node::neg, 0, 0, power(), nullptr}) : power();
      return make_node({Expr::Node::pow_, 0, 0, base, e});
    }
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!consume(')')) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<size_t>(end - begin);
    return make_node({Expr::Node::num, v, 0, nullptr, nullptr});
  }

  NodePtr ident() {
    const size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    const std::string name = s_.substr(start, pos_ - start);

    if (name == "x" || name == "x1") return make_node({Expr::Node::var, 0, 0, nullptr, nullptr});
    if (name == "y" || name == "x2") return make_node({Expr::Node::var, 0, 1, nullptr, nullptr});
    if (name == "z" || name == "x3") return make_node({Expr::Node::var, 0, 2, nullptr, nullptr});
    if (name == "pi")
      return make_node({Expr::Node::num, 3.14159265358979323846, 0, nullptr, nullptr});

    Expr::Node::Op op;
    if (name == "exp")
      op = Expr::Node::f_exp;
    else if (name == "sech")
      op = Expr::Node::f_sech;
    else if (name == "tanh")
      op = Expr::Node::f_tanh;
    else if (name == "sin")
      op = Expr::Node::f_sin;
    else if (name == "cos")
      op = Expr::Node::f_cos;
    else if (name == "sqrt")
      op = Expr::Node::f_sqrt;
    else if (name == "abs")
      op = Expr::Node::f_abs;
    else
      fail("unknown identifier '" + name + "'");

    if (!consume('(')) fail("function '" + name + "' needs parentheses");
    NodePtr arg = expr();
    if (!consume(')')) fail("missing ')' after function argument");
    return make_node({op, 0, 0, arg, nullptr});
  }
};

} // namespace

Expr Expr::parse(const std::string& text) {
  Expr e;
  e.root_ = Parser(text).parse();
  e.text_ = text;
  return e;
}

double Expr::eval(const Point& p) const {
  if (!root_) throw ValidationError("Expr::eval on empty expression");
  return root_->eval(p);
}

ScalarField Expr::field() const {
  Expr copy = *this;
  return [copy](const Point& p) { return copy.eval(p); };
}

} // namespace concentra
