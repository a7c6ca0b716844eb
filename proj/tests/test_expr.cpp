#include <doctest.h>

#include <cmath>

#include "concentra/expr.hpp"

using namespace concentra;

TEST_CASE("expression grammar") {
  CHECK(Expr::parse("1 + 2*3").eval({}) == doctest::Approx(7.0));
  CHECK(Expr::parse("x1^2").eval(make_point(3.0)) == doctest::Approx(9.0));
  CHECK(Expr::parse("x^2").eval(make_point(3.0)) == doctest::Approx(9.0));
  CHECK(Expr::parse("(x1^2 - x2^2)/4").eval(make_point(2.0, 1.0)) == doctest::Approx(0.75));
  CHECK(Expr::parse("2^3^2").eval({}) == doctest::Approx(512.0)); // right associative
  CHECK(Expr::parse("-x^2").eval(make_point(2.0)) == doctest::Approx(-4.0));
  CHECK(Expr::parse("x^-1").eval(make_point(4.0)) == doctest::Approx(0.25));
  CHECK(Expr::parse("sech(0)").eval({}) == doctest::Approx(1.0));
  CHECK(Expr::parse("2*sech(x)^2").eval(make_point(1.0)) ==
        doctest::Approx(2.0 / (std::cosh(1.0) * std::cosh(1.0))));
  CHECK(Expr::parse("exp(-x^2) + tanh(x3)").eval(make_point(1.0, 0.0, 0.5)) ==
        doctest::Approx(std::exp(-1.0) + std::tanh(0.5)));
  CHECK(Expr::parse("sin(pi/2)").eval({}) == doctest::Approx(1.0));
  CHECK(Expr::parse("sqrt(abs(-9))").eval({}) == doctest::Approx(3.0));
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(Expr::parse("1 +"), ValidationError);
  CHECK_THROWS_AS(Expr::parse("foo(1)"), ValidationError);
  CHECK_THROWS_AS(Expr::parse("(1 + 2"), ValidationError);
  CHECK_THROWS_AS(Expr::parse("1 2"), ValidationError);
  CHECK_THROWS_AS(Expr::parse("sech 2"), ValidationError);
}

TEST_CASE("field adapter") {
  const ScalarField f = Expr::parse("x1^2 + 1").field();
  CHECK(f(make_point(2.0)) == doctest::Approx(5.0));
}
