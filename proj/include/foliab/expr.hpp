#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "foliab/dual.hpp"

namespace foliab {

// Parse error with the offending position/token in the message.
struct ExprParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Arithmetic expression in variables x1..xn.
// Grammar: + - * / ^, unary minus, parentheses, numeric literals, pi,
// functions exp, sin, cos, sinh, cosh, sqrt.
class Expr {
 public:
  Expr() = default;
  static Expr parse(const std::string& text, int n_vars);

  const std::string& text() const { return text_; }
  int n_vars() const { return n_vars_; }
  bool empty() const { return nodes_.empty(); }

  template <class S>
  S eval(const std::vector<S>& xs) const {
    if (nodes_.empty()) throw std::logic_error("Expr: evaluating empty expression");
    return eval_node<S>(static_cast<int>(nodes_.size()) - 1, xs);
  }

 private:
  enum class Op : uint8_t { num, var, add, sub, mul, div, pow_int, pow_gen, neg,
                            f_exp, f_sin, f_cos, f_sinh, f_cosh, f_sqrt };
  struct Node {
    Op op;
    double value = 0;     // num: literal; var: index; pow_int: exponent
    int lhs = -1, rhs = -1;
  };

  template <class S>
  S eval_node(int id, const std::vector<S>& xs) const {
    const Node& nd = nodes_[id];
    switch (nd.op) {
      case Op::num: return lift_scalar<S>(nd.value);
      case Op::var: return xs[static_cast<size_t>(nd.value)];
      case Op::add: return eval_node<S>(nd.lhs, xs) + eval_node<S>(nd.rhs, xs);
      case Op::sub: return eval_node<S>(nd.lhs, xs) - eval_node<S>(nd.rhs, xs);
      case Op::mul: return eval_node<S>(nd.lhs, xs) * eval_node<S>(nd.rhs, xs);
      case Op::div: return eval_node<S>(nd.lhs, xs) / eval_node<S>(nd.rhs, xs);
      case Op::pow_int: return ipow(eval_node<S>(nd.lhs, xs), static_cast<long long>(nd.value));
      case Op::pow_gen: {
        using std::pow;
        return pow(eval_node<S>(nd.lhs, xs), eval_node<S>(nd.rhs, xs));
      }
      case Op::neg: return -eval_node<S>(nd.lhs, xs);
      case Op::f_exp: { using std::exp; return exp(eval_node<S>(nd.lhs, xs)); }
      case Op::f_sin: { using std::sin; return sin(eval_node<S>(nd.lhs, xs)); }
      case Op::f_cos: { using std::cos; return cos(eval_node<S>(nd.lhs, xs)); }
      case Op::f_sinh: { using std::sinh; return sinh(eval_node<S>(nd.lhs, xs)); }
      case Op::f_cosh: { using std::cosh; return cosh(eval_node<S>(nd.lhs, xs)); }
      case Op::f_sqrt: { using std::sqrt; return sqrt(eval_node<S>(nd.lhs, xs)); }
    }
    throw std::logic_error("Expr: corrupt node");
  }

  friend class ExprParser;
  std::string text_;
  int n_vars_ = 0;
  std::vector<Node> nodes_;
};

}  // namespace foliab
