#include "gccsolver_cli/expression.hpp"

#include <cctype>
#include <cstdlib>

#include "gccsolver/errors.hpp"

namespace gccsolver::cli {

namespace {

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  AffineExpr parse() {
    AffineExpr out;
    skip();
    if (pos_ == s_.size()) fail("empty expression");
    double sign = 1.0;
    if (peek() == '-' || peek() == '+') {
      sign = get() == '-' ? -1.0 : 1.0;
    }
    term(sign, out);
    while (skip(), pos_ < s_.size()) {
      const char op = get();
      if (op != '+' && op != '-') fail(std::string("unexpected '") + op + "'");
      term(op == '-' ? -1.0 : 1.0, out);
    }
    for (auto it = out.coefficients.begin(); it != out.coefficients.end();) {
      it = it->second == 0.0 ? out.coefficients.erase(it) : std::next(it);
    }
    return out;
  }

 private:
  void term(double sign, AffineExpr& out) {
    double factor = sign;
    std::string name;
    for (;;) {
      skip();
      if (pos_ == s_.size()) fail("expression ends after an operator");
      const char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        if (!name.empty()) fail("product of two drivers is not affine");
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
          name += get();
        }
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double x = std::strtod(begin, &end);
        if (end == begin) fail("bad number");
        pos_ += static_cast<std::size_t>(end - begin);
        factor *= x;
      } else {
        fail(std::string("unexpected '") + c + "'");
      }
      skip();
      if (pos_ < s_.size() && peek() == '*') {
        ++pos_;
        continue;
      }
      break;
    }
    if (name.empty()) {
      out.constant += factor;
    } else {
      out.coefficients[name] += factor;
    }
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek() const { return s_[pos_]; }
  char get() { return s_[pos_++]; }
  [[noreturn]] void fail(const std::string& what) const {
    throw ModelError("expression \"" + s_ + "\": " + what + " at position " + std::to_string(pos_));
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::string> AffineExpr::drivers() const {
  std::vector<std::string> out;
  for (const auto& [name, c] : coefficients) out.push_back(name);
  return out;
}

double AffineExpr::evaluate(const std::function<std::optional<double>(const std::string&)>& lookup) const {
  double v = constant;
  for (const auto& [name, c] : coefficients) {
    const auto x = lookup(name);
    if (!x) throw ModelError("unknown driver \"" + name + "\"");
    v += c * *x;
  }
  return v;
}

AffineExpr parse_affine(const std::string& text) { return Parser(text).parse(); }

}  // namespace gccsolver::cli
