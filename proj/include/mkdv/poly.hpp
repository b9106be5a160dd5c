#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mkdv {

/// One monomial c * a^pa * b^pb of a parameter polynomial.
struct PolyTerm {
  double coef = 0.0;
  int pa = 0;
  int pb = 0;

  friend bool operator==(const PolyTerm&, const PolyTerm&) = default;
};

/// Polynomial in two scalar parameters. For breathers (a, b) = (alpha, beta);
/// soliton identities use a = c and leave b unused.
///
/// Terms keep their insertion order so that a term index means the same thing
/// as the printed formula it was transcribed from.
class Poly {
 public:
  Poly() = default;
  Poly(double c) { if (c != 0.0) terms_.push_back({c, 0, 0}); }  // NOLINT(implicit)
  explicit Poly(std::vector<PolyTerm> terms) : terms_(std::move(terms)) {}

  static Poly a(int p = 1) { return Poly({{1.0, p, 0}}); }
  static Poly b(int p = 1) { return Poly({{1.0, 0, p}}); }

  double operator()(double av, double bv) const {
    double acc = 0.0;
    for (const auto& t : terms_) acc += t.coef * std::pow(av, t.pa) * std::pow(bv, t.pb);
    return acc;
  }

  const std::vector<PolyTerm>& terms() const { return terms_; }
  std::vector<PolyTerm>& terms() { return terms_; }

  /// Collects like monomials; the first occurrence fixes the position.
  Poly collected() const {
    std::vector<PolyTerm> out;
    for (const auto& t : terms_) {
      bool merged = false;
      for (auto& o : out)
        if (o.pa == t.pa && o.pb == t.pb) {
          o.coef += t.coef;
          merged = true;
          break;
        }
      if (!merged) out.push_back(t);
    }
    std::erase_if(out, [](const PolyTerm& t) { return t.coef == 0.0; });
    return Poly(std::move(out));
  }

  friend Poly operator+(const Poly& l, const Poly& r) {
    std::vector<PolyTerm> t = l.terms_;
    t.insert(t.end(), r.terms_.begin(), r.terms_.end());
    return Poly(std::move(t)).collected();
  }
  friend Poly operator-(const Poly& p) {
    Poly r = p;
    for (auto& t : r.terms_) t.coef = -t.coef;
    return r;
  }
  friend Poly operator-(const Poly& l, const Poly& r) { return l + (-r); }
  friend Poly operator*(const Poly& l, const Poly& r) {
    std::vector<PolyTerm> t;
    for (const auto& x : l.terms_)
      for (const auto& y : r.terms_) t.push_back({x.coef * y.coef, x.pa + y.pa, x.pb + y.pb});
    return Poly(std::move(t)).collected();
  }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (const auto& t : terms_) {
      if (!first) os << (t.coef < 0 ? " - " : " + ");
      else if (t.coef < 0) os << "-";
      first = false;
      os << std::abs(t.coef);
      if (t.pa) os << "*a^" << t.pa;
      if (t.pb) os << "*b^" << t.pb;
    }
    return os.str();
  }

 private:
  std::vector<PolyTerm> terms_;
};

/// Pointwise quantities a differential identity can reference.
/// Slots 0..10 are u, u_x, ..., u_10x.
enum class JetVar : std::uint8_t {
  kU0 = 0,
  kUt = 11,       ///< time derivative of the antiderivative profile (u-tilde_t)
  kMt = 12,       ///< time derivative of the partial mass
  kFlux9Cum = 13  ///< -2 * integral_{-inf}^x f9(u) u_x
};

inline constexpr int kMaxDerivative = 10;
inline constexpr int kNumJetVars = 14;

using JetValues = std::array<double, kNumJetVars>;

/// Product of powers of jet variables.
struct Monomial {
  std::array<std::uint8_t, kNumJetVars> pow{};

  /// Parses e.g. "u^2 u_x u_3x", "u*u_xx^2", "ut~", "Mt", "F9". Empty or "1"
  /// is the unit monomial.
  static Monomial parse(std::string_view text) {
    Monomial m;
    std::string s(text);
    for (char& ch : s)
      if (ch == '*') ch = ' ';
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) {
      if (tok == "1") continue;
      int p = 1;
      if (auto caret = tok.find('^'); caret != std::string::npos) {
        p = std::stoi(tok.substr(caret + 1));
        tok = tok.substr(0, caret);
      }
      const int slot = slot_of(tok);
      if (slot < 0 || p < 0) throw std::invalid_argument("bad monomial token: " + tok);
      m.pow[slot] = static_cast<std::uint8_t>(m.pow[slot] + p);
    }
    return m;
  }

  double operator()(const JetValues& v) const {
    double acc = 1.0;
    for (int k = 0; k < kNumJetVars; ++k)
      for (int e = 0; e < pow[k]; ++e) acc *= v[k];
    return acc;
  }

  /// Highest u-derivative referenced, or -1.
  int max_derivative() const {
    int m = -1;
    for (int k = 0; k <= kMaxDerivative; ++k)
      if (pow[k]) m = k;
    return m;
  }

  bool uses(JetVar v) const { return pow[static_cast<int>(v)] != 0; }

  /// Total number of x-derivatives in the monomial.
  int derivative_count() const {
    int n = 0;
    for (int k = 0; k <= kMaxDerivative; ++k) n += k * pow[k];
    return n;
  }

  /// Total degree in u and its derivatives (ut~, Mt, F9 excluded).
  int u_degree() const {
    int n = 0;
    for (int k = 0; k <= kMaxDerivative; ++k) n += pow[k];
    return n;
  }

  std::string str() const {
    std::string out;
    auto emit = [&](const std::string& name, int p) {
      if (!p) return;
      if (!out.empty()) out += ' ';
      out += name;
      if (p > 1) out += "^" + std::to_string(p);
    };
    for (int k = 0; k <= kMaxDerivative; ++k) {
      std::string name = k == 0 ? "u" : k == 1 ? "u_x" : "u_" + std::to_string(k) + "x";
      emit(name, pow[k]);
    }
    emit("ut~", pow[11]);
    emit("Mt", pow[12]);
    emit("F9", pow[13]);
    return out.empty() ? "1" : out;
  }

  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  static int slot_of(const std::string& tok) {
    if (tok == "u" || tok == "B") return 0;
    if (tok == "ut~" || tok == "Bt~") return 11;
    if (tok == "Mt") return 12;
    if (tok == "F9") return 13;
    std::string_view t = tok;
    if (t.size() < 3 || (t[0] != 'u' && t[0] != 'B') || t[1] != '_') return -1;
    t.remove_prefix(2);
    if (t == "x") return 1;
    if (t == "xx") return 2;
    if (t == "xxx") return 3;
    if (t.back() != 'x') return -1;
    t.remove_suffix(1);
    int k = 0;
    for (char ch : t) {
      if (ch < '0' || ch > '9') return -1;
      k = 10 * k + (ch - '0');
    }
    return (k >= 1 && k <= kMaxDerivative) ? k : -1;
  }
};

/// coefficient(params) * monomial(jet).
struct Term {
  Poly coef;
  Monomial mono;

  Term(Poly c, std::string_view m) : coef(std::move(c)), mono(Monomial::parse(m)) {}
  Term(Poly c, Monomial m) : coef(std::move(c)), mono(m) {}
};

using TermList = std::vector<Term>;

inline int max_derivative(const TermList& terms) {
  int m = -1;
  for (const auto& t : terms) m = std::max(m, t.mono.max_derivative());
  return m;
}

}  // namespace mkdv
