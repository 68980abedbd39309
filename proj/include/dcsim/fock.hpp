#pragma once

#include <cmath>
#include <complex>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dcsim {

using Complex = std::complex<double>;

/// Index of a mode within a fixed mode registry.
struct ModeId {
  std::size_t index{0};

  friend auto operator<=>(const ModeId&, const ModeId&) = default;
};

enum class LadderKind : std::uint8_t { Create, Annihilate };

struct LadderOp {
  ModeId mode;
  LadderKind kind{LadderKind::Annihilate};

  friend bool operator==(const LadderOp&, const LadderOp&) = default;
};

inline LadderOp create(std::size_t mode) { return {ModeId{mode}, LadderKind::Create}; }
inline LadderOp annihilate(std::size_t mode) { return {ModeId{mode}, LadderKind::Annihilate}; }

/// Occupation-number vector over an ordered set of modes.
class FockBasisState {
 public:
  using Occupation = std::uint32_t;

  FockBasisState() = default;
  explicit FockBasisState(std::vector<Occupation> occupations) : occupations_(std::move(occupations)) {}
  FockBasisState(std::initializer_list<Occupation> occupations) : occupations_(occupations) {}

  static FockBasisState empty(std::size_t modes) { return FockBasisState(std::vector<Occupation>(modes, 0)); }

  std::size_t modes() const { return occupations_.size(); }
  Occupation operator[](std::size_t mode) const { return occupations_.at(mode); }
  const std::vector<Occupation>& occupations() const { return occupations_; }

  FockBasisState with(std::size_t mode, Occupation n) const {
    auto copy = *this;
    copy.occupations_.at(mode) = n;
    return copy;
  }

  friend auto operator<=>(const FockBasisState&, const FockBasisState&) = default;

 private:
  std::vector<Occupation> occupations_;
};

}  // namespace dcsim

template <>
struct std::hash<dcsim::FockBasisState> {
  std::size_t operator()(const dcsim::FockBasisState& s) const noexcept {
    // FNV-1a over the occupation words
    std::uint64_t h = 14695981039346656037ULL;
    for (auto n : s.occupations()) {
      h ^= n;
      h *= 1099511628211ULL;
    }
    h ^= s.modes();
    return static_cast<std::size_t>(h);
  }
};

namespace dcsim {

namespace detail {

inline void require_finite(const Complex& z, const char* where) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw std::domain_error(std::string(where) + ": non-finite amplitude");
  }
}

inline void require_mode(std::size_t mode, std::size_t modes, const char* where) {
  if (mode >= modes) {
    throw std::invalid_argument(std::string(where) + ": mode " + std::to_string(mode) +
                                " out of range for registry of size " + std::to_string(modes));
  }
}

}  // namespace detail

/// Sparse superposition of Fock basis states. Not required to be normalized.
///
/// Amplitudes that are exactly zero are never stored. Keys are kept ordered so
/// that every reduction over the terms runs in a fixed order.
class StateVector {
 public:
  using Terms = std::map<FockBasisState, Complex>;

  explicit StateVector(std::size_t modes) : modes_(modes) {
    if (modes == 0) throw std::invalid_argument("StateVector: mode count must be >= 1");
  }

  std::size_t modes() const { return modes_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  Complex amplitude(const FockBasisState& basis) const {
    auto it = terms_.find(basis);
    return it == terms_.end() ? Complex{} : it->second;
  }

  /// Adds `amp` to the amplitude of `basis`, dropping the entry if it becomes exactly zero.
  StateVector& add(const FockBasisState& basis, Complex amp) {
    if (basis.modes() != modes_) {
      throw std::invalid_argument("StateVector::add: basis state has " + std::to_string(basis.modes()) +
                                  " modes, expected " + std::to_string(modes_));
    }
    detail::require_finite(amp, "StateVector::add");
    if (amp == Complex{}) return *this;
    auto [it, inserted] = terms_.try_emplace(basis, amp);
    if (!inserted) {
      it->second += amp;
      detail::require_finite(it->second, "StateVector::add");
      if (it->second == Complex{}) terms_.erase(it);
    }
    return *this;
  }

  double norm2() const {
    double sum = 0.0;
    for (const auto& [basis, amp] : terms_) sum += std::norm(amp);
    return sum;
  }

  StateVector& operator+=(const StateVector& other) {
    require_same_modes(other);
    for (const auto& [basis, amp] : other.terms_) add(basis, amp);
    return *this;
  }

  StateVector& operator*=(Complex c) {
    detail::require_finite(c, "StateVector::operator*=");
    Terms scaled;
    for (const auto& [basis, amp] : terms_) {
      auto v = amp * c;
      detail::require_finite(v, "StateVector::operator*=");
      if (v != Complex{}) scaled.emplace(basis, v);
    }
    terms_ = std::move(scaled);
    return *this;
  }

  friend StateVector operator+(StateVector lhs, const StateVector& rhs) { return lhs += rhs; }
  friend StateVector operator*(Complex c, StateVector s) { return s *= c; }
  friend StateVector operator*(StateVector s, Complex c) { return s *= c; }

  friend bool operator==(const StateVector&, const StateVector&) = default;

 private:
  void require_same_modes(const StateVector& other) const {
    if (other.modes_ != modes_) throw std::invalid_argument("StateVector: mode registry size mismatch");
  }

  std::size_t modes_;
  Terms terms_;
};

/// |0,...,0> over `modes` modes.
inline StateVector vacuum(std::size_t modes) {
  if (modes == 0) throw std::invalid_argument("vacuum: mode count must be >= 1");
  StateVector s(modes);
  s.add(FockBasisState::empty(modes), Complex{1.0, 0.0});
  return s;
}

/// Single basis state with unit amplitude.
inline StateVector basis_state(FockBasisState basis) {
  StateVector s(basis.modes());
  s.add(basis, Complex{1.0, 0.0});
  return s;
}

inline StateVector apply_ladder(const LadderOp& op, const StateVector& s) {
  detail::require_mode(op.mode.index, s.modes(), "apply_ladder");
  const auto m = op.mode.index;
  StateVector out(s.modes());
  for (const auto& [basis, amp] : s.terms()) {
    const auto n = basis[m];
    if (op.kind == LadderKind::Create) {
      out.add(basis.with(m, n + 1), amp * std::sqrt(static_cast<double>(n) + 1.0));
    } else if (n > 0) {
      out.add(basis.with(m, n - 1), amp * std::sqrt(static_cast<double>(n)));
    }
  }
  return out;
}

/// Complex-weighted sum of ordered ladder-operator products.
///
/// Factors within a term act right-to-left: the last factor is applied to the
/// state first. A term with no factors is the identity scaled by its coefficient.
class OperatorExpression {
 public:
  struct Term {
    Complex coefficient{1.0, 0.0};
    std::vector<LadderOp> factors;

    friend bool operator==(const Term&, const Term&) = default;
  };

  explicit OperatorExpression(std::size_t modes) : modes_(modes) {
    if (modes == 0) throw std::invalid_argument("OperatorExpression: mode count must be >= 1");
  }

  OperatorExpression(std::size_t modes, std::vector<Term> terms) : OperatorExpression(modes) {
    for (auto& t : terms) add_term(std::move(t));
  }

  static OperatorExpression identity(std::size_t modes, Complex c = {1.0, 0.0}) {
    return OperatorExpression(modes, {Term{c, {}}});
  }

  static OperatorExpression single(std::size_t modes, LadderOp op, Complex c = {1.0, 0.0}) {
    return OperatorExpression(modes, {Term{c, {op}}});
  }

  static OperatorExpression product(std::size_t modes, std::vector<LadderOp> factors, Complex c = {1.0, 0.0}) {
    return OperatorExpression(modes, {Term{c, std::move(factors)}});
  }

  std::size_t modes() const { return modes_; }
  const std::vector<Term>& terms() const { return terms_; }

  OperatorExpression& add_term(Term t) {
    detail::require_finite(t.coefficient, "OperatorExpression");
    for (const auto& f : t.factors) detail::require_mode(f.mode.index, modes_, "OperatorExpression");
    terms_.push_back(std::move(t));
    return *this;
  }

  OperatorExpression& operator+=(const OperatorExpression& other) {
    if (other.modes_ != modes_) throw std::invalid_argument("OperatorExpression: mode registry size mismatch");
    for (const auto& t : other.terms_) add_term(t);
    return *this;
  }

  friend OperatorExpression operator+(OperatorExpression lhs, const OperatorExpression& rhs) { return lhs += rhs; }

  friend OperatorExpression operator-(OperatorExpression lhs, const OperatorExpression& rhs) {
    return lhs += Complex{-1.0, 0.0} * rhs;
  }

  friend OperatorExpression operator*(Complex c, OperatorExpression e) {
    for (auto& t : e.terms_) {
      t.coefficient *= c;
      detail::require_finite(t.coefficient, "OperatorExpression");
    }
    return e;
  }

  /// Operator composition: (lhs * rhs)|s> = lhs(rhs|s>).
  friend OperatorExpression operator*(const OperatorExpression& lhs, const OperatorExpression& rhs) {
    if (lhs.modes_ != rhs.modes_) throw std::invalid_argument("OperatorExpression: mode registry size mismatch");
    OperatorExpression out(lhs.modes_);
    for (const auto& l : lhs.terms_) {
      for (const auto& r : rhs.terms_) {
        Term t{l.coefficient * r.coefficient, l.factors};
        t.factors.insert(t.factors.end(), r.factors.begin(), r.factors.end());
        out.add_term(std::move(t));
      }
    }
    return out;
  }

  friend bool operator==(const OperatorExpression&, const OperatorExpression&) = default;

 private:
  std::size_t modes_;
  std::vector<Term> terms_;
};

inline StateVector apply_expression(const OperatorExpression& e, const StateVector& s) {
  StateVector out(s.modes());
  for (const auto& term : e.terms()) {
    for (const auto& f : term.factors) detail::require_mode(f.mode.index, s.modes(), "apply_expression");
  }
  for (const auto& term : e.terms()) {
    StateVector partial = s;
    for (auto it = term.factors.rbegin(); it != term.factors.rend() && !partial.empty(); ++it) {
      partial = apply_ladder(*it, partial);
    }
    out += term.coefficient * std::move(partial);
  }
  return out;
}

inline Complex inner_product(const StateVector& bra, const StateVector& ket) {
  if (bra.modes() != ket.modes()) throw std::invalid_argument("inner_product: mode registry size mismatch");
  Complex sum{};
  // iterate the smaller map, look up in the larger one
  const bool bra_smaller = bra.size() <= ket.size();
  const auto& small = bra_smaller ? bra : ket;
  const auto& large = bra_smaller ? ket : bra;
  for (const auto& [basis, amp] : small.terms()) {
    auto it = large.terms().find(basis);
    if (it == large.terms().end()) continue;
    sum += bra_smaller ? std::conj(amp) * it->second : std::conj(it->second) * amp;
  }
  return sum;
}

inline OperatorExpression adjoint(const OperatorExpression& e) {
  OperatorExpression out(e.modes());
  for (const auto& term : e.terms()) {
    OperatorExpression::Term t{std::conj(term.coefficient), {}};
    t.factors.reserve(term.factors.size());
    for (auto it = term.factors.rbegin(); it != term.factors.rend(); ++it) {
      t.factors.push_back({it->mode, it->kind == LadderKind::Create ? LadderKind::Annihilate : LadderKind::Create});
    }
    out.add_term(std::move(t));
  }
  return out;
}

/// <s| e |s>. The state is used as given; no normalization is applied.
inline Complex expectation(const OperatorExpression& e, const StateVector& s) {
  return inner_product(s, apply_expression(e, s));
}

inline bool is_normal_ordered(const std::vector<LadderOp>& factors) {
  bool seen_annihilate = false;
  for (const auto& f : factors) {
    if (f.kind == LadderKind::Annihilate) {
      seen_annihilate = true;
    } else if (seen_annihilate) {
      return false;
    }
  }
  return true;
}

/// Rewrites `e` so that every term has its creation operators to the left of
/// its annihilation operators, using a_i a_j^dag = a_j^dag a_i + delta_ij.
///
/// Terms with identical factor lists are merged (first-appearance order kept)
/// and merged terms whose coefficient cancels to exactly zero are dropped.
inline OperatorExpression normal_order(const OperatorExpression& e) {
  using Term = OperatorExpression::Term;
  std::vector<Term> ordered;
  std::map<std::vector<std::pair<std::size_t, int>>, std::size_t> index;

  auto key_of = [](const std::vector<LadderOp>& factors) {
    std::vector<std::pair<std::size_t, int>> key;
    key.reserve(factors.size());
    for (const auto& f : factors) key.emplace_back(f.mode.index, static_cast<int>(f.kind));
    return key;
  };

  auto emit = [&](Term t) {
    auto key = key_of(t.factors);
    auto [it, inserted] = index.try_emplace(std::move(key), ordered.size());
    if (inserted) {
      ordered.push_back(std::move(t));
    } else {
      ordered[it->second].coefficient += t.coefficient;
    }
  };

  // Depth-first rewriting keeps the output order deterministic.
  std::vector<Term> stack(e.terms().rbegin(), e.terms().rend());
  while (!stack.empty()) {
    Term t = std::move(stack.back());
    stack.pop_back();
    std::size_t pos = 0;
    for (; pos + 1 < t.factors.size(); ++pos) {
      if (t.factors[pos].kind == LadderKind::Annihilate && t.factors[pos + 1].kind == LadderKind::Create) break;
    }
    if (pos + 1 >= t.factors.size()) {
      emit(std::move(t));
      continue;
    }
    const bool same_mode = t.factors[pos].mode == t.factors[pos + 1].mode;
    Term swapped = t;
    std::swap(swapped.factors[pos], swapped.factors[pos + 1]);
    if (same_mode) {
      Term contracted{t.coefficient, {}};
      contracted.factors.reserve(t.factors.size() - 2);
      contracted.factors.insert(contracted.factors.end(), t.factors.begin(), t.factors.begin() + pos);
      contracted.factors.insert(contracted.factors.end(), t.factors.begin() + pos + 2, t.factors.end());
      stack.push_back(std::move(contracted));
    }
    stack.push_back(std::move(swapped));
  }

  OperatorExpression out(e.modes());
  for (auto& t : ordered) {
    if (t.coefficient != Complex{}) out.add_term(std::move(t));
  }
  return out;
}

}  // namespace dcsim
