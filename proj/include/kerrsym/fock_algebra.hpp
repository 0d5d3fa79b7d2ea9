#pragma once

// Normal-ordered boson polynomials and their exact matrices in a truncated
// Fock basis |0>, ..., |n_max>.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace kerrsym {

/// Truncated single-mode Fock space spanned by |0>, ..., |n_max>.
struct FockSpace {
  std::size_t n_max = 0;

  [[nodiscard]] constexpr std::size_t dim() const noexcept { return n_max + 1; }
};

/// coeff * a^dag^p w(n) a^q, with w(n) = sum_k weight[k] n^k evaluated on the
/// occupation reached after applying a^q.
struct OperatorTerm {
  double coeff = 1.0;
  std::size_t p = 0;
  std::size_t q = 0;
  std::vector<double> weight{1.0};

  [[nodiscard]] double eval_weight(double n) const noexcept {
    double acc = 0.0;
    for (auto it = weight.rbegin(); it != weight.rend(); ++it) acc = acc * n + *it;
    return acc;
  }

  [[nodiscard]] std::size_t step() const noexcept { return p > q ? p - q : q - p; }

  [[nodiscard]] OperatorTerm adjoint() const { return {coeff, q, p, weight}; }
};

struct NotHermitian : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class OperatorPoly {
 public:
  OperatorPoly() = default;
  explicit OperatorPoly(std::vector<OperatorTerm> terms) : terms_(std::move(terms)) {}

  [[nodiscard]] const std::vector<OperatorTerm>& terms() const noexcept { return terms_; }
  [[nodiscard]] bool empty() const noexcept { return terms_.empty(); }

  OperatorPoly& add(OperatorTerm t) {
    terms_.push_back(std::move(t));
    return *this;
  }

  OperatorPoly& operator+=(const OperatorPoly& other) {
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    return *this;
  }

  friend OperatorPoly operator+(OperatorPoly a, const OperatorPoly& b) { return a += b; }

  friend OperatorPoly operator*(double s, OperatorPoly a) {
    for (auto& t : a.terms_) t.coeff *= s;
    return a;
  }

  friend OperatorPoly operator-(const OperatorPoly& a, const OperatorPoly& b) {
    return a + (-1.0) * b;
  }

  /// Largest creation or annihilation power appearing in any term.
  [[nodiscard]] std::size_t max_power() const noexcept {
    std::size_t m = 0;
    for (const auto& t : terms_) m = std::max({m, t.p, t.q});
    return m;
  }

  /// Largest |p - q| over terms with nonzero coefficient.
  [[nodiscard]] std::size_t bandwidth() const noexcept {
    std::size_t b = 0;
    for (const auto& t : terms_)
      if (t.coeff != 0.0) b = std::max(b, t.step());
    return b;
  }

  /// Terms are grouped by shape (p, q, weight) and the summed coefficient of
  /// every shape must match that of its adjoint shape.
  [[nodiscard]] bool is_hermitian(double rel_tol = 1e-14) const {
    using Key = std::tuple<std::size_t, std::size_t, std::vector<double>>;
    std::map<Key, double> sums;
    double scale = 0.0;
    for (const auto& t : terms_) {
      sums[Key{t.p, t.q, trimmed(t.weight)}] += t.coeff;
      scale = std::max(scale, std::abs(t.coeff));
    }
    for (const auto& [key, c] : sums) {
      const auto& [p, q, w] = key;
      if (p == q) continue;
      auto it = sums.find(Key{q, p, w});
      const double other = it == sums.end() ? 0.0 : it->second;
      if (std::abs(c - other) > rel_tol * std::max(1.0, scale)) return false;
    }
    return true;
  }

 private:
  static std::vector<double> trimmed(std::vector<double> w) {
    while (!w.empty() && w.back() == 0.0) w.pop_back();
    return w;
  }

  std::vector<OperatorTerm> terms_;
};

// ---------------------------------------------------------------------------
// Building blocks.

inline OperatorPoly identity_op(double c = 1.0) { return OperatorPoly({{c, 0, 0, {1.0}}}); }
inline OperatorPoly annihilation_op() { return OperatorPoly({{1.0, 0, 1, {1.0}}}); }
inline OperatorPoly creation_op() { return OperatorPoly({{1.0, 1, 0, {1.0}}}); }

/// w(n) as a diagonal operator.
inline OperatorPoly number_poly(std::vector<double> weight) {
  return OperatorPoly({{1.0, 0, 0, std::move(weight)}});
}
inline OperatorPoly number_op() { return number_poly({0.0, 1.0}); }

/// a^dag^k + a^k.
inline OperatorPoly pairing_op(std::size_t k) {
  return OperatorPoly({{1.0, k, 0, {1.0}}, {1.0, 0, k, {1.0}}});
}

/// a^dag^2 n + n a^2, the normal-ordered n . P2 combination.
inline OperatorPoly n_dot_pairing2_op() {
  return OperatorPoly({{1.0, 2, 0, {0.0, 1.0}}, {1.0, 0, 2, {0.0, 1.0}}});
}

// ---------------------------------------------------------------------------
// Matrix elements.

struct MatrixEntry {
  std::size_t row;
  double value;
};

namespace detail {

// sqrt((m+1)(m+2)...(m+k)), accumulated in a fixed order.
inline double rising_sqrt(std::size_t m, std::size_t k) noexcept {
  double acc = 1.0;
  for (std::size_t i = 1; i <= k; ++i) acc *= std::sqrt(static_cast<double>(m + i));
  return acc;
}

}  // namespace detail

/// <n+p-q| term |n>, or nothing when the term annihilates |n> or leaves the
/// truncated space. The two ladder factors are always multiplied in the same
/// order, so a term and its adjoint give bit-identical mirrored entries.
inline std::optional<MatrixEntry> matrix_element(const OperatorTerm& term, std::size_t n,
                                                 const FockSpace& space) {
  if (n > space.n_max || n < term.q) return std::nullopt;
  const std::size_t mid = n - term.q;
  const std::size_t row = mid + term.p;
  if (row > space.n_max) return std::nullopt;
  const std::size_t lo = std::min(term.p, term.q);
  const std::size_t hi = std::max(term.p, term.q);
  const double ladder = detail::rising_sqrt(mid, lo) * detail::rising_sqrt(mid, hi);
  return MatrixEntry{row, term.coeff * term.eval_weight(static_cast<double>(mid)) * ladder};
}

/// Real symmetric band matrix; diag(d)[i] holds M(i + d, i).
class BandedSymMatrix {
 public:
  BandedSymMatrix() = default;
  BandedSymMatrix(std::size_t dim, std::size_t bandwidth) : dim_(dim) {
    diags_.resize(std::min(bandwidth, dim == 0 ? 0 : dim - 1) + 1);
    for (std::size_t d = 0; d < diags_.size(); ++d) diags_[d].assign(dim - d, 0.0);
  }

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t bandwidth() const noexcept {
    return diags_.empty() ? 0 : diags_.size() - 1;
  }

  [[nodiscard]] const std::vector<double>& diag(std::size_t d) const { return diags_.at(d); }
  std::vector<double>& diag(std::size_t d) { return diags_.at(d); }

  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
    if (i < j) std::swap(i, j);
    const std::size_t d = i - j;
    return d < diags_.size() ? diags_[d][j] : 0.0;
  }

  void add(std::size_t i, std::size_t j, double v) {
    if (i < j) std::swap(i, j);
    diags_.at(i - j).at(j) += v;
  }

  [[nodiscard]] bool all_finite() const noexcept {
    for (const auto& d : diags_)
      for (double x : d)
        if (!std::isfinite(x)) return false;
    return true;
  }

  [[nodiscard]] double max_abs() const noexcept {
    double m = 0.0;
    for (const auto& d : diags_)
      for (double x : d) m = std::max(m, std::abs(x));
    return m;
  }

  [[nodiscard]] Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
    for (std::size_t d = 0; d < diags_.size(); ++d)
      for (std::size_t j = 0; j + d < dim_; ++j) {
        m(j + d, j) = diags_[d][j];
        m(j, j + d) = diags_[d][j];
      }
    return m;
  }

  friend bool operator==(const BandedSymMatrix&, const BandedSymMatrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> diags_;
};

inline void check_index_range(const OperatorPoly& poly, const FockSpace& space) {
  constexpr auto lim = std::numeric_limits<std::size_t>::max() / 2;
  if (space.n_max >= lim || poly.max_power() >= lim - space.n_max)
    throw std::overflow_error("Fock index range overflow: n_max + max power");
}

/// Exact band matrix of a Hermitian polynomial. Entries that would land above
/// n_max are dropped (projection truncation).
inline BandedSymMatrix assemble(const OperatorPoly& poly, const FockSpace& space) {
  if (!poly.is_hermitian()) throw NotHermitian("assemble: polynomial is not Hermitian");
  check_index_range(poly, space);
  BandedSymMatrix m(space.dim(), poly.bandwidth());
  // The lower triangle (p >= q) determines the matrix; adjoint terms supply
  // the same values mirrored.
  for (const auto& t : poly.terms()) {
    if (t.p < t.q || t.coeff == 0.0) continue;
    for (std::size_t n = 0; n <= space.n_max; ++n)
      if (auto e = matrix_element(t, n, space)) m.diag(t.p - t.q)[n] += e->value;
  }
  return m;
}

/// Dense (possibly non-Hermitian) matrix of any polynomial, same truncation.
inline Eigen::MatrixXd assemble_dense(const OperatorPoly& poly, const FockSpace& space) {
  check_index_range(poly, space);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(space.dim(), space.dim());
  for (const auto& t : poly.terms())
    for (std::size_t n = 0; n <= space.n_max; ++n)
      if (auto e = matrix_element(t, n, space)) m(e->row, n) += e->value;
  return m;
}

/// max |([A, B] - expected)_{ij}| over i, j <= n_max - p_max, the block that
/// truncation cannot reach.
inline double commutator_residual(const OperatorPoly& a, const OperatorPoly& b,
                                  const OperatorPoly& expected, const FockSpace& space) {
  const std::size_t pmax = std::max({a.max_power(), b.max_power(), expected.max_power()});
  if (pmax > space.n_max) return 0.0;
  const Eigen::MatrixXd ma = assemble_dense(a, space);
  const Eigen::MatrixXd mb = assemble_dense(b, space);
  const Eigen::MatrixXd diff = ma * mb - mb * ma - assemble_dense(expected, space);
  const auto k = static_cast<Eigen::Index>(space.n_max - pmax + 1);
  return diff.topLeftCorner(k, k).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Hamiltonians.

enum class Perturbation { P2, P3, P4, nP2 };

inline const char* to_string(Perturbation p) noexcept {
  switch (p) {
    case Perturbation::P2: return "P2";
    case Perturbation::P3: return "P3";
    case Perturbation::P4: return "P4";
    case Perturbation::nP2: return "nP2";
  }
  return "?";
}

/// Renormalisation and new terms of the third and fourth order boson
/// expansion; all in units of K, signs as they enter the Hamiltonian.
struct HigherOrderTerms {
  double delta3 = 0.0;     // -delta3 n
  double kerr3 = 0.0;      // -kerr3 n(n-1)
  double eps2_3 = 0.0;     // +eps2_3 P2
  double eps2_prime = 0.0; // +eps2_prime (a^dag^2 n + n a^2)
  double delta4 = 0.0;     // -delta4 n
  double kerr4 = 0.0;      // -kerr4 n(n-1)
  double lambda4 = 0.0;    // -lambda4 (n^3 - 3n^2 - 2n)
  double eps4_4 = 0.0;     // +eps4_4 P4
};

/// Dimensionless driven-Kerr Hamiltonian H/K.
struct HamiltonianSpec {
  double eta = 0.0;
  std::map<Perturbation, double> couplings;
  std::optional<HigherOrderTerms> higher_order;

  [[nodiscard]] double coupling(Perturbation p) const {
    auto it = couplings.find(p);
    return it == couplings.end() ? 0.0 : it->second;
  }
  HamiltonianSpec& set(Perturbation p, double v) {
    couplings[p] = v;
    return *this;
  }
};

/// -eta n + n(n-1) - xi P2 - xi3 P3 - xi4 P4 - xi2' (a^dag^2 n + n a^2)
/// plus the optional higher-order contributions. Zero couplings are omitted.
inline OperatorPoly standard_hamiltonian(const HamiltonianSpec& spec) {
  OperatorPoly h = number_poly({0.0, -spec.eta - 1.0, 1.0});
  auto add_scaled = [&h](double c, const OperatorPoly& op) {
    if (c != 0.0) h += c * op;
  };
  add_scaled(-spec.coupling(Perturbation::P2), pairing_op(2));
  add_scaled(-spec.coupling(Perturbation::P3), pairing_op(3));
  add_scaled(-spec.coupling(Perturbation::P4), pairing_op(4));
  add_scaled(-spec.coupling(Perturbation::nP2), n_dot_pairing2_op());
  if (const auto& ho = spec.higher_order) {
    const double linear = -ho->delta3 - ho->delta4 + ho->kerr3 + ho->kerr4 + 2.0 * ho->lambda4;
    const double quadratic = -ho->kerr3 - ho->kerr4 + 3.0 * ho->lambda4;
    const double cubic = -ho->lambda4;
    if (linear != 0.0 || quadratic != 0.0 || cubic != 0.0)
      h += number_poly({0.0, linear, quadratic, cubic});
    add_scaled(ho->eps2_3, pairing_op(2));
    add_scaled(ho->eps2_prime, n_dot_pairing2_op());
    add_scaled(ho->eps4_4, pairing_op(4));
  }
  return h;
}

}  // namespace kerrsym
