#pragma once

// Dense linear algebra over GF(2^m), 1 <= m <= 8. Arithmetic goes through
// precomputed log/antilog tables with fixed primitive polynomials so encoded
// bytes are reproducible across implementations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace pbnc {

using Symbol = std::uint8_t;

struct FieldSpec {
  int m = 8;
  [[nodiscard]] int q() const { return 1 << m; }
};

class GfContext {
 public:
  explicit GfContext(FieldSpec spec) : spec_(spec) {
    if (spec.m < 1 || spec.m > 8) throw std::invalid_argument("field degree must be in 1..8");
    const int q = spec.q();
    const unsigned poly = kPrimitivePoly[spec.m];
    log_.assign(q, 0);
    exp_.assign(2 * q, 1);
    unsigned a = 1;
    for (int i = 0; i < q - 1; ++i) {
      exp_[i] = static_cast<Symbol>(a);
      log_[a] = i;
      a <<= 1;
      if (a & static_cast<unsigned>(q)) a ^= poly;
    }
    for (int i = q - 1; i < 2 * q; ++i) exp_[i] = exp_[i - (q - 1)];
    mul_.assign(static_cast<std::size_t>(q) * q, 0);
    for (int x = 1; x < q; ++x)
      for (int y = 1; y < q; ++y)
        mul_[static_cast<std::size_t>(x) * q + y] =
            exp_[log_[x] + log_[y]];
  }

  [[nodiscard]] const FieldSpec& spec() const { return spec_; }
  [[nodiscard]] int q() const { return spec_.q(); }

  [[nodiscard]] Symbol add(Symbol x, Symbol y) const { return x ^ y; }
  [[nodiscard]] Symbol mul(Symbol x, Symbol y) const {
    return mul_[static_cast<std::size_t>(x) * spec_.q() + y];
  }
  [[nodiscard]] Symbol inv(Symbol x) const {
    if (x == 0) throw std::domain_error("inverse of zero");
    return exp_[spec_.q() - 1 - log_[x]];
  }
  [[nodiscard]] Symbol div(Symbol x, Symbol y) const { return mul(x, inv(y)); }

 private:
  // Index by m; standard primitive polynomials (0x11D for GF(256)).
  static constexpr std::array<unsigned, 9> kPrimitivePoly = {
      0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D};

  FieldSpec spec_;
  std::vector<int> log_;
  std::vector<Symbol> exp_;
  std::vector<Symbol> mul_;
};

class GfMatrix {
 public:
  GfMatrix() = default;
  GfMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0) {}

  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  Symbol& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  [[nodiscard]] Symbol at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  [[nodiscard]] const std::vector<Symbol>& data() const { return data_; }
  std::vector<Symbol>& data() { return data_; }

  [[nodiscard]] GfMatrix transposed() const {
    GfMatrix t(cols_, rows_);
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c) t.at(c, r) = at(r, c);
    return t;
  }

  bool operator==(const GfMatrix& o) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Symbol> data_;
};

inline GfMatrix gf_identity(int n) {
  GfMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

inline GfMatrix gf_mul(const GfContext& ctx, const GfMatrix& a, const GfMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("dimension mismatch");
  GfMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const Symbol v = a.at(i, k);
      if (v == 0) continue;
      for (int j = 0; j < b.cols(); ++j)
        c.at(i, j) ^= ctx.mul(v, b.at(k, j));
    }
  return c;
}

inline GfMatrix random_matrix(const GfContext& ctx, int rows, int cols, std::mt19937_64& rng) {
  GfMatrix m(rows, cols);
  std::uniform_int_distribution<int> dist(0, ctx.q() - 1);
  for (auto& s : m.data()) s = static_cast<Symbol>(dist(rng));
  return m;
}

// First-nonzero pivot selection; deterministic given input.
inline int rank(const GfContext& ctx, GfMatrix a) {
  int r = 0;
  for (int c = 0; c < a.cols() && r < a.rows(); ++c) {
    int pivot = -1;
    for (int i = r; i < a.rows(); ++i)
      if (a.at(i, c) != 0) { pivot = i; break; }
    if (pivot < 0) continue;
    for (int j = 0; j < a.cols(); ++j) std::swap(a.at(r, j), a.at(pivot, j));
    const Symbol pinv = ctx.inv(a.at(r, c));
    for (int j = c; j < a.cols(); ++j) a.at(r, j) = ctx.mul(a.at(r, j), pinv);
    for (int i = 0; i < a.rows(); ++i) {
      if (i == r) continue;
      const Symbol f = a.at(i, c);
      if (f == 0) continue;
      for (int j = c; j < a.cols(); ++j) a.at(i, j) ^= ctx.mul(f, a.at(r, j));
    }
    ++r;
  }
  return r;
}

struct RrefResult {
  GfMatrix a;                // reduced coefficient matrix
  GfMatrix rhs;              // rhs carried through the same row operations
  std::vector<int> pivots;   // pivot column per reduced row
  bool solvable = true;      // false iff a zero row meets a nonzero rhs row
};

// Gauss-Jordan on [A | rhs]. When A has full column rank the unique solution
// for variable j appears in the rhs row whose pivot column is j.
inline RrefResult rref_with_pivots(const GfContext& ctx, GfMatrix a, GfMatrix rhs) {
  if (rhs.rows() != a.rows()) throw std::invalid_argument("rhs row mismatch");
  int r = 0;
  std::vector<int> pivots;
  for (int c = 0; c < a.cols() && r < a.rows(); ++c) {
    int pivot = -1;
    for (int i = r; i < a.rows(); ++i)
      if (a.at(i, c) != 0) { pivot = i; break; }
    if (pivot < 0) continue;
    for (int j = 0; j < a.cols(); ++j) std::swap(a.at(r, j), a.at(pivot, j));
    for (int j = 0; j < rhs.cols(); ++j) std::swap(rhs.at(r, j), rhs.at(pivot, j));
    const Symbol pinv = ctx.inv(a.at(r, c));
    for (int j = 0; j < a.cols(); ++j) a.at(r, j) = ctx.mul(a.at(r, j), pinv);
    for (int j = 0; j < rhs.cols(); ++j) rhs.at(r, j) = ctx.mul(rhs.at(r, j), pinv);
    for (int i = 0; i < a.rows(); ++i) {
      if (i == r) continue;
      const Symbol f = a.at(i, c);
      if (f == 0) continue;
      for (int j = 0; j < a.cols(); ++j) a.at(i, j) ^= ctx.mul(f, a.at(r, j));
      for (int j = 0; j < rhs.cols(); ++j) rhs.at(i, j) ^= ctx.mul(f, rhs.at(r, j));
    }
    pivots.push_back(c);
    ++r;
  }
  bool solvable = true;
  for (int i = r; i < a.rows() && solvable; ++i)
    for (int j = 0; j < rhs.cols(); ++j)
      if (rhs.at(i, j) != 0) { solvable = false; break; }
  return {std::move(a), std::move(rhs), std::move(pivots), solvable};
}

// Probability that r independently picked totally random length-m vectors
// over GF(q) are linearly independent: prod_{k=0}^{r-1} (1 - q^{k-m}).
inline double zeta(int r, int m, FieldSpec spec) {
  if (r <= 0) return 1.0;
  if (r > m) return 0.0;
  const double q = static_cast<double>(spec.q());
  double p = 1.0;
  double qk = std::pow(q, -m);
  for (int k = 0; k < r; ++k) {
    p *= 1.0 - qk;
    qk *= q;
  }
  return p;
}

}  // namespace pbnc
