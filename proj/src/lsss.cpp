#include "martsia/lsss.hpp"

#include "martsia/errors.hpp"
#include "martsia/pairing.hpp"

namespace martsia::lsss {

namespace {

Int mod(const Int& v, const Int& p) {
  Int r = v % p;
  if (r < 0) r += p;
  return r;
}

Int mod_inv(const Int& v, const Int& p) {
  Int out;
  if (mpz_invert(out.get_mpz_t(), v.get_mpz_t(), p.get_mpz_t()) == 0)
    throw Error("lsss: non-invertible element");
  return out;
}

struct Compiler {
  const Int& p;
  size_t width = 1;  // column 1 (the constant-term column) always exists
  std::vector<std::map<size_t, Int>> sparse_rows;  // 0-based column -> value
  std::vector<std::string> rho;

  void visit(const policy::Formula& f, const std::map<size_t, Int>& label) {
    if (f.is_leaf()) {
      sparse_rows.push_back(label);
      rho.push_back(f.leaf);
      return;
    }
    if (Int(static_cast<unsigned long>(f.children.size())) >= p)
      throw FieldTooSmall("gate with " + std::to_string(f.children.size()) +
                          " children needs a larger field");
    size_t base = width;  // fresh columns base .. base+t-2 (0-based)
    size_t t = f.threshold;
    width += t - 1;
    for (size_t i = 1; i <= f.children.size(); ++i) {
      std::map<size_t, Int> child_label = label;
      Int ipow = 1;
      for (size_t j = 1; j <= t - 1; ++j) {
        ipow = mod(ipow * Int(static_cast<unsigned long>(i)), p);
        child_label[base + j - 1] = ipow;
      }
      visit(f.children[i - 1], child_label);
    }
  }
};

}  // namespace

LsssMatrix compile_lsss(const policy::Formula& f, const Int& p) {
  Compiler c{p};
  c.visit(f, {{0, Int(1)}});
  LsssMatrix m;
  m.p = p;
  m.width = c.width;
  m.rho = std::move(c.rho);
  m.rows.reserve(c.sparse_rows.size());
  for (const auto& sr : c.sparse_rows) {
    std::vector<Int> row(c.width, Int(0));
    for (const auto& [col, v] : sr) row[col] = v;
    m.rows.push_back(std::move(row));
  }
  return m;
}

std::optional<ReconstructionPlan> reconstruction_coefficients(
    const LsssMatrix& m, const std::set<std::string>& subset) {
  std::vector<size_t> idx;
  for (size_t x = 0; x < m.rows.size(); ++x)
    if (subset.count(m.rho[x])) idx.push_back(x);
  if (idx.empty()) return std::nullopt;

  const Int& p = m.p;
  size_t k = idx.size();
  // Solve A_sub^T c = e1: `width` equations in k unknowns.
  // eq[j] = coefficients of c_0..c_{k-1} plus augmented column.
  std::vector<std::vector<Int>> eq(m.width, std::vector<Int>(k + 1, Int(0)));
  for (size_t j = 0; j < m.width; ++j)
    for (size_t i = 0; i < k; ++i) eq[j][i] = mod(m.rows[idx[i]][j], p);
  eq[0][k] = 1;

  // row echelon, natural column order, first nonzero row as pivot
  std::vector<long> pivot_row_of_col(k, -1);
  size_t next_row = 0;
  for (size_t col = 0; col < k && next_row < m.width; ++col) {
    size_t pr = next_row;
    while (pr < m.width && eq[pr][col] == 0) ++pr;
    if (pr == m.width) continue;
    std::swap(eq[pr], eq[next_row]);
    Int inv = mod_inv(eq[next_row][col], p);
    for (size_t j = col; j <= k; ++j) eq[next_row][j] = mod(eq[next_row][j] * inv, p);
    for (size_t r2 = 0; r2 < m.width; ++r2) {
      if (r2 == next_row || eq[r2][col] == 0) continue;
      Int factor = eq[r2][col];
      for (size_t j = col; j <= k; ++j)
        eq[r2][j] = mod(eq[r2][j] - factor * eq[next_row][j], p);
    }
    pivot_row_of_col[col] = static_cast<long>(next_row);
    ++next_row;
  }
  // consistency: a row with all-zero coefficients but nonzero rhs
  for (size_t r2 = 0; r2 < m.width; ++r2) {
    bool all_zero = true;
    for (size_t i = 0; i < k; ++i)
      if (eq[r2][i] != 0) { all_zero = false; break; }
    if (all_zero && eq[r2][k] != 0) return std::nullopt;
  }
  // free variables are zero; pivot columns read off the augmented entry
  ReconstructionPlan plan;
  for (size_t col = 0; col < k; ++col) {
    if (pivot_row_of_col[col] < 0) continue;
    Int c = eq[static_cast<size_t>(pivot_row_of_col[col])][k];
    if (c != 0) plan.coefficients[idx[col]] = c;
  }
  return plan;
}

std::map<size_t, Int> share_secret(const LsssMatrix& m, const Int& s, Rng& rng) {
  std::vector<Int> v(m.width);
  v[0] = mod(s, m.p);
  size_t blen = (mpz_sizeinbase(m.p.get_mpz_t(), 2) + 7) / 8 + 16;
  for (size_t j = 1; j < m.width; ++j)
    v[j] = pairing::int_from_bytes(rng.bytes(blen)) % m.p;
  std::map<size_t, Int> shares;
  for (size_t x = 0; x < m.rows.size(); ++x) {
    Int acc = 0;
    for (size_t j = 0; j < m.width; ++j) acc += m.rows[x][j] * v[j];
    shares[x] = mod(acc, m.p);
  }
  return shares;
}

}  // namespace martsia::lsss
