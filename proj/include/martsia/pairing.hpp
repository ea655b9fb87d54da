#pragma once

#include <gmpxx.h>

#include <string>

#include "martsia/common.hpp"

namespace martsia::pairing {

using Int = mpz_class;

// Element of F_{q^2} = F_q(i), i^2 = -1 (q = 3 mod 4). The target group GT
// is the order-r subgroup of F_{q^2}^*; after the final exponentiation all
// elements are unitary, so inversion is conjugation.
struct Fq2 {
  Int a, b;  // a + b*i
  bool operator==(const Fq2&) const = default;
};

struct Point {
  Int x, y;
  bool inf = false;
  bool operator==(const Point& o) const {
    return inf == o.inf && (inf || (x == o.x && y == o.y));
  }
};

// Supersingular curve y^2 = x^3 + x over F_q with q = 3 mod 4,
// #E(F_q) = q + 1 = h * r, r prime. Pairing is the Tate pairing composed
// with the distortion map (x, y) -> (-x, i*y), so both arguments live in
// the same order-r subgroup of E(F_q).
struct CurveParams {
  std::string id;
  Int q;  // base field
  Int r;  // subgroup order (the scheme's scalar field)
  Int h;  // cofactor
};

// ~128-bit security: 1536-bit q, 3072-bit extension field for the DLP.
const CurveParams& params_a1536();
// Small parameters for high-volume tests (~80-bit); same 256-bit r.
const CurveParams& params_a512_test();
const CurveParams& params_by_id(const std::string& id);

class Group {
 public:
  explicit Group(CurveParams p);

  const CurveParams& params() const { return p_; }
  const Int& order() const { return p_.r; }
  size_t fq_bytes() const { return fq_len_; }

  static Point infinity() { return Point{0, 0, true}; }
  bool on_curve(const Point& P) const;
  Point neg(const Point& P) const;
  Point add(const Point& P, const Point& Q) const;
  Point dbl(const Point& P) const;
  Point mul(const Point& P, const Int& k) const;

  // Try-and-increment hash to the order-r subgroup. The discrete log of the
  // result w.r.t. any fixed generator is unknown.
  Point hash_to_group(const Bytes& msg, const std::string& domain) const;

  Fq2 pair(const Point& P, const Point& Q) const;

  Fq2 gt_one() const { return Fq2{1, 0}; }
  Fq2 gt_mul(const Fq2& x, const Fq2& y) const;
  Fq2 gt_inv(const Fq2& x) const;  // conjugate; valid for unitary elements
  Fq2 gt_exp(const Fq2& x, const Int& k) const;

  Bytes point_bytes(const Point& P) const;
  Point point_from_bytes(const Bytes& b) const;
  Bytes gt_bytes(const Fq2& x) const;
  Fq2 gt_from_bytes(const Bytes& b) const;

  Int random_scalar(Rng& rng) const;  // uniform in [0, r)

 private:
  Int fq_sqrt(const Int& t) const;  // q = 3 mod 4
  Fq2 fq2_mul(const Fq2& x, const Fq2& y) const;
  Fq2 fq2_sqr(const Fq2& x) const;
  Fq2 fq2_inv(const Fq2& x) const;

  CurveParams p_;
  size_t fq_len_;
  Int sqrt_exp_;  // (q+1)/4
};

Int int_from_bytes(const Bytes& b);
Bytes int_to_bytes(const Int& v, size_t width);

}  // namespace martsia::pairing
