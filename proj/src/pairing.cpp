#include "martsia/pairing.hpp"

#include <stdexcept>

namespace martsia::pairing {

namespace {

const char* kQ1536 =
    "120515621346051629429005830301415705645604662397284447567983751953262869"
    "579590160033454251205367302483172438314044400239393120848939747916248480"
    "649394538732572760666969081261238539103895884074983842277156869391002879"
    "867292895229955473069356104975398249890782067115033881473667764080871420"
    "589708198389293518518448455461079597152711600578137922504028979392545049"
    "6857446141738323315590896482409521467025638538305506844438776909487861690"
    "339047965594237974612797309567";
const char* kH1536 =
    "208158643893287981638504806547281710772305244945334096106382247008072161"
    "193125644264620948812177915710598517579698204529828633076146952143963106"
    "048083655044337657039200798870070670414043923759482086615326827602427224"
    "867818654831155441023373033602379975171892259636145469600982225750990048"
    "41852225283632738034104685065787709915572094411787575404268330839309112"
    "220210319561050646010187136";
const char* kQ512 =
    "670390396497129854978701249910292306373968291029619668886178072186088201"
    "5110533049245107565568266431295550126395776005658889980699107765986257488"
    "083784259";
const char* kH512 =
    "115792089237316195423570985008687907853269984665640564039457584007913129"
    "641020";
const char* kR256 =
    "578960446186580977117854925043439539266349923328202820197287920039565648"
    "20063";

CurveParams make_params(const char* id, const char* q, const char* r, const char* h) {
  CurveParams p;
  p.id = id;
  p.q = Int(q);
  p.r = Int(r);
  p.h = Int(h);
  return p;
}

}  // namespace

const CurveParams& params_a1536() {
  static const CurveParams p = make_params("a1536", kQ1536, kR256, kH1536);
  return p;
}

const CurveParams& params_a512_test() {
  static const CurveParams p = make_params("a512-test", kQ512, kR256, kH512);
  return p;
}

const CurveParams& params_by_id(const std::string& id) {
  if (id == "a1536") return params_a1536();
  if (id == "a512-test") return params_a512_test();
  throw std::invalid_argument("unknown curve parameter set: " + id);
}

Int int_from_bytes(const Bytes& b) {
  Int v;
  mpz_import(v.get_mpz_t(), b.size(), 1, 1, 1, 0, b.data());
  return v;
}

Bytes int_to_bytes(const Int& v, size_t width) {
  Bytes out(width, 0);
  size_t count = 0;
  mpz_export(nullptr, &count, 1, 1, 1, 0, v.get_mpz_t());
  if (count > width) throw std::invalid_argument("integer too wide for encoding");
  mpz_export(out.data() + (width - count), &count, 1, 1, 1, 0, v.get_mpz_t());
  return out;
}

Group::Group(CurveParams p) : p_(std::move(p)) {
  fq_len_ = (mpz_sizeinbase(p_.q.get_mpz_t(), 2) + 7) / 8;
  sqrt_exp_ = (p_.q + 1) / 4;
  if (mpz_fdiv_ui(p_.q.get_mpz_t(), 4) != 3)
    throw std::invalid_argument("curve field must be 3 mod 4");
  if ((p_.q + 1) != p_.h * p_.r)
    throw std::invalid_argument("curve cofactor mismatch");
}

bool Group::on_curve(const Point& P) const {
  if (P.inf) return true;
  Int lhs = (P.y * P.y) % p_.q;
  Int rhs = (P.x * P.x % p_.q * P.x + P.x) % p_.q;
  return lhs == rhs;
}

Point Group::neg(const Point& P) const {
  if (P.inf) return P;
  return Point{P.x, (p_.q - P.y) % p_.q, false};
}

Point Group::dbl(const Point& P) const {
  if (P.inf || P.y == 0) return infinity();
  Int num = (3 * P.x * P.x + 1) % p_.q;
  Int den = (2 * P.y) % p_.q;
  Int inv;
  mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), p_.q.get_mpz_t());
  Int lam = num * inv % p_.q;
  Int x3 = (lam * lam - 2 * P.x) % p_.q;
  if (x3 < 0) x3 += p_.q;
  Int y3 = (lam * (P.x - x3) - P.y) % p_.q;
  if (y3 < 0) y3 += p_.q;
  return Point{x3, y3, false};
}

Point Group::add(const Point& P, const Point& Q) const {
  if (P.inf) return Q;
  if (Q.inf) return P;
  if (P.x == Q.x) {
    if ((P.y + Q.y) % p_.q == 0) return infinity();
    return dbl(P);
  }
  Int num = (Q.y - P.y) % p_.q;
  Int den = (Q.x - P.x) % p_.q;
  Int inv;
  mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), p_.q.get_mpz_t());
  Int lam = num * inv % p_.q;
  if (lam < 0) lam += p_.q;
  Int x3 = (lam * lam - P.x - Q.x) % p_.q;
  if (x3 < 0) x3 += p_.q;
  Int y3 = (lam * (P.x - x3) - P.y) % p_.q;
  if (y3 < 0) y3 += p_.q;
  return Point{x3, y3, false};
}

Point Group::mul(const Point& P, const Int& k) const {
  Int e = k % p_.r;
  if (e < 0) e += p_.r;
  Point acc = infinity();
  for (long i = static_cast<long>(mpz_sizeinbase(e.get_mpz_t(), 2)) - 1; i >= 0; --i) {
    acc = dbl(acc);
    if (mpz_tstbit(e.get_mpz_t(), i)) acc = add(acc, P);
  }
  return acc;
}

Int Group::fq_sqrt(const Int& t) const {
  Int y;
  mpz_powm(y.get_mpz_t(), t.get_mpz_t(), sqrt_exp_.get_mpz_t(), p_.q.get_mpz_t());
  return y;
}

Point Group::hash_to_group(const Bytes& msg, const std::string& domain) const {
  for (uint64_t ctr = 0; ctr < 1024; ++ctr) {
    Bytes seed = to_bytes(domain);
    Bytes c = be64(ctr);
    seed.insert(seed.end(), c.begin(), c.end());
    seed.insert(seed.end(), msg.begin(), msg.end());
    // expand to field width + 128 bits so the mod-q reduction bias is negligible
    Bytes wide = hkdf_sha256(seed, {}, to_bytes("martsia/h2g/xmd"), fq_len_ + 16);
    Int x = int_from_bytes(wide) % p_.q;
    Int t = (x * x % p_.q * x + x) % p_.q;
    if (t == 0) continue;
    Int y = fq_sqrt(t);
    if (y * y % p_.q != t) continue;  // non-residue
    Int yneg = p_.q - y;
    Int ymin = (y < yneg) ? y : yneg;
    Point P = Point{x, ymin, false};
    // clear the cofactor into the order-r subgroup; h may exceed r so use
    // plain double-and-add over h
    Point acc = infinity();
    for (long i = static_cast<long>(mpz_sizeinbase(p_.h.get_mpz_t(), 2)) - 1; i >= 0; --i) {
      acc = dbl(acc);
      if (mpz_tstbit(p_.h.get_mpz_t(), i)) acc = add(acc, P);
    }
    if (acc.inf) continue;
    return acc;
  }
  throw std::runtime_error("hash_to_group: no point found");
}

Fq2 Group::fq2_mul(const Fq2& x, const Fq2& y) const {
  Int a = (x.a * y.a - x.b * y.b) % p_.q;
  if (a < 0) a += p_.q;
  Int b = (x.a * y.b + x.b * y.a) % p_.q;
  if (b < 0) b += p_.q;
  return Fq2{a, b};
}

Fq2 Group::fq2_sqr(const Fq2& x) const {
  Int a = ((x.a + x.b) * (x.a - x.b)) % p_.q;
  if (a < 0) a += p_.q;
  Int b = (2 * x.a * x.b) % p_.q;
  return Fq2{a, b};
}

Fq2 Group::fq2_inv(const Fq2& x) const {
  Int norm = (x.a * x.a + x.b * x.b) % p_.q;
  Int inv;
  if (mpz_invert(inv.get_mpz_t(), norm.get_mpz_t(), p_.q.get_mpz_t()) == 0)
    throw std::runtime_error("fq2_inv of zero");
  Int a = x.a * inv % p_.q;
  Int b = (p_.q - x.b) * inv % p_.q;
  return Fq2{a, b};
}

Fq2 Group::gt_mul(const Fq2& x, const Fq2& y) const { return fq2_mul(x, y); }

Fq2 Group::gt_inv(const Fq2& x) const { return Fq2{x.a, (p_.q - x.b) % p_.q}; }

Fq2 Group::gt_exp(const Fq2& x, const Int& k) const {
  Int e = k % p_.r;
  if (e < 0) e += p_.r;
  Fq2 acc = gt_one();
  for (long i = static_cast<long>(mpz_sizeinbase(e.get_mpz_t(), 2)) - 1; i >= 0; --i) {
    acc = fq2_sqr(acc);
    if (mpz_tstbit(e.get_mpz_t(), i)) acc = fq2_mul(acc, x);
  }
  return acc;
}

// Tate pairing with the distortion map folded in: the second argument is
// mapped to Q' = (-Q.x, i*Q.y). Line functions have coefficients in F_q;
// vertical lines evaluate into F_q and are killed by the (q-1) part of the
// final exponentiation, so they are omitted (BKLS denominator elimination).
Fq2 Group::pair(const Point& P, const Point& Q) const {
  if (P.inf || Q.inf) return gt_one();
  const Int& q = p_.q;
  Int qx = (q - Q.x) % q;  // x-coordinate of Q'
  const Int& qy = Q.y;     // imaginary part of y-coordinate of Q'

  auto line_value = [&](const Point& T, const Int& lam) {
    // l(Q') = i*qy - T.y - lam*(qx - T.x)
    Int re = (-T.y - lam * (qx - T.x)) % q;
    if (re < 0) re += q;
    return Fq2{re, qy};
  };

  Fq2 f = gt_one();
  Point T = P;
  long bits = static_cast<long>(mpz_sizeinbase(p_.r.get_mpz_t(), 2));
  for (long i = bits - 2; i >= 0; --i) {
    // tangent at T
    Int num = (3 * T.x * T.x + 1) % q;
    Int den = (2 * T.y) % q;
    Int inv;
    mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), q.get_mpz_t());
    Int lam = num * inv % q;
    f = fq2_mul(fq2_sqr(f), line_value(T, lam));
    T = dbl(T);
    if (mpz_tstbit(p_.r.get_mpz_t(), i)) {
      if (T.x == P.x && (T.y + P.y) % q == 0) {
        // T = -P: the chord is vertical, contributes a subfield factor only
        T = infinity();
        if (i != 0) throw std::runtime_error("pairing: premature subgroup exit");
        continue;
      }
      Int anum = (P.y - T.y) % q;
      Int aden = (P.x - T.x) % q;
      mpz_invert(inv.get_mpz_t(), aden.get_mpz_t(), q.get_mpz_t());
      lam = anum * inv % q;
      f = fq2_mul(f, line_value(T, lam));
      T = add(T, P);
    }
  }
  // final exponentiation: f^((q^2-1)/r) = (f^(q-1))^h, f^q = conj(f)
  Fq2 g = fq2_mul(Fq2{f.a, (q - f.b) % q}, fq2_inv(f));
  Fq2 acc = gt_one();
  for (long i = static_cast<long>(mpz_sizeinbase(p_.h.get_mpz_t(), 2)) - 1; i >= 0; --i) {
    acc = fq2_sqr(acc);
    if (mpz_tstbit(p_.h.get_mpz_t(), i)) acc = fq2_mul(acc, g);
  }
  return acc;
}

Bytes Group::point_bytes(const Point& P) const {
  Bytes out;
  out.reserve(1 + fq_len_);
  if (P.inf) {
    out.assign(1 + fq_len_, 0);
    return out;
  }
  out.push_back(static_cast<uint8_t>(0x02 | mpz_tstbit(P.y.get_mpz_t(), 0)));
  Bytes x = int_to_bytes(P.x, fq_len_);
  out.insert(out.end(), x.begin(), x.end());
  return out;
}

Point Group::point_from_bytes(const Bytes& b) const {
  if (b.size() != 1 + fq_len_) throw std::invalid_argument("point encoding: bad length");
  if (b[0] == 0x00) return infinity();
  if (b[0] != 0x02 && b[0] != 0x03) throw std::invalid_argument("point encoding: bad flag");
  Int x = int_from_bytes(Bytes(b.begin() + 1, b.end()));
  if (x >= p_.q) throw std::invalid_argument("point encoding: x out of range");
  Int t = (x * x % p_.q * x + x) % p_.q;
  Int y = fq_sqrt(t);
  if (y * y % p_.q != t) throw std::invalid_argument("point encoding: not on curve");
  if (mpz_tstbit(y.get_mpz_t(), 0) != static_cast<unsigned>(b[0] & 1)) y = p_.q - y;
  return Point{x, y, false};
}

Bytes Group::gt_bytes(const Fq2& x) const {
  Bytes out = int_to_bytes(x.a, fq_len_);
  Bytes bb = int_to_bytes(x.b, fq_len_);
  out.insert(out.end(), bb.begin(), bb.end());
  return out;
}

Fq2 Group::gt_from_bytes(const Bytes& b) const {
  if (b.size() != 2 * fq_len_) throw std::invalid_argument("gt encoding: bad length");
  Int a = int_from_bytes(Bytes(b.begin(), b.begin() + fq_len_));
  Int bb = int_from_bytes(Bytes(b.begin() + fq_len_, b.end()));
  if (a >= p_.q || bb >= p_.q) throw std::invalid_argument("gt encoding: out of range");
  return Fq2{a, bb};
}

Int Group::random_scalar(Rng& rng) const {
  size_t r_len = (mpz_sizeinbase(p_.r.get_mpz_t(), 2) + 7) / 8;
  Int v = int_from_bytes(rng.bytes(r_len + 16));
  return v % p_.r;
}

}  // namespace martsia::pairing
