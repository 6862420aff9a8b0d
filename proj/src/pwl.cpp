#include "rgp/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

namespace rgp {

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double softplusPrime(double x) {
  if (x > 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double PwlApprox::eval(double x) const {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < r; ++i) best = std::max(best, slope[i] * x + offset[i]);
  return best;
}

namespace {

// Fixed-count sign-tracking bisection. When the bracket holds a sign change
// this converges to the root; when it does not (the terminal near-identity
// regime of the sweep, where the next crossing lies beyond the bracket) it
// converges to hi, and the identity piece absorbs the remainder at the next
// loop check.
template <class F>
double bisect(F f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct Sweep {
  std::vector<double> slope, offset, breaks, tangents;
  int count = 0;
};

// Greedy equal-error sweep: start with the zero piece, add tangent pieces
// each time the running error reaches eps, finish with the identity piece.
// Gives the minimal piece count achieving error eps.
Sweep layPieces(double eps, int cap) {
  Sweep s;
  s.slope = {0.0};
  s.offset = {0.0};
  // First crossing: phi(xb) = eps.
  double xb = std::log(std::expm1(eps));
  s.breaks.push_back(xb);
  for (;;) {
    if (softplus(-xb) <= eps ||  // identity piece error at xb
        static_cast<int>(s.slope.size()) >= cap) {
      s.slope.push_back(1.0);
      s.offset.push_back(0.0);
      s.count = static_cast<int>(s.slope.size());
      return s;
    }
    // Tangent point xt > xb whose tangent line has error exactly eps at xb.
    const double pb = softplus(xb);
    const double xbc = xb;
    auto froot = [xbc, pb, eps](double xt) {
      const double a = softplusPrime(xt);
      const double b = softplus(xt) - a * xt;
      return (pb - (a * xbc + b)) - eps;
    };
    const double xt = bisect(froot, xb + 1e-14, xb + 80.0);
    const double a = softplusPrime(xt);
    const double b = softplus(xt) - a * xt;
    s.slope.push_back(a);
    s.offset.push_back(b);
    s.tangents.push_back(xt);
    // Next crossing: error of the new piece reaches eps to the right of xt.
    auto groot = [a, b, eps](double x) { return (softplus(x) - (a * x + b)) - eps; };
    xb = bisect(groot, xt + 1e-14, xt + 80.0);
    s.breaks.push_back(xb);
  }
}

PwlApprox construct(int r) {
  if (r < 2) throw std::invalid_argument("pwl: need r >= 2");
  PwlApprox p;
  p.r = r;
  if (r == 2) {  // analytic: pieces {0, x}, crossing at 0, error log 2
    p.slope = {0.0, 1.0};
    p.offset = {0.0, 0.0};
    p.breaks = {0.0};
    p.eps = std::log(2.0);
    return p;
  }
  // Minimal eps with piece count <= r; the count is non-increasing in eps.
  double lo = 1e-13, hi = std::log(2.0) + 1e-9;
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (layPieces(mid, r + 3).count > r)
      lo = mid;
    else
      hi = mid;
  }
  Sweep s = layPieces(hi, r + 3);
  if (s.count != r)
    throw std::runtime_error("pwl: sweep did not converge to requested r");
  p.slope = std::move(s.slope);
  p.offset = std::move(s.offset);
  p.breaks = std::move(s.breaks);
  p.tangents = std::move(s.tangents);
  p.eps = hi;
  return p;
}

}  // namespace

const PwlApprox& buildPwl(int r) {
  static std::mutex mu;
  static std::map<int, PwlApprox> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(r);
  if (it == cache.end()) it = cache.emplace(r, construct(r)).first;
  return it->second;
}

RobustLinearResult robustifyTwoTerm(const AffineData& y1, const AffineData& y2,
                                    int rhsVar, const PerturbationSet& set,
                                    int r, bool safe, const VarAllocator& alloc) {
  const PwlApprox& pwl = buildPwl(r);
  RobustLinearResult out;
  for (int i = 0; i < r; ++i) {
    const double w2 = pwl.slope[i];
    const double w1 = 1.0 - w2;
    AffineData piece = AffineData::combine(w1, y1, w2, y2);
    piece.b0 += pwl.offset[i] + (safe ? pwl.eps : 0.0);
    if (rhsVar >= 0) piece.a0.add(rhsVar, -1.0);
    RobustLinearResult one = robustify(piece, set, alloc);
    out.append(one);
  }
  return out;
}

double gapCheck(double upper, double lower) {
  if (!std::isfinite(upper) || !std::isfinite(lower) || lower <= 0)
    throw std::invalid_argument("gapCheck: need finite solutions, lower > 0");
  return (upper - lower) / lower;
}

}  // namespace rgp
