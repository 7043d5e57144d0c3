#pragma once

// Orientation and in-circle tests with the sign guaranteed correct: a
// floating-point evaluation is accepted when it clears a forward error
// bound, otherwise the determinant is recomputed in exact rational
// arithmetic.

#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>

namespace roadforge::predicates {

struct Xy {
  double x, y;
};

namespace detail {

using Exact = boost::multiprecision::cpp_rational;

constexpr double kEps = 0x1.0p-53;
constexpr double kCcwBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kIccBound = (10.0 + 96.0 * kEps) * kEps;

inline int sign_of(const Exact& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

inline int orient_exact(Xy a, Xy b, Xy c) {
  const Exact acx = Exact(a.x) - Exact(c.x), bcx = Exact(b.x) - Exact(c.x);
  const Exact acy = Exact(a.y) - Exact(c.y), bcy = Exact(b.y) - Exact(c.y);
  return sign_of(acx * bcy - acy * bcx);
}

inline int incircle_exact(Xy a, Xy b, Xy c, Xy d) {
  const Exact adx = Exact(a.x) - Exact(d.x), ady = Exact(a.y) - Exact(d.y);
  const Exact bdx = Exact(b.x) - Exact(d.x), bdy = Exact(b.y) - Exact(d.y);
  const Exact cdx = Exact(c.x) - Exact(d.x), cdy = Exact(c.y) - Exact(d.y);
  const Exact alift = adx * adx + ady * ady;
  const Exact blift = bdx * bdx + bdy * bdy;
  const Exact clift = cdx * cdx + cdy * cdy;
  const Exact det = alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
                    clift * (adx * bdy - bdx * ady);
  return sign_of(det);
}

}  // namespace detail

/// +1 if a, b, c are counter-clockwise, -1 if clockwise, 0 if collinear.
inline int orient2d(Xy a, Xy b, Xy c) {
  const double detleft = (a.x - c.x) * (b.y - c.y);
  const double detright = (a.y - c.y) * (b.x - c.x);
  const double det = detleft - detright;
  const double bound = detail::kCcwBound * (std::fabs(detleft) + std::fabs(detright));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  if (detleft == 0.0 && detright == 0.0) return 0;
  return detail::orient_exact(a, b, c);
}

/// +1 if d lies strictly inside the circle through counter-clockwise a, b, c;
/// -1 if strictly outside; 0 if cocircular.
inline int incircle(Xy a, Xy b, Xy c, Xy d) {
  const double adx = a.x - d.x, bdx = b.x - d.x, cdx = c.x - d.x;
  const double ady = a.y - d.y, bdy = b.y - d.y, cdy = c.y - d.y;
  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) +
                     clift * (adxbdy - bdxady);
  const double permanent = (std::fabs(bdxcdy) + std::fabs(cdxbdy)) * alift +
                           (std::fabs(cdxady) + std::fabs(adxcdy)) * blift +
                           (std::fabs(adxbdy) + std::fabs(bdxady)) * clift;
  const double bound = detail::kIccBound * permanent;
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return detail::incircle_exact(a, b, c, d);
}

}  // namespace roadforge::predicates
