#include "predgame/mi/digamma.hpp"

#include <cmath>
#include <string>

#include "predgame/errors.hpp"

namespace predgame::mi {

double digamma(double x) {
  if (!(x > 0.0)) throw ValidationError("digamma: x must be > 0, got " + std::to_string(x));
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = -0.5 * inv;
  double p = inv2;
  series -= p / 12.0;       // B2 term
  p *= inv2;
  series += p / 120.0;      // B4
  p *= inv2;
  series -= p / 252.0;      // B6
  p *= inv2;
  series += p / 240.0;      // B8
  p *= inv2;
  series -= p / 132.0;      // B10
  p *= inv2;
  series += p * 691.0 / 32760.0;  // B12
  return result + std::log(x) + series;
}

}  // namespace predgame::mi
