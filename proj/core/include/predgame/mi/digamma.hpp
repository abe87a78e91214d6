#pragma once

namespace predgame::mi {

// psi(x) for x > 0 via upward recurrence to x >= 10 followed by the
// asymptotic series through the 1/x^12 term. Absolute error <= 1e-10 on
// [1e-3, 1e6]. Throws ValidationError for x <= 0.
double digamma(double x);

}  // namespace predgame::mi
