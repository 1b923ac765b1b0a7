// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#ifndef THINKROUTER_CORE_FMATH_HPP
#define THINKROUTER_CORE_FMATH_HPP

namespace tr::fmath {

// Portable exp/log/tanh.
//
// libm transcendentals differ in the last bits between glibc, musl and MSVC,
// which would silently break the bitwise replay contract the moment a trace
// crosses machines. These versions use only IEEE-exact primitives (+,-,*,/,
// floor, ldexp/frexp) in a fixed evaluation order, so the same inputs give the
// same bits on every conforming platform. Accuracy is a few ulp — orders of
// magnitude tighter than any tolerance used in this project — and determinism
// is what we actually need. Compiled with -ffp-contract=off (see top-level
// CMakeLists) so no fma contraction can reorder the arithmetic.

double exp(double x);
double log(double x);
double tanh(double x);

} // namespace tr::fmath

#endif
