#pragma once

#include "ssl/core.hpp"

namespace ssl {

/// || |grad|^s f ||_{L^p(R^3)} for a sector field. l = 0 uses the sine
/// transform of u = r f; l = 1 supports p = 2 only, through the
/// eigendecomposition of the discrete Delta_1.
double sobolev_norm(const SectorField& f, double s, double p);

/// Root-sum-square of component norms for p = 2, sum for p != 2.
double sobolev_norm(const Spinor& f, double s, double p);

inline double hhalf_norm(const SectorField& f) { return sobolev_norm(f, 0.5, 2.0); }
inline double hhalf_norm(const Spinor& f) { return sobolev_norm(f, 0.5, 2.0); }

/// |grad|^s f for l = 0 fields, as a sector field.
SectorField fractional_derivative(const SectorField& f, double s);

/// ||f||_{L^p(R^3)} by grid quadrature.
double lebesgue_norm(const SectorField& f, double p);

}  // namespace ssl
