#ifndef LAPKIT_CATALOG_HPP
#define LAPKIT_CATALOG_HPP

#include <map>
#include <string>

#include "lapkit/field.hpp"
#include "lapkit/perturb.hpp"

namespace lapkit {

using ParamMap = std::map<std::string, double>;

/// Analytic potential catalog. Names and parameters:
///   square_well    depth (>0 binds), radius, edge_width (0 = sharp)
///   gaussian       amp, sigma
///   power_law      amp, s       -> amp (1+|x|)^{-s}
///   coulomb_trunc  amp, radius  -> amp |x|^{-1} 1_{|x|<=radius} (d = 3)
///   vector_bump    amp_re, amp_im, sigma (axis-d component profile)
Field catalog_field(const GridSpec& s, const std::string& name, const ParamMap& params);

/// True if the named entry is a first-order (vector) potential.
bool catalog_is_vector(const std::string& name);

ScalarPotential catalog_scalar(const GridSpec& s, const std::string& name, const ParamMap& params);
VectorPotential catalog_vector(const GridSpec& s, const std::string& name, const ParamMap& params);

} // namespace lapkit

#endif
