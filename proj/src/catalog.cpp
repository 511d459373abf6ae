#include "lapkit/catalog.hpp"

#include <cmath>

namespace lapkit {

namespace {

double get(const ParamMap& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

double smoothstep_cinf(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t);
  double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

} // namespace

bool catalog_is_vector(const std::string& name) { return name == "vector_bump"; }

Field catalog_field(const GridSpec& s, const std::string& name, const ParamMap& params) {
  s.validate();
  if (name == "square_well") {
    const double depth = get(params, "depth", 3.0);
    const double radius = get(params, "radius", 1.0);
    const double ew = get(params, "edge_width", 0.0);
    return make_field(s, [&](const std::array<double, 3>& x) {
      double r = 0.0;
      for (int a = 0; a < s.d; ++a) r += x[a] * x[a];
      r = std::sqrt(r);
      double profile;
      if (ew <= 0.0) {
        profile = r <= radius ? 1.0 : 0.0;
      } else {
        profile = smoothstep_cinf((radius + 0.5 * ew - r) / ew);
      }
      return cplx(-depth * profile, 0.0);
    });
  }
  if (name == "gaussian") {
    const double amp = get(params, "amp", -1.0);
    const double sigma = get(params, "sigma", 1.0);
    return make_field(s, [&](const std::array<double, 3>& x) {
      double r2 = 0.0;
      for (int a = 0; a < s.d; ++a) r2 += x[a] * x[a];
      return cplx(amp * std::exp(-r2 / (2.0 * sigma * sigma)), 0.0);
    });
  }
  if (name == "power_law") {
    const double amp = get(params, "amp", 1.0);
    const double sexp = get(params, "s", 2.0);
    return make_field(s, [&](const std::array<double, 3>& x) {
      double r = 0.0;
      for (int a = 0; a < s.d; ++a) r += x[a] * x[a];
      return cplx(amp * std::pow(1.0 + std::sqrt(r), -sexp), 0.0);
    });
  }
  if (name == "coulomb_trunc") {
    const double amp = get(params, "amp", -1.0);
    const double radius = get(params, "radius", 1.0);
    // origin sample carries the cell average of 1/r over the
    // volume-equivalent ball: (3/2)/r_cell for d = 3
    const double rc = s.d == 3 ? s.h() * std::cbrt(3.0 / (4.0 * kPi)) : s.h() / std::sqrt(kPi);
    const double origin_value = s.d == 3 ? 1.5 / rc : 2.0 / rc;
    return make_field(s, [&](const std::array<double, 3>& x) {
      double r = 0.0;
      for (int a = 0; a < s.d; ++a) r += x[a] * x[a];
      r = std::sqrt(r);
      if (r > radius) return cplx(0.0, 0.0);
      return cplx(amp * (r < 1e-12 ? origin_value : 1.0 / r), 0.0);
    });
  }
  if (name == "vector_bump") {
    const cplx amp(get(params, "amp_re", 1.0), get(params, "amp_im", 0.0));
    const double sigma = get(params, "sigma", 1.0);
    return make_field(s, [&](const std::array<double, 3>& x) {
      double r2 = 0.0;
      for (int a = 0; a < s.d; ++a) r2 += x[a] * x[a];
      return amp * std::exp(-r2 / (2.0 * sigma * sigma));
    });
  }
  throw ContractError("catalog_field: unknown potential '" + name + "'");
}

ScalarPotential catalog_scalar(const GridSpec& s, const std::string& name, const ParamMap& params) {
  if (catalog_is_vector(name))
    throw ContractError("catalog_scalar: '" + name + "' is a vector potential");
  auto it = params.find("q0");
  Field f = catalog_field(s, name, params);
  if (it != params.end()) return ScalarPotential(std::move(f), it->second);
  return ScalarPotential(std::move(f));
}

VectorPotential catalog_vector(const GridSpec& s, const std::string& name, const ParamMap& params) {
  if (!catalog_is_vector(name))
    throw ContractError("catalog_vector: '" + name + "' is a scalar potential");
  auto it = params.find("q0");
  Field f = catalog_field(s, name, params);
  if (it != params.end()) return VectorPotential(std::move(f), it->second);
  return VectorPotential(std::move(f));
}

} // namespace lapkit
