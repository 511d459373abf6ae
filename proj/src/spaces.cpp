#include "lapkit/spaces.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace lapkit {

ShellDecomposition::ShellDecomposition(const GridSpec& s) : spec(s) {
  const double corner = 0.5 * s.box * std::sqrt(double(s.d));
  j_max = std::max(0, int(std::ceil(std::log2(corner))));
  shell_of.resize(s.size());
  members.assign(std::size_t(j_max) + 1, {});
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r2 = radius2_at(s, i);
    // Smallest j with |x| <= 2^j; boundary points land in the lower shell.
    int j = 0;
    double bound = 1.0; // 2^j squared below
    while (r2 > bound * bound && j < j_max) {
      ++j;
      bound *= 2.0;
    }
    shell_of[i] = std::uint8_t(j);
    members[std::size_t(j)].push_back(std::uint32_t(i));
  }
}

const ShellDecomposition& shells_for(const GridSpec& s) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, std::unique_ptr<ShellDecomposition>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(s.d, s.n, s.box);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<ShellDecomposition>(s)).first;
  return *it->second;
}

std::vector<double> shell_l2(const Field& f, const ShellDecomposition& sh) {
  if (f.rep != Rep::physical) throw ContractError("shell_l2: physical representation required");
  if (!(f.spec == sh.spec)) throw ContractError("shell_l2: mismatched grids");
  const double hd = std::pow(f.spec.h(), f.spec.d);
  std::vector<double> out(sh.members.size(), 0.0);
  for (std::size_t j = 0; j < sh.members.size(); ++j) {
    double acc = 0.0;
    for (auto i : sh.members[j]) acc += std::norm(f[i]);
    out[j] = std::sqrt(acc * hd);
  }
  return out;
}

std::vector<double> shell_sup(const Field& f, const ShellDecomposition& sh) {
  if (f.rep != Rep::physical) throw ContractError("shell_sup: physical representation required");
  if (!(f.spec == sh.spec)) throw ContractError("shell_sup: mismatched grids");
  std::vector<double> out(sh.members.size(), 0.0);
  for (std::size_t j = 0; j < sh.members.size(); ++j) {
    double m = 0.0;
    for (auto i : sh.members[j]) m = std::max(m, std::abs(f[i]));
    out[j] = m;
  }
  return out;
}

double b_norm(const Field& f, const ShellDecomposition& sh) {
  auto l2 = shell_l2(f, sh);
  double acc = 0.0;
  for (std::size_t j = 0; j < l2.size(); ++j) acc += std::pow(2.0, 0.5 * double(j)) * l2[j];
  return acc;
}

double bstar_norm(const Field& u, const ShellDecomposition& sh) {
  auto l2 = shell_l2(u, sh);
  double m = 0.0;
  for (std::size_t j = 0; j < l2.size(); ++j)
    m = std::max(m, std::pow(2.0, -0.5 * double(j)) * l2[j]);
  return m;
}

double y_norm(const Field& V, const ShellDecomposition& sh) {
  auto sup = shell_sup(V, sh);
  double acc = 0.0;
  for (std::size_t j = 0; j < sup.size(); ++j) acc += std::pow(2.0, double(j)) * sup[j];
  return acc;
}

double sobolev_norm(const Field& u, double alpha, double p) {
  return lp_norm(apply_multiplier(u, Multiplier::sobolev(alpha)), p);
}

double x_star_norm(const Field& u, const ShellDecomposition& sh) {
  const int d = u.spec.d;
  double a = lp_norm(apply_multiplier(u, Multiplier::sobolev(1.0 / (d + 1))), p_high(d));
  double b = bstar_norm(apply_multiplier(u, Multiplier::sobolev(1.0)), sh);
  return std::max(a, b);
}

namespace {

double x_component_lp(const Field& f) {
  const int d = f.spec.d;
  return lp_norm(apply_multiplier(f, Multiplier::sobolev(-1.0 / (d + 1))), p_low(d));
}

double x_component_b(const Field& f, const ShellDecomposition& sh) {
  return b_norm(apply_multiplier(f, Multiplier::sobolev(-1.0)), sh);
}

} // namespace

XUpperResult x_norm_upper(const Field& f, const ShellDecomposition& sh,
                          const std::vector<double>& split_lambdas) {
  XUpperResult best;
  best.value = x_component_lp(f);
  best.splitting = "all->lp";
  double vb = x_component_b(f, sh);
  if (vb < best.value) {
    best.value = vb;
    best.splitting = "all->b";
  }
  for (double lam : split_lambdas) {
    if (!(lam > 0.0)) continue;
    Multiplier chi = Multiplier::annulus_cutoff(lam);
    Field fa = apply_multiplier(f, chi);
    Field fb = f;
    fb -= fa;
    char label[64];
    // near-sphere part measured in the restriction component
    double v1 = x_component_lp(fa) + x_component_b(fb, sh);
    if (v1 < best.value) {
      best.value = v1;
      std::snprintf(label, sizeof label, "annulus(%g):near->lp", lam);
      best.splitting = label;
    }
    double v2 = x_component_b(fa, sh) + x_component_lp(fb);
    if (v2 < best.value) {
      best.value = v2;
      std::snprintf(label, sizeof label, "annulus(%g):near->b", lam);
      best.splitting = label;
    }
  }
  return best;
}

NormReport norm_report(const Field& f, const ShellDecomposition& sh, double alpha, double p,
                       const std::vector<double>& split_lambdas) {
  NormReport r;
  r.b = b_norm(f, sh);
  r.b_star = bstar_norm(f, sh);
  r.y = y_norm(f, sh);
  r.l2 = l2_norm(f);
  r.alpha = alpha;
  r.p = p;
  r.w_alpha_p = sobolev_norm(f, alpha, p);
  r.x_star = x_star_norm(f, sh);
  auto xu = x_norm_upper(f, sh, split_lambdas);
  r.x_upper = xu.value;
  r.x_upper_splitting = xu.splitting;
  r.x_upper_surrogate = xu.surrogate;
  return r;
}

} // namespace lapkit
