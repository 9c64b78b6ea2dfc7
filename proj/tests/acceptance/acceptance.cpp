// Acceptance gate: one PASS/FAIL line per criterion, exit code 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wfelab/dynamics.hpp"
#include "wfelab/fractional.hpp"
#include "wfelab/macrofield.hpp"
#include "wfelab/observables.hpp"
#include "wfelab/scenario.hpp"
#include "wfelab/wavefunction.hpp"

using namespace wfelab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    passed = passed && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAILED]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double gap(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

Verdict wfe_forms() {
  Verdict v;
  const auto g = Grid1D::periodic(-16.0, 16.0, 128);
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> c(-2.0, 2.0), s(0.8, 1.8), k(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> n(1, 4);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t N = n(rng);
    std::vector<CVector> f;
    for (std::size_t j = 0; j < N; ++j) f.push_back(make_gaussian_packet(g, c(rng), s(rng), k(rng)));
    const ProductState ps(g, std::move(f));
    const WfeParams p(1.0, N);
    const double direct = wfe_direct(ps, p);
    worst = std::max(worst, gap(direct, wfe_doubled(ps, p)));
    worst = std::max(worst, gap(direct, wfe_kernel(marginal_com_density(ps), Kernel::quadratic(), p)));
  }
  v.require(worst < 1e-8, "max relative disagreement " + fmt("%.3g", worst) + " < 1e-8");
  return v;
}

Verdict n2_scaling() {
  Verdict v;
  const auto g = Grid1D::periodic(-16.0, 16.0, 128);
  std::vector<double> lx, ly;
  for (std::size_t N : {2u, 4u, 8u, 16u, 32u}) {
    const auto cat = make_cat_superposition(g, N, 10.0, 1.0);
    lx.push_back(std::log(static_cast<double>(N)));
    ly.push_back(std::log(wfe_direct(cat, WfeParams(1.0, N))));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / lx.size();
    my += ly[i] / ly.size();
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  v.require(std::abs(slope - 2.0) <= 0.05, "slope " + fmt("%.5f", slope) + " within 2 +- 0.05");
  return v;
}

WaveFunctionFull gaussian_product(const Grid1D& g, std::size_t N, double c, double sigma, double k) {
  return expand(ProductState(g, std::vector<CVector>(N, make_gaussian_packet(g, c, sigma, k))));
}

Verdict linear_limit() {
  Verdict v;
  {
    const auto g = Grid1D::periodic(-20.0, 20.0, 256);
    const auto ev = evolve(gaussian_product(g, 1, 0.0, 1.0, 0.0), Hamiltonian{}, 1e-3, 1000, 1000);
    const double t = ev.records.back().time;
    const double err = std::abs(ev.records.back().com_dispersion - (1.0 + t * t / 4.0));
    v.require(err < 1e-4, "free variance error at t=1 " + fmt("%.3g", err) + " < 1e-4");
  }
  {
    const auto g = Grid1D::periodic(-10.0, 10.0, 128);
    Hamiltonian h;
    for (std::size_t i = 0; i < g.size(); ++i) h.particle_potential.push_back(0.5 * g.x(i) * g.x(i));
    const auto psi = gaussian_product(g, 1, 0.0, std::sqrt(0.5), 0.0);
    const auto ev = evolve(psi, h, 1e-3, 1000, 1000, {}, Integrator::reference);
    double l1 = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      l1 += std::abs(std::norm(ev.final_state.amplitudes()[i]) - std::norm(psi.amplitudes()[i]));
    }
    const double rate = l1 * g.dx() / ev.records.back().time;
    v.require(rate < 1e-8, "ground-state density change per unit time " + fmt("%.3g", rate) + " < 1e-8");
  }
  return v;
}

Verdict conservation() {
  Verdict v;
  const auto g = Grid1D::periodic(-8.0, 8.0, 64);
  for (std::size_t N : {1u, 2u}) {
    const auto psi = gaussian_product(g, N, 0.5, 1.0, 0.5);
    Hamiltonian h;
    h.wfe = WfeParams(1.0, N);
    const auto a = evolve(psi, h, 1e-3, 1000, 50);
    const auto b = evolve(psi, h, 1e-3, 1000, 50, {}, Integrator::reference);
    double dn = 0.0, de = 0.0, agree = 0.0;
    const double e0 = a.records.front().energy_total();
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      dn = std::max(dn, std::abs(a.records[i].norm - 1.0));
      de = std::max(de, std::abs(a.records[i].energy_total() - e0) / std::abs(e0));
      agree = std::max(agree, std::abs(a.records[i].com_mean - b.records[i].com_mean));
      agree = std::max(agree, std::abs(a.records[i].com_dispersion - b.records[i].com_dispersion));
    }
    const std::string tag = "N=" + std::to_string(N) + " ";
    v.require(dn < 1e-9, tag + "norm drift " + fmt("%.3g", dn) + " < 1e-9");
    v.require(de < 1e-6, tag + "energy drift " + fmt("%.3g", de) + " < 1e-6");
    v.require(agree < 1e-5, tag + "split vs CN " + fmt("%.3g", agree) + " < 1e-5");
  }
  return v;
}

Verdict macrofield() {
  Verdict v;
  const auto axis = Grid1D::bounded(-12.0, 12.0, 1024);
  const WfeParams p(1.0, 2);
  const auto cat = make_cat_superposition(axis, 2, 10.0, 1.0);
  const RealField h = marginal_com_density(cat);
  const auto sol = solve_poisson_pair(h, p);
  const std::size_t n = h.size();
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += std::abs(h.grid.x(i) - h.grid.x(j)) * sol.source.values[j];
    d *= h.grid.dx();
    scale = std::max(scale, std::abs(d));
    err = std::max(err, std::abs(sol.phi_minus.values[i] + sol.phi_plus.values[i] - d));
  }
  v.require(err / scale < 1e-8, "Green's identity " + fmt("%.3g", err / scale) + " < 1e-8");
  const double res = std::max(interior_residual(sol.phi_minus, sol.source, 2), interior_residual(sol.phi_plus, sol.source, 2));
  v.require(res < 1e-4, "D^2 residual " + fmt("%.3g", res) + " < 1e-4");
  const double eff = lagrangian_value(cat, sol, p).effective_energy;
  const double g2 = gap(eff, wfe_direct(cat, p));
  v.require(g2 > 0.1, "effective vs quadratic WFE gap " + fmt("%.3g", g2) + " > 0.1");
  return v;
}

Verdict third_order() {
  Verdict v;
  const auto axis = Grid1D::bounded(-12.0, 12.0, 1024);
  const WfeParams p(1.0, 2);
  const RealField h = marginal_com_density(make_cat_superposition(axis, 2, 10.0, 1.0));
  const RealField phi = solve_third_order(h, p);
  std::vector<double> s(h.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = -macro_coupling(p) * h.values[i];
  const double res = interior_residual(phi, RealField(h.grid, s), 3);
  v.require(res < 1e-3, "D^3 residual " + fmt("%.3g", res) + " < 1e-3");
  const double e = gap(quadratic_kernel_energy(h, p), wfe_kernel(h, Kernel::quadratic(), p));
  v.require(e < 1e-6, "quadratic-kernel energy gap " + fmt("%.3g", e) + " < 1e-6");
  return v;
}

Verdict fractional() {
  Verdict v;
  const auto g = Grid1D::bounded(-12.0, 12.0, 512);
  const std::size_t margin = 32;
  {
    const std::size_t ne = static_cast<std::size_t>(std::llround(34.0 / g.dx())) + 1;
    const Grid1D ge(ne, g.x_last() - static_cast<double>(ne - 1) * g.dx(), g.dx(), false);
    std::vector<double> ex(ne);
    for (std::size_t i = 0; i < ne; ++i) ex[i] = std::exp(ge.x(i));
    const auto d = build_fd(FdKind::riemann_liouville, FdSide::left_infinite, 1.5, ge).apply(RealField(ge, ex));
    double err = 0.0;
    for (std::size_t i = 0; i + margin < ne; ++i) {
      if (ge.x(i) >= ge.x_min() + 15.0) err = std::max(err, std::abs(d.values[i] / ex[i] - 1.0));
    }
    v.require(err < 1e-3, "RL e^x eigenrelation " + fmt("%.3g", err) + " < 1e-3");
  }
  {
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(-0.5 * g.x(i) * g.x(i));
    const auto d = build_fd(FdKind::riemann_liouville, FdSide::left_infinite, 2.0, g).apply(RealField(g, f));
    double err = 0.0, scale = 0.0;
    for (std::size_t i = margin; i + margin < g.size(); ++i) {
      const double x = g.x(i), ref = (x * x - 1.0) * f[i];
      err = std::max(err, std::abs(d.values[i] - ref));
      scale = std::max(scale, std::abs(ref));
    }
    v.require(err / scale < 1e-4, "order-2 limit " + fmt("%.3g", err / scale) + " < 1e-4");
  }
  {
    std::vector<double> f(g.size()), h(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = std::exp(-0.5 * (g.x(i) + 1.0) * (g.x(i) + 1.0));
      h[i] = std::exp(-0.5 * (g.x(i) - 1.0) * (g.x(i) - 1.0));
    }
    const auto rep = transpose_identity_check(RealField(g, f), RealField(g, h));
    v.require(!rep.skipped && rep.relative_difference < 1e-4,
              "transpose identity " + fmt("%.3g", rep.relative_difference) + " < 1e-4");
  }
  return v;
}

Verdict nogo() {
  Verdict v;
  const auto g = Grid1D::bounded(-24.0, 24.0, 768);
  const auto tests = standard_test_set(g);
  for (FdKind kind : {FdKind::riemann_liouville, FdKind::caputo}) {
    for (FdSide side : {FdSide::left_infinite, FdSide::right_infinite}) {
      const auto rep = composition_refutation(build_fd(kind, side, 1.5, g), tests);
      v.require(rep.min_residual > 0.1, rep.candidate + " residual " + fmt("%.3g", rep.min_residual) + " > 0.1");
    }
  }
  double anti = 0.0;
  for (const auto& phi : tests) {
    const auto rep = antisymmetry_witness(phi);
    anti = std::max(anti, std::abs(rep.value) / rep.scale);
  }
  v.require(anti < 1e-8, "antisymmetry " + fmt("%.3g", anti) + " < 1e-8 scale");
  const auto mc = moment_collapse_witness(antisymmetric_third_difference(g));
  v.require(mc.output_difference < 1e-8, "moment-collapse output " + fmt("%.3g", mc.output_difference) + " < 1e-8");
  v.require(mc.density_sup_difference > 0.1, "density sup difference " + fmt("%.3g", mc.density_sup_difference) + " > 0.1");
  const auto drop = euler_lagrange_dropout_check(Grid1D::bounded(-8.0, 8.0, 256));
  v.require(drop.third_order_gradient_max == 0.0, "||M+M^t||_inf " + fmt("%.3g", drop.third_order_gradient_max) + " == 0");
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict verify_suite() {
  Verdict v;
  const fs::path suite = fs::path(WFELAB_SOURCE_DIR) / "configs";
  const fs::path root = fs::temp_directory_path() / "wfelab_acceptance_verify";
  fs::remove_all(root);
  const auto a = verify_all(suite, root / "a");
  const auto b = verify_all(suite, root / "b");
  v.require(!a.results.empty() && a.exit_code == 0 && b.exit_code == 0,
            std::to_string(a.results.size()) + " configs, exit codes " + std::to_string(a.exit_code) + "/" +
                std::to_string(b.exit_code));
  std::size_t files = 0, diffs = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    ++files;
    if (slurp(e.path()) != slurp(root / "b" / fs::relative(e.path(), root / "a"))) ++diffs;
  }
  v.require(files > 0 && diffs == 0, std::to_string(files) + " CSV files byte-identical across runs");
  for (const auto& r : a.results) {
    if (!r.passed()) v.require(false, r.label + ": " + r.error);
  }
  fs::remove_all(root);
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_seconds;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"WFE forms agree on random product states", 30.0, wfe_forms},
      {"N^2 scaling", 10.0, n2_scaling},
      {"linear limit", 60.0, linear_limit},
      {"conservation and integrator agreement", 300.0, conservation},
      {"Macro-field solution", 1e300, macrofield},
      {"third-order field", 1e300, third_order},
      {"fractional operators", 1e300, fractional},
      {"no-go witnesses", 1e300, nogo},
      {"verify suite", 600.0, verify_suite},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds < 1e300) v.require(secs < c.budget_seconds, fmt("%.2f s", secs) + " < " + fmt("%g s", c.budget_seconds));
    else v.detail += "; " + fmt("%.2f s", secs);
    std::printf("%s  %s: %s\n", v.passed ? "PASS" : "FAIL", c.name, v.detail.c_str());
    std::fflush(stdout);
    if (!v.passed) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
