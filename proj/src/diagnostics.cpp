#include "nsflab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nsflab/errors.hpp"
#include "nsflab/parallel.hpp"
#include "nsflab/relative_energy.hpp"

namespace nsflab {

std::array<double, 7> rate_envelope_terms(const ScalingParams& s) {
  s.validate(false);
  if (!(s.a > 0.0) || !(s.nu > 0.0) || !(s.lambda > 0.0)) {
    throw DomainError("rate envelope needs positive a, nu and lambda");
  }
  return {s.a,
          s.nu,
          s.omega,
          s.lambda,
          s.nu / std::sqrt(s.a),
          s.omega / s.a,
          std::cbrt(s.a / std::sqrt(s.nu * s.nu * s.nu * s.lambda))};
}

double rate_envelope(const ScalingParams& s) {
  const auto t = rate_envelope_terms(s);
  return *std::max_element(t.begin(), t.end());
}

std::string UniformBounds::to_text() const {
  std::ostringstream os;
  os << "kinetic " << format_double(kinetic) << '\n'
     << "rho_53 " << format_double(rho_53) << '\n'
     << "rho_theta " << format_double(rho_theta) << '\n'
     << "radiation " << format_double(radiation) << '\n'
     << "strain " << format_double(strain) << '\n'
     << "damping " << format_double(damping) << '\n'
     << "heat " << format_double(heat) << '\n';
  return os.str();
}

namespace {

// Interior gradients of the velocity components and a scalar; needs valid ghosts.
struct Gradients {
  std::array<std::array<Field, 2>, 2> u;
  std::array<Field, 2> s;
};

Gradients gradients(const VectorField& u, const Field& s) {
  const Grid& g = s.grid();
  Gradients out;
  for (int k = 0; k < 2; ++k)
    for (int d = 0; d < 2; ++d) out.u[k][d] = d < g.dim ? gradient(u[k], d) : Field(g);
  for (int d = 0; d < 2; ++d) out.s[d] = d < g.dim ? gradient(s, d) : Field(g);
  return out;
}

Tensor3 tensor_at(const std::array<std::array<Field, 2>, 2>& gu, int dim, int i, int j) {
  Tensor3 t{};
  for (int k = 0; k < 2; ++k)
    for (int d = 0; d < dim; ++d) t[k][d] = gu[k][d](i, j);
  return t;
}

}  // namespace

UniformBounds uniform_bounds(std::span<const FluidState> snapshots, const NsfRunConfig& config) {
  UniformBounds b;
  const double a = config.scaling.a;
  TrapezoidAccumulator strain, damping, heat;
  for (const auto& snap : snapshots) {
    FluidState s = snap;
    s.fill_ghosts();
    const Primitives p = to_primitives(s, config.gas, a);
    const Grid& g = s.grid;
    const Gradients gr = gradients(p.u, p.theta);
    Field kin(g), r53(g), rt(g), rad(g), str(g), u2(g), ht(g);
    const int nx = g.cells[0];
    parallel_for(static_cast<long>(g.interior_count()), [&](long q) {
      const int i = static_cast<int>(q % nx);
      const int j = static_cast<int>(q / nx);
      const double r = p.rho(i, j);
      const double th = p.theta(i, j);
      const double uu = p.u[0](i, j) * p.u[0](i, j) + p.u[1](i, j) * p.u[1](i, j);
      kin.raw_ref(i, j) = r * uu;
      r53.raw_ref(i, j) = std::pow(r, 5.0 / 3.0);
      rt.raw_ref(i, j) = r * th;
      rad.raw_ref(i, j) = th * th * th * th;
      str.raw_ref(i, j) = traceless_strain_norm2(tensor_at(gr.u, g.dim, i, j), g.dim);
      u2.raw_ref(i, j) = uu;
      const double lt = std::log(th);
      ht.raw_ref(i, j) = gr.s[0](i, j) * gr.s[0](i, j) + gr.s[1](i, j) * gr.s[1](i, j) + lt * lt;
    });
    b.kinetic = std::max(b.kinetic, integrate(kin));
    b.rho_53 = std::max(b.rho_53, integrate(r53));
    b.rho_theta = std::max(b.rho_theta, integrate(rt));
    b.radiation = std::max(b.radiation, a * integrate(rad));
    strain.add(s.time, config.scaling.nu * integrate(str));
    damping.add(s.time, config.scaling.lambda * integrate(u2));
    heat.add(s.time, config.scaling.omega * integrate(ht));
  }
  b.strain = strain.value();
  b.damping = damping.value();
  b.heat = heat.value();
  return b;
}

double interpolation_ratio(const VectorField& u) {
  const Field m = magnitude(u);
  const double n4 = lp_norm(m, 4.0);
  if (n4 == 0.0) return 0.0;
  const double n6 = lp_norm(m, 6.0);
  const double n2 = lp_norm(m, 2.0);
  return n4 / (std::pow(n6, 0.75) * std::pow(n2, 0.25));
}

double interpolation_check(std::span<const VectorField> velocities) {
  double worst = 0.0;
  for (const auto& u : velocities) worst = std::max(worst, interpolation_ratio(u));
  return worst;
}

InequalitySeries rel_energy_inequality_residual(std::span<const FluidState> nsf,
                                        std::span<const ReferenceFields> reference,
                                        const NsfRunConfig& config, const InequalityOptions& options) {
  if (nsf.empty() || nsf.size() != reference.size()) {
    throw UsageError("relative energy inequality needs one reference sample per instant");
  }
  const GasModel& gas = config.gas;
  const TransportModel& tr = config.transport;
  const double a = config.scaling.a;
  const double nu = config.scaling.nu;
  const double omega = config.scaling.omega;
  const double lambda = config.scaling.lambda;

  InequalitySeries series;
  TrapezoidAccumulator diss_acc, damp_acc;
  std::array<TrapezoidAccumulator, kInequalityTerms> term_acc;
  double E0 = 0.0;

  for (std::size_t k = 0; k < nsf.size(); ++k) {
    const ReferenceFields& ref = reference[k];
    const double t = nsf[k].time;
    if (std::abs(ref.time - t) > 1e-12 * std::max(1.0, std::abs(t))) {
      throw UsageError("reference instant does not match the run instant");
    }
    if (!nsf[k].grid.same_cells(ref.grid)) throw UsageError("reference grid differs from the run grid");
    ref.check_positive();
    FluidState s = nsf[k];
    s.fill_ghosts();
    const Primitives p = to_primitives(s, gas, a);
    const Grid& g = s.grid;
    const Gradients gn = gradients(p.u, p.theta);
    const Gradients gref = gradients(ref.u, ref.theta);
    std::array<Field, 2> grad_r{gradient(ref.rho, 0), g.dim == 2 ? gradient(ref.rho, 1) : Field(g)};

    Field diss(g), damp(g);
    std::array<Field, kInequalityTerms> terms;
    for (auto& f : terms) f = Field(g);
    const int nx = g.cells[0];
    const int dim = g.dim;
    parallel_for(static_cast<long>(g.interior_count()), [&](long q) {
      const int i = static_cast<int>(q % nx);
      const int j = static_cast<int>(q / nx);
      const double rho = p.rho(i, j);
      const double th = p.theta(i, j);
      const std::array<double, 2> u{p.u[0](i, j), p.u[1](i, j)};
      const double r = ref.rho(i, j);
      const double Th = ref.theta(i, j);
      const std::array<double, 2> U{ref.u[0](i, j), ref.u[1](i, j)};
      const std::array<double, 2> w{u[0] - U[0], u[1] - U[1]};
      const Tensor3 Gu = tensor_at(gn.u, dim, i, j);
      const Tensor3 GU = tensor_at(gref.u, dim, i, j);
      const std::array<double, 2> gth{gn.s[0](i, j), gn.s[1](i, j)};
      const std::array<double, 2> gTh{gref.s[0](i, j), gref.s[1](i, j)};
      const std::array<double, 2> gr{grad_r[0](i, j), grad_r[1](i, j)};
      const double kap = tr.kappa(th);

      const Tensor3 S = stress_tensor(tr, nu, th, Gu, dim);
      const double visc = viscous_dissipation(tr, nu, th, Gu, dim);
      const double gth2 = gth[0] * gth[0] + gth[1] * gth[1];
      diss.raw_ref(i, j) = (Th / th) * (visc + omega * kap * gth2 / th);
      damp.raw_ref(i, j) = lambda * (u[0] * u[0] + u[1] * u[1]);

      double t1 = 0.0, t2 = 0.0, t6 = 0.0;
      for (int ii = 0; ii < 2; ++ii) {
        for (int jj = 0; jj < 2; ++jj) {
          t1 -= rho * w[ii] * GU[jj][ii] * w[jj];
          t2 += S[ii][jj] * GU[ii][jj];
        }
      }
      const double divU = GU[0][0] + GU[1][1];
      for (int jj = 0; jj < 2; ++jj) {
        const double adv = U[0] * GU[jj][0] + U[1] * GU[jj][1];
        t6 += rho * (ref.u_t[jj](i, j) + adv) * (-w[jj]);
      }
      const double t3 = omega * kap / th * (gth[0] * gTh[0] + gth[1] * gTh[1]);
      const double t4 = lambda * (u[0] * U[0] + u[1] * U[1]);
      const double ds = entropy(gas, a, rho, th) - entropy(gas, a, r, Th);
      const double t5 = -rho * ds * (w[0] * gTh[0] + w[1] * gTh[1]);
      const double t7 = -pressure(gas, a, rho, th) * divU;
      const double t8 = -rho * ds * (ref.theta_t(i, j) + U[0] * gTh[0] + U[1] * gTh[1]);
      const auto dp = pressure_derivatives(gas, a, r, Th);
      const double p_t = dp.d_rho * ref.rho_t(i, j) + dp.d_theta * ref.theta_t(i, j);
      const double gp0 = dp.d_rho * gr[0] + dp.d_theta * gTh[0];
      const double gp1 = dp.d_rho * gr[1] + dp.d_theta * gTh[1];
      const double t9 = (1.0 - rho / r) * p_t - (rho / r) * (u[0] * gp0 + u[1] * gp1);
      const double sg = options.dissipation_sign;
      const std::array<double, kInequalityTerms> vals{t1, sg * t2, sg * t3, t4, t5, t6, t7, t8, t9};
      for (int m = 0; m < kInequalityTerms; ++m) terms[m].raw_ref(i, j) = vals[m];
    });

    InequalityRow row;
    row.t = t;
    row.E = relative_energy(p, ref, gas, a);
    if (k == 0) E0 = row.E;
    diss_acc.add(t, integrate(diss));
    damp_acc.add(t, integrate(damp));
    row.dissipation = diss_acc.value();
    row.damping = damp_acc.value();
    double rhs = 0.0;
    for (int m = 0; m < kInequalityTerms; ++m) {
      term_acc[m].add(t, integrate(terms[m]));
      row.terms[m] = term_acc[m].value();
      rhs += row.terms[m];
    }
    row.lhs = row.E - E0 + row.dissipation + row.damping;
    row.rhs = rhs;
    series.max_excess = std::max(series.max_excess, row.residual());
    series.max_abs = std::max(series.max_abs, std::abs(row.residual()));
    series.rows.push_back(row);
  }
  return series;
}

void write_inequality_csv(const std::filesystem::path& path, const InequalitySeries& series) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  out << "t,E,dissipation,damping";
  for (int m = 1; m <= kInequalityTerms; ++m) out << ",T" << m;
  out << ",lhs,rhs,lhs_minus_rhs\n";
  for (const auto& r : series.rows) {
    out << format_double(r.t) << ',' << format_double(r.E) << ',' << format_double(r.dissipation)
        << ',' << format_double(r.damping);
    for (double v : r.terms) out << ',' << format_double(v);
    out << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
        << format_double(r.residual()) << '\n';
  }
}

}  // namespace nsflab
