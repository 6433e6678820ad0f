#include "eit/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>

#include "eit/errors.hpp"

namespace eit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_field(const LevelSetField& phi) {
  if (phi.n < 1 ||
      static_cast<int>(phi.phi.size()) != (phi.n + 1) * (phi.n + 1))
    throw Error("level-set field has inconsistent size");
}

double cell_center_value(const LevelSetField& phi, int ci, int cj) {
  return 0.25 * (phi.at(ci, cj) + phi.at(ci + 1, cj) + phi.at(ci + 1, cj + 1) +
                 phi.at(ci, cj + 1));
}

}  // namespace

double LevelSetField::interpolate(const Vec2& x) const {
  const double cx = std::clamp(x.x(), 0.0, 1.0) * n;
  const double cy = std::clamp(x.y(), 0.0, 1.0) * n;
  const int i = std::min(static_cast<int>(cx), n - 1);
  const int j = std::min(static_cast<int>(cy), n - 1);
  const double fx = cx - i, fy = cy - j;
  return (1 - fx) * (1 - fy) * at(i, j) + fx * (1 - fy) * at(i + 1, j) +
         fx * fy * at(i + 1, j + 1) + (1 - fx) * fy * at(i, j + 1);
}

LevelSetField init_signed_distance(const std::vector<Primitive>& shapes,
                                   const CrossedMesh& mesh) {
  LevelSetField phi;
  phi.n = mesh.n;
  phi.phi.assign((mesh.n + 1) * (mesh.n + 1), 0.5);
  if (shapes.empty()) return phi;  // explicit empty guess: no inclusion

  for (const auto& s : shapes) {
    Vec2 lo, hi;
    bounding_box(s, lo, hi);
    if (lo.x() <= 0.0 || lo.y() <= 0.0 || hi.x() >= 1.0 || hi.y() >= 1.0)
      throw Error("initial shape is not strictly inside the domain");
  }
  for (int j = 0; j <= mesh.n; ++j)
    for (int i = 0; i <= mesh.n; ++i)
      phi.at(i, j) = union_signed_distance(
          shapes, Vec2(static_cast<double>(i) / mesh.n, static_cast<double>(j) / mesh.n));
  return phi;
}

std::vector<std::uint8_t> inclusion_mask(const CrossedMesh& mesh,
                                         const LevelSetField& phi) {
  check_field(phi);
  if (phi.n != mesh.n) throw Error("level set does not match the mesh");
  std::vector<std::uint8_t> mask(mesh.num_triangles(), 0);
  for (int cj = 0; cj < mesh.n; ++cj)
    for (int ci = 0; ci < mesh.n; ++ci) {
      const double pc = cell_center_value(phi, ci, cj);
      const double p00 = phi.at(ci, cj);
      const double p10 = phi.at(ci + 1, cj);
      const double p11 = phi.at(ci + 1, cj + 1);
      const double p01 = phi.at(ci, cj + 1);
      const int base = 4 * (cj * mesh.n + ci);
      // triangle centroid values; order matches build_crossed_grid
      const double v[4] = {(p00 + p10 + pc) / 3.0, (p10 + p11 + pc) / 3.0,
                           (p11 + p01 + pc) / 3.0, (p01 + p00 + pc) / 3.0};
      for (int t = 0; t < 4; ++t) mask[base + t] = v[t] < 0.0 ? 1 : 0;
    }
  return mask;
}

ConductivityField conductivity_from_levelset(const CrossedMesh& mesh,
                                             const LevelSetField& phi, double sigma0,
                                             double sigma1) {
  return conductivity_from_mask(mesh, inclusion_mask(mesh, phi), sigma0, sigma1);
}

double VelocityField::max_abs() const {
  double m = 0.0;
  const int np1 = n + 1;
  for (int k = 0; k < np1 * np1; ++k)
    m = std::max({m, std::abs(values[k].x()), std::abs(values[k].y())});
  return m;
}

BoundaryFunction resample_boundary(const CrossedMesh& from, const BoundaryFunction& f,
                                   const CrossedMesh& to) {
  if (f.n != from.n) throw Error("boundary function does not match the mesh");
  const int nf = 4 * from.n;
  const int nt = 4 * to.n;
  BoundaryFunction out;
  out.n = to.n;
  out.role = f.role;
  out.values.resize(nt);
  // both loops are uniform in arclength, so interpolation is periodic linear
  for (int l = 0; l < nt; ++l) {
    const double pos = static_cast<double>(l) * from.n / to.n;
    const int i0 = static_cast<int>(pos) % nf;
    const double frac = pos - std::floor(pos);
    out.values[l] = (1.0 - frac) * f.values[i0] + frac * f.values[(i0 + 1) % nf];
  }
  return out;
}

MeasurementSet simulate_measurements(const CrossedMesh& data_mesh,
                                     const CrossedMesh& recon_mesh,
                                     const Region& inclusion, double sigma0,
                                     double sigma1, int m, double eta,
                                     std::uint64_t seed, bool allow_same_mesh) {
  if (data_mesh.n < recon_mesh.n)
    throw Error("data mesh must be at least as fine as the reconstruction mesh");
  if (data_mesh.n == recon_mesh.n && !allow_same_mesh)
    throw Error("data and reconstruction meshes coincide; pass allow_same_mesh to "
                "permit the inverse crime");
  if (data_mesh.n % recon_mesh.n != 0)
    throw Error("data mesh resolution must be a multiple of the reconstruction mesh");

  const ConductivityField sigma = inclusion.empty()
                                      ? uniform_conductivity(data_mesh, sigma0)
                                      : rasterize_region(data_mesh, inclusion, sigma0, sigma1);
  const CurrentBasis data_basis = make_current_basis(data_mesh, m, false);
  const CurrentBasis recon_basis = make_current_basis(recon_mesh, m, false);
  NeumannSolver solver(data_mesh, sigma);
  NeumannSolver background(data_mesh, uniform_conductivity(data_mesh, sigma0));

  MeasurementSet meas;
  meas.data_n = data_mesh.n;
  meas.recon_n = recon_mesh.n;
  meas.eta = eta;
  meas.pairs.reserve(m);
  for (int k = 0; k < m; ++k) {
    const PotentialField u = solver.solve(data_basis.currents[k]);
    BoundaryFunction f = trace(data_mesh, u);
    f = add_voltage_noise(f, eta, seed + 0x9E3779B97F4A7C15ull * (k + 1));
    Measurement pair;
    pair.g = recon_basis.currents[k];
    pair.f = resample_boundary(data_mesh, f, recon_mesh);
    pair.f0 = resample_boundary(data_mesh,
                                trace(data_mesh, background.solve(data_basis.currents[k])),
                                recon_mesh);
    meas.pairs.push_back(std::move(pair));
  }
  return meas;
}

KvSolution kv_solve(const CrossedMesh& mesh, const ConductivityField& sigma,
                    const MeasurementSet& meas) {
  if (meas.recon_n != mesh.n) throw Error("measurements do not match the mesh");
  if (meas.pairs.empty()) throw Error("empty measurement set");

  NeumannSolver neumann(mesh, sigma);
  DirichletSolver dirichlet(mesh, sigma);

  KvSolution sol;
  sol.sigma = sigma;
  sol.u.reserve(meas.pairs.size());
  sol.v.reserve(meas.pairs.size());
  double j = 0.0;
  for (const auto& pair : meas.pairs) {
    PotentialField u = neumann.solve(pair.g);
    PotentialField v = dirichlet.solve(pair.f);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const Vec2 du = tri_gradient(mesh, u.values, t);
      const Vec2 dv = tri_gradient(mesh, v.values, t);
      j += sigma.values[t] * mesh.tri_area[t] * (du - dv).squaredNorm();
    }
    sol.u.push_back(std::move(u));
    sol.v.push_back(std::move(v));
  }
  sol.objective = j;
  return sol;
}

double kv_objective(const CrossedMesh& mesh, const ConductivityField& sigma,
                    const MeasurementSet& meas) {
  return kv_solve(mesh, sigma, meas).objective;
}

std::vector<double> shape_derivative_load(const CrossedMesh& mesh, const KvSolution& sol,
                                          DerivativeFormula formula) {
  const int nv = mesh.num_vertices();
  std::vector<double> load(2 * nv, 0.0);
  double identity_term = 0.0;

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    Eigen::Matrix2d mdiff = Eigen::Matrix2d::Zero();
    for (std::size_t k = 0; k < sol.u.size(); ++k) {
      const Vec2 du = tri_gradient(mesh, sol.u[k].values, t);
      const Vec2 dv = tri_gradient(mesh, sol.v[k].values, t);
      mdiff += dv * dv.transpose() - du * du.transpose();
    }
    const double w = sol.sigma.values[t] * mesh.tri_area[t];
    const double ssum = mdiff.trace();
    if (formula == DerivativeFormula::IdentityVariant) identity_term += w * ssum;
    for (int a = 0; a < 3; ++a) {
      const Vec2& gl = mesh.tri_grad[t][a];
      Vec2 contrib = -2.0 * w * (mdiff * gl);
      if (formula == DerivativeFormula::Standard) contrib += w * ssum * gl;
      const int vid = mesh.triangles[t][a];
      load[2 * vid] += contrib.x();
      load[2 * vid + 1] += contrib.y();
    }
  }
  if (formula == DerivativeFormula::IdentityVariant)
    for (double& v : load) v += identity_term;
  return load;
}

double shape_derivative_value(const CrossedMesh& mesh, const std::vector<double>& load,
                              const VelocityField& v) {
  if (static_cast<int>(load.size()) != 2 * mesh.num_vertices() ||
      static_cast<int>(v.values.size()) != mesh.num_vertices())
    throw Error("load or velocity does not match the mesh");
  double s = 0.0;
  for (int a = 0; a < mesh.num_vertices(); ++a)
    s += load[2 * a] * v.values[a].x() + load[2 * a + 1] * v.values[a].y();
  return s;
}

VelocitySmoother::VelocitySmoother(const CrossedMesh& mesh) : mesh_(mesh) {
  const int nv = mesh.num_vertices();
  interior_index_.assign(nv, -1);
  for (int v = 0; v < nv; ++v)
    if (mesh.boundary_index_of[v] < 0) {
      interior_index_[v] = static_cast<int>(interior_nodes_.size());
      interior_nodes_.push_back(v);
    }
  std::vector<Eigen::Triplet<double>> trips;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      const int ri = interior_index_[tri[i]];
      if (ri < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int rj = interior_index_[tri[j]];
        if (rj < 0) continue;
        trips.emplace_back(
            ri, rj, mesh.tri_area[t] * mesh.tri_grad[t][i].dot(mesh.tri_grad[t][j]));
      }
    }
  }
  const int ni = static_cast<int>(interior_nodes_.size());
  kii_.resize(ni, ni);
  kii_.setFromTriplets(trips.begin(), trips.end());
  kii_.makeCompressed();
  ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  ldlt_->compute(kii_);
  if (ldlt_->info() != Eigen::Success)
    throw Error("velocity smoothing factorization failed");
}

VelocityField VelocitySmoother::smooth(const std::vector<double>& load) const {
  const int nv = mesh_.num_vertices();
  if (static_cast<int>(load.size()) != 2 * nv)
    throw Error("load does not match the mesh");
  const int ni = static_cast<int>(interior_nodes_.size());
  VelocityField out;
  out.n = mesh_.n;
  out.values.assign(nv, Vec2::Zero());
  for (int d = 0; d < 2; ++d) {
    Eigen::VectorXd rhs(ni);
    for (int k = 0; k < ni; ++k) rhs[k] = -load[2 * interior_nodes_[k] + d];
    const Eigen::VectorXd x = ldlt_->solve(rhs);
    if (ldlt_->info() != Eigen::Success) throw Error("velocity smoothing solve failed");
    for (int k = 0; k < ni; ++k) out.values[interior_nodes_[k]][d] = x[k];
  }
  return out;
}

VelocityField shape_gradient_velocity(const CrossedMesh& mesh, const KvSolution& sol,
                                      DerivativeFormula formula) {
  return VelocitySmoother(mesh).smooth(shape_derivative_load(mesh, sol, formula));
}

double cfl_timestep(const CrossedMesh& mesh, const VelocityField& v) {
  const double vmax = v.max_abs();
  return vmax > 0.0 ? 0.5 * mesh.h / vmax : kInf;
}

LevelSetField transport_levelset(const LevelSetField& phi, const VelocityField& v,
                                 double dt, double h) {
  check_field(phi);
  if (v.n != phi.n) throw Error("velocity does not match the level set");
  if (!(dt > 0.0)) throw Error("time step must be positive");
  const double vmax = v.max_abs();
  const double admissible = vmax > 0.0 ? 0.5 * h / vmax : kInf;
  if (dt > admissible * (1.0 + 1e-12))
    throw CflError("time step violates the CFL bound", admissible);

  const int n = phi.n;
  const int np1 = n + 1;
  auto vel = [&](int i, int j) -> const Vec2& { return v.values[j * np1 + i]; };

  LevelSetField out = phi;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      // one-sided differences, copied at the walls
      double pm, pp, qm, qp;
      if (i > 0 && i < n) {
        pm = (phi.at(i, j) - phi.at(i - 1, j)) / h;
        pp = (phi.at(i + 1, j) - phi.at(i, j)) / h;
      } else if (i == 0) {
        pp = pm = (phi.at(1, j) - phi.at(0, j)) / h;
      } else {
        pm = pp = (phi.at(n, j) - phi.at(n - 1, j)) / h;
      }
      if (j > 0 && j < n) {
        qm = (phi.at(i, j) - phi.at(i, j - 1)) / h;
        qp = (phi.at(i, j + 1) - phi.at(i, j)) / h;
      } else if (j == 0) {
        qp = qm = (phi.at(i, 1) - phi.at(i, 0)) / h;
      } else {
        qm = qp = (phi.at(i, n) - phi.at(i, n - 1)) / h;
      }

      // local Lax-Friedrichs dissipation over the node neighborhood
      double ax = std::abs(vel(i, j).x());
      double ay = std::abs(vel(i, j).y());
      if (i > 0) ax = std::max(ax, std::abs(vel(i - 1, j).x()));
      if (i < n) ax = std::max(ax, std::abs(vel(i + 1, j).x()));
      if (j > 0) ay = std::max(ay, std::abs(vel(i, j - 1).y()));
      if (j < n) ay = std::max(ay, std::abs(vel(i, j + 1).y()));

      const double hamiltonian = vel(i, j).x() * 0.5 * (pm + pp) +
                                 vel(i, j).y() * 0.5 * (qm + qp) -
                                 0.5 * ax * (pp - pm) - 0.5 * ay * (qp - qm);
      out.at(i, j) = phi.at(i, j) - dt * hamiltonian;
    }
  }
  return out;
}

LevelSetField reinitialize(const LevelSetField& phi) {
  check_field(phi);
  const int n = phi.n;
  const double h = 1.0 / n;
  const int np1 = n + 1;

  std::vector<int> sign(np1 * np1);
  for (int k = 0; k < np1 * np1; ++k) sign[k] = phi.phi[k] < 0.0 ? -1 : 1;

  auto sgn = [&](int i, int j) { return sign[j * np1 + i]; };

  std::vector<double> dist(np1 * np1, kInf);
  std::vector<char> frozen(np1 * np1, 0);
  bool any_interface = false;

  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const double p = phi.at(i, j);
      double axis = kInf;
      auto crossing = [&](int ii, int jj) {
        if (sgn(ii, jj) != sgn(i, j)) {
          const double q = phi.at(ii, jj);
          const double denom = std::abs(p) + std::abs(q);
          axis = std::min(axis, denom > 0.0 ? h * std::abs(p) / denom : 0.0);
        }
      };
      if (i > 0) crossing(i - 1, j);
      if (i < n) crossing(i + 1, j);
      if (j > 0) crossing(i, j - 1);
      if (j < n) crossing(i, j + 1);
      if (axis == kInf) continue;

      // subcell distance |phi| / |grad phi| with a central estimate, capped
      // by the axis crossings so it never overshoots past the interface
      const double gx = (i == 0)   ? (phi.at(1, j) - phi.at(0, j)) / h
                        : (i == n) ? (phi.at(n, j) - phi.at(n - 1, j)) / h
                                   : (phi.at(i + 1, j) - phi.at(i - 1, j)) / (2. * h);
      const double gy = (j == 0)   ? (phi.at(i, 1) - phi.at(i, 0)) / h
                        : (j == n) ? (phi.at(i, n) - phi.at(i, n - 1)) / h
                                   : (phi.at(i, j + 1) - phi.at(i, j - 1)) / (2. * h);
      const double gn = std::hypot(gx, gy);
      double d = axis;
      if (gn > 1e-12) d = std::min(d, std::abs(p) / gn);
      dist[j * np1 + i] = d;
      frozen[j * np1 + i] = 1;
      any_interface = true;
    }
  }
  if (!any_interface) return phi;

  auto update = [&](int i, int j) {
    if (frozen[j * np1 + i]) return;
    double a = kInf, b = kInf;
    if (i > 0) a = std::min(a, dist[j * np1 + i - 1]);
    if (i < n) a = std::min(a, dist[j * np1 + i + 1]);
    if (j > 0) b = std::min(b, dist[(j - 1) * np1 + i]);
    if (j < n) b = std::min(b, dist[(j + 1) * np1 + i]);
    if (a == kInf && b == kInf) return;
    if (a > b) std::swap(a, b);
    const double d = (b - a >= h || b == kInf)
                         ? a + h
                         : 0.5 * (a + b + std::sqrt(2.0 * h * h - (b - a) * (b - a)));
    double& cur = dist[j * np1 + i];
    cur = std::min(cur, d);
  };

  for (int round = 0; round < 3; ++round) {
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) update(i, j);
    for (int j = 0; j <= n; ++j)
      for (int i = n; i >= 0; --i) update(i, j);
    for (int j = n; j >= 0; --j)
      for (int i = 0; i <= n; ++i) update(i, j);
    for (int j = n; j >= 0; --j)
      for (int i = n; i >= 0; --i) update(i, j);
  }

  LevelSetField out;
  out.n = n;
  out.phi.resize(np1 * np1);
  for (int k = 0; k < np1 * np1; ++k) out.phi[k] = sign[k] * dist[k];
  return out;
}

double reinit_quality(const LevelSetField& phi) {
  check_field(phi);
  const int n = phi.n;
  const double h = 1.0 / n;
  int near = 0, good = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double p00 = phi.at(i, j), p10 = phi.at(i + 1, j);
      const double p11 = phi.at(i + 1, j + 1), p01 = phi.at(i, j + 1);
      const double amin = std::min({std::abs(p00), std::abs(p10), std::abs(p11),
                                    std::abs(p01)});
      if (amin > 2.0 * h) continue;
      ++near;
      const double gx = 0.5 * ((p10 - p00) + (p11 - p01)) / h;
      const double gy = 0.5 * ((p01 - p00) + (p11 - p10)) / h;
      const double g = std::hypot(gx, gy);
      if (g >= 0.5 && g <= 1.5) ++good;
    }
  return near == 0 ? 1.0 : static_cast<double>(good) / near;
}

namespace {

struct Segment {
  Vec2 a, b;
};

using PointKey = std::pair<std::int64_t, std::int64_t>;

PointKey quantize(const Vec2& p) {
  const double scale = 1099511627776.0;  // 2^40
  return {std::llround(p.x() * scale), std::llround(p.y() * scale)};
}

// crossing of the zero level on the edge between canonical points (ida < idb)
Vec2 edge_crossing(int ida, const Vec2& pa, double va, int idb, const Vec2& pb,
                   double vb) {
  if (ida > idb) return edge_crossing(idb, pb, vb, ida, pa, va);
  const double t = va / (va - vb);
  return pa + t * (pb - pa);
}

}  // namespace

std::vector<Polyline> zero_contour(const LevelSetField& phi) {
  check_field(phi);
  const int n = phi.n;
  const double h = 1.0 / n;
  const int np1 = n + 1;
  const int ncorner = np1 * np1;

  std::vector<Segment> segments;
  for (int cj = 0; cj < n; ++cj) {
    for (int ci = 0; ci < n; ++ci) {
      const int id[5] = {cj * np1 + ci, cj * np1 + ci + 1, (cj + 1) * np1 + ci + 1,
                         (cj + 1) * np1 + ci, ncorner + cj * n + ci};
      const Vec2 pt[5] = {Vec2(ci * h, cj * h), Vec2((ci + 1) * h, cj * h),
                          Vec2((ci + 1) * h, (cj + 1) * h), Vec2(ci * h, (cj + 1) * h),
                          Vec2((ci + 0.5) * h, (cj + 0.5) * h)};
      const double val[5] = {phi.at(ci, cj), phi.at(ci + 1, cj), phi.at(ci + 1, cj + 1),
                             phi.at(ci, cj + 1), cell_center_value(phi, ci, cj)};
      // four subtriangles (corner, corner, center): no ambiguous cases
      const int tris[4][3] = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
      for (const auto& tri : tris) {
        const bool neg[3] = {val[tri[0]] < 0.0, val[tri[1]] < 0.0, val[tri[2]] < 0.0};
        const int inside = neg[0] + neg[1] + neg[2];
        if (inside == 0 || inside == 3) continue;
        // the vertex whose sign differs from the other two
        int lone = 0;
        if (neg[1] != neg[0] && neg[1] != neg[2]) lone = 1;
        else if (neg[2] != neg[0] && neg[2] != neg[1]) lone = 2;
        const int o1 = (lone + 1) % 3, o2 = (lone + 2) % 3;
        const Vec2 c1 = edge_crossing(id[tri[lone]], pt[tri[lone]], val[tri[lone]],
                                      id[tri[o1]], pt[tri[o1]], val[tri[o1]]);
        const Vec2 c2 = edge_crossing(id[tri[lone]], pt[tri[lone]], val[tri[lone]],
                                      id[tri[o2]], pt[tri[o2]], val[tri[o2]]);
        if (quantize(c1) != quantize(c2)) segments.push_back({c1, c2});
      }
    }
  }

  // chain segments at shared endpoints
  std::map<PointKey, std::vector<int>> at_point;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    at_point[quantize(segments[s].a)].push_back(static_cast<int>(s));
    at_point[quantize(segments[s].b)].push_back(static_cast<int>(s));
  }
  std::vector<char> used(segments.size(), 0);
  std::vector<Polyline> polylines;

  auto next_at = [&](const PointKey& key, int except) {
    auto it = at_point.find(key);
    if (it == at_point.end()) return -1;
    for (int s : it->second)
      if (!used[s] && s != except) return s;
    return -1;
  };

  for (std::size_t s0 = 0; s0 < segments.size(); ++s0) {
    if (used[s0]) continue;
    used[s0] = 1;
    std::vector<Vec2> chain = {segments[s0].a, segments[s0].b};
    // extend forward
    for (;;) {
      const int s = next_at(quantize(chain.back()), -1);
      if (s < 0) break;
      used[s] = 1;
      chain.push_back(quantize(segments[s].a) == quantize(chain.back()) ? segments[s].b
                                                                        : segments[s].a);
    }
    bool closed = quantize(chain.front()) == quantize(chain.back());
    if (!closed) {
      // extend backward
      for (;;) {
        const int s = next_at(quantize(chain.front()), -1);
        if (s < 0) break;
        used[s] = 1;
        chain.insert(chain.begin(), quantize(segments[s].a) == quantize(chain.front())
                                        ? segments[s].b
                                        : segments[s].a);
      }
      closed = chain.size() > 2 && quantize(chain.front()) == quantize(chain.back());
    }
    Polyline p;
    p.points = std::move(chain);
    p.closed = closed;
    polylines.push_back(std::move(p));
  }
  return polylines;
}

DescentResult levelset_reconstruct(const LevelSetField& phi0, const CrossedMesh& mesh,
                                   const MeasurementSet& meas, const DescentOptions& opts,
                                   const Sigma1Update& update_sigma1) {
  check_field(phi0);
  if (phi0.n != mesh.n) throw Error("level set does not match the mesh");
  if (!(opts.sigma0 > 0.0) || !(opts.sigma1 > opts.sigma0))
    throw Error("need 0 < sigma0 < sigma1");
  if (!(opts.shrink > 0.0) || opts.shrink >= 1.0)
    throw Error("shrink factor must lie in (0, 1)");
  if (!(opts.dt_min > 0.0)) throw Error("dt_min must be positive");
  if (opts.max_iter < 1) throw Error("max_iter must be positive");
  if (opts.stop_window < 1) throw Error("stop window must be positive");

  // The Dirichlet data are re-based onto this mesh's own background response:
  // the measured inclusion-induced change f - f0 rides on the model
  // background, so the misfit compares changes rather than absolute voltages.
  // On matched meshes this is the identity; on split meshes it removes the
  // cross-mesh quadrature offset, which otherwise exceeds the shape signal.
  MeasurementSet calibrated = meas;
  {
    NeumannSolver background(mesh, uniform_conductivity(mesh, opts.sigma0));
    for (auto& pair : calibrated.pairs) {
      if (pair.f0.values.empty()) continue;  // no reference, nothing to re-base
      const BoundaryFunction model = trace(mesh, background.solve(pair.g));
      for (std::size_t i = 0; i < pair.f.values.size(); ++i)
        pair.f.values[i] += model.values[i] - pair.f0.values[i];
      pair.f0 = model;
    }
  }

  VelocitySmoother smoother(mesh);
  DescentResult result;
  result.phi = phi0;
  double sigma1 = opts.sigma1;
  KvSolution sol =
      kv_solve(mesh, conductivity_from_levelset(mesh, result.phi, opts.sigma0, sigma1),
               calibrated);
  std::vector<double> j_history = {sol.objective};

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    const std::vector<double> load = shape_derivative_load(mesh, sol, opts.formula);
    const VelocityField velocity = smoother.smooth(load);
    const double vmax = velocity.max_abs();
    if (!(vmax > 0.0)) {
      if (iter == 1)
        throw Error("stationary initialization: the shape gradient vanishes");
      result.stop_reason = "stationary velocity";
      break;
    }

    const bool reinit_now =
        opts.reinit_every > 0 && iter % opts.reinit_every == 0;
    double dt = 0.5 * mesh.h / vmax;
    int rejects = 0;
    bool accepted = false;
    LevelSetField candidate;
    KvSolution cand_sol;
    while (dt >= opts.dt_min) {
      candidate = transport_levelset(result.phi, velocity, dt, mesh.h);
      if (reinit_now) candidate = reinitialize(candidate);
      cand_sol = kv_solve(
          mesh, conductivity_from_levelset(mesh, candidate, opts.sigma0, sigma1),
          calibrated);
      if (cand_sol.objective < sol.objective) {
        accepted = true;
        break;
      }
      dt *= opts.shrink;
      ++rejects;
    }
    if (!accepted) {
      if (iter == 1)
        throw Error("stationary initialization: no descending step above dt_min");
      result.stop_reason = "line search exhausted";
      break;
    }

    DescentRecord rec;
    rec.iter = iter;
    rec.j_before = sol.objective;
    rec.j_after = cand_sol.objective;
    rec.dt = dt;
    rec.rejects = rejects;
    rec.sigma1 = sigma1;
    result.records.push_back(rec);

    result.phi = std::move(candidate);
    sol = std::move(cand_sol);

    if (update_sigma1) {
      const double refined = update_sigma1(iter, result.phi, sigma1);
      if (refined != sigma1) {
        sigma1 = refined;
        sol = kv_solve(
            mesh, conductivity_from_levelset(mesh, result.phi, opts.sigma0, sigma1),
            calibrated);
      }
    }

    j_history.push_back(sol.objective);
    const int k = static_cast<int>(j_history.size()) - 1;
    if (k >= opts.stop_window) {
      const double before = j_history[k - opts.stop_window];
      if (before - j_history[k] < opts.stop_tol * std::max(before, 1e-300)) {
        result.stop_reason = "converged";
        break;
      }
    }
    if (iter == opts.max_iter) result.hit_max_iter = true;
  }

  if (result.stop_reason.empty() && result.hit_max_iter)
    result.stop_reason = "max iterations";
  result.sigma1 = sigma1;
  result.objective = sol.objective;
  return result;
}

}  // namespace eit
