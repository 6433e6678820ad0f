#include "eit/ntd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "eit/errors.hpp"
#include "eit/io.hpp"

namespace eit {

namespace {

// Raw member k (1-based) sampled at lattice node (i, j) of an n-grid. Corner
// nodes accumulate the contributions of both incident sides; the sine terms
// vanish there, so corners carry only the cosine parts.
double raw_current_value(int k, int n, int i, int j) {
  const double x = static_cast<double>(i) / n;
  const double y = static_cast<double>(j) / n;
  const double kpi = k * std::numbers::pi;
  double v = 0.0;
  if (i == 0) v += std::sin(kpi * y);
  if (i == n) v -= std::sin(kpi * y);
  if (j == 0) v += std::cos(kpi * x);
  if (j == n) v -= std::cos(kpi * x);
  return v;
}

Eigen::MatrixXd raw_family(const CrossedMesh& mesh, int m) {
  const int nb = static_cast<int>(mesh.boundary_nodes.size());
  Eigen::MatrixXd raw(nb, m);
  for (int c = 0; c < m; ++c)
    for (int b = 0; b < nb; ++b) {
      const int v = mesh.boundary_nodes[b];
      const int i = v % (mesh.n + 1);
      const int j = v / (mesh.n + 1);
      raw(b, c) = raw_current_value(c + 1, mesh.n, i, j);
    }
  return raw;
}

CurrentBasis basis_from_columns(const CrossedMesh& mesh, const Eigen::MatrixXd& cols,
                                const Eigen::MatrixXd& combo, bool orthonormal) {
  CurrentBasis basis;
  basis.n = mesh.n;
  basis.m = static_cast<int>(cols.cols());
  basis.orthonormal = orthonormal;
  basis.combo = combo;
  basis.currents.resize(basis.m);
  for (int c = 0; c < basis.m; ++c) {
    BoundaryFunction g;
    g.n = mesh.n;
    g.role = BoundaryRole::Current;
    g.values.assign(cols.col(c).data(), cols.col(c).data() + cols.rows());
    basis.currents[c] = std::move(g);
  }
  return basis;
}

}  // namespace

CurrentBasis make_current_basis(const CrossedMesh& mesh, int m, bool orthonormalize) {
  if (m < 1) throw Error("current count must be positive");
  const int nb = static_cast<int>(mesh.boundary_nodes.size());
  if (m > nb) throw Error("more currents than boundary nodes");

  Eigen::MatrixXd cols = raw_family(mesh, m);
  Eigen::MatrixXd combo = Eigen::MatrixXd::Identity(m, m);
  if (orthonormalize) {
    // modified Gram-Schmidt in the boundary trapezoid inner product, run
    // twice for orthogonality near machine precision
    const double h = mesh.h;
    for (int c = 0; c < m; ++c) {
      for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < c; ++j) {
          const double r = h * cols.col(c).dot(cols.col(j));
          cols.col(c) -= r * cols.col(j);
          combo.row(c) -= r * combo.row(j);
        }
      }
      const double norm = std::sqrt(h * cols.col(c).squaredNorm());
      if (norm < 1e-12) throw Error("current family is numerically rank deficient");
      cols.col(c) /= norm;
      combo.row(c) /= norm;
    }
  }
  return basis_from_columns(mesh, cols, combo, orthonormalize);
}

CurrentBasis transfer_basis(const CrossedMesh& mesh, const CurrentBasis& basis) {
  const int nb = static_cast<int>(mesh.boundary_nodes.size());
  if (basis.m > nb) throw Error("more currents than boundary nodes");
  const Eigen::MatrixXd raw = raw_family(mesh, static_cast<int>(basis.combo.cols()));
  const Eigen::MatrixXd cols = raw * basis.combo.transpose();
  return basis_from_columns(mesh, cols, basis.combo, basis.orthonormal);
}

std::string provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Exact: return "exact";
    case Provenance::Difference: return "difference";
    case Provenance::Sensitivity: return "sensitivity";
    case Provenance::Noisy: return "noisy";
  }
  throw Error("unknown provenance");
}

Provenance provenance_from_name(const std::string& name) {
  if (name == "exact") return Provenance::Exact;
  if (name == "difference") return Provenance::Difference;
  if (name == "sensitivity") return Provenance::Sensitivity;
  if (name == "noisy") return Provenance::Noisy;
  throw Error("unknown provenance '" + name + "'");
}

NtdMatrix ntd_matrix(const CrossedMesh& mesh, const ConductivityField& sigma,
                     const CurrentBasis& basis) {
  if (basis.n != mesh.n) throw Error("current basis does not match the mesh");
  NeumannSolver solver(mesh, sigma);
  const int m = basis.m;
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i) {
    const PotentialField u = solver.solve(basis.currents[i]);
    const BoundaryFunction tu = trace(mesh, u);
    for (int j = 0; j < m; ++j)
      a(i, j) = boundary_inner_product(mesh, basis.currents[j], tu);
  }
  NtdMatrix out;
  out.mat = 0.5 * (a + a.transpose());
  out.provenance = Provenance::Exact;
  out.delta = 0.0;
  return out;
}

NtdMatrix ntd_difference(const NtdMatrix& lam_sigma, const NtdMatrix& lam_background) {
  if (lam_sigma.mat.rows() != lam_background.mat.rows())
    throw Error("matrix sizes differ");
  NtdMatrix out;
  out.mat = lam_sigma.mat - lam_background.mat;
  out.provenance = Provenance::Difference;
  out.delta = 0.0;
  return out;
}

RegionIndex rasterize_balls(const CrossedMesh& mesh, const std::vector<Circle>& balls) {
  RegionIndex idx;
  idx.kind = RegionIndex::Kind::Balls;
  idx.balls = balls;
  idx.tris.resize(balls.size());
  idx.centers.reserve(balls.size());
  for (std::size_t k = 0; k < balls.size(); ++k) {
    if (!(balls[k].radius > 0.0)) throw Error("degenerate test ball");
    idx.centers.push_back(balls[k].center);
    for (int t = 0; t < mesh.num_triangles(); ++t)
      if ((mesh.centroid(t) - balls[k].center).norm() < balls[k].radius)
        idx.tris[k].push_back(t);
    if (idx.tris[k].empty()) throw Error("degenerate test ball: no triangles covered");
  }
  return idx;
}

RegionIndex rasterize_pixels(const CrossedMesh& mesh, int np) {
  if (np < 1) throw Error("pixel count must be positive");
  RegionIndex idx;
  idx.kind = RegionIndex::Kind::Pixels;
  idx.np = np;
  idx.tris.resize(static_cast<std::size_t>(np) * np);
  idx.centers.reserve(idx.tris.size());
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < np; ++i)
      idx.centers.push_back(Vec2((i + 0.5) / np, (j + 0.5) / np));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 c = mesh.centroid(t);
    const int i = std::min(static_cast<int>(c.x() * np), np - 1);
    const int j = std::min(static_cast<int>(c.y() * np), np - 1);
    idx.tris[static_cast<std::size_t>(j) * np + i].push_back(t);
  }
  return idx;
}

SensitivityStack sensitivity_stack(const CrossedMesh& mesh, double sigma0,
                                   const CurrentBasis& basis,
                                   const RegionIndex& regions) {
  if (basis.n != mesh.n) throw Error("current basis does not match the mesh");
  if (!(sigma0 > 0.0)) throw Error("conductivity must be strictly positive");

  const int m = basis.m;
  const int ntri = mesh.num_triangles();
  NeumannSolver solver(mesh, uniform_conductivity(mesh, sigma0));
  // per-triangle gradients of all background solutions, cached column-wise
  Eigen::MatrixXd gx(ntri, m), gy(ntri, m);
  for (int c = 0; c < m; ++c) {
    const PotentialField u = solver.solve(basis.currents[c]);
    for (int t = 0; t < ntri; ++t) {
      const Vec2 g = tri_gradient(mesh, u.values, t);
      gx(t, c) = g.x();
      gy(t, c) = g.y();
    }
  }

  SensitivityStack stack;
  stack.m = m;
  stack.sigma0 = sigma0;
  stack.regions = regions;
  stack.matrices.reserve(regions.tris.size());
  for (const auto& tris : regions.tris) {
    if (tris.empty()) throw Error("degenerate region: no triangles covered");
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
    for (int t : tris) {
      const double w = mesh.tri_area[t];
      s.noalias() -= w * (gx.row(t).transpose() * gx.row(t) +
                          gy.row(t).transpose() * gy.row(t));
    }
    stack.matrices.push_back(0.5 * (s + s.transpose()));
  }
  return stack;
}

NtdMatrix sensitivity_matrix(const CrossedMesh& mesh, double sigma0,
                             const CurrentBasis& basis, const std::vector<int>& tris) {
  RegionIndex idx;
  idx.kind = RegionIndex::Kind::Pixels;
  idx.tris.push_back(tris);
  idx.centers.push_back(Vec2(0, 0));
  const SensitivityStack stack = sensitivity_stack(mesh, sigma0, basis, idx);
  NtdMatrix out;
  out.mat = stack.matrices.front();
  out.provenance = Provenance::Sensitivity;
  out.delta = 0.0;
  return out;
}

NtdMatrix add_operator_noise(const NtdMatrix& diff, double delta, std::uint64_t seed) {
  if (delta < 0.0) throw Error("noise level must be nonnegative");
  if (delta == 0.0) return diff;
  const int m = static_cast<int>(diff.mat.rows());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd e(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) e(i, j) = normal(rng);
  Eigen::MatrixXd esym = 0.5 * (e + e.transpose());
  const double norm = esym.norm();
  if (norm == 0.0) throw Error("degenerate noise draw");
  NtdMatrix out;
  out.mat = diff.mat + delta * diff.mat.norm() * esym / norm;
  out.provenance = Provenance::Noisy;
  out.delta = delta;
  return out;
}

BoundaryFunction add_voltage_noise(const BoundaryFunction& f, double eta,
                                   std::uint64_t seed) {
  if (eta < 0.0) throw Error("noise level must be nonnegative");
  if (eta == 0.0) return f;
  double linf = 0.0;
  for (double v : f.values) linf = std::max(linf, std::abs(v));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  BoundaryFunction out = f;
  for (double& v : out.values) v += eta * linf * normal(rng);
  return out;
}

void save_ntd(const std::string& path, const NtdMatrix& m) {
  std::ostringstream os;
  os << "# eit ntd matrix\n";
  os << "m " << m.mat.rows() << "\n";
  os << "delta " << format_double(m.delta) << "\n";
  os << "provenance " << provenance_name(m.provenance) << "\n";
  for (int i = 0; i < m.mat.rows(); ++i) {
    for (int j = 0; j < m.mat.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(m.mat(i, j));
    }
    os << '\n';
  }
  write_text_file(path, os.str());
}

NtdMatrix load_ntd(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("# eit ntd matrix", 0) != 0)
    throw Error("not an ntd matrix file: '" + path + "'");
  std::string key;
  int m = 0;
  NtdMatrix out;
  in >> key >> m;
  if (key != "m" || m < 1) throw Error("bad header in '" + path + "'");
  in >> key >> out.delta;
  if (key != "delta") throw Error("bad header in '" + path + "'");
  std::string prov;
  in >> key >> prov;
  if (key != "provenance") throw Error("bad header in '" + path + "'");
  out.provenance = provenance_from_name(prov);
  out.mat.resize(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (!(in >> out.mat(i, j))) throw Error("truncated matrix in '" + path + "'");
  return out;
}

}  // namespace eit
