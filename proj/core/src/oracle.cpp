#include "polaron/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "polaron/errors.hpp"

namespace polaron {

namespace {

std::size_t pair_index(std::size_t M, std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return 1 + M + i * M - i * (i - 1) / 2 + (j - i);
}

void check_dense_budget(std::size_t n, std::size_t max_bytes, const char* what) {
  double bytes = 8.0 * static_cast<double>(n) * static_cast<double>(n);
  if (bytes > static_cast<double>(max_bytes)) {
    std::ostringstream os;
    os << what << ": dense " << n << " x " << n << " matrix needs " << bytes
       << " bytes, budget " << max_bytes;
    throw ResourceError(os.str());
  }
}

}  // namespace

std::size_t TruncatedHamiltonian::index_of(const FockState& s) const {
  const std::size_t M = measure->size();
  if (s.n == 0) return 0;
  if (s.n == 1) return 1 + static_cast<std::size_t>(s.i);
  return pair_index(M, s.i, s.j);
}

TruncatedHamiltonian build(const ModelParams& params, VecView p, const DiscreteMeasure& measure,
                           int n_max, std::size_t max_states) {
  params.check();
  if (n_max < 1 || n_max > 2) throw InputError("oracle build: n_max must be 1 or 2");
  if (measure.dim != params.dim) throw InputError("oracle build: measure dimension mismatch");
  if (p.size() != static_cast<std::size_t>(params.dim))
    throw InputError("oracle build: p has wrong dimension");
  const std::size_t M = measure.size();
  const double states = 1.0 + M + (n_max == 2 ? 0.5 * M * (M + 1.0) : 0.0);
  if (states > static_cast<double>(max_states)) {
    std::ostringstream os;
    os << "oracle build: " << states << " basis states exceed budget " << max_states;
    throw ResourceError(os.str());
  }
  TruncatedHamiltonian h;
  h.p.assign(p.begin(), p.end());
  h.measure = std::make_shared<const DiscreteMeasure>(measure);
  h.n_max = n_max;
  const std::size_t n = static_cast<std::size_t>(states);
  h.basis.reserve(n);
  h.basis.push_back({0, -1, -1});
  for (std::size_t i = 0; i < M; ++i) h.basis.push_back({1, int(i), -1});
  if (n_max == 2)
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = i; j < M; ++j) h.basis.push_back({2, int(i), int(j)});

  const double amp = params.alpha * std::sqrt(measure.weight);
  const double r2 = std::sqrt(2.0);
  const int d = params.dim;
  auto q = [&](int i) { return measure.point(static_cast<std::size_t>(i)); };
  // c(p - sum of the momenta ; created momentum)
  auto cpl = [&](std::initializer_list<int> present, int created) {
    Vec P(p.begin(), p.end());
    for (int k : present)
      for (int a = 0; a < d; ++a) P[a] -= q(k)[a];
    return params.coupling(P, q(created));
  };

  h.diagonal.resize(n);
  h.rows.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    const FockState& st = h.basis[s];
    std::vector<Vec> qs;
    if (st.n >= 1) qs.emplace_back(q(st.i).begin(), q(st.i).end());
    if (st.n == 2) qs.emplace_back(q(st.j).begin(), q(st.j).end());
    h.diagonal[s] = free_energy(params, p, qs);
    auto& row = h.rows[s];
    if (st.n == 0) {
      for (std::size_t i = 0; i < M; ++i) row.push_back({1 + i, amp * cpl({int(i)}, int(i))});
    } else if (st.n == 1) {
      const int i = st.i;
      row.push_back({0, amp * cpl({i}, i)});
      if (n_max == 2) {
        for (std::size_t j = 0; j < M; ++j) {
          int jj = int(j);
          double v = (jj == i) ? r2 * amp * cpl({i, i}, i) : amp * cpl({i, jj}, jj);
          row.push_back({pair_index(M, i, j), v});
        }
      }
    } else {
      const int i = st.i, j = st.j;
      if (i == j) {
        row.push_back({1 + std::size_t(i), r2 * amp * cpl({i, i}, i)});
      } else {
        // removing q_j leaves e_i; the removed boson is the created one
        row.push_back({1 + std::size_t(i), amp * cpl({i, j}, j)});
        row.push_back({1 + std::size_t(j), amp * cpl({i, j}, i)});
      }
    }
  }
  return h;
}

Eigen::MatrixXd TruncatedHamiltonian::dense(std::size_t max_bytes) const {
  const std::size_t n = dim();
  check_dense_budget(n, max_bytes, "TruncatedHamiltonian::dense");
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t s = 0; s < n; ++s) {
    H(s, s) = diagonal[s];
    for (const Entry& e : rows[s]) H(s, e.col) += e.value;
  }
  return H;
}

double TruncatedHamiltonian::max_asymmetry() const {
  // compare each stored entry against the entry of the transposed row
  double worst = 0.0, scale = 0.0;
  for (double x : diagonal) scale = std::max(scale, std::abs(x));
  std::vector<std::map<std::size_t, double>> lookup(dim());
  for (std::size_t s = 0; s < dim(); ++s)
    for (const Entry& e : rows[s]) {
      lookup[s][e.col] += e.value;
      scale = std::max(scale, std::abs(e.value));
    }
  for (std::size_t s = 0; s < dim(); ++s)
    for (const auto& [c, v] : lookup[s]) {
      auto it = lookup[c].find(s);
      double w = it == lookup[c].end() ? 0.0 : it->second;
      worst = std::max(worst, std::abs(v - w));
    }
  return scale > 0.0 ? worst / scale : 0.0;
}

namespace {

// Orbits of the basis under the reflections of the axes with p_a = 0.
// Reflections permute occupancy states without phases and commute with
// H_p because c and eps are radial, so every character of the group
// spans an invariant block.
struct Orbits {
  int group_order = 1;
  std::vector<std::size_t> rep, size;
  std::vector<std::size_t> orbit;   // per state
  std::vector<unsigned> element;    // per state: g with g(rep) = state
  std::vector<std::vector<unsigned>> stabilizer;
};

Orbits reflection_orbits(const TruncatedHamiltonian& h) {
  const DiscreteMeasure& m = *h.measure;
  const int d = m.dim;
  const std::size_t M = m.size();
  std::vector<int> axes;
  for (int a = 0; a < d; ++a)
    if (h.p[a] == 0.0) axes.push_back(a);
  Orbits o;
  o.group_order = 1 << axes.size();
  const unsigned G = static_cast<unsigned>(o.group_order);
  std::vector<std::vector<int>> perm(G, std::vector<int>(M));
  std::vector<int> idx(d);
  for (unsigned g = 0; g < G; ++g) {
    for (std::size_t i = 0; i < M; ++i) {
      for (int a = 0; a < d; ++a) idx[a] = m.axis_index(i, a);
      for (std::size_t b = 0; b < axes.size(); ++b)
        if (g & (1u << b)) idx[axes[b]] = m.points_per_axis - 1 - idx[axes[b]];
      perm[g][i] = static_cast<int>(m.row_of(idx));
    }
  }
  auto image = [&](unsigned g, std::size_t s) -> std::size_t {
    const FockState& st = h.basis[s];
    if (st.n == 0) return 0;
    if (st.n == 1) return 1 + perm[g][st.i];
    return pair_index(M, perm[g][st.i], perm[g][st.j]);
  };
  const std::size_t n = h.dim();
  constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
  o.orbit.assign(n, unset);
  o.element.assign(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    if (o.orbit[s] != unset) continue;
    const std::size_t id = o.rep.size();
    o.rep.push_back(s);
    o.stabilizer.emplace_back();
    std::size_t count = 0;
    for (unsigned g = 0; g < G; ++g) {
      std::size_t t = image(g, s);
      if (t == s) o.stabilizer.back().push_back(g);
      if (o.orbit[t] == unset) {
        o.orbit[t] = id;
        o.element[t] = g;
        ++count;
      }
    }
    o.size.push_back(count);
  }
  return o;
}

int character(unsigned chi, unsigned g) { return (std::popcount(chi & g) & 1) ? -1 : 1; }

// Block of H for the character chi, in the basis
// |O, chi> = |O|^{-1/2} sum_{t in O} chi(g_t) |t>.
Eigen::MatrixXd sector_block(const TruncatedHamiltonian& h, const Orbits& o, unsigned chi,
                             std::size_t max_bytes) {
  std::vector<std::size_t> local(o.rep.size(), std::numeric_limits<std::size_t>::max());
  std::size_t R = 0;
  for (std::size_t k = 0; k < o.rep.size(); ++k) {
    bool allowed = true;
    for (unsigned g : o.stabilizer[k])
      if (character(chi, g) != 1) allowed = false;
    if (allowed) local[k] = R++;
  }
  check_dense_budget(R, max_bytes, "oracle sector");
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(R, R);
  for (std::size_t k = 0; k < o.rep.size(); ++k) {
    const std::size_t a = local[k];
    if (a == std::numeric_limits<std::size_t>::max()) continue;
    const std::size_t s0 = o.rep[k];
    S(a, a) += h.diagonal[s0];
    for (const auto& e : h.rows[s0]) {
      const std::size_t ob = o.orbit[e.col];
      const std::size_t b = local[ob];
      if (b == std::numeric_limits<std::size_t>::max()) continue;
      S(a, b) += character(chi, o.element[e.col]) * e.value *
                 std::sqrt(double(o.size[k]) / double(o.size[ob]));
    }
  }
  return S;
}

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& S, const char* what) {
  if (S.rows() == 0) return {};
  // the solver rescales its input, which would cost the free spectrum its exactness
  if (S.isDiagonal(0.0)) {
    Eigen::VectorXd d = S.diagonal();
    std::sort(d.data(), d.data() + d.size());
    return d;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError(std::string(what) + ": eigensolver did not converge");
  return es.eigenvalues();
}

}  // namespace

std::vector<double> low_spectrum(const TruncatedHamiltonian& h, std::size_t k,
                                 std::size_t max_bytes) {
  if (k > h.dim()) throw InputError("low_spectrum: k exceeds the matrix dimension");
  Orbits o = reflection_orbits(h);
  std::vector<double> all;
  all.reserve(h.dim());
  for (unsigned chi = 0; chi < static_cast<unsigned>(o.group_order); ++chi) {
    Eigen::VectorXd ev = eigenvalues(sector_block(h, o, chi, max_bytes), "low_spectrum");
    all.insert(all.end(), ev.data(), ev.data() + ev.size());
  }
  if (all.size() != h.dim()) throw NumericError("low_spectrum: sector dimensions do not add up");
  std::sort(all.begin(), all.end());
  all.resize(k);
  return all;
}

GroundEnergy ground_energy(const TruncatedHamiltonian& h, std::size_t max_bytes) {
  bool nonneg = true;
  for (const auto& row : h.rows)
    for (const auto& e : row)
      if (e.value < 0.0) nonneg = false;
  Orbits o = reflection_orbits(h);
  GroundEnergy ge;
  ge.group_order = o.group_order;
  ge.reduced = o.group_order > 1;
  // H only links n to n +- 1 bosons; with nonnegative entries the sign flip
  // (-1)^n makes it Perron-Frobenius, and the ground state is symmetric
  const unsigned last = nonneg ? 1u : static_cast<unsigned>(o.group_order);
  ge.value = std::numeric_limits<double>::infinity();
  for (unsigned chi = 0; chi < last; ++chi) {
    Eigen::MatrixXd S = sector_block(h, o, chi, max_bytes);
    Eigen::VectorXd ev = eigenvalues(S, "ground_energy");
    if (ev.size() && ev[0] < ge.value) {
      ge.value = ev[0];
      if (chi == 0) ge.sector_dim = S.rows();
    }
  }
  if (!nonneg) ge.sector_dim = 0;
  return ge;
}

void write_matrix_dump(const TruncatedHamiltonian& h, const std::string& path,
                       std::size_t max_bytes) {
  Eigen::MatrixXd H = h.dense(max_bytes);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("write_matrix_dump: cannot open " + path);
  auto put64 = [&](std::uint64_t v) {
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
    out.write(reinterpret_cast<const char*>(b), 8);
  };
  put64(H.rows());
  put64(H.cols());
  static_assert(std::endian::native == std::endian::little, "dump assumes a little-endian host");
  for (Eigen::Index i = 0; i < H.rows(); ++i)
    for (Eigen::Index j = 0; j < H.cols(); ++j) {
      double v = H(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  if (!out) throw InputError("write_matrix_dump: write failed for " + path);
}

Eigen::MatrixXd read_matrix_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("read_matrix_dump: cannot open " + path);
  auto get64 = [&]() {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(b[k]) << (8 * k);
    return v;
  };
  std::uint64_t r = get64(), c = get64();
  Eigen::MatrixXd H(r, c);
  for (std::uint64_t i = 0; i < r; ++i)
    for (std::uint64_t j = 0; j < c; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      H(i, j) = v;
    }
  if (!in) throw InputError("read_matrix_dump: truncated file " + path);
  return H;
}

std::vector<double> GroundComparison::reduction_factors() const {
  std::vector<double> f;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k)
    f.push_back(rows[k].difference / rows[k + 1].difference);
  return f;
}

GroundComparison compare_ground(const ModelParams& params, VecView p, const DiscreteMeasure& measure,
                                const KappaRule& rule, const std::vector<double>& alphas,
                                BranchOptions opts) {
  GroundComparison gc;
  QuadratureSpec quad = QuadratureSpec::on_measure(measure);
  for (double a : alphas) {
    ModelParams pa = params.with_alpha(a);
    GroundComparisonRow row;
    row.alpha = a;
    TruncatedHamiltonian h = build(pa, p, measure, 2);
    GroundEnergy ge = ground_energy(h);
    row.oracle = ge.value;
    row.sector_dim = ge.sector_dim;
    BranchSolver bs(pa, quad, opts);
    Cap c = bs.cap(p, rule);
    row.kappa = c.kappa;
    row.lambda2 = c.lambda2.value;
    GroundState gs = bs.ground_state(p, c.kappa);
    row.status = gs.point.status;
    row.solver = gs.point.xi;
    row.difference = std::abs(row.oracle - row.solver);
    row.ratio = row.difference / std::pow(a, 4);
    gc.rows.push_back(row);
  }
  return gc;
}

DispersionComparison compare_dispersion(const ModelParams& params, VecView p,
                                        const DiscreteMeasure& measure, double kappa,
                                        std::size_t q_index, int n_max, BranchOptions opts) {
  if (q_index >= measure.size()) throw InputError("compare_dispersion: q index out of range");
  DispersionComparison dc;
  QuadratureSpec quad = QuadratureSpec::on_measure(measure);
  BranchSolver bs(params, quad, opts);
  BranchPoint bp = bs.dispersion_point(p, measure.point(q_index), kappa);
  dc.status = bp.status;
  if (bp.status == BranchStatus::none) return dc;
  dc.xi = bp.xi;
  double l1 = bs.lambda1(p, kappa).value;
  dc.window_lo = l1 - (kappa - l1);
  dc.window_hi = kappa;
  TruncatedHamiltonian h = build(params, p, measure, n_max);
  std::vector<double> ev = low_spectrum(h, h.dim());
  double best = std::numeric_limits<double>::infinity();
  for (double e : ev) {
    if (e < dc.window_lo || e > dc.window_hi) continue;
    ++dc.occupancy;
    if (std::abs(e - dc.xi) < std::abs(best - dc.xi)) best = e;
  }
  dc.matched = std::isfinite(best);
  dc.nearest = best;
  dc.gap = dc.matched ? std::abs(best - dc.xi) : std::numeric_limits<double>::infinity();
  return dc;
}

}  // namespace polaron
