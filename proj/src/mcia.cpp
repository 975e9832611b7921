#include "tiox/mcia.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numbers>
#include <thread>
#include <tuple>

#include "tiox/error.hpp"

namespace tiox::mcia {

using crystal::MeshBasis;
using crystal::SurfaceMesh;
using crystal::Vec2;

void MciaConfig::validate() const {
  require(std::isfinite(max_area) && max_area > 0.0, ErrorKind::InvalidArgument,
          "mcia: max_area must be > 0");
  require(max_linear_strain > 0.0 && max_linear_strain < 0.5, ErrorKind::InvalidArgument,
          "mcia: max_linear_strain must lie in (0, 0.5)");
  require(max_index >= 1, ErrorKind::InvalidArgument, "mcia: max_index must be >= 1");
}

std::vector<IntMatrix2> enumerate_sublattices(long n) {
  require(n >= 1, ErrorKind::InvalidArgument, "enumerate_sublattices: n must be >= 1");
  std::vector<IntMatrix2> out;
  for (long a = 1; a <= n; ++a) {
    if (n % a != 0) continue;
    const long d = n / a;
    for (long b = 0; b < d; ++b) out.push_back(IntMatrix2{{a, b, 0, d}});
  }
  return out;
}

std::vector<IntMatrix2> enumerate_sublattices(const SurfaceMesh& /*mesh*/, long n) {
  return enumerate_sublattices(n);
}

namespace {

Eigen::Vector2d singular_values(const Eigen::Matrix2d& t) {
  // closed form for 2x2: sigma = sqrt of eigenvalues of T^T T
  const Eigen::Matrix2d g = t.transpose() * t;
  const double tr = g.trace();
  const double disc = std::hypot(0.5 * (g(0, 0) - g(1, 1)), g(0, 1));
  const double l1 = 0.5 * tr + disc;
  const double l2 = std::max(0.0, 0.5 * tr - disc);
  return {std::sqrt(l1), std::sqrt(l2)};
}

Eigen::Matrix2d as_columns(const Vec2& a, const Vec2& b) {
  Eigen::Matrix2d m;
  m.col(0) = a;
  m.col(1) = b;
  return m;
}

MeshBasis supercell(const MeshBasis& mesh, const IntMatrix2& h) {
  const Vec2 s1 = static_cast<double>(h(0, 0)) * mesh.u + static_cast<double>(h(0, 1)) * mesh.v;
  const Vec2 s2 = static_cast<double>(h(1, 0)) * mesh.u + static_cast<double>(h(1, 1)) * mesh.v;
  return crystal::reduce_mesh(s1, s2);
}

// Positively oriented bases built from short vectors of a reduced basis.
// Covers every reduced basis of the lattice, including the ambiguous
// square/hexagonal cases.
std::vector<Eigen::Matrix2d> basis_variants(const MeshBasis& b) {
  const std::array<Vec2, 8> pool = {b.u, -b.u, b.v, -b.v, b.u + b.v, -(b.u + b.v), b.u - b.v,
                                    b.v - b.u};
  const double area = b.area();
  std::vector<Eigen::Matrix2d> out;
  for (const Vec2& x : pool) {
    for (const Vec2& y : pool) {
      const double cross = x.x() * y.y() - x.y() * y.x();
      if (std::abs(cross - area) <= 1e-9 * area) out.push_back(as_columns(x, y));
    }
  }
  return out;
}

struct Candidate {
  double misfit;
  IntMatrix2 sub;
  IntMatrix2 film;
  Eigen::Matrix2d deformation;
};

bool better(const Candidate& a, const Candidate& b) {
  return std::tie(a.misfit, a.sub, a.film) < std::tie(b.misfit, b.sub, b.film);
}

struct FilmCell {
  IntMatrix2 hnf;
  std::vector<Eigen::Matrix2d> inverses;
};

std::optional<Candidate> best_for_substrate_cell(const IntMatrix2& hs, const MeshBasis& sub_cell,
                                                 const std::vector<const FilmCell*>& films,
                                                 const MciaConfig& cfg) {
  const Eigen::Matrix2d s = as_columns(sub_cell.u, sub_cell.v);
  std::optional<Candidate> best;
  for (const FilmCell* fc : films) {
    for (const Eigen::Matrix2d& finv : fc->inverses) {
      const Eigen::Matrix2d t = s * finv;
      const double m = misfit_of(t, cfg.metric);
      if (m > cfg.max_linear_strain) continue;
      Candidate c{m, hs, fc->hnf, t};
      if (!best || better(c, *best)) best = c;
    }
  }
  return best;
}

Match to_match(const Candidate& c, double area) {
  // polar decomposition T = R U, U = V diag(sigma) V^T
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(c.deformation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix2d v = svd.matrixV();
  const Eigen::Matrix2d stretch = v * svd.singularValues().asDiagonal() * v.transpose();
  const Eigen::Matrix2d rot = c.deformation * stretch.inverse();
  Match m;
  m.m_sub = c.sub;
  m.m_film = c.film;
  m.strain = stretch;
  m.rotation_deg = std::atan2(rot(1, 0), rot(0, 0)) * 180.0 / std::numbers::pi;
  if (std::abs(m.rotation_deg) < 1e-9) m.rotation_deg = 0.0;
  m.area = area;
  m.misfit = c.misfit;
  return m;
}

}  // namespace

double misfit_of(const Eigen::Matrix2d& deformation, MisfitMetric metric) {
  const Eigen::Vector2d sv = singular_values(deformation);
  double m = std::max(std::abs(sv[0] - 1.0), std::abs(sv[1] - 1.0));
  if (metric == MisfitMetric::Symmetric && sv[1] > 0.0) {
    m = std::max({m, std::abs(1.0 / sv[0] - 1.0), std::abs(1.0 / sv[1] - 1.0)});
  }
  return m;
}

std::optional<Match> try_find_mcia(const SurfaceMesh& substrate, const SurfaceMesh& film,
                                   const MciaConfig& cfg) {
  cfg.validate();
  const double sub_area = substrate.area();
  const double film_area = film.area();
  require(sub_area > 0.0 && film_area > 0.0, ErrorKind::InvalidArgument,
          "mcia: mesh areas must be positive");

  const double e = cfg.max_linear_strain;
  double lo = 1.0 - e;
  double hi = 1.0 + e;
  if (cfg.metric == MisfitMetric::Symmetric) {
    lo = std::max(lo, 1.0 / (1.0 + e));
    hi = std::min(hi, 1.0 / (1.0 - e));
  }

  std::map<long, std::vector<FilmCell>> film_cache;
  auto film_cells = [&](long n) -> const std::vector<FilmCell>& {
    auto it = film_cache.find(n);
    if (it != film_cache.end()) return it->second;
    std::vector<FilmCell> cells;
    for (const IntMatrix2& h : enumerate_sublattices(n)) {
      FilmCell fc{h, {}};
      for (const Eigen::Matrix2d& b : basis_variants(supercell(film.basis, h))) {
        fc.inverses.push_back(b.inverse());
      }
      cells.push_back(std::move(fc));
    }
    return film_cache.emplace(n, std::move(cells)).first->second;
  };

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                      : cfg.threads;

  const double area_slack = 1e-9 * cfg.max_area;
  for (long ns = 1; ns <= cfg.max_index && ns * sub_area <= cfg.max_area + area_slack; ++ns) {
    const double area = static_cast<double>(ns) * sub_area;
    // det T = area / (nf * film_area) must lie in [lo^2, hi^2]
    const long nf_min = std::max(1L, static_cast<long>(std::ceil(area / (hi * hi * film_area) - 1e-9)));
    const long nf_max = std::min(cfg.max_index,
                                 static_cast<long>(std::floor(area / (lo * lo * film_area) + 1e-9)));
    if (nf_min > nf_max) continue;

    std::vector<const FilmCell*> films;
    for (long nf = nf_min; nf <= nf_max; ++nf) {
      for (const FilmCell& fc : film_cells(nf)) films.push_back(&fc);
    }
    const std::vector<IntMatrix2> subs = enumerate_sublattices(ns);

    std::optional<Candidate> best;
    auto merge = [&best](const std::optional<Candidate>& c) {
      if (c && (!best || better(*c, *best))) best = c;
    };
    if (threads <= 1 || subs.size() < 2) {
      for (const IntMatrix2& hs : subs) {
        merge(best_for_substrate_cell(hs, supercell(substrate.basis, hs), films, cfg));
      }
    } else {
      const std::size_t workers = std::min<std::size_t>(threads, subs.size());
      std::vector<std::future<std::optional<Candidate>>> jobs;
      for (std::size_t w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w] {
          std::optional<Candidate> local;
          for (std::size_t i = w; i < subs.size(); i += workers) {
            auto c = best_for_substrate_cell(subs[i], supercell(substrate.basis, subs[i]), films, cfg);
            if (c && (!local || better(*c, *local))) local = c;
          }
          return local;
        }));
      }
      for (auto& j : jobs) merge(j.get());
    }
    if (best) return to_match(*best, area);
  }
  return std::nullopt;
}

Match find_mcia(const SurfaceMesh& substrate, const SurfaceMesh& film, const MciaConfig& cfg) {
  auto m = try_find_mcia(substrate, film, cfg);
  if (!m) {
    fail(ErrorKind::NoMatch, "no coincidence between " + substrate.lattice.name + "(" +
                                 substrate.plane.label() + ") and " + film.lattice.name + "(" +
                                 film.plane.label() + ") within tolerance");
  }
  return *m;
}

std::vector<MapRow> mcia_map(const std::vector<crystal::BulkLattice>& substrates,
                             const std::vector<FilmSpec>& films, const MciaConfig& cfg,
                             const crystal::MillerIndex& substrate_plane) {
  require(!substrates.empty() && !films.empty(), ErrorKind::InvalidArgument,
          "mcia_map: substrate and film lists must be nonempty");
  std::vector<MapRow> rows;
  for (const auto& sub : substrates) {
    const SurfaceMesh sub_mesh = crystal::surface_mesh(sub, substrate_plane);
    for (const auto& f : films) {
      const std::size_t first = rows.size();
      for (const auto& plane : f.planes) {
        MapRow row{sub.name, f.lattice.name, plane, try_find_mcia(sub_mesh, crystal::surface_mesh(f.lattice, plane), cfg), false};
        rows.push_back(std::move(row));
      }
      std::optional<std::size_t> min_row;
      for (std::size_t i = first; i < rows.size(); ++i) {
        if (!rows[i].match) continue;
        if (!min_row || rows[i].match->area < rows[*min_row].match->area) min_row = i;
      }
      if (min_row) rows[*min_row].minimal = true;
    }
  }
  return rows;
}

}  // namespace tiox::mcia
