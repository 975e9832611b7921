#pragma once

// Minimal coincident interface area (MCIA) between two surface meshes.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tiox/crystal.hpp"

namespace tiox::mcia {

// 2x2 integer supercell matrix. Rows are the supercell vectors in the
// parent mesh basis: s1 = m00*u + m01*v, s2 = m10*u + m11*v.
struct IntMatrix2 {
  std::array<long, 4> m{1, 0, 0, 1};  // row-major

  long operator()(int r, int c) const { return m[static_cast<std::size_t>(2 * r + c)]; }
  long det() const { return m[0] * m[3] - m[1] * m[2]; }

  friend bool operator==(const IntMatrix2&, const IntMatrix2&) = default;
  friend auto operator<=>(const IntMatrix2&, const IntMatrix2&) = default;
};

// Misfit of a deformation: max |singular value - 1|.
enum class MisfitMetric {
  PrincipalStrain,  // singular values of film -> substrate map
  Symmetric,        // max over the map and its inverse
};

struct MciaConfig {
  double max_area = 1000.0;          // Å^2
  double max_linear_strain = 0.012;  // calibrated, see README
  long max_index = 40;               // cap on det of either supercell
  MisfitMetric metric = MisfitMetric::PrincipalStrain;
  unsigned threads = 1;              // 0 = hardware concurrency

  void validate() const;
};

struct Match {
  IntMatrix2 m_sub;       // supercell in substrate mesh basis (HNF)
  IntMatrix2 m_film;      // supercell in film mesh basis (HNF)
  double rotation_deg = 0.0;
  Eigen::Matrix2d strain;  // symmetric stretch U of the polar decomposition T = R U
  double area = 0.0;       // Å^2, det(m_sub) * substrate mesh area
  double misfit = 0.0;

  long n_sub() const { return m_sub.det(); }
  long n_film() const { return m_film.det(); }
};

// All index-n sublattices as HNF matrices [[a, b], [0, d]], ad = n, 0 <= b < d,
// ordered lexicographically. Count equals sigma(n). Throws for n <= 0.
std::vector<IntMatrix2> enumerate_sublattices(long n);

// Overload matching the mesh-bound form of the operation; the mesh does not
// affect the HNF set.
std::vector<IntMatrix2> enumerate_sublattices(const crystal::SurfaceMesh& mesh, long n);

// Misfit of the linear map taking the film basis columns onto the substrate
// basis columns.
double misfit_of(const Eigen::Matrix2d& deformation, MisfitMetric metric);

// Smallest-area coincidence within tolerance. Throws NoMatch when nothing
// fits under max_area / max_index.
Match find_mcia(const crystal::SurfaceMesh& substrate, const crystal::SurfaceMesh& film,
                const MciaConfig& cfg = {});

// Same search, returning nullopt instead of throwing NoMatch.
std::optional<Match> try_find_mcia(const crystal::SurfaceMesh& substrate,
                                   const crystal::SurfaceMesh& film, const MciaConfig& cfg = {});

struct FilmSpec {
  crystal::BulkLattice lattice;
  std::vector<crystal::MillerIndex> planes;
};

struct MapRow {
  std::string substrate;
  std::string film;
  crystal::MillerIndex plane{0, 0, 1};
  std::optional<Match> match;  // empty: NoMatch
  bool minimal = false;        // smallest area for this (substrate, film)
};

// One row per (substrate, film, plane). Substrates are taken on (100).
std::vector<MapRow> mcia_map(const std::vector<crystal::BulkLattice>& substrates,
                             const std::vector<FilmSpec>& films, const MciaConfig& cfg = {},
                             const crystal::MillerIndex& substrate_plane = {1, 0, 0});

}  // namespace tiox::mcia
