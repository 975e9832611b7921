#pragma once

// Crystal translation lattices and their 2-D periodicity on (hkl) planes.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace tiox::crystal {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

enum class LatticeSystem {
  CubicFcc,         // zincblende GaAs, GaSb
  CubicDiamondFcc,  // diamond Si; same translation lattice as CubicFcc
  TetragonalP,      // rutile
  TetragonalI,      // anatase
};

std::string_view to_string(LatticeSystem s);
LatticeSystem parse_system(std::string_view text);

struct BulkLattice {
  std::string name;
  LatticeSystem system = LatticeSystem::CubicFcc;
  double a = 0.0;  // Å
  double c = 0.0;  // Å; equals a for cubic systems

  // Throws InvalidArgument on non-positive constants or a cubic lattice with c != a.
  void validate() const;

  bool is_cubic() const {
    return system == LatticeSystem::CubicFcc || system == LatticeSystem::CubicDiamondFcc;
  }

  // Primitive translations as rows, Cartesian Å, conventional axes.
  std::array<Vec3, 3> primitive_vectors() const;
};

// Plane label stored gcd-reduced with the first nonzero component positive.
class MillerIndex {
 public:
  MillerIndex(int h, int k, int l);

  // Accepts "001", "1-10", "2,1,0", "(210)" and "1 -1 0".
  static MillerIndex parse(std::string_view text);

  int h() const { return h_; }
  int k() const { return k_; }
  int l() const { return l_; }

  // Compact label such as "110" or "1-10".
  std::string label() const;

  friend bool operator==(const MillerIndex&, const MillerIndex&) = default;
  friend auto operator<=>(const MillerIndex&, const MillerIndex&) = default;

 private:
  int h_, k_, l_;
};

// Lagrange-reduced 2-D basis: |u| <= |v|, |u.v| <= |u|^2/2, u x v > 0.
struct MeshBasis {
  Vec2 u;
  Vec2 v;

  double area() const { return u.x() * v.y() - u.y() * v.x(); }
};

struct SurfaceMesh {
  MeshBasis basis;
  BulkLattice lattice;
  MillerIndex plane{0, 0, 1};

  const Vec2& u() const { return basis.u; }
  const Vec2& v() const { return basis.v; }
  double area() const { return basis.area(); }
};

// Lagrange-Gauss reduction. The result spans the same lattice, has positive
// orientation (v mirrored when needed) and the same |u x v|.
// Throws InvalidArgument on parallel or zero input.
MeshBasis reduce_mesh(const Vec2& u, const Vec2& v);

// The two shortest independent translations lying in the (hkl) plane,
// expressed in-plane with u along +x and v in the upper half-plane.
SurfaceMesh surface_mesh(const BulkLattice& lattice, const MillerIndex& plane);

// Integer primitive-coordinate basis (two vectors) of the translations lying
// in the plane. Exposed for tests.
std::array<std::array<std::int64_t, 3>, 2> in_plane_integer_basis(const BulkLattice& lattice,
                                                                  const MillerIndex& plane);

// GaAs, GaSb, Si, rutile, anatase.
const std::map<std::string, BulkLattice>& default_lattices();

// Case-insensitive lookup with common aliases ("a-tio2", "r-tio2").
// `extra` takes precedence over the defaults.
BulkLattice find_lattice(std::string_view name,
                         const std::map<std::string, BulkLattice>& extra = {});

// TOML file with one table per lattice:
//   [gaas]
//   system = "cubic-FCC"
//   a = 5.6533
// Unknown keys are rejected with ConfigError.
std::map<std::string, BulkLattice> load_lattices(const std::filesystem::path& path);
std::map<std::string, BulkLattice> parse_lattices(std::string_view toml_text,
                                                  std::string_view source = "<string>");

}  // namespace tiox::crystal
