#include "tiox/crystal.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include <toml.hpp>

#include "tiox/error.hpp"

namespace tiox::crystal {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

// Primitive translations in units of a/2 (x, y) and c/2 (z).
std::array<std::array<int, 3>, 3> primitive_half_units(LatticeSystem s) {
  switch (s) {
    case LatticeSystem::CubicFcc:
    case LatticeSystem::CubicDiamondFcc:
      return {{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}};
    case LatticeSystem::TetragonalP:
      return {{{2, 0, 0}, {0, 2, 0}, {0, 0, 2}}};
    case LatticeSystem::TetragonalI:
      return {{{-1, 1, 1}, {1, -1, 1}, {1, 1, -1}}};
  }
  return {};
}

Vec3 to_cartesian(const BulkLattice& lat, const std::array<std::int64_t, 3>& n) {
  const auto p = lat.primitive_vectors();
  return static_cast<double>(n[0]) * p[0] + static_cast<double>(n[1]) * p[1] +
         static_cast<double>(n[2]) * p[2];
}

}  // namespace

std::string_view to_string(LatticeSystem s) {
  switch (s) {
    case LatticeSystem::CubicFcc: return "cubic-FCC";
    case LatticeSystem::CubicDiamondFcc: return "cubic-diamond-FCC";
    case LatticeSystem::TetragonalP: return "tetragonal-P";
    case LatticeSystem::TetragonalI: return "tetragonal-I";
  }
  return "?";
}

LatticeSystem parse_system(std::string_view text) {
  const std::string t = lower(text);
  if (t == "cubic-fcc" || t == "fcc") return LatticeSystem::CubicFcc;
  if (t == "cubic-diamond-fcc" || t == "diamond") return LatticeSystem::CubicDiamondFcc;
  if (t == "tetragonal-p" || t == "tp") return LatticeSystem::TetragonalP;
  if (t == "tetragonal-i" || t == "ti" || t == "bct") return LatticeSystem::TetragonalI;
  fail(ErrorKind::Config, "unknown lattice system '" + std::string(text) + "'");
}

void BulkLattice::validate() const {
  require(std::isfinite(a) && a > 0.0, ErrorKind::InvalidArgument,
          "lattice '" + name + "': a must be > 0");
  require(std::isfinite(c) && c > 0.0, ErrorKind::InvalidArgument,
          "lattice '" + name + "': c must be > 0");
  require(!is_cubic() || std::abs(c - a) <= 1e-12 * a, ErrorKind::InvalidArgument,
          "lattice '" + name + "': cubic lattice requires c == a");
}

std::array<Vec3, 3> BulkLattice::primitive_vectors() const {
  const auto half = primitive_half_units(system);
  std::array<Vec3, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = Vec3(0.5 * a * half[i][0], 0.5 * a * half[i][1], 0.5 * c * half[i][2]);
  }
  return out;
}

MillerIndex::MillerIndex(int h, int k, int l) {
  require(h != 0 || k != 0 || l != 0, ErrorKind::InvalidArgument,
          "Miller index (000) is not a plane");
  const int g = std::gcd(std::gcd(std::abs(h), std::abs(k)), std::abs(l));
  h /= g;
  k /= g;
  l /= g;
  const int first = h != 0 ? h : (k != 0 ? k : l);
  if (first < 0) {
    h = -h;
    k = -k;
    l = -l;
  }
  h_ = h;
  k_ = k;
  l_ = l;
}

MillerIndex MillerIndex::parse(std::string_view text) {
  std::string s;
  for (char ch : text) {
    if (ch != '(' && ch != ')' && ch != '[' && ch != ']') s.push_back(ch);
  }
  std::vector<int> idx;
  const bool separated = s.find_first_of(", ") != std::string::npos;
  if (separated) {
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    int v = 0;
    while (in >> v) idx.push_back(v);
    if (!in.eof()) idx.clear();
  } else {
    // compact single-digit form, '-' binds to the next digit
    int sign = 1;
    for (char ch : s) {
      if (ch == '-') {
        sign = -1;
      } else if (std::isdigit(static_cast<unsigned char>(ch))) {
        idx.push_back(sign * (ch - '0'));
        sign = 1;
      } else {
        idx.clear();
        break;
      }
    }
  }
  if (idx.size() != 3) {
    fail(ErrorKind::InvalidArgument, "cannot parse Miller index '" + std::string(text) + "'");
  }
  return MillerIndex(idx[0], idx[1], idx[2]);
}

std::string MillerIndex::label() const {
  const bool compact = std::abs(h_) < 10 && std::abs(k_) < 10 && std::abs(l_) < 10;
  std::ostringstream out;
  if (compact) {
    out << h_ << k_ << l_;
  } else {
    out << h_ << ',' << k_ << ',' << l_;
  }
  return out.str();
}

MeshBasis reduce_mesh(const Vec2& u_in, const Vec2& v_in) {
  Vec2 u = u_in;
  Vec2 v = v_in;
  const double cross = u.x() * v.y() - u.y() * v.x();
  const double scale = u.norm() * v.norm();
  require(scale > 0.0 && std::abs(cross) > 1e-12 * scale, ErrorKind::InvalidArgument,
          "reduce_mesh: basis vectors are parallel or zero");
  // Gauss reduction; each pass strictly shortens v, so it terminates.
  for (int iter = 0; iter < 10000; ++iter) {
    if (u.squaredNorm() > v.squaredNorm()) std::swap(u, v);
    const double m = std::round(u.dot(v) / u.squaredNorm());
    if (m == 0.0) break;
    v -= m * u;
  }
  if (u.squaredNorm() > v.squaredNorm()) std::swap(u, v);
  if (u.x() * v.y() - u.y() * v.x() < 0.0) v = -v;
  return {u, v};
}

std::array<std::array<std::int64_t, 3>, 2> in_plane_integer_basis(const BulkLattice& lattice,
                                                                  const MillerIndex& plane) {
  // A translation with primitive coordinates n lies in (hkl) iff w . n == 0,
  // w_i = (h, k, l) . (primitive vector i in half-cell units).
  const auto half = primitive_half_units(lattice.system);
  std::array<std::int64_t, 3> w{};
  for (std::size_t i = 0; i < 3; ++i) {
    w[i] = static_cast<std::int64_t>(plane.h()) * half[i][0] +
           static_cast<std::int64_t>(plane.k()) * half[i][1] +
           static_cast<std::int64_t>(plane.l()) * half[i][2];
  }
  // Unimodular column operations reduce w to (g, 0, 0); the remaining two
  // columns of the accumulated transform span the integer kernel.
  std::array<std::array<std::int64_t, 3>, 3> cols{};
  for (std::size_t i = 0; i < 3; ++i) cols[i][i] = 1;
  for (;;) {
    std::size_t pivot = 3;
    for (std::size_t i = 0; i < 3; ++i) {
      if (w[i] != 0 && (pivot == 3 || std::llabs(w[i]) < std::llabs(w[pivot]))) pivot = i;
    }
    bool done = true;
    for (std::size_t j = 0; j < 3; ++j) {
      if (j == pivot || w[j] == 0) continue;
      done = false;
      const std::int64_t q = w[j] / w[pivot];
      w[j] -= q * w[pivot];
      for (std::size_t r = 0; r < 3; ++r) cols[j][r] -= q * cols[pivot][r];
    }
    if (done) {
      std::array<std::array<std::int64_t, 3>, 2> out{};
      std::size_t n = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        if (j != pivot) out[n++] = cols[j];
      }
      return out;
    }
  }
}

SurfaceMesh surface_mesh(const BulkLattice& lattice, const MillerIndex& plane) {
  lattice.validate();
  const auto kernel = in_plane_integer_basis(lattice, plane);
  Vec3 t1 = to_cartesian(lattice, kernel[0]);
  Vec3 t2 = to_cartesian(lattice, kernel[1]);

  // Gauss reduction on the 3-D vectors using their Gram matrix.
  for (int iter = 0; iter < 10000; ++iter) {
    if (t1.squaredNorm() > t2.squaredNorm()) std::swap(t1, t2);
    const double m = std::round(t1.dot(t2) / t1.squaredNorm());
    if (m == 0.0) break;
    t2 -= m * t1;
  }
  if (t1.squaredNorm() > t2.squaredNorm()) std::swap(t1, t2);

  const double len1 = t1.norm();
  const Vec2 u(len1, 0.0);
  const Vec2 v(t1.dot(t2) / len1, t1.cross(t2).norm() / len1);
  SurfaceMesh mesh{reduce_mesh(u, v), lattice, plane};
  return mesh;
}

const std::map<std::string, BulkLattice>& default_lattices() {
  static const std::map<std::string, BulkLattice> table = {
      {"gaas", {"GaAs", LatticeSystem::CubicFcc, 5.6533, 5.6533}},
      {"gasb", {"GaSb", LatticeSystem::CubicFcc, 6.0959, 6.0959}},
      {"si", {"Si", LatticeSystem::CubicDiamondFcc, 5.431, 5.431}},
      {"rutile", {"rutile", LatticeSystem::TetragonalP, 4.594, 2.959}},
      {"anatase", {"anatase", LatticeSystem::TetragonalI, 3.785, 9.514}},
  };
  return table;
}

BulkLattice find_lattice(std::string_view name, const std::map<std::string, BulkLattice>& extra) {
  std::string key = lower(name);
  if (key == "r-tio2" || key == "rtio2") key = "rutile";
  if (key == "a-tio2" || key == "atio2") key = "anatase";
  for (const auto* table : {&extra, &default_lattices()}) {
    for (const auto& [k, lat] : *table) {
      if (lower(k) == key || lower(lat.name) == key) return lat;
    }
  }
  fail(ErrorKind::Config, "unknown lattice '" + std::string(name) + "'");
}

std::map<std::string, BulkLattice> parse_lattices(std::string_view toml_text,
                                                  std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    throw ParseError(std::string(source), e.source().begin.line, std::string(e.description()));
  }
  std::map<std::string, BulkLattice> out;
  for (const auto& [key, node] : root) {
    const std::string name(key.str());
    const auto* tbl = node.as_table();
    if (tbl == nullptr) fail(ErrorKind::Config, "lattice '" + name + "' must be a table");
    BulkLattice lat;
    lat.name = name;
    bool have_system = false;
    for (const auto& [field, value] : *tbl) {
      const std::string f(field.str());
      if (f == "name") {
        lat.name = value.value<std::string>().value_or(name);
      } else if (f == "system") {
        const auto s = value.value<std::string>();
        if (!s) fail(ErrorKind::Config, "lattice '" + name + "': system must be a string");
        lat.system = parse_system(*s);
        have_system = true;
      } else if (f == "a") {
        lat.a = value.value<double>().value_or(0.0);
      } else if (f == "c") {
        lat.c = value.value<double>().value_or(0.0);
      } else {
        fail(ErrorKind::Config, "lattice '" + name + "': unknown key '" + f + "'");
      }
    }
    if (!have_system) fail(ErrorKind::Config, "lattice '" + name + "': missing system");
    if (lat.is_cubic() && lat.c == 0.0) lat.c = lat.a;
    try {
      lat.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, e.what());
    }
    out.emplace(lower(name), lat);
  }
  return out;
}

std::map<std::string, BulkLattice> load_lattices(const std::filesystem::path& path) {
  std::ifstream probe(path);
  if (!probe) fail(ErrorKind::Config, "cannot open lattice config " + path.string());
  std::stringstream buf;
  buf << probe.rdbuf();
  return parse_lattices(buf.str(), path.string());
}

}  // namespace tiox::crystal
