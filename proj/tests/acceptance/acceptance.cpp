// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
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

#include <fmt/format.h>
#include <unistd.h>

#include "synth.hpp"
#include "tiox/cli.hpp"
#include "tiox/error.hpp"
#include "tiox/filmstats.hpp"
#include "tiox/mcia.hpp"
#include "tiox/profiles.hpp"
#include "tiox/spectra.hpp"
#include "tiox/vacancysim.hpp"
#include "tiox/xrdfit.hpp"

using namespace tiox;
namespace fs = std::filesystem;

namespace {

// tolerances
constexpr double kMcia64Rel = 0.05;
constexpr double kMcia175Rel = 0.15;
constexpr double kMcia300Rel = 0.15;
constexpr double kMciaSingleSeconds = 1.0;
constexpr double kOrderRatio = 0.2;
constexpr double kDegenerateRel = 0.15;
constexpr double kMapSeconds = 10.0;
constexpr double kTauNm = 1.0;
constexpr double kEpsPoints = 0.04;
constexpr double kBraggA = 0.01;
constexpr double kLineRel = 0.03;
constexpr double kLifetimeRel = 0.02;
constexpr double kDiffusionRel = 0.10;
constexpr double kConservationRel = 1e-10;
constexpr double kSaturationRel = 0.05;
constexpr double kConvergenceRel = 0.01;
constexpr double kWellMixedRel = 0.02;
constexpr double kPlaneRmsPm = 1e-6;
constexpr double kSinusoidRel = 0.01;

struct Criterion {
  bool ok = true;
  std::vector<std::string> notes;
  void check(bool cond, const std::string& what) {
    if (!cond) ok = false;
    notes.push_back((cond ? "ok " : "FAILED ") + what);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool within_rel(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

double sigma(long n) {
  long s = 0;
  for (long d = 1; d <= n; ++d) {
    if (n % d == 0) s += d;
  }
  return static_cast<double>(s);
}

// distinct images in (Z/n)^2 of all integer matrices with |det| = n
long brute_force_count(long n) {
  std::vector<std::vector<bool>> seen;
  for (long a = -n; a <= n; ++a) {
    for (long b = -n; b <= n; ++b) {
      for (long c = -n; c <= n; ++c) {
        for (long d = -n; d <= n; ++d) {
          if (std::abs(a * d - b * c) != n) continue;
          std::vector<bool> mark(static_cast<std::size_t>(n * n), false);
          for (long i = 0; i < n; ++i) {
            for (long j = 0; j < n; ++j) {
              const long x = ((i * a + j * c) % n + n) % n;
              const long y = ((i * b + j * d) % n + n) % n;
              mark[static_cast<std::size_t>(x * n + y)] = true;
            }
          }
          if (std::find(seen.begin(), seen.end(), mark) == seen.end()) seen.push_back(std::move(mark));
        }
      }
    }
  }
  return static_cast<long>(seen.size());
}

std::vector<crystal::MillerIndex> planes(std::initializer_list<const char*> labels) {
  std::vector<crystal::MillerIndex> out;
  for (const char* l : labels) out.push_back(crystal::MillerIndex::parse(l));
  return out;
}

const std::vector<crystal::MillerIndex>& anatase_planes() {
  static const auto p = planes({"001", "100", "101", "110", "111", "112", "103"});
  return p;
}

const std::vector<crystal::MillerIndex>& rutile_planes() {
  static const auto p = planes({"001", "100", "101", "110", "111", "210", "211"});
  return p;
}

double area(const char* sub, const char* film, const char* plane) {
  const auto s = crystal::surface_mesh(crystal::find_lattice(sub), {1, 0, 0});
  const auto f = crystal::surface_mesh(crystal::find_lattice(film), crystal::MillerIndex::parse(plane));
  const auto m = mcia::try_find_mcia(s, f);
  return m ? m->area : std::nan("");
}

double best_area(const char* sub, const char* film, const std::vector<crystal::MillerIndex>& hkl) {
  double best = std::nan("");
  const auto s = crystal::surface_mesh(crystal::find_lattice(sub), {1, 0, 0});
  for (const auto& p : hkl) {
    const auto m = mcia::try_find_mcia(s, crystal::surface_mesh(crystal::find_lattice(film), p));
    if (m && !(m->area >= best)) best = m->area;
  }
  return best;
}

Criterion mcia_reproduction() {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  const double gaas = area("gaas", "anatase", "001");
  const double t_single = seconds_since(t0);
  c.check(within_rel(gaas, 64.0, kMcia64Rel), fmt::format("GaAs/anatase(001) {:.1f} A2 vs 64", gaas));
  c.check(t_single < kMciaSingleSeconds, fmt::format("single search {:.3f} s", t_single));
  const double sb_a = area("gasb", "anatase", "001");
  const double sb_r = area("gasb", "rutile", "001");
  c.check(within_rel(sb_a, 175.0, kMcia175Rel), fmt::format("GaSb/anatase(001) {:.1f} vs 175", sb_a));
  c.check(within_rel(sb_r, 175.0, kMcia175Rel), fmt::format("GaSb/rutile(001) {:.1f} vs 175", sb_r));
  const double si_a = best_area("si", "anatase", anatase_planes());
  const double si_r = best_area("si", "rutile", rutile_planes());
  c.check(within_rel(si_a, 300.0, kMcia300Rel), fmt::format("Si best anatase {:.1f} vs 300", si_a));
  c.check(within_rel(si_r, 300.0, kMcia300Rel), fmt::format("Si best rutile {:.1f} vs 300", si_r));
  return c;
}

Criterion mcia_ordering() {
  Criterion c;
  const double a001 = area("gaas", "anatase", "001");
  const double r110 = area("gaas", "rutile", "110");
  const double r210 = area("gaas", "rutile", "210");
  c.check(a001 <= kOrderRatio * r110, fmt::format("anatase(001)/rutile(110) ratio {:.3f}", a001 / r110));
  c.check(std::abs(r110 - r210) <= kDegenerateRel * std::min(r110, r210),
          fmt::format("rutile(110) {:.1f} vs (210) {:.1f}", r110, r210));

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<crystal::BulkLattice> subs{crystal::find_lattice("si"), crystal::find_lattice("gasb"),
                                               crystal::find_lattice("gaas")};
  const std::vector<mcia::FilmSpec> films{{crystal::find_lattice("anatase"), anatase_planes()},
                                          {crystal::find_lattice("rutile"), rutile_planes()}};
  const auto rows = mcia::mcia_map(subs, films);
  const double t_map = seconds_since(t0);
  c.check(rows.size() == 42 && t_map < kMapSeconds, fmt::format("{} map rows in {:.2f} s", rows.size(), t_map));
  return c;
}

Criterion sublattices() {
  Criterion c;
  long bad = 0;
  for (long n = 1; n <= 24; ++n) {
    const auto count = static_cast<double>(mcia::enumerate_sublattices(n).size());
    if (count != sigma(n)) ++bad;
    if (n <= 10 && brute_force_count(n) != static_cast<long>(count)) ++bad;
  }
  c.check(bad == 0, fmt::format("sigma(n) n<=24, brute force n<=10, {} mismatches", bad));
  return c;
}

Criterion xrd_pipeline() {
  Criterion c;
  struct Case {
    double tau, eps, two_theta;
  };
  // peak SNR 1000; at SNR 100 the 64 nm case scatters by 2 nm
  constexpr int kSeeds = 20;
  for (const Case k : {Case{22.0, 0.68, 27.4}, Case{64.0, 0.183, 38.144}}) {
    const auto b = synth::breadths_for(k.tau, k.eps, k.two_theta);
    synth::VoigtSpec v;
    v.center = k.two_theta;
    v.fwhm_g = b.fwhm_g_deg;
    v.fwhm_l = b.fwhm_l_deg;
    v.half_width = 2.5;
    v.amplitude = 1e5;
    v.bg_offset = 500.0;
    v.noise = 100.0;
    int ok = 0;
    double worst_tau = 0.0, worst_eps = 0.0;
    for (unsigned seed = 1; seed <= kSeeds; ++seed) {
      try {
        const auto fit = xrd::fit_voigt(synth::voigt_scan(v, seed), {k.two_theta - 2.5, k.two_theta + 2.5});
        const auto r = xrd::size_strain(fit);
        const double dt = std::abs(r.tau_nm.value - k.tau), de = std::abs(r.epsilon_percent.value - k.eps);
        worst_tau = std::max(worst_tau, dt);
        worst_eps = std::max(worst_eps, de);
        if (dt <= kTauNm && de <= kEpsPoints) ++ok;
      } catch (const Error&) {
      }
    }
    c.check(ok == kSeeds, fmt::format("tau {} nm / eps {}% at {} deg: {}/{} seeds, worst |dtau| {:.2f} nm, |deps| {:.4f}",
                                      k.tau, k.eps, k.two_theta, ok, kSeeds, worst_tau, worst_eps));
  }
  return c;
}

Criterion bragg() {
  Criterion c;
  const double cparam = xrd::lattice_param(xrd::bragg_d(38.144), {0, 0, 4}, xrd::CrystalFamily::Tetragonal);
  const double d = xrd::bragg_d(27.4);
  c.check(std::abs(cparam - 9.43) <= kBraggA, fmt::format("c = {:.4f} A", cparam));
  c.check(std::abs(d - 3.25) <= kBraggA, fmt::format("d = {:.4f} A", d));
  return c;
}

Criterion spectra_criterion() {
  using namespace spectra;
  Criterion c;
  c.check(classify_phase(std::vector<double>{144, 399, 515, 639}).phase == Phase::Anatase, "anatase set");
  c.check(classify_phase(std::vector<double>{449, 614}).phase == Phase::Rutile, "rutile set");

  std::mt19937 rng(2024);
  int line_ok = 0;
  std::uniform_real_distribution<double> uc(194.0, 199.0), uw(20.0, 80.0), ua(0.5, 5.0);
  for (int i = 0; i < 50; ++i) {
    synth::LineSpec l;
    l.center_thz = uc(rng);
    l.fwhm_ghz = uw(rng);
    l.amplitude = ua(rng);
    l.noise = l.amplitude / 50.0;
    l.half_width_ghz = 6.0 * l.fwhm_ghz;
    l.step_ghz = l.fwhm_ghz / 40.0;
    l.model = i % 2 ? LineModel::Lorentzian : LineModel::Gaussian;
    try {
      const auto f = fit_line(synth::line_spectrum(l, 7000 + static_cast<unsigned>(i)), l.model);
      if (std::abs(f.center_thz - l.center_thz) * 1000.0 <= kLineRel * l.fwhm_ghz &&
          within_rel(f.fwhm_ghz, l.fwhm_ghz, kLineRel) && within_rel(f.amplitude, l.amplitude, kLineRel)) {
        ++line_ok;
      }
    } catch (const Error&) {
    }
  }
  c.check(line_ok == 50, fmt::format("fit_line {}/50 within 3%", line_ok));

  int life_ok = 0;
  std::uniform_real_distribution<double> ut(0.5, 10.0), ua2(0.2, 20.0), ub(0.0, 0.2);
  for (int i = 0; i < 50; ++i) {
    synth::DecaySpec d;
    d.t1_ms = ut(rng);
    d.amplitude = ua2(rng);
    d.background = ub(rng) * d.amplitude;
    d.noise = d.amplitude / 30.0;
    d.points = 4000;
    try {
      const auto f = fit_lifetime(synth::decay_trace(d, 8000 + static_cast<unsigned>(i)));
      if (within_rel(f.t1_ms, d.t1_ms, kLifetimeRel)) ++life_ok;
    } catch (const Error&) {
    }
  }
  c.check(life_ok == 50, fmt::format("fit_lifetime {}/50 within 2%", life_ok));
  return c;
}

Criterion diffusion() {
  Criterion c;
  const auto p = synth::erfc_profile(1e-17, 3000.0, 0.01, 1);
  const auto f = profiles::fit_diffusion(p, "Ga");
  c.check(within_rel(f.d_cm2_s, 1e-17, kDiffusionRel), fmt::format("D = {:.3e} cm2/s", f.d_cm2_s));
  c.check(f.length_nm == 2.0 * std::sqrt(f.d_cm2_s * 1e14 * f.time_s), "L = 2 sqrt(D t) exactly");
  const double l = profiles::diffusion_length(1e-17, 3000.0);
  c.check(std::abs(l - 3.46) < 0.005, fmt::format("L(1e-17, 3000 s) = {:.3f} nm", l));
  return c;
}

Criterion vacancy_criterion() {
  using namespace vacancy;
  Criterion c;

  // conservation: sources and sinks off, deposition on and off
  VacancyParams p;
  p.diffusivity_nm2_s = 0.08;
  p.incorporation = [](double) { return 0.0; };
  p.annihilation = [](double) { return 0.0; };
  VacancyState st;
  st.dz_nm = p.dz_nm;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  for (int i = 0; i < 120; ++i) st.c.push_back(u(rng));
  const double dt = 0.9 * stability_limit(p);
  double worst = 0.0;
  for (double rate : {0.0, 0.2}) {
    const Segment s{"s", 1.0, rate, 0.0, 390.0, false};
    VacancyState cur = st;
    for (int i = 0; i < 2000; ++i) {
      const double before = cur.total();
      cur = step(cur, p, s, dt);
      worst = std::max(worst, std::abs(cur.total() - before) / before);
    }
  }
  c.check(worst <= kConservationRel, fmt::format("worst per-step mass change {:.2e}", worst));

  const auto def = VacancyParams::defaults();
  const double gmax = def.incorporation(0.0);
  bool bounded = true;
  for (double buffer : {0.0, 3.0, 20.0}) {
    for (const auto& snap : simulate(default_schedule(buffer), def, {1.0, 30.0}).snapshots) {
      for (double x : snap.c) bounded = bounded && x >= 0.0 && x <= gmax * (1.0 + 1e-12);
    }
  }
  c.check(bounded, "0 <= c <= max g");

  const std::vector<double> thick{0, 2, 5, 10, 20, 40};
  const auto scan = saturation_scan(thick, default_schedule(), def);
  bool monotone = true;
  for (std::size_t i = 1; i < scan.size(); ++i) monotone = monotone && scan[i].final_mean_c >= scan[i - 1].final_mean_c;
  const double last = scan.back().final_mean_c, prev = scan[scan.size() - 2].final_mean_c;
  c.check(monotone, "saturation curve nondecreasing");
  c.check((last - prev) / prev < kSaturationRel, fmt::format("last step {:.2f}%", 100.0 * (last - prev) / prev));

  auto fine = def;
  fine.dz_nm = def.dz_nm / 2.0;
  const auto a = simulate(default_schedule(), def, {1.0, 10.0});
  const auto b = simulate(default_schedule(), fine, {0.5, 10.0});
  const double rel = std::abs(b.final_state.mean() - a.final_state.mean()) / a.final_state.mean();
  c.check(rel < kConvergenceRel, fmt::format("grid halving changes mean by {:.3f}%", 100.0 * rel));

  const double g = 0.05, k = 0.01, rate = 0.1, t_grow = 200.0, t_anneal = 100.0;
  VacancyParams mixed;
  mixed.diffusivity_nm2_s = 50.0;
  mixed.incorporation = [g](double) { return g; };
  mixed.annihilation = [k](double) { return k; };
  const auto r = simulate({{Segment{"grow", t_grow, rate, 0.0, 390.0, false}, Segment{"anneal", t_anneal, 0.0, 0.0, 390.0, false}}},
                          mixed);
  const double c_ode = g * rate * (1.0 - std::exp(-k * t_grow)) / k * std::exp(-k * t_anneal) / (rate * t_grow);
  c.check(within_rel(r.final_state.mean(), c_ode, kWellMixedRel),
          fmt::format("well-mixed {:.5f} vs ODE {:.5f}", r.final_state.mean(), c_ode));
  return c;
}

Criterion film_criterion() {
  using namespace film;
  Criterion c;
  auto grid = [](std::size_t n, const std::function<double(double, double)>& f) {
    HeightMap m;
    m.rows = m.cols = n;
    m.pitch_nm = 2.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) m.heights_nm.push_back(f(double(i), double(j)));
    }
    return m;
  };
  const double plane = rms_roughness(grid(64, [](double r, double col) { return 0.3 * col - 0.2 * r + 4.0; }));
  c.check(plane < kPlaneRmsPm, fmt::format("tilted plane {:.2e} pm", plane));
  const double amp = 0.3;
  const double sine = rms_roughness(grid(128, [&](double, double col) { return amp * std::sin(2.0 * M_PI * col / 16.0); }));
  c.check(within_rel(sine, 1000.0 * amp / std::sqrt(2.0), kSinusoidRel), fmt::format("sinusoid {:.2f} pm", sine));

  const GrowthRecord thin{Substrate::GaAs, SurfacePrep::Capped, 390.0, 70.0, Doping::Bulk};
  GrowthRecord thick = thin;
  thick.buffer_shots = 500.0;
  const GrowthRecord hot{Substrate::GaAs, SurfacePrep::OxideDesorbed, 450.0, 0.0, Doping::Undoped};
  c.check(predict_phase(thin).phase == spectra::Phase::Anatase, "390 C / 70 shots anatase");
  c.check(predict_phase(thick).phase == spectra::Phase::Rutile, "390 C / 500 shots rutile");
  c.check(predict_phase(hot).phase == spectra::Phase::Rutile, ">= 450 C rutile");
  return c;
}

std::string cli_bytes(std::vector<std::string> args, int& code) {
  std::ostringstream out, err;
  code = cli::run(args, out, err);
  return out.str() + "\x1f" + err.str();
}

Criterion determinism() {
  Criterion c;
  const fs::path dir = fs::temp_directory_path() / ("tiox_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };

  synth::VoigtSpec v;
  const auto scan = synth::voigt_scan(v, 5);
  std::string scan_txt = "2theta_deg,counts\n";
  for (std::size_t i = 0; i < scan.two_theta.size(); ++i) {
    scan_txt += fmt::format("{:.6f},{:.6f}\n", scan.two_theta[i], scan.intensity[i]);
  }
  synth::DecaySpec d;
  const auto decay = synth::decay_trace(d, 5);
  std::string decay_txt = "time_s,signal\n";
  for (std::size_t i = 0; i < decay.x.size(); ++i) decay_txt += fmt::format("{:.9g},{:.9g}\n", decay.x[i], decay.y[i]);
  synth::LineSpec l;
  const auto line = synth::line_spectrum(l, 5);
  std::string line_txt = "frequency_THz,signal\n";
  for (std::size_t i = 0; i < line.x.size(); ++i) line_txt += fmt::format("{:.9f},{:.9g}\n", line.x[i], line.y[i]);
  const auto prof = synth::erfc_profile(1e-17, 3000.0, 0.01, 5);
  std::string prof_txt = "z_nm,Ga\n";
  for (std::size_t i = 0; i < prof.z_nm.size(); ++i) {
    prof_txt += fmt::format("{:.4f},{:.9g}\n", prof.z_nm[i], prof.channels[0].values[i] + 0.05);
  }
  std::string afm = "# pitch_nm: 3.9\n";
  std::mt19937 rng(5);
  std::normal_distribution<double> nd(0.0, 0.3);
  for (int i = 0; i < 64; ++i) {
    for (int j = 0; j < 64; ++j) afm += fmt::format("{}{:.6f}", j ? " " : "", nd(rng));
    afm += "\n";
  }

  const std::vector<std::vector<std::string>> runs{
      {"mcia", "--jobs", "4"},
      {"mcia", "--format", "svg-plot-data"},
      {"xrd-fit", write("scan.csv", scan_txt), "--reflection", "110"},
      {"xrd-fit", write("scan2.csv", scan_txt), "--format", "plot-csv"},
      {"spectra", "lifetime", write("decay.csv", decay_txt)},
      {"spectra", "ple-fit", write("ple.csv", line_txt)},
      {"profile", "fit", write("prof.csv", prof_txt), "--element", "Ga"},
      {"vacancy", "sim"},
      {"vacancy", "scan", "--jobs", "3"},
      {"film", "rms", write("afm.txt", afm)},
      {"film", "predict", "--substrate", "gaas", "--prep", "capped", "--tgrow", "390", "--buffer-shots", "500"},
  };
  for (const auto& args : runs) {
    int c1 = 0, c2 = 0;
    const auto first = cli_bytes(args, c1);
    const auto second = cli_bytes(args, c2);
    std::string label = args[0] + (args.size() > 1 && args[1][0] != '-' && args[1].find('/') == std::string::npos
                                       ? " " + args[1]
                                       : "");
    c.check(c1 == 0 && c1 == c2 && first == second, fmt::format("{} ({} bytes)", label, first.size()));
  }
  fs::remove_all(dir);
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Criterion()>>> criteria{
      {"MCIA reproduction", mcia_reproduction},
      {"MCIA ordering properties", mcia_ordering},
      {"sublattice enumeration", sublattices},
      {"XRD fit to size/strain", xrd_pipeline},
      {"Bragg checks", bragg},
      {"spectra", spectra_criterion},
      {"diffusion", diffusion},
      {"vacancy simulator", vacancy_criterion},
      {"film stats", film_criterion},
      {"CLI determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Criterion c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.check(false, std::string("exception: ") + e.what());
    }
    if (!c.ok) ++failed;
    std::string detail;
    for (const auto& n : c.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::printf("%s %2zu %s: %s\n", c.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), detail.c_str());
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
