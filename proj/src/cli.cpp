#include "tiox/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tiox/crystal.hpp"
#include "tiox/error.hpp"
#include "tiox/filmstats.hpp"
#include "tiox/mcia.hpp"
#include "tiox/plot.hpp"
#include "tiox/profiles.hpp"
#include "tiox/spectra.hpp"
#include "tiox/table.hpp"
#include "tiox/textio.hpp"
#include "tiox/vacancysim.hpp"
#include "tiox/xrdfit.hpp"

#ifndef TIOX_VERSION
#define TIOX_VERSION "0.0.0"
#endif

namespace tiox::cli {

namespace fs = std::filesystem;
using io::Cell;
using io::ResultTable;

namespace {

struct Common {
  std::string out;
  std::string format = "csv";
  unsigned jobs = 1;
  std::string config_dir;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-o,--out", c.out, "Output file (default stdout)");
  sub->add_option("--format", c.format, "csv | svg-plot-data | plot-csv")
      ->check(CLI::IsMember({"csv", "svg-plot-data", "plot-csv"}));
  sub->add_option("-j,--jobs", c.jobs, "Worker threads (0 = all cores)");
  sub->add_option("--config", c.config_dir, std::string("Config directory (default $") + kConfigEnv + ")");
}

std::optional<fs::path> config_file(const Common& c, const char* name) {
  std::string dir = c.config_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) dir = env;
  }
  if (dir.empty()) return std::nullopt;
  const fs::path p = fs::path(dir) / name;
  if (fs::exists(p)) return p;
  return std::nullopt;
}

unsigned resolve_jobs(unsigned jobs) {
  return jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs;
}

// Order-preserving parallel map; the error of the lowest failing index wins.
template <typename R>
std::vector<R> parallel_map(std::size_t n, unsigned jobs, const std::function<R(std::size_t)>& fn) {
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  const unsigned workers = std::min<unsigned>(resolve_jobs(jobs), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

struct Input {
  std::string path;
  std::string text;
};

std::vector<Input> read_inputs(const std::vector<std::string>& paths) {
  std::vector<Input> in;
  for (const auto& p : paths) in.push_back({p, io::read_file(p)});
  return in;
}

void stamp(ResultTable& t, const std::string& command,
           const std::vector<std::pair<std::string, std::string>>& params,
           const std::vector<Input>& inputs) {
  t.note("tool", std::string("tiox ") + TIOX_VERSION);
  t.note("command", command);
  for (const auto& [k, v] : params) t.note("param." + k, v);
  for (const auto& in : inputs) t.note("input." + in.path, "sha256:" + io::sha256_hex(in.text));
}

std::string num(double x) { return io::format_number(x); }

// "lo:hi" or "lo,hi"
std::optional<std::pair<double, double>> parse_window(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto sep = text.find_first_of(":,");
  try {
    if (sep != std::string::npos) {
      std::size_t used = 0;
      const std::string a = text.substr(0, sep), b = text.substr(sep + 1);
      const double lo = std::stod(a, &used);
      if (used == a.size()) {
        const double hi = std::stod(b, &used);
        if (used == b.size() && lo < hi) return std::pair{lo, hi};
      }
    }
  } catch (const std::exception&) {
  }
  fail(ErrorKind::Usage, "--window needs two increasing values lo:hi, got '" + text + "'");
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

void write_output(const Common& c, const std::string& bytes, std::ostream& out) {
  if (c.out.empty() || c.out == "-") {
    out << bytes;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) fail(ErrorKind::Usage, "cannot write " + c.out);
  f << bytes;
}

void emit(const Common& c, const ResultTable& table, std::optional<io::PlotKind> kind,
          const ResultTable* plot_table, std::ostream& out) {
  if (c.format == "csv") {
    write_output(c, table.to_csv(), out);
    return;
  }
  if (!kind) fail(ErrorKind::Usage, "this command has no plot data; use --format csv");
  const auto fmt = c.format == "svg-plot-data" ? io::PlotFormat::Svg : io::PlotFormat::Csv;
  write_output(c, io::emit_plot_data(plot_table ? *plot_table : table, *kind, fmt), out);
}

xrd::Reflection parse_reflection(const std::string& text) {
  std::vector<int> idx;
  if (text.find_first_of(", ") != std::string::npos) {
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, text.find(',') != std::string::npos ? ',' : ' ')) {
      if (!tok.empty()) idx.push_back(std::stoi(tok));
    }
  } else {
    int sign = 1;
    for (char ch : text) {
      if (ch == '(' || ch == ')') continue;
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
  if (idx.size() != 3) fail(ErrorKind::Usage, "bad reflection '" + text + "' (e.g. 004 or 0,0,4)");
  return {idx[0], idx[1], idx[2]};
}

std::vector<crystal::MillerIndex> default_planes(const crystal::BulkLattice& lat) {
  using crystal::LatticeSystem;
  std::vector<std::string> labels;
  switch (lat.system) {
    case LatticeSystem::TetragonalI: labels = {"001", "100", "101", "110", "111", "112", "103"}; break;
    case LatticeSystem::TetragonalP: labels = {"001", "100", "101", "110", "111", "210", "211"}; break;
    default: labels = {"100", "110", "111"}; break;
  }
  std::vector<crystal::MillerIndex> out;
  for (const auto& l : labels) out.push_back(crystal::MillerIndex::parse(l));
  return out;
}

// ---------------------------------------------------------------- mcia

struct MciaArgs {
  Common common;
  std::vector<std::string> substrates{"gaas"};
  std::vector<std::string> films{"anatase", "rutile"};
  std::vector<std::string> planes;
  std::string substrate_plane = "100";
  double max_strain = mcia::MciaConfig{}.max_linear_strain;
  double max_area = mcia::MciaConfig{}.max_area;
  long max_index = mcia::MciaConfig{}.max_index;
  std::string metric = "principal";
  std::string lattices;
};

void cmd_mcia(const MciaArgs& a, std::ostream& out) {
  std::map<std::string, crystal::BulkLattice> extra;
  if (auto p = config_file(a.common, "lattices.toml")) extra = crystal::load_lattices(*p);
  if (!a.lattices.empty()) {
    for (auto& [k, v] : crystal::load_lattices(a.lattices)) extra[k] = v;
  }
  mcia::MciaConfig cfg;
  cfg.max_linear_strain = a.max_strain;
  cfg.max_area = a.max_area;
  cfg.max_index = a.max_index;
  cfg.metric = a.metric == "symmetric" ? mcia::MisfitMetric::Symmetric : mcia::MisfitMetric::PrincipalStrain;
  cfg.threads = resolve_jobs(a.common.jobs);
  cfg.validate();

  std::vector<crystal::BulkLattice> subs;
  for (const auto& s : a.substrates) subs.push_back(crystal::find_lattice(s, extra));
  std::vector<mcia::FilmSpec> films;
  for (const auto& f : a.films) {
    mcia::FilmSpec spec{crystal::find_lattice(f, extra), {}};
    if (a.planes.empty()) {
      spec.planes = default_planes(spec.lattice);
    } else {
      for (const auto& p : a.planes) spec.planes.push_back(crystal::MillerIndex::parse(p));
    }
    films.push_back(std::move(spec));
  }
  const auto rows = mcia::mcia_map(subs, films, cfg, crystal::MillerIndex::parse(a.substrate_plane));

  ResultTable t;
  t.add_column("substrate", "").add_column("film", "").add_column("hkl", "");
  t.add_column("area", "A2").add_column("misfit", "1").add_column("n_sub", "1").add_column("n_film", "1");
  t.add_column("rotation", "deg").add_column("minimal", "1");
  bool any = false;
  for (const auto& r : rows) {
    std::vector<Cell> row{r.substrate, r.film, r.plane.label()};
    if (r.match) {
      any = true;
      row.insert(row.end(), {r.match->area, r.match->misfit, std::int64_t{r.match->n_sub()},
                             std::int64_t{r.match->n_film()}, r.match->rotation_deg,
                             std::int64_t{r.minimal ? 1 : 0}});
    } else {
      row.insert(row.end(), {std::monostate{}, std::monostate{}, std::monostate{}, std::monostate{},
                             std::monostate{}, std::int64_t{0}});
    }
    t.add_row(std::move(row));
  }
  if (!any) fail(ErrorKind::NoMatch, "no coincidence lattice within the strain and area limits");
  stamp(t, "mcia",
        {{"substrates", join(a.substrates)}, {"films", join(a.films)},
         {"planes", a.planes.empty() ? "default" : join(a.planes)},
         {"substrate_plane", a.substrate_plane}, {"max_strain", num(a.max_strain)},
         {"max_area_A2", num(a.max_area)}, {"max_index", std::to_string(a.max_index)},
         {"metric", a.metric}},
        {});
  emit(a.common, t, io::PlotKind::Map, nullptr, out);
}

// ---------------------------------------------------------------- xrd-fit

struct XrdArgs {
  Common common;
  std::vector<std::string> files;
  std::string window;
  double wavelength = xrd::kCuKalpha1;
  double k = xrd::kScherrerK;
  double inst_g = 0.0;
  double inst_l = 0.0;
  std::string reflection;
  std::string family = "tetragonal";
};

void cmd_xrd(const XrdArgs& a, std::ostream& out) {
  const auto inputs = read_inputs(a.files);
  struct Done {
    xrd::DiffractionScan scan;
    xrd::VoigtPeak peak;
    xrd::SizeStrainResult ss;
  };
  xrd::SizeStrainOptions opt{a.wavelength, a.k, a.inst_g, a.inst_l};
  std::optional<xrd::Reflection> refl;
  if (!a.reflection.empty()) refl = parse_reflection(a.reflection);
  const auto family = a.family == "cubic" ? xrd::CrystalFamily::Cubic : xrd::CrystalFamily::Tetragonal;

  auto results = parallel_map<Done>(inputs.size(), a.common.jobs, [&](std::size_t i) {
    auto scan = io::parse_scan(inputs[i].text, inputs[i].path);
    xrd::Window w{scan.two_theta.front(), scan.two_theta.back()};
    if (const auto win = parse_window(a.window)) w = {win->first, win->second};
    auto peak = xrd::fit_voigt(scan, w);
    auto ss = xrd::size_strain(peak, opt);
    return Done{std::move(scan), peak, ss};
  });

  ResultTable t;
  t.add_column("file", "");
  for (const char* n : {"center", "center_sigma", "fwhm_g", "fwhm_g_sigma", "fwhm_l", "fwhm_l_sigma"}) {
    t.add_column(n, "deg");
  }
  t.add_column("amplitude", "counts").add_column("amplitude_sigma", "counts");
  t.add_column("tau", "nm").add_column("tau_sigma", "nm");
  t.add_column("epsilon", "percent").add_column("epsilon_sigma", "percent");
  t.add_column("d", "A");
  if (refl) t.add_column("lattice_param", "A");
  t.add_column("residual_rms", "counts");
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& p = results[i].peak;
    const auto& s = results[i].ss;
    const double d = xrd::bragg_d(p.center, a.wavelength);
    std::vector<Cell> row{inputs[i].path, p.center, p.sigma.center, p.fwhm_g, p.sigma.fwhm_g,
                          p.fwhm_l, p.sigma.fwhm_l, p.amplitude, p.sigma.amplitude,
                          s.tau_nm.value, s.tau_nm.sigma, s.epsilon_percent.value,
                          s.epsilon_percent.sigma, d};
    if (refl) row.emplace_back(xrd::lattice_param(d, *refl, family));
    row.emplace_back(p.residual_rms);
    t.add_row(std::move(row));
  }
  std::vector<std::pair<std::string, std::string>> params{
      {"wavelength_A", num(a.wavelength)}, {"k", num(a.k)},
      {"instrument_fwhm_g_deg", num(a.inst_g)}, {"instrument_fwhm_l_deg", num(a.inst_l)}};
  if (const auto win = parse_window(a.window)) params.emplace_back("window_deg", num(win->first) + ":" + num(win->second));
  if (refl) {
    params.emplace_back("reflection", a.reflection);
    params.emplace_back("family", a.family);
  }
  stamp(t, "xrd-fit", params, inputs);

  ResultTable plot;
  plot.add_column("two_theta", "deg").add_column("observed", "counts").add_column("fit", "counts");
  const auto& first = results.front();
  for (std::size_t j = 0; j < first.scan.two_theta.size(); ++j) {
    const double x = first.scan.two_theta[j];
    if (x < first.peak.window.lo || x > first.peak.window.hi) continue;
    plot.add_row({x, first.scan.intensity[j], first.peak.evaluate(x)});
  }
  emit(a.common, t, io::PlotKind::PeakFit, &plot, out);
}

// ---------------------------------------------------------------- spectra

struct SpectraArgs {
  Common common;
  std::vector<std::string> files;
  std::string unit;
  double min_prominence = 0.1;
  double threshold = 0.5;
  std::string model = "gaussian";
};

std::optional<std::string> unit_override(const SpectraArgs& a) {
  if (a.unit.empty()) return std::nullopt;
  return a.unit;
}

void cmd_classify(const SpectraArgs& a, std::ostream& out) {
  const auto inputs = read_inputs(a.files);
  spectra::ClassifyOptions opt;
  opt.threshold = a.threshold;
  auto results = parallel_map<std::pair<spectra::Spectrum, spectra::Classification>>(
      inputs.size(), a.common.jobs, [&](std::size_t i) {
        auto s = io::parse_spectrum(inputs[i].text, inputs[i].path, unit_override(a));
        require(s.unit == spectra::XUnit::Wavenumber, ErrorKind::InvalidArgument,
                inputs[i].path + ": Raman classification needs a cm-1 axis");
        const auto peaks = spectra::detect_peaks(s, a.min_prominence);
        return std::pair{std::move(s), spectra::classify_phase(peaks, spectra::default_mode_table(), opt)};
      });
  ResultTable t;
  t.add_column("file", "").add_column("sample", "").add_column("phase", "");
  t.add_column("anatase_score", "1").add_column("rutile_score", "1").add_column("n_peaks", "1");
  t.add_column("peaks", "");
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& [s, c] = results[i];
    std::string peaks;
    for (const auto& l : c.labels) {
      if (!peaks.empty()) peaks += "; ";
      peaks += fmt::format("{:.1f}", l.center);
      if (!l.label.empty()) peaks += " " + l.label + (l.scored ? "" : " (masked)");
    }
    t.add_row({inputs[i].path, s.sample_id, std::string(spectra::to_string(c.phase)), c.anatase_score,
               c.rutile_score, static_cast<std::int64_t>(c.labels.size()), peaks});
  }
  stamp(t, "spectra classify",
        {{"min_prominence", num(a.min_prominence)}, {"threshold", num(a.threshold)}}, inputs);
  emit(a.common, t, std::nullopt, nullptr, out);
}

void cmd_ple(const SpectraArgs& a, std::ostream& out) {
  const auto inputs = read_inputs(a.files);
  const auto model = spectra::parse_line_model(a.model);
  auto results = parallel_map<std::pair<spectra::Spectrum, spectra::LineFit>>(
      inputs.size(), a.common.jobs, [&](std::size_t i) {
        auto s = io::parse_spectrum(inputs[i].text, inputs[i].path, unit_override(a));
        auto fit = spectra::fit_line(s, model);
        return std::pair{std::move(s), fit};
      });
  ResultTable t;
  t.add_column("file", "").add_column("model", "");
  t.add_column("center", "THz").add_column("center_sigma", "THz");
  t.add_column("fwhm", "GHz").add_column("fwhm_sigma", "GHz");
  t.add_column("amplitude", "counts").add_column("background", "counts").add_column("residual_rms", "counts");
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& f = results[i].second;
    t.add_row({inputs[i].path, std::string(spectra::to_string(f.model)), f.center_thz,
               f.sigma.center_thz, f.fwhm_ghz, f.sigma.fwhm_ghz, f.amplitude, f.background,
               f.residual_rms});
  }
  stamp(t, "spectra ple-fit", {{"model", a.model}}, inputs);

  ResultTable plot;
  plot.add_column("frequency", "THz").add_column("observed", "counts").add_column("fit", "counts");
  const auto& [s0, f0] = results.front();
  const auto thz = s0.unit == spectra::XUnit::THz ? s0 : spectra::convert(s0, spectra::XUnit::THz);
  for (std::size_t j = 0; j < thz.x.size(); ++j) plot.add_row({thz.x[j], thz.y[j], f0.evaluate_thz(thz.x[j])});
  emit(a.common, t, io::PlotKind::PeakFit, &plot, out);
}

void cmd_lifetime(const SpectraArgs& a, std::ostream& out) {
  const auto inputs = read_inputs(a.files);
  auto results = parallel_map<std::pair<spectra::Spectrum, spectra::LifetimeFit>>(
      inputs.size(), a.common.jobs, [&](std::size_t i) {
        auto s = io::parse_spectrum(inputs[i].text, inputs[i].path, unit_override(a));
        auto fit = spectra::fit_lifetime(s);
        return std::pair{std::move(s), fit};
      });
  ResultTable t;
  t.add_column("file", "").add_column("t1", "ms").add_column("t1_sigma", "ms");
  t.add_column("amplitude", "counts").add_column("amplitude_sigma", "counts");
  t.add_column("background", "counts").add_column("residual_rms", "counts");
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& f = results[i].second;
    t.add_row({inputs[i].path, f.t1_ms, f.t1_sigma_ms, f.amplitude, f.amplitude_sigma, f.background,
               f.residual_rms});
  }
  stamp(t, "spectra lifetime", {}, inputs);

  ResultTable plot;
  plot.add_column("time", "ms").add_column("observed", "counts").add_column("fit", "counts");
  const auto& [s0, f0] = results.front();
  for (std::size_t j = 0; j < s0.x.size(); ++j) {
    const double ms = s0.x[j] * 1e3;
    plot.add_row({ms, s0.y[j], f0.amplitude * std::exp(-ms / f0.t1_ms) + f0.background});
  }
  emit(a.common, t, io::PlotKind::PeakFit, &plot, out);
}

// ---------------------------------------------------------------- profile

struct ProfileArgs {
  Common common;
  std::string file;
  std::vector<std::string> elements;
  double time_s = profiles::DiffusionOptions{}.time_s;
  std::string window;
  bool raw = false;
};

void cmd_profile(const ProfileArgs& a, std::ostream& out) {
  const auto inputs = read_inputs({a.file});
  auto prof = io::parse_profile(inputs[0].text, inputs[0].path);
  if (!a.raw) prof = profiles::normalize(prof);
  profiles::DiffusionOptions opt;
  opt.time_s = a.time_s;
  opt.window = parse_window(a.window);

  auto fits = parallel_map<profiles::DiffusionFit>(a.elements.size(), a.common.jobs, [&](std::size_t i) {
    return profiles::fit_diffusion(prof, a.elements[i], opt);
  });
  ResultTable t;
  t.add_column("element", "").add_column("length", "nm").add_column("length_sigma", "nm");
  t.add_column("D", "cm2/s").add_column("D_sigma", "cm2/s");
  t.add_column("z0", "nm").add_column("z0_sigma", "nm");
  t.add_column("c0", "1").add_column("baseline", "1").add_column("residual_rms", "1");
  t.add_column("resolution_limited", "1");
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    t.add_row({a.elements[i], f.length_nm, f.length_sigma_nm, f.d_cm2_s, f.d_sigma_cm2_s, f.z0_nm,
               f.z0_sigma_nm, f.c0, f.baseline, f.residual_rms,
               std::int64_t{f.resolution_limited ? 1 : 0}});
  }
  std::vector<std::pair<std::string, std::string>> params{
      {"elements", join(a.elements)}, {"time_s", num(a.time_s)}, {"normalized", a.raw ? "no" : "yes"}};
  if (opt.window) params.emplace_back("window_nm", num(opt.window->first) + ":" + num(opt.window->second));
  stamp(t, "profile fit", params, inputs);

  ResultTable plot;
  plot.add_column("z", "nm");
  for (const auto& e : a.elements) plot.add_column(e, "1").add_column(e + "_fit", "1");
  for (std::size_t j = 0; j < prof.z_nm.size(); ++j) {
    const double z = prof.z_nm[j];
    std::vector<Cell> row{z};
    for (std::size_t i = 0; i < a.elements.size(); ++i) {
      const auto& f = fits[i];
      row.emplace_back(prof.channel(a.elements[i]).values[j]);
      row.emplace_back(profiles::erfc_profile(z, f.c0, f.z0_nm, f.length_nm, f.baseline));
    }
    plot.add_row(std::move(row));
  }
  emit(a.common, t, io::PlotKind::Profile, &plot, out);
}

// ---------------------------------------------------------------- vacancy

struct VacancyArgs {
  Common common;
  std::string schedule;
  double buffer_nm = 8.5;
  std::optional<double> max_dt;
  std::optional<double> record_every;
  std::optional<double> probe_depth;
  bool final_profile = false;
  std::vector<double> thicknesses{0, 2, 5, 10, 20, 40};
};

vacancy::RunSetup vacancy_setup(const VacancyArgs& a, std::vector<Input>& inputs) {
  vacancy::RunSetup setup;
  std::optional<fs::path> path;
  if (!a.schedule.empty()) path = a.schedule;
  else path = config_file(a.common, "vacancy.toml");
  if (path) {
    inputs.push_back({path->string(), io::read_file(*path)});
    setup = vacancy::parse_setup(inputs.back().text, inputs.back().path);
  } else {
    setup.schedule = vacancy::default_schedule(a.buffer_nm);
    setup.params = vacancy::VacancyParams::defaults();
  }
  if (a.max_dt) setup.sim.max_dt_s = *a.max_dt;
  if (a.record_every) setup.sim.record_every_s = *a.record_every;
  if (a.probe_depth) setup.probe_depth_nm = *a.probe_depth;
  return setup;
}

void cmd_vacancy_sim(const VacancyArgs& a, std::ostream& out) {
  std::vector<Input> inputs;
  const auto setup = vacancy_setup(a, inputs);
  const auto r = vacancy::simulate(setup.schedule, setup.params, setup.sim);
  ResultTable t;
  std::optional<io::PlotKind> kind;
  if (a.final_profile) {
    t.add_column("z", "nm").add_column("c", "1");
    for (std::size_t i = 0; i < r.final_state.c.size(); ++i) {
      t.add_row({setup.params.dz_nm * (static_cast<double>(i) + 0.5), r.final_state.c[i]});
    }
    kind = io::PlotKind::Profile;
  } else {
    t.add_column("t", "s").add_column("thickness", "nm").add_column("mean_c", "1");
    for (const auto& p : r.series) {
      t.add_row({p.t_s, p.thickness_nm, std::isfinite(p.mean_c) ? Cell{p.mean_c} : Cell{}});
    }
    kind = io::PlotKind::Timeseries;
  }
  std::vector<std::pair<std::string, std::string>> params{
      {"schedule", inputs.empty() ? "default" : inputs.front().path},
      {"max_dt_s", num(setup.sim.max_dt_s)},
      {"dz_nm", num(setup.params.dz_nm)},
      {"diffusivity_nm2_s", num(setup.params.diffusivity_nm2_s)}};
  if (inputs.empty()) params.emplace_back("buffer_nm", num(a.buffer_nm));
  if (r.empty_film) params.emplace_back("warning", "empty film; mean concentration undefined");
  stamp(t, a.final_profile ? "vacancy sim --final-profile" : "vacancy sim", params, inputs);
  emit(a.common, t, kind, nullptr, out);
}

void cmd_vacancy_scan(const VacancyArgs& a, std::ostream& out) {
  std::vector<Input> inputs;
  auto setup = vacancy_setup(a, inputs);
  vacancy::ScanOptions opt;
  opt.sim = setup.sim;
  opt.probe_depth_nm = setup.probe_depth_nm;
  opt.threads = resolve_jobs(a.common.jobs);
  const auto pts = vacancy::saturation_scan(a.thicknesses, setup.schedule, setup.params, opt);
  ResultTable t;
  t.add_column("buffer", "nm").add_column("mean_c", "1");
  for (const auto& p : pts) {
    t.add_row({p.buffer_nm, std::isfinite(p.final_mean_c) ? Cell{p.final_mean_c} : Cell{}});
  }
  std::vector<std::string> th;
  for (double x : a.thicknesses) th.push_back(num(x));
  stamp(t, "vacancy scan",
        {{"schedule", inputs.empty() ? "default" : inputs.front().path},
         {"thicknesses_nm", join(th)},
         {"probe_depth_nm", num(setup.probe_depth_nm)}},
        inputs);
  emit(a.common, t, io::PlotKind::Timeseries, nullptr, out);
}

// ---------------------------------------------------------------- film

struct FilmArgs {
  Common common;
  std::vector<std::string> files;
  std::string detrend = "plane";
  std::optional<double> pitch;
  std::string records;
  std::string rules;
  std::string sample = "sample";
  std::string substrate = "gaas";
  std::string prep = "capped";
  std::string doping = "undoped";
  std::optional<double> temperature;
  double buffer_shots = 0.0;
};

void cmd_film_rms(const FilmArgs& a, std::ostream& out) {
  const auto inputs = read_inputs(a.files);
  const auto detrend = film::parse_detrend(a.detrend);
  auto results = parallel_map<std::pair<film::HeightMap, double>>(inputs.size(), a.common.jobs, [&](std::size_t i) {
    auto map = io::parse_height_map(inputs[i].text, inputs[i].path, a.pitch);
    const double rms = film::rms_roughness(map, detrend);
    return std::pair{std::move(map), rms};
  });
  ResultTable t;
  t.add_column("file", "").add_column("rows", "1").add_column("cols", "1");
  t.add_column("pitch", "nm").add_column("rms", "pm");
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& [m, rms] = results[i];
    t.add_row({inputs[i].path, static_cast<std::int64_t>(m.rows), static_cast<std::int64_t>(m.cols),
               m.pitch_nm, rms});
  }
  stamp(t, "film rms", {{"detrend", a.detrend}}, inputs);
  emit(a.common, t, std::nullopt, nullptr, out);
}

void cmd_film_predict(const FilmArgs& a, std::ostream& out) {
  std::vector<Input> inputs;
  film::PhaseRules rules;
  if (!a.rules.empty()) {
    inputs.push_back({a.rules, io::read_file(a.rules)});
    rules = film::parse_rules(inputs.back().text, inputs.back().path);
  } else if (auto p = config_file(a.common, "phase_rules.toml")) {
    inputs.push_back({p->string(), io::read_file(*p)});
    rules = film::parse_rules(inputs.back().text, inputs.back().path);
  }
  std::vector<io::NamedRecord> records;
  if (!a.records.empty()) {
    inputs.push_back({a.records, io::read_file(a.records)});
    records = io::parse_growth_records(inputs.back().text, inputs.back().path);
  } else {
    if (!a.temperature) fail(ErrorKind::Usage, "film predict needs --temperature or --records");
    film::GrowthRecord r;
    r.substrate = film::parse_substrate(a.substrate);
    r.prep = film::parse_prep(a.prep);
    r.doping = film::parse_doping(a.doping);
    r.temperature_c = *a.temperature;
    r.buffer_shots = a.buffer_shots;
    records.push_back({a.sample, r});
  }
  ResultTable t;
  t.add_column("sample", "").add_column("substrate", "").add_column("prep", "").add_column("doping", "");
  t.add_column("temperature", "C").add_column("buffer_shots", "1").add_column("buffer_thickness", "nm");
  t.add_column("phase", "").add_column("rule", "1").add_column("basis", "");
  for (const auto& nr : records) {
    const auto pred = film::predict_phase(nr.record, rules);
    t.add_row({nr.sample, std::string(film::to_string(nr.record.substrate)),
               std::string(film::to_string(nr.record.prep)),
               std::string(film::to_string(nr.record.doping)), nr.record.temperature_c,
               nr.record.buffer_shots, film::thickness_from_shots(nr.record.buffer_shots),
               std::string(spectra::to_string(pred.phase)), std::int64_t{pred.rule}, pred.reason});
  }
  stamp(t, "film predict",
        {{"rutile_temperature_c", num(rules.rutile_temperature_c)},
         {"rutile_buffer_shots", num(rules.rutile_buffer_shots)},
         {"anatase_window_c", num(rules.anatase_lo_c) + ":" + num(rules.anatase_hi_c)}},
        inputs);
  emit(a.common, t, std::nullopt, nullptr, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Analysis tools for epitaxial TiO2 films on III-V substrates", "tiox"};
  app.set_version_flag("--version", std::string("tiox ") + TIOX_VERSION);
  app.require_subcommand(1);

  MciaArgs mcia_a;
  auto* mcia_cmd = app.add_subcommand("mcia", "Minimal coincident interface area map");
  add_common(mcia_cmd, mcia_a.common);
  mcia_cmd->add_option("--substrate", mcia_a.substrates, "Substrate lattices")->delimiter(',');
  mcia_cmd->add_option("--film", mcia_a.films, "Film lattices")->delimiter(',');
  mcia_cmd->add_option("--planes", mcia_a.planes, "Film planes, e.g. 001,101,110")->delimiter(',');
  mcia_cmd->add_option("--substrate-plane", mcia_a.substrate_plane);
  mcia_cmd->add_option("--max-strain", mcia_a.max_strain, "Maximum linear strain");
  mcia_cmd->add_option("--max-area", mcia_a.max_area, "Maximum interface area, A^2");
  mcia_cmd->add_option("--max-index", mcia_a.max_index, "Maximum supercell index");
  mcia_cmd->add_option("--metric", mcia_a.metric)->check(CLI::IsMember({"principal", "symmetric"}));
  mcia_cmd->add_option("--lattices", mcia_a.lattices, "Extra lattice definitions (TOML)");

  XrdArgs xrd_a;
  auto* xrd_cmd = app.add_subcommand("xrd-fit", "Voigt fit and size/strain of one reflection");
  add_common(xrd_cmd, xrd_a.common);
  xrd_cmd->add_option("files", xrd_a.files, "Scan files (2theta, counts)")->required();
  xrd_cmd->add_option("--window", xrd_a.window, "Fit window lo:hi in degrees");
  xrd_cmd->add_option("--lambda,--wavelength", xrd_a.wavelength, "X-ray wavelength, A");
  xrd_cmd->add_option("--K,--k", xrd_a.k, "Scherrer constant");
  xrd_cmd->add_option("--instrument-fwhm-g", xrd_a.inst_g, "Instrument Gaussian FWHM, deg");
  xrd_cmd->add_option("--instrument-fwhm-l", xrd_a.inst_l, "Instrument Lorentzian FWHM, deg");
  xrd_cmd->add_option("--reflection", xrd_a.reflection, "Indices of the reflection, e.g. 004");
  xrd_cmd->add_option("--family", xrd_a.family)->check(CLI::IsMember({"cubic", "tetragonal"}));

  auto* spectra_cmd = app.add_subcommand("spectra", "Raman, PLE and lifetime analysis");
  spectra_cmd->require_subcommand(1);
  SpectraArgs cls_a, ple_a, life_a;
  auto* cls_cmd = spectra_cmd->add_subcommand("classify", "Raman phase fingerprint");
  add_common(cls_cmd, cls_a.common);
  cls_cmd->add_option("files", cls_a.files)->required();
  cls_cmd->add_option("--unit", cls_a.unit, "x unit override");
  cls_cmd->add_option("--min-prominence", cls_a.min_prominence, "Relative peak prominence");
  cls_cmd->add_option("--threshold", cls_a.threshold, "Minimum weighted mode fraction");
  auto* ple_cmd = spectra_cmd->add_subcommand("ple-fit", "Single resonance line fit");
  add_common(ple_cmd, ple_a.common);
  ple_cmd->add_option("files", ple_a.files)->required();
  ple_cmd->add_option("--unit", ple_a.unit, "x unit override (THz or nm)");
  ple_cmd->add_option("--model", ple_a.model)->check(CLI::IsMember({"gaussian", "lorentzian"}));
  auto* life_cmd = spectra_cmd->add_subcommand("lifetime", "Exponential decay fit");
  add_common(life_cmd, life_a.common);
  life_cmd->add_option("files", life_a.files)->required();
  life_cmd->add_option("--unit", life_a.unit, "x unit override (s or ms)");

  auto* profile_cmd = app.add_subcommand("profile", "EELS depth profiles");
  profile_cmd->require_subcommand(1);
  ProfileArgs prof_a;
  auto* pfit_cmd = profile_cmd->add_subcommand("fit", "erfc interdiffusion fit");
  add_common(pfit_cmd, prof_a.common);
  pfit_cmd->add_option("file", prof_a.file)->required();
  pfit_cmd->add_option("--element", prof_a.elements, "Channels to fit")->delimiter(',')->required();
  pfit_cmd->add_option("--time", prof_a.time_s, "Thermal budget, s");
  pfit_cmd->add_option("--window", prof_a.window, "Fit window lo:hi in nm");
  pfit_cmd->add_flag("--raw", prof_a.raw, "Skip per-channel normalization");

  auto* vac_cmd = app.add_subcommand("vacancy", "Vacancy rate-equation model");
  vac_cmd->require_subcommand(1);
  VacancyArgs sim_a, scan_a;
  auto* sim_cmd = vac_cmd->add_subcommand("sim", "Simulate one growth schedule");
  auto* scan_cmd = vac_cmd->add_subcommand("scan", "Buffer-thickness saturation scan");
  for (auto [cmd, va] : {std::pair{sim_cmd, &sim_a}, std::pair{scan_cmd, &scan_a}}) {
    add_common(cmd, va->common);
    cmd->add_option("schedule,--schedule", va->schedule, "Schedule TOML");
    cmd->add_option("--max-dt", va->max_dt, "Largest time step, s");
    cmd->add_option("--record-every", va->record_every, "Time-series spacing, s");
    cmd->add_option("--probe-depth", va->probe_depth, "Averaging depth above the substrate, nm");
  }
  sim_cmd->add_option("--buffer-nm", sim_a.buffer_nm, "Vacuum buffer thickness (default schedule)");
  sim_cmd->add_flag("--final-profile", sim_a.final_profile, "Emit the final depth profile");
  scan_cmd->add_option("--buffers,--thicknesses", scan_a.thicknesses, "Buffer thicknesses, nm")->delimiter(',');

  auto* film_cmd = app.add_subcommand("film", "AFM roughness and growth rules");
  film_cmd->require_subcommand(1);
  FilmArgs rms_a, pred_a;
  auto* rms_cmd = film_cmd->add_subcommand("rms", "RMS roughness of height maps");
  add_common(rms_cmd, rms_a.common);
  rms_cmd->add_option("files", rms_a.files)->required();
  rms_cmd->add_option("--detrend", rms_a.detrend)->check(CLI::IsMember({"none", "plane"}));
  rms_cmd->add_option("--pitch", rms_a.pitch, "Pixel spacing, nm");
  auto* pred_cmd = film_cmd->add_subcommand("predict", "Empirical phase rules");
  add_common(pred_cmd, pred_a.common);
  pred_cmd->add_option("--records", pred_a.records, "Growth records CSV");
  pred_cmd->add_option("--rules", pred_a.rules, "Phase rules TOML");
  pred_cmd->add_option("--sample", pred_a.sample);
  pred_cmd->add_option("--substrate", pred_a.substrate);
  pred_cmd->add_option("--prep", pred_a.prep);
  pred_cmd->add_option("--doping", pred_a.doping);
  pred_cmd->add_option("--tgrow,--temperature", pred_a.temperature, "Growth temperature, C");
  pred_cmd->add_option("--buffer-shots", pred_a.buffer_shots, "Vacuum buffer laser shots");

  if (!args.empty() && !args.front().empty() && args.front().front() != '-') {
    const auto known = app.get_subcommands([&](CLI::App* s) { return s->get_name() == args.front(); });
    if (known.empty()) {
      err << "tiox: unknown subcommand '" << args.front() << "'\n" << app.help();
      return exit_code(ErrorKind::Usage);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorKind::Usage);
  }

  try {
    if (mcia_cmd->parsed()) cmd_mcia(mcia_a, out);
    else if (xrd_cmd->parsed()) cmd_xrd(xrd_a, out);
    else if (cls_cmd->parsed()) cmd_classify(cls_a, out);
    else if (ple_cmd->parsed()) cmd_ple(ple_a, out);
    else if (life_cmd->parsed()) cmd_lifetime(life_a, out);
    else if (pfit_cmd->parsed()) cmd_profile(prof_a, out);
    else if (sim_cmd->parsed()) cmd_vacancy_sim(sim_a, out);
    else if (scan_cmd->parsed()) cmd_vacancy_scan(scan_a, out);
    else if (rms_cmd->parsed()) cmd_film_rms(rms_a, out);
    else if (pred_cmd->parsed()) cmd_film_predict(pred_a, out);
  } catch (const Error& e) {
    err << "tiox: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "tiox: " << e.what() << "\n";
    return exit_code(ErrorKind::InvalidArgument);
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace tiox::cli
