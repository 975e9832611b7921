#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tiox/cli.hpp"
#include "tiox/crystal.hpp"
#include "tiox/error.hpp"
#include "tiox/filmstats.hpp"
#include "tiox/mcia.hpp"
#include "tiox/profiles.hpp"
#include "tiox/spectra.hpp"
#include "tiox/vacancysim.hpp"
#include "tiox/xrdfit.hpp"

namespace py = pybind11;
using namespace tiox;

namespace {

struct PyTioxError {};

std::vector<double> to_vec(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

py::dict match_dict(const mcia::Match& m) {
  py::dict d;
  d["area_A2"] = m.area;
  d["misfit"] = m.misfit;
  d["n_sub"] = m.n_sub();
  d["n_film"] = m.n_film();
  d["rotation_deg"] = m.rotation_deg;
  d["m_sub"] = std::vector<long>{m.m_sub(0, 0), m.m_sub(0, 1), m.m_sub(1, 0), m.m_sub(1, 1)};
  d["m_film"] = std::vector<long>{m.m_film(0, 0), m.m_film(0, 1), m.m_film(1, 0), m.m_film(1, 1)};
  return d;
}

mcia::MciaConfig mcia_config(double max_strain, double max_area, long max_index) {
  mcia::MciaConfig cfg;
  cfg.max_linear_strain = max_strain;
  cfg.max_area = max_area;
  cfg.max_index = max_index;
  return cfg;
}

xrd::DiffractionScan scan_of(const py::array_t<double>& two_theta, const py::array_t<double>& counts) {
  return {to_vec(two_theta), to_vec(counts)};
}

spectra::Spectrum spectrum_of(const py::array_t<double>& x, const py::array_t<double>& y, const std::string& unit) {
  spectra::Spectrum s;
  s.x = to_vec(x);
  s.y = to_vec(y);
  s.unit = spectra::parse_unit(unit);
  return s;
}

}  // namespace

PYBIND11_MODULE(_tiox, m) {
  m.doc() = "TiO2-on-III-V epitaxy analysis";

  py::exception<PyTioxError>(m, "TioxError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object cls = py::module_::import("tiox._tiox").attr("TioxError");
      py::object inst = cls(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(cls.ptr(), inst.ptr());
    }
  });

  m.def("enumerate_sublattices", [](long n) {
    std::vector<std::vector<long>> out;
    for (const auto& h : mcia::enumerate_sublattices(n)) out.push_back({h(0, 0), h(0, 1), h(1, 1)});
    return out;
  }, py::arg("n"), "HNF sublattices of index n as (a, b, d) triples");

  const mcia::MciaConfig defaults;
  m.def("mcia", [](const std::string& substrate, const std::string& film, const std::string& plane,
                   double max_strain, double max_area, long max_index) {
    const auto s = crystal::surface_mesh(crystal::find_lattice(substrate), {1, 0, 0});
    const auto f = crystal::surface_mesh(crystal::find_lattice(film), crystal::MillerIndex::parse(plane));
    return match_dict(mcia::find_mcia(s, f, mcia_config(max_strain, max_area, max_index)));
  }, py::arg("substrate"), py::arg("film"), py::arg("plane"), py::arg("max_strain") = defaults.max_linear_strain,
     py::arg("max_area") = defaults.max_area, py::arg("max_index") = defaults.max_index,
     "Minimal coincident interface area of film(plane) on substrate(100)");

  m.def("fit_voigt", [](const py::array_t<double>& two_theta, const py::array_t<double>& counts, double lo, double hi) {
    const auto p = xrd::fit_voigt(scan_of(two_theta, counts), {lo, hi});
    const auto r = xrd::size_strain(p);
    py::dict d;
    d["center"] = p.center;
    d["fwhm_g"] = p.fwhm_g;
    d["fwhm_l"] = p.fwhm_l;
    d["amplitude"] = p.amplitude;
    d["sigma_fwhm_g"] = p.sigma.fwhm_g;
    d["sigma_fwhm_l"] = p.sigma.fwhm_l;
    d["residual_rms"] = p.residual_rms;
    d["tau_nm"] = r.tau_nm.value;
    d["tau_sigma_nm"] = r.tau_nm.sigma;
    d["epsilon_percent"] = r.epsilon_percent.value;
    d["epsilon_sigma_percent"] = r.epsilon_percent.sigma;
    return d;
  }, py::arg("two_theta"), py::arg("counts"), py::arg("lo"), py::arg("hi"),
     "Voigt fit of one reflection followed by Scherrer/Wilson size and strain");

  m.def("voigt", [](double dx, double fwhm_g, double fwhm_l) { return xrd::voigt_unit(dx, fwhm_g, fwhm_l); },
        py::arg("dx"), py::arg("fwhm_g"), py::arg("fwhm_l"));
  m.def("bragg_d", [](double tt) { return xrd::bragg_d(tt); }, py::arg("two_theta_deg"));
  m.def("bragg_two_theta", [](double d) { return xrd::bragg_two_theta(d); }, py::arg("d"));

  m.def("classify_phase", [](const std::vector<double>& centers) {
    const auto c = spectra::classify_phase(centers);
    py::dict d;
    d["phase"] = std::string(spectra::to_string(c.phase));
    d["anatase_score"] = c.anatase_score;
    d["rutile_score"] = c.rutile_score;
    return d;
  }, py::arg("peak_centers_cm1"));

  m.def("fit_line", [](const py::array_t<double>& x, const py::array_t<double>& y, const std::string& unit,
                       const std::string& model) {
    const auto f = spectra::fit_line(spectrum_of(x, y, unit), spectra::parse_line_model(model));
    py::dict d;
    d["center_thz"] = f.center_thz;
    d["fwhm_ghz"] = f.fwhm_ghz;
    d["amplitude"] = f.amplitude;
    d["background"] = f.background;
    d["center_sigma_thz"] = f.sigma.center_thz;
    d["fwhm_sigma_ghz"] = f.sigma.fwhm_ghz;
    return d;
  }, py::arg("x"), py::arg("y"), py::arg("unit") = "THz", py::arg("model") = "gaussian");

  m.def("fit_lifetime", [](const py::array_t<double>& t_s, const py::array_t<double>& y) {
    const auto f = spectra::fit_lifetime(spectrum_of(t_s, y, "s"));
    py::dict d;
    d["t1_ms"] = f.t1_ms;
    d["t1_sigma_ms"] = f.t1_sigma_ms;
    d["amplitude"] = f.amplitude;
    d["background"] = f.background;
    return d;
  }, py::arg("t_s"), py::arg("signal"));

  m.def("diffusion_length", &profiles::diffusion_length, py::arg("d_cm2_s"), py::arg("time_s"));
  m.def("fit_diffusion", [](const py::array_t<double>& z_nm, const py::array_t<double>& values, double time_s) {
    profiles::DepthProfile p;
    p.z_nm = to_vec(z_nm);
    p.channels.push_back({"X", to_vec(values)});
    profiles::DiffusionOptions opt;
    opt.time_s = time_s;
    const auto f = profiles::fit_diffusion(p, "X", opt);
    py::dict d;
    d["length_nm"] = f.length_nm;
    d["d_cm2_s"] = f.d_cm2_s;
    d["d_sigma_cm2_s"] = f.d_sigma_cm2_s;
    d["z0_nm"] = f.z0_nm;
    d["resolution_limited"] = f.resolution_limited;
    return d;
  }, py::arg("z_nm"), py::arg("values"), py::arg("time_s") = 3000.0);

  m.def("saturation_scan", [](const std::vector<double>& thicknesses_nm, double probe_depth_nm) {
    vacancy::ScanOptions opt;
    opt.probe_depth_nm = probe_depth_nm;
    std::vector<std::pair<double, double>> out;
    py::gil_scoped_release release;
    for (const auto& s : vacancy::saturation_scan(thicknesses_nm, vacancy::default_schedule(),
                                                  vacancy::VacancyParams::defaults(), opt)) {
      out.emplace_back(s.buffer_nm, s.final_mean_c);
    }
    return out;
  }, py::arg("thicknesses_nm"), py::arg("probe_depth_nm") = 5.0,
     "(buffer_nm, interface vacancy fraction) pairs with the default schedule and rate laws");

  m.def("rms_roughness", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
                            double pitch_nm, const std::string& detrend) {
    if (h.ndim() != 2) throw py::value_error("expected a 2-D height map");
    film::HeightMap map;
    map.rows = static_cast<std::size_t>(h.shape(0));
    map.cols = static_cast<std::size_t>(h.shape(1));
    map.pitch_nm = pitch_nm;
    map.heights_nm.assign(h.data(), h.data() + h.size());
    return film::rms_roughness(map, film::parse_detrend(detrend));
  }, py::arg("heights_nm"), py::arg("pitch_nm") = 1.0, py::arg("detrend") = "plane", "RMS roughness in pm");

  m.def("predict_phase", [](const std::string& substrate, const std::string& prep, double temperature_c,
                            double buffer_shots) {
    const film::GrowthRecord rec{film::parse_substrate(substrate), film::parse_prep(prep), temperature_c,
                                 buffer_shots, film::Doping::Undoped};
    const auto p = film::predict_phase(rec);
    return py::make_tuple(std::string(spectra::to_string(p.phase)), p.rule);
  }, py::arg("substrate"), py::arg("prep"), py::arg("temperature_c"), py::arg("buffer_shots"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Run a tiox subcommand in-process; returns (exit_code, stdout, stderr)");
}
