#include "tiox/vacancysim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <toml.hpp>

#include "tiox/error.hpp"

namespace tiox::vacancy {

namespace {

constexpr double kNm_per_shot = 0.017;
constexpr double kShotsPerSecond = 3.43;

double checked_rate(const RateFn& f, double p, const char* what, double upper = HUGE_VAL) {
  const double v = f(p);
  require(std::isfinite(v) && v >= 0.0 && v <= upper, ErrorKind::InvalidArgument,
          std::string("vacancy: ") + what + " returned " + std::to_string(v) + ", outside its range");
  return v;
}

}  // namespace

void GrowthSchedule::validate() const {
  for (const auto& s : segments) {
    require(std::isfinite(s.duration_s) && s.duration_s >= 0.0, ErrorKind::InvalidArgument,
            "schedule: segment '" + s.label + "' has a negative duration");
    require(std::isfinite(s.rate_nm_s) && s.rate_nm_s >= 0.0, ErrorKind::InvalidArgument,
            "schedule: segment '" + s.label + "' has a negative deposition rate");
    require(std::isfinite(s.pressure_torr) && s.pressure_torr >= 0.0, ErrorKind::InvalidArgument,
            "schedule: segment '" + s.label + "' has a negative pressure");
  }
}

double GrowthSchedule::total_duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration_s;
  return t;
}

VacancyParams VacancyParams::defaults(double g0, double g_p0_torr, double k0, double k_p0_torr) {
  require(g0 >= 0.0 && g0 <= 1.0 && g_p0_torr > 0.0 && k0 >= 0.0 && k_p0_torr > 0.0,
          ErrorKind::InvalidArgument, "vacancy: rate constants out of range");
  VacancyParams p;
  p.incorporation = [g0, g_p0_torr](double pr) { return g0 / (1.0 + pr / g_p0_torr); };
  p.annihilation = [k0, k_p0_torr](double pr) { return k0 * pr / (pr + k_p0_torr); };
  return p;
}

void VacancyParams::validate() const {
  require(std::isfinite(diffusivity_nm2_s) && diffusivity_nm2_s >= 0.0, ErrorKind::InvalidArgument,
          "vacancy: diffusivity must be >= 0");
  require(std::isfinite(dz_nm) && dz_nm > 0.0, ErrorKind::InvalidArgument, "vacancy: dz must be > 0");
  require(static_cast<bool>(incorporation) && static_cast<bool>(annihilation),
          ErrorKind::InvalidArgument, "vacancy: g(P) and k(P) must be set");
}

double VacancyState::total() const {
  double s = 0.0;
  for (double v : c) s += v;
  return s * dz_nm;
}

double VacancyState::mean() const {
  if (c.empty()) return std::numeric_limits<double>::quiet_NaN();
  return total() / (dz_nm * static_cast<double>(c.size()));
}

double VacancyState::interface_mean(double depth_nm) const {
  if (c.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double film = dz_nm * static_cast<double>(c.size());
  const double d = std::min(depth_nm, film);
  if (d <= 0.0) return c.front();
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double lo = dz_nm * static_cast<double>(i);
    if (lo >= d) break;
    s += c[i] * (std::min(lo + dz_nm, d) - lo);
  }
  return s / d;
}

double stability_limit(const VacancyParams& params) {
  if (params.diffusivity_nm2_s <= 0.0) return std::numeric_limits<double>::infinity();
  return params.dz_nm * params.dz_nm / (2.0 * params.diffusivity_nm2_s);
}

VacancyState step(VacancyState state, const VacancyParams& params, const Segment& segment,
                  double dt) {
  require(std::isfinite(dt) && dt > 0.0, ErrorKind::InvalidArgument, "vacancy: dt must be > 0");
  require(state.dz_nm == params.dz_nm, ErrorKind::InvalidArgument,
          "vacancy: state grid spacing differs from params");
  const double limit = stability_limit(params);
  if (dt > limit * (1.0 + 1e-12)) {
    fail(ErrorKind::StabilityViolation, "vacancy: dt = " + std::to_string(dt) +
                                            " s exceeds the explicit limit dz^2/(2D) = " +
                                            std::to_string(limit) + " s");
  }

  auto& c = state.c;
  const std::size_t n = c.size();
  if (n > 1 && params.diffusivity_nm2_s > 0.0) {
    const double r = params.diffusivity_nm2_s * dt / (params.dz_nm * params.dz_nm);
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double left = i > 0 ? c[i - 1] - c[i] : 0.0;
      const double right = i + 1 < n ? c[i + 1] - c[i] : 0.0;
      next[i] = c[i] + r * (left + right);
    }
    c.swap(next);
  }

  const double k = checked_rate(params.annihilation, segment.pressure_torr, "k(P)");
  if (k > 0.0) {
    const double decay = std::exp(-k * dt);
    for (double& v : c) v *= decay;
    state.pending_source *= decay;
  }

  if (segment.rate_nm_s > 0.0) {
    const double g = checked_rate(params.incorporation, segment.pressure_torr, "g(P)", 1.0);
    const double add = segment.rate_nm_s * dt;
    state.pending_nm += add;
    state.pending_source += g * add;
    const double dz = params.dz_nm;
    while (state.pending_nm >= dz * (1.0 - 1e-9)) {
      const double cell = state.pending_source / state.pending_nm;
      c.push_back(cell);
      state.pending_nm = std::max(0.0, state.pending_nm - dz);
      state.pending_source = cell * state.pending_nm;
    }
  }
  state.t_s += dt;
  return state;
}

SimResult simulate(const GrowthSchedule& schedule, const VacancyParams& params,
                   const SimOptions& opt) {
  schedule.validate();
  params.validate();
  require(opt.max_dt_s > 0.0 && opt.record_every_s > 0.0, ErrorKind::InvalidArgument,
          "vacancy: max_dt and record interval must be > 0");

  SimResult out;
  VacancyState state;
  state.dz_nm = params.dz_nm;
  const double dt_cap = std::min(opt.max_dt_s, 0.9 * stability_limit(params));

  auto record = [&] { out.series.push_back({state.t_s, state.thickness_nm(), state.mean()}); };
  record();
  double next_record = opt.record_every_s;

  for (const auto& seg : schedule.segments) {
    if (seg.duration_s <= 0.0) continue;
    const auto steps = static_cast<std::size_t>(std::ceil(seg.duration_s / dt_cap - 1e-9));
    const double dt = seg.duration_s / static_cast<double>(std::max<std::size_t>(steps, 1));
    for (std::size_t i = 0; i < std::max<std::size_t>(steps, 1); ++i) {
      state = step(std::move(state), params, seg, dt);
      if (state.t_s >= next_record - 1e-9) {
        record();
        while (next_record <= state.t_s + 1e-9) next_record += opt.record_every_s;
      }
    }
    if (out.series.back().t_s != state.t_s) record();
    Snapshot snap{seg.label, state.t_s, {}, state.c};
    snap.z_nm.reserve(state.c.size());
    for (std::size_t i = 0; i < state.c.size(); ++i) {
      snap.z_nm.push_back(params.dz_nm * (static_cast<double>(i) + 0.5));
    }
    out.snapshots.push_back(std::move(snap));
  }
  out.empty_film = state.empty();
  out.final_state = std::move(state);
  return out;
}

std::vector<ScanPoint> saturation_scan(const std::vector<double>& buffer_thicknesses_nm,
                                       const GrowthSchedule& schedule_template,
                                       const VacancyParams& params, const ScanOptions& opt) {
  params.validate();
  schedule_template.validate();
  const auto buf = std::find_if(schedule_template.segments.begin(), schedule_template.segments.end(),
                                [](const Segment& s) { return s.buffer; });
  require(buf != schedule_template.segments.end(), ErrorKind::InvalidArgument,
          "saturation_scan: schedule has no buffer segment");
  require(buf->rate_nm_s > 0.0, ErrorKind::InvalidArgument,
          "saturation_scan: buffer segment must have a positive deposition rate");
  const auto buf_index = static_cast<std::size_t>(buf - schedule_template.segments.begin());
  for (double t : buffer_thicknesses_nm) {
    require(std::isfinite(t) && t >= 0.0, ErrorKind::InvalidArgument,
            "saturation_scan: buffer thickness must be >= 0");
  }

  std::vector<ScanPoint> out(buffer_thicknesses_nm.size());
  auto run_one = [&](std::size_t i) {
    GrowthSchedule s = schedule_template;
    const double thick = buffer_thicknesses_nm[i];
    if (thick == 0.0) {
      s.segments.erase(s.segments.begin() + static_cast<std::ptrdiff_t>(buf_index));
    } else {
      s.segments[buf_index].duration_s = thick / s.segments[buf_index].rate_nm_s;
    }
    const SimResult r = simulate(s, params, opt.sim);
    const double m = opt.probe_depth_nm > 0.0 ? r.final_state.interface_mean(opt.probe_depth_nm)
                                              : r.final_state.mean();
    out[i] = {thick, m};
  };

  unsigned threads = opt.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opt.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, out.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < out.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < out.size(); i = next++) {
        try {
          run_one(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

GrowthSchedule default_schedule(double buffer_nm) {
  const double rate = kNm_per_shot * kShotsPerSecond;
  GrowthSchedule s;
  s.segments.push_back({"buffer", buffer_nm / rate, rate, 0.0, 390.0, true});
  s.segments.push_back({"growth", 60.0 / rate, rate, 20e-3, 390.0, false});
  s.segments.push_back({"anneal", 1800.0, 0.0, 20e-3, 390.0, false});
  return s;
}

RunSetup parse_setup(std::string_view toml_text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    throw ParseError(std::string(source), e.source().begin.line, std::string(e.description()));
  }

  auto number = [](const toml::node& node, const std::string& where) {
    if (auto v = node.value<double>()) return *v;
    fail(ErrorKind::Config, where + " must be a number");
  };

  RunSetup setup;
  double g0 = 0.05, g_p0 = 1e-3, k0 = 1e-3, k_p0 = 1e-3, diff = 1e-2, dz = 0.5;
  bool have_segments = false;
  for (const auto& [key, node] : root) {
    const std::string k(key.str());
    if (k == "params") {
      const auto* tbl = node.as_table();
      if (tbl == nullptr) fail(ErrorKind::Config, "[params] must be a table");
      for (const auto& [f, v] : *tbl) {
        const std::string name(f.str());
        const double x = number(v, "params." + name);
        if (name == "diffusivity_nm2_s") diff = x;
        else if (name == "g0") g0 = x;
        else if (name == "g_p0_torr") g_p0 = x;
        else if (name == "k0_per_s") k0 = x;
        else if (name == "k_p0_torr") k_p0 = x;
        else if (name == "dz_nm") dz = x;
        else fail(ErrorKind::Config, "unknown key params." + name);
      }
    } else if (k == "sim") {
      const auto* tbl = node.as_table();
      if (tbl == nullptr) fail(ErrorKind::Config, "[sim] must be a table");
      for (const auto& [f, v] : *tbl) {
        const std::string name(f.str());
        const double x = number(v, "sim." + name);
        if (name == "max_dt_s") setup.sim.max_dt_s = x;
        else if (name == "record_every_s") setup.sim.record_every_s = x;
        else if (name == "probe_depth_nm") setup.probe_depth_nm = x;
        else fail(ErrorKind::Config, "unknown key sim." + name);
      }
    } else if (k == "segment") {
      const auto* arr = node.as_array();
      if (arr == nullptr) fail(ErrorKind::Config, "segment must be an array of tables ([[segment]])");
      for (const auto& item : *arr) {
        const auto* tbl = item.as_table();
        if (tbl == nullptr) fail(ErrorKind::Config, "each segment must be a table");
        Segment seg;
        seg.label = "segment" + std::to_string(setup.schedule.segments.size() + 1);
        for (const auto& [f, v] : *tbl) {
          const std::string name(f.str());
          if (name == "label") {
            seg.label = v.value<std::string>().value_or(seg.label);
          } else if (name == "buffer") {
            const auto b = v.value<bool>();
            if (!b) fail(ErrorKind::Config, "segment.buffer must be a boolean");
            seg.buffer = *b;
          } else {
            const double x = number(v, "segment." + name);
            if (name == "duration_s") seg.duration_s = x;
            else if (name == "rate_nm_s") seg.rate_nm_s = x;
            else if (name == "pressure_torr") seg.pressure_torr = x;
            else if (name == "temperature_c") seg.temperature_c = x;
            else fail(ErrorKind::Config, "unknown key segment." + name);
          }
        }
        setup.schedule.segments.push_back(std::move(seg));
      }
      have_segments = true;
    } else {
      fail(ErrorKind::Config, "unknown top-level key '" + k + "'");
    }
  }
  if (!have_segments) fail(ErrorKind::Config, "schedule config has no [[segment]] tables");

  try {
    setup.params = VacancyParams::defaults(g0, g_p0, k0, k_p0);
    setup.params.diffusivity_nm2_s = diff;
    setup.params.dz_nm = dz;
    setup.params.validate();
    setup.schedule.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  return setup;
}

RunSetup load_setup(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open schedule config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_setup(buf.str(), path.string());
}

}  // namespace tiox::vacancy
