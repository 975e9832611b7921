#include <doctest.h>

#include "approx.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "approx.hpp"
#include "synth.hpp"
#include "tiox/cli.hpp"
#include "tiox/error.hpp"
#include "tiox/plot.hpp"
#include "tiox/table.hpp"
#include "tiox/textio.hpp"

using namespace tiox;
using namespace tiox::io;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run tiox_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("tiox_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string scan_csv(const xrd::DiffractionScan& s) {
  std::ostringstream os;
  os << "2theta_deg,counts\n";
  os.precision(10);
  for (std::size_t i = 0; i < s.two_theta.size(); ++i) os << s.two_theta[i] << "," << s.intensity[i] << "\n";
  return os.str();
}

std::string spectrum_csv(const spectra::Spectrum& s, const std::string& header) {
  std::ostringstream os;
  os << header << "\n";
  os.precision(12);
  for (std::size_t i = 0; i < s.x.size(); ++i) os << s.x[i] << "," << s.y[i] << "\n";
  return os.str();
}

// data rows of a CSV result, provenance dropped
std::vector<std::string> body(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream is(csv);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.front() != '#') out.push_back(line);
  }
  return out;
}

std::map<std::string, std::string> provenance(const std::string& csv) {
  std::map<std::string, std::string> out;
  std::istringstream is(csv);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) != 0) continue;
    const auto colon = line.find(": ");
    out[line.substr(2, colon - 2)] = line.substr(colon + 2);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

TEST_CASE("result table") {
  ResultTable t;
  t.add_column("sample", "").add_column("area", "A2").add_column("n", "1");
  CHECK(t.columns[1].header() == "area_A2");
  CHECK(t.columns[2].header() == "n");
  CHECK(t.columns[0].header() == "sample");
  t.add_row({std::string("a"), 1.5, std::int64_t{3}});
  t.add_row({std::string("b, c"), Cell{}, std::int64_t{-1}});
  t.note("tool", "tiox");
  CHECK(t.index("area") == 1);
  CHECK(t.has("n"));
  CHECK_FALSE(t.has("area_A2"));
  CHECK(t.number(0, 1) == 1.5);
  CHECK(t.number(0, 2) == 3.0);
  CHECK(std::isnan(t.number(1, 1)));
  CHECK(t.text(0, 0) == "a");
  CHECK(t.to_csv() == "# tool: tiox\nsample,area_A2,n\na,1.5,3\n\"b, c\",,-1\n");

  try {
    t.add_row({1.0});
    FAIL("short row accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SchemaMismatch);
  }
  CHECK_THROWS_AS(t.index("nope"), Error);
  CHECK_THROWS_AS(t.number(0, 0), Error);

  ResultTable bad;
  bad.add_column("x", "");
  bad.rows.push_back({1.0});
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("number formatting and digests") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333");
  CHECK(format_number(1e-17) == "1e-17");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK_THROWS_AS(read_file("/nonexistent/file.csv"), Error);
}

TEST_CASE("delimited reader") {
  const auto d = parse_delimited("# sample: S1\n# unit: THz\nx;y\n1;2\n\n3;4\n", "t", 2);
  CHECK(d.header == std::vector<std::string>{"x", "y"});
  CHECK(d.meta.at("sample") == "S1");
  CHECK(d.meta.at("unit") == "THz");
  CHECK(d.rows() == 2);
  CHECK(d.columns[1][1] == 4.0);

  const auto w = parse_delimited("1 2 3\n4\t5\t6\n+7,8e-1,-9\n", "t");
  CHECK(w.columns.size() == 3);
  CHECK(w.columns[1][2] == rel(0.8));
  CHECK(w.columns[2][2] == -9.0);

  try {
    parse_delimited("x,y\n1,2\n3,oops\n", "scan.csv");
    FAIL("bad row accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("scan.csv:3") != std::string::npos);
    CHECK(exit_code(e.kind()) == 3);
  }
  try {
    parse_delimited("1,2\n3\n", "t");
    FAIL("ragged row accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_delimited("# only comments\n", "t"), ParseError);
  CHECK_THROWS_AS(parse_delimited("a\n1\n", "t", 2), ParseError);
}

TEST_CASE("spectrum reader units") {
  const auto raman = parse_spectrum("shift_cm-1,counts\n300,1\n200,2\n100,3\n", "r");
  CHECK(raman.unit == spectra::XUnit::Wavenumber);
  CHECK(raman.x == std::vector<double>{100, 200, 300});
  CHECK(raman.y == std::vector<double>{3, 2, 1});

  const auto decay = parse_spectrum("time_ms,signal\n0,1\n1,0.5\n", "d");
  CHECK(decay.unit == spectra::XUnit::Second);
  CHECK(decay.x[1] == rel(1e-3));

  const auto ple = parse_spectrum("# unit: THz\n# sample: GaAs-HT-2\n195.5 1\n195.6 2\n", "p");
  CHECK(ple.unit == spectra::XUnit::THz);
  CHECK(ple.sample_id == "GaAs-HT-2");
  CHECK(parse_spectrum("x,y\n1,2\n2,3\n", "o", "nm").unit == spectra::XUnit::Nanometer);

  CHECK_THROWS_AS(parse_spectrum("1,2\n2,3\n", "nounit"), ParseError);
  CHECK_THROWS_AS(parse_spectrum("x_parsec,y\n1,2\n2,3\n", "bad"), ParseError);
}

TEST_CASE("profile, height map and growth record readers") {
  const auto p = parse_profile("z_nm,Ga,Ti\n-1,10,0\n0,5,5\n1,0,10\n", "prof");
  CHECK(p.channels.size() == 2);
  CHECK(p.channel("Ti").values[2] == 10.0);
  CHECK_THROWS_AS(parse_profile("-1,10\n0,5\n", "prof"), ParseError);

  const auto m = parse_height_map("# pitch_nm: 3.9\n1 2 3\n4 5 6\n", "afm");
  CHECK(m.rows == 2);
  CHECK(m.cols == 3);
  CHECK(m.at(1, 0) == 4.0);
  CHECK(m.pitch_nm == 3.9);
  const auto r = parse_height_map("# rows: 2\n# cols: 2\n1\n2\n3\n4\n", "raster", 2.0);
  CHECK(r.at(1, 0) == 3.0);
  CHECK(r.pitch_nm == 2.0);
  CHECK_THROWS_AS(parse_height_map("# rows: 2\n# cols: 3\n1\n2\n", "raster"), ParseError);

  const auto recs = parse_growth_records(
      "sample,substrate,prep,temperature_c,buffer_shots,doping\n"
      "GaAs-LT-1,GaAs,arsenic-capped,390,70,bulk\n"
      "GaAs-HT-2,gaas,oxide-desorbed,565,0,undoped\n",
      "records");
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].sample == "GaAs-LT-1");
  CHECK(recs[0].record.prep == film::SurfacePrep::Capped);
  CHECK(recs[1].record.temperature_c == 565.0);
  try {
    parse_growth_records("sample,substrate,prep,temperature_c,buffer_shots\nA,GaAs,capped,hot,70\n", "rec");
    FAIL("bad record accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_growth_records("sample,substrate\nA,GaAs\n", "rec"), ParseError);
}

TEST_CASE("plot data schemas") {
  ResultTable empty;
  empty.add_column("substrate", "").add_column("film", "").add_column("hkl", "").add_column("area", "A2");
  for (auto kind : {PlotKind::Map, PlotKind::PeakFit, PlotKind::Profile, PlotKind::Timeseries}) {
    try {
      emit_plot_data(empty, kind, PlotFormat::Csv);
      FAIL("empty table accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SchemaMismatch);
    }
  }

  ResultTable map = empty;
  map.add_row({std::string("GaAs"), std::string("rutile"), std::string("110"), 463.4});
  map.add_row({std::string("GaAs"), std::string("rutile"), std::string("210"), 511.4});
  map.add_row({std::string("GaAs"), std::string("anatase"), std::string("001"), 127.8});
  map.add_row({std::string("GaSb"), std::string("rutile"), std::string("110"), Cell{}});
  const auto csv = emit_plot_data(map, PlotKind::Map, PlotFormat::Csv);
  const auto rows = body(csv);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "substrate,film,hkl,area_A2,is_minimum");
  CHECK(rows[1].substr(rows[1].size() - 2) == ",1");
  CHECK(rows[2].substr(rows[2].size() - 2) == ",0");
  CHECK(rows[3].substr(rows[3].size() - 2) == ",1");
  CHECK(rows[4].substr(rows[4].size() - 2) == ",0");
  const auto svg = emit_plot_data(map, PlotKind::Map, PlotFormat::Svg);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg == emit_plot_data(map, PlotKind::Map, PlotFormat::Svg));

  ResultTable wrong;
  wrong.add_column("t", "s").add_column("c", "1");
  wrong.add_row({1.0, 2.0});
  CHECK_THROWS_AS(emit_plot_data(wrong, PlotKind::Map, PlotFormat::Csv), Error);
  CHECK_THROWS_AS(emit_plot_data(wrong, PlotKind::PeakFit, PlotFormat::Csv), Error);
  CHECK_NOTHROW(emit_plot_data(wrong, PlotKind::Timeseries, PlotFormat::Svg));

  ResultTable fit;
  fit.add_column("two_theta", "deg").add_column("observed", "counts").add_column("fit", "counts");
  fit.add_row({27.0, 10.0, 9.5});
  fit.add_row({27.1, 12.0, 12.25});
  const auto pf = body(emit_plot_data(fit, PlotKind::PeakFit, PlotFormat::Csv));
  REQUIRE(pf.size() == 3);
  const auto r0 = split(pf[1], ',');
  const auto r1 = split(pf[2], ',');
  CHECK(std::stod(r0.back()) == rel(0.5));
  CHECK(std::stod(r1.back()) == rel(-0.25));

  CHECK(parse_plot_kind("peak-fit") == PlotKind::PeakFit);
  CHECK_THROWS_AS(parse_plot_kind("pie"), Error);
}

TEST_CASE("cli usage errors") {
  auto r = tiox_run({"bogus"});
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown subcommand 'bogus'") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(tiox_run({}).code == 2);
  CHECK(tiox_run({"spectra"}).code == 2);
  CHECK(tiox_run({"mcia", "--max-strain", "abc"}).code == 2);
  CHECK(tiox_run({"xrd-fit", "/nonexistent/scan.csv"}).code == 2);
  CHECK(tiox_run({"--version"}).code == 0);
  CHECK(tiox_run({"--version"}).out.find("tiox 0.1.0") != std::string::npos);
}

TEST_CASE("cli mcia") {
  const auto r = tiox_run({"mcia", "--substrate", "gaas", "--film", "anatase", "--planes", "001"});
  REQUIRE(r.code == 0);
  const auto rows = body(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "substrate,film,hkl,area_A2,misfit,n_sub,n_film,rotation_deg,minimal");
  CHECK(rows[1].rfind("GaAs,anatase,001,127.839", 0) == 0);
  const auto prov = provenance(r.out);
  CHECK(prov.at("tool") == "tiox 0.1.0");
  CHECK(prov.at("command") == "mcia");
  CHECK(prov.at("param.max_strain") == "0.012");

  // re-running with the recorded parameters reproduces the table
  const auto again = tiox_run({"mcia", "--substrate", prov.at("param.substrates"), "--film",
                               prov.at("param.films"), "--planes", prov.at("param.planes"),
                               "--substrate-plane", prov.at("param.substrate_plane"), "--max-strain",
                               prov.at("param.max_strain"), "--max-area", prov.at("param.max_area_A2"),
                               "--max-index", prov.at("param.max_index"), "--metric",
                               prov.at("param.metric")});
  CHECK(again.out == r.out);

  const auto none = tiox_run({"mcia", "--substrate", "gaas", "--film", "anatase", "--planes", "001",
                              "--max-strain", "0.0001", "--max-area", "20"});
  CHECK(none.code == 4);
  CHECK(none.err.find("NoMatch") != std::string::npos);
}

TEST_CASE("cli parse errors name the line") {
  TempDir dir;
  const auto path = dir.write("bad.csv", "2theta_deg,counts\n27.0,10\n27.1,ten\n");
  const auto r = tiox_run({"xrd-fit", path});
  CHECK(r.code == 3);
  CHECK(r.err.find("bad.csv:3") != std::string::npos);
}

TEST_CASE("cli numeric failures exit 4") {
  TempDir dir;
  std::string flat = "2theta_deg,counts\n";
  for (int i = 0; i < 100; ++i) flat += std::to_string(20.0 + 0.01 * i) + "," + std::to_string(100 + (i * 7919) % 5) + "\n";
  const auto r = tiox_run({"xrd-fit", dir.write("flat.csv", flat)});
  CHECK(r.code == 4);
  CHECK(r.err.find("IllPosed") != std::string::npos);
}

TEST_CASE("cli xrd-fit round-trip and output file") {
  TempDir dir;
  const auto b = synth::breadths_for(22.0, 0.68, 27.4);
  synth::VoigtSpec v;
  v.fwhm_g = b.fwhm_g_deg;
  v.fwhm_l = b.fwhm_l_deg;
  v.half_width = 2.5;
  const auto path = dir.write("scan.csv", scan_csv(synth::voigt_scan(v, 42)));
  const auto r = tiox_run({"xrd-fit", path, "--window", "24.9:29.9", "--reflection", "110"});
  REQUIRE(r.code == 0);
  const auto prov = provenance(r.out);
  CHECK(prov.at("input." + path) == "sha256:" + sha256_hex(read_file(path)));
  CHECK(r.out.find("tau_nm") != std::string::npos);

  const auto out_file = dir.file("result.csv");
  const auto w = tiox_run({"xrd-fit", path, "--window", "24.9:29.9", "--reflection", "110", "-o", out_file});
  CHECK(w.code == 0);
  CHECK(w.out.empty());
  CHECK(read_file(out_file) == r.out);

  const auto plot = tiox_run({"xrd-fit", path, "--window", "24.9:29.9", "--format", "svg-plot-data"});
  CHECK(plot.code == 0);
  CHECK(plot.out.rfind("<svg", 0) == 0);
  CHECK(tiox_run({"xrd-fit", path, "--window", "24.9-29.9"}).code == 2);
}

TEST_CASE("cli spectra, profile, vacancy and film") {
  TempDir dir;
  const auto raman = dir.write("raman.csv", "shift_cm-1,counts\n" + [] {
    std::string s;
    for (int x = 100; x <= 800; ++x) {
      double y = 0.002 * x;
      for (double c : {449.0, 614.0}) y += 5.0 / (1.0 + std::pow((x - c) / 4.0, 2));
      s += std::to_string(x) + "," + std::to_string(y) + "\n";
    }
    return s;
  }());
  auto r = tiox_run({"spectra", "classify", raman});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Rutile") != std::string::npos);

  synth::LineSpec l;
  l.center_thz = 197.16;
  l.fwhm_ghz = 50.9;
  r = tiox_run({"spectra", "ple-fit", dir.write("ple.csv", spectrum_csv(synth::line_spectrum(l, 1), "frequency_THz,signal"))});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("197.16") != std::string::npos);

  synth::DecaySpec d;
  d.t1_ms = 5.3;
  r = tiox_run({"spectra", "lifetime", dir.write("decay.csv", spectrum_csv(synth::decay_trace(d, 1), "time_s,signal"))});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("t1_ms") != std::string::npos);

  const auto prof = synth::erfc_profile(1e-17, 3000.0, 0.01, 3);
  std::string ptxt = "z_nm,Ga\n";
  for (std::size_t i = 0; i < prof.z_nm.size(); ++i) {
    ptxt += std::to_string(prof.z_nm[i]) + "," + std::to_string(prof.channels[0].values[i] + 0.05) + "\n";
  }
  r = tiox_run({"profile", "fit", dir.write("prof.csv", ptxt), "--element", "Ga"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("D_cm2/s") != std::string::npos);
  CHECK(tiox_run({"profile", "fit", dir.file("prof.csv"), "--element", "As"}).code == 2);

  r = tiox_run({"vacancy", "scan", "--buffers", "0", "5", "--max-dt", "2"});
  CHECK(r.code == 0);
  CHECK(body(r.out).size() == 3);
  CHECK(tiox_run({"vacancy", "sim", dir.write("bad.toml", "[[segment]]\nspeed = 1\n")}).code == 2);

  std::string afm = "# pitch_nm: 3.9\n";
  for (int i = 0; i < 32; ++i) {
    for (int j = 0; j < 32; ++j) afm += (j ? " " : "") + std::to_string(0.3 * std::sin(2 * M_PI * j / 8.0));
    afm += "\n";
  }
  r = tiox_run({"film", "rms", dir.write("afm.txt", afm)});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("rms_pm") != std::string::npos);

  r = tiox_run({"film", "predict", "--substrate", "gaas", "--prep", "capped", "--tgrow", "390", "--buffer-shots", "500"});
  CHECK(r.code == 0);
  CHECK(r.out.find("Rutile") != std::string::npos);
  r = tiox_run({"film", "predict", "--substrate", "gaas", "--prep", "capped", "--tgrow", "420", "--buffer-shots", "70"});
  CHECK(r.code == 4);
  CHECK(r.err.find("OutOfDomain") != std::string::npos);
}

TEST_CASE("cli config directory from the environment") {
  TempDir dir;
  dir.write("phase_rules.toml", "rutile_buffer_shots = 50\n");
  const std::vector<std::string> args{"film", "predict", "--substrate", "gaas", "--prep", "capped",
                                      "--tgrow", "390", "--buffer-shots", "70"};
  CHECK(tiox_run(args).out.find("Anatase") != std::string::npos);
  ::setenv(cli::kConfigEnv, dir.path().c_str(), 1);
  const auto r = tiox_run(args);
  ::unsetenv(cli::kConfigEnv);
  CHECK(r.out.find("Rutile") != std::string::npos);
  CHECK(r.out.find("param.rutile_buffer_shots: 50") != std::string::npos);

  auto with_flag = args;
  with_flag.insert(with_flag.end(), {"--config", dir.path().string()});
  CHECK(tiox_run(with_flag).out == r.out);

  dir.write("phase_rules.toml", "rutile_buffer = 50\n");
  with_flag = args;
  with_flag.insert(with_flag.end(), {"--config", dir.path().string()});
  CHECK(tiox_run(with_flag).code == 2);
}

TEST_CASE("cli output is byte-reproducible and independent of --jobs") {
  TempDir dir;
  std::vector<std::string> scans;
  for (unsigned i = 0; i < 4; ++i) {
    synth::VoigtSpec v;
    v.center = 27.0 + 0.2 * i;
    scans.push_back(dir.write("s" + std::to_string(i) + ".csv", scan_csv(synth::voigt_scan(v, i))));
  }
  std::vector<std::string> args{"xrd-fit"};
  args.insert(args.end(), scans.begin(), scans.end());
  const auto a = tiox_run(args);
  REQUIRE(a.code == 0);
  CHECK(body(a.out).size() == 5);
  CHECK(tiox_run(args).out == a.out);
  auto par = args;
  par.insert(par.end(), {"--jobs", "4"});
  const auto b = tiox_run(par);
  // the job count is recorded, the table itself is identical
  CHECK(body(b.out) == body(a.out));

  const std::vector<std::string> map{"mcia", "--format", "svg-plot-data"};
  CHECK(tiox_run(map).out == tiox_run(map).out);
  auto map_par = map;
  map_par.insert(map_par.end(), {"-j", "0"});
  CHECK(tiox_run(map_par).out == tiox_run(map).out);
}

#ifdef TIOX_CLI_PATH
TEST_CASE("installed binary exit codes") {
  CHECK(WEXITSTATUS(std::system(TIOX_CLI_PATH " bogus > /dev/null 2>&1")) == 2);
  CHECK(WEXITSTATUS(std::system(TIOX_CLI_PATH " film predict --substrate gaas --prep capped --tgrow 390 "
                                              "--buffer-shots 70 > /dev/null 2>&1")) == 0);
}
#endif

TEST_CASE("shipped example configs load") {
  const std::string dir = std::string(TIOX_SOURCE_DIR) + "/configs";
  const auto sim = tiox_run({"vacancy", "sim", dir + "/vacancy.toml"});
  CHECK(sim.code == 0);
  const auto defaults = tiox_run({"vacancy", "sim"});
  // the example file spells out the built-in schedule
  const double c_file = std::stod(split(body(sim.out).back(), ',').back());
  const double c_default = std::stod(split(body(defaults.out).back(), ',').back());
  CHECK(c_file == rel(c_default).epsilon(0.01));
  CHECK(tiox_run({"mcia", "--config", dir, "--substrate", "inp,ge", "--film", "anatase", "--planes", "001"}).code == 0);
  const auto rules = tiox_run({"film", "predict", "--config", dir, "--substrate", "gaas", "--prep", "capped",
                               "--tgrow", "390", "--buffer-shots", "70"});
  CHECK(rules.code == 0);
  CHECK(rules.out.find("Anatase") != std::string::npos);
}
