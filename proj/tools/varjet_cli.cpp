// Command line front end: parse system documents, run the verification
// suites, emit machine readable reports. Detection verdicts are report
// content; only hard errors produce nonzero exit codes.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "varjet/identities.hpp"
#include "varjet/io.hpp"
#include "varjet/riccati.hpp"
#include "varjet/selftest.hpp"
#include "varjet/system.hpp"
#include "varjet/varflow.hpp"

namespace {

using nlohmann::ordered_json;
using namespace varjet;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitSingular = 3;
constexpr int kExitBlowUp = 4;
constexpr int kExitPoleCrossed = 5;
constexpr int kExitIllConditioned = 6;
constexpr int kExitIo = 7;
constexpr int kExitSelfTest = 8;

const char* kExitFooter =
    "Exit codes:\n"
    "  0  success (verdicts, positive or negative, are report content)\n"
    "  1  command line usage error\n"
    "  2  input parse or validation error\n"
    "  3  singular matrix\n"
    "  4  solution blow-up\n"
    "  5  solution pole crossed the requested window\n"
    "  6  ill-conditioned flow\n"
    "  7  file I/O error\n"
    "  8  selftest violation";

Vec parse_vec(const std::string& text) {
  Vec out;
  std::size_t at = 0;
  while (at <= text.size()) {
    const std::size_t comma = text.find(',', at);
    const std::string tok =
        text.substr(at, comma == std::string::npos ? comma : comma - at);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError("invalid number '" + tok + "' in vector argument");
    }
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  return out;
}

ordered_json vec_json(const Vec& v) { return ordered_json(v); }

ordered_json mat_json(const Mat& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void emit(const ordered_json& report, const std::string& out_path) {
  const std::string body = report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << body;
  } else {
    write_text_file(out_path, body);
  }
}

struct IntegFlags {
  double step = 1e-3;
  double max_norm = 1e8;
  bool richardson = false;

  IntegratorConfig config() const {
    IntegratorConfig cfg;
    cfg.step = step;
    cfg.max_norm = max_norm;
    cfg.richardson = richardson;
    return cfg;
  }
};

void add_integ_flags(CLI::App* sub, IntegFlags& f) {
  sub->add_option("--step", f.step, "integrator step length")
      ->capture_default_str();
  sub->add_option("--max-norm", f.max_norm, "blow-up guard threshold")
      ->capture_default_str();
  sub->add_flag("--richardson", f.richardson,
                "attach a half-step defect estimate");
}

void selftest_checks(ordered_json& arr, const char* suite,
                     const SelfTestReport& rep) {
  for (const PropertyCheck& c : rep.checks) {
    ordered_json jc;
    jc["suite"] = suite;
    jc["name"] = c.name;
    jc["trials"] = c.trials;
    jc["bound"] = c.bound;
    jc["worst"] = c.worst;
    jc["ok"] = c.ok;
    arr.push_back(std::move(jc));
  }
}

int run_selftest(std::uint64_t seed, std::size_t trials,
                 std::size_t polarize_trials, const std::string& out_path) {
  const SelfTestReport algebra = algebra_selftest(seed, trials);
  const SelfTestReport polar = polarize_selftest(seed, polarize_trials);

  ordered_json rep = report_skeleton("selftest", digest_hex(""), seed);
  rep["trials"] = {{"algebra", trials}, {"polarize", polarize_trials}};
  ordered_json checks = ordered_json::array();
  selftest_checks(checks, "algebra", algebra);
  selftest_checks(checks, "polarize", polar);
  rep["checks"] = std::move(checks);
  const bool all_ok = algebra.all_ok && polar.all_ok;
  rep["all_ok"] = all_ok;
  emit(rep, out_path);
  return all_ok ? kExitOk : kExitSelfTest;
}

int run_flow(const std::string& sys_path, double tau, const Vec& xi,
             std::optional<Vec> h, double t_end, const IntegFlags& integ,
             const std::string& out_path) {
  const std::string text = read_text_file(sys_path);
  const PolySystem sys = parse_system(text);
  const IntegratorConfig cfg = integ.config();

  ordered_json rep = report_skeleton("flow", digest_hex(text), 0);
  rep["system"] = sys_path;
  rep["tau"] = tau;
  rep["xi"] = vec_json(xi);
  rep["t_end"] = t_end;
  rep["step"] = cfg.step;

  if (h.has_value()) {
    const DirTrajectory traj =
        integrate_directional(sys, tau, xi, *h, t_end, cfg);
    const DirJet3& end = traj.samples.back();
    rep["mode"] = "directional";
    rep["h"] = vec_json(*h);
    rep["samples"] = traj.samples.size();
    ordered_json jend;
    jend["t"] = end.t;
    jend["phi"] = vec_json(end.phi);
    jend["u1"] = vec_json(end.u1);
    jend["u2"] = vec_json(end.u2);
    jend["u3"] = vec_json(end.u3);
    jend["I1"] = vec_json(end.I1);
    jend["I2"] = vec_json(end.I2);
    rep["endpoint"] = std::move(jend);
    if (traj.richardson_defect.has_value()) {
      rep["richardson_defect"] = *traj.richardson_defect;
    }
  } else {
    const JetTrajectory traj = integrate_jets(sys, tau, xi, t_end, cfg);
    const Jet3& end = traj.samples.back();
    rep["mode"] = "jets";
    rep["samples"] = traj.samples.size();
    ordered_json jend;
    jend["t"] = end.t;
    jend["phi"] = vec_json(end.phi);
    jend["Dphi"] = mat_json(end.Dphi);
    jend["D2phi"] = mat_json(end.D2phi);
    jend["D3phi"] = mat_json(end.D3phi);
    rep["endpoint"] = std::move(jend);
    if (traj.richardson_defect.has_value()) {
      rep["richardson_defect"] = *traj.richardson_defect;
    }
  }
  emit(rep, out_path);
  return kExitOk;
}

int run_verify_allwright(const std::string& sys_path, double tau,
                         const Vec& xi, const Vec& h, double t_end,
                         const IntegFlags& integ, const std::string& csv_path,
                         const std::string& out_path) {
  const std::string text = read_text_file(sys_path);
  const PolySystem sys = parse_system(text);
  const IntegratorConfig cfg = integ.config();

  const DirTrajectory traj = integrate_directional(sys, tau, xi, h, t_end, cfg);
  const AllwrightReport sides = allwright_sides(traj);

  double max_normalized = 0.0;
  for (std::size_t i = 0; i < sides.t.size(); ++i) {
    max_normalized = std::max(
        max_normalized, sides.residual_norm[i] / (1.0 + sides.scale[i]));
  }

  ordered_json rep = report_skeleton("verify-allwright", digest_hex(text), 0);
  rep["system"] = sys_path;
  rep["tau"] = tau;
  rep["xi"] = vec_json(xi);
  rep["h"] = vec_json(h);
  rep["t_end"] = t_end;
  rep["step"] = cfg.step;
  rep["samples"] = sides.t.size();
  rep["t"] = ordered_json(sides.t);
  rep["residual"] = ordered_json(sides.residual_norm);
  rep["scale"] = ordered_json(sides.scale);
  rep["max_normalized"] = max_normalized;
  emit(rep, out_path);
  if (!csv_path.empty()) {
    write_text_file(csv_path,
                    residual_csv(sides.t, sides.residual_norm, sides.scale));
  }
  return kExitOk;
}

int run_verify_eq8(const std::string& sys_path, double tau, const Vec& xi,
                   double t_end, const IntegFlags& integ,
                   const std::string& out_path) {
  const std::string text = read_text_file(sys_path);
  const PolySystem sys = parse_system(text);
  const IntegratorConfig cfg = integ.config();

  const JetTrajectory traj = integrate_jets(sys, tau, xi, t_end, cfg);
  const double max_residual = eq8_check(traj, sys);

  ordered_json rep = report_skeleton("verify-eq8", digest_hex(text), 0);
  rep["system"] = sys_path;
  rep["tau"] = tau;
  rep["xi"] = vec_json(xi);
  rep["t_end"] = t_end;
  rep["step"] = cfg.step;
  rep["samples"] = traj.samples.size();
  rep["max_residual"] = max_residual;
  emit(rep, out_path);
  return kExitOk;
}

int run_scalar(const std::string& sys_path, double tau, double xi,
               double t_end, const IntegFlags& integ,
               const std::string& out_path) {
  const std::string text = read_text_file(sys_path);
  const PolySystem sys = parse_system(text);
  const IntegratorConfig cfg = integ.config();

  const ScalarFormulas f = scalar_formulas(sys, tau, xi, t_end, cfg);
  const double schwarzian_residual =
      std::abs(f.schwarzian_lhs - f.schwarzian_rhs) /
      (1.0 + std::abs(f.schwarzian_rhs));

  ordered_json rep = report_skeleton("scalar", digest_hex(text), 0);
  rep["system"] = sys_path;
  rep["tau"] = tau;
  rep["xi"] = xi;
  rep["t_end"] = t_end;
  rep["step"] = cfg.step;
  rep["phi1"] = f.phi1;
  rep["phi2"] = f.phi2;
  rep["schwarzian_lhs"] = f.schwarzian_lhs;
  rep["schwarzian_rhs"] = f.schwarzian_rhs;
  rep["schwarzian_residual"] = schwarzian_residual;
  emit(rep, out_path);
  return kExitOk;
}

int run_detect(const std::string& sys_path, const std::string& mode,
               double tau, double window_lo, double window_hi,
               std::size_t samples, std::uint64_t seed, double tol,
               const IntegFlags& integ, const std::string& out_path) {
  const std::string text = read_text_file(sys_path);
  const PolySystem sys = parse_system(text);
  const IntegratorConfig cfg = integ.config();

  ordered_json rep = report_skeleton("detect-riccati", digest_hex(text), seed);
  rep["system"] = sys_path;
  rep["mode"] = mode;

  std::optional<bool> structural_verdict, flow_verdict;
  if (mode == "structural" || mode == "both") {
    const auto rc = system_to_riccati(sys);
    structural_verdict = rc.has_value();
    ordered_json js;
    js["is_riccati"] = rc.has_value();
    rep["structural"] = std::move(js);
  }
  if (mode == "flow" || mode == "both") {
    const DetectReport det = detect_flow(sys, tau, {{window_lo, window_hi}},
                                         samples, cfg, tol, seed);
    flow_verdict = det.riccati_consistent;
    std::size_t shrunk = 0;
    for (const DetectSample& s : det.samples) shrunk += s.shrunk ? 1 : 0;
    ordered_json jf;
    jf["riccati_consistent"] = det.riccati_consistent;
    jf["max_normalized"] = det.max_normalized;
    jf["tol"] = det.tol;
    jf["tau"] = tau;
    jf["window"] = {window_lo, window_hi};
    jf["samples"] = det.samples.size();
    jf["shrunk_windows"] = shrunk;
    rep["flow"] = std::move(jf);
  }
  if (structural_verdict && flow_verdict) {
    rep["verdicts_agree"] = *structural_verdict == *flow_verdict;
  }
  emit(rep, out_path);
  return kExitOk;
}

int run_frac_linear(const std::string& ric_path, double tau, const Vec& xi,
                    double t_end, const IntegFlags& integ,
                    const std::string& out_path) {
  const std::string text = read_text_file(ric_path);
  const RiccatiCoeffs rc = parse_riccati(text);
  const IntegratorConfig cfg = integ.config();

  const FracSolution fs = frac_solution(rc, tau, xi, t_end, cfg);
  const PolySystem sys = riccati_to_system(rc);
  const JetTrajectory jets = integrate_jets(sys, tau, xi, t_end, cfg);
  double max_dev = 0.0;
  const std::size_t count = std::min(fs.phi.size(), jets.samples.size());
  for (std::size_t k = 0; k < count; ++k) {
    max_dev = std::max(max_dev,
                       norm_inf(vsub(fs.phi[k], jets.samples[k].phi)) /
                           (1.0 + norm_inf(jets.samples[k].phi)));
  }

  const FracLin& end = fs.frac.back();
  ordered_json rep = report_skeleton("frac-linear", digest_hex(text), 0);
  rep["riccati"] = ric_path;
  rep["tau"] = tau;
  rep["xi"] = vec_json(xi);
  rep["t_end"] = t_end;
  rep["step"] = cfg.step;
  rep["samples"] = fs.phi.size();
  ordered_json jend;
  jend["t"] = fs.lift.t.back();
  jend["A"] = mat_json(end.A);
  jend["beta"] = vec_json(end.beta);
  jend["gamma"] = vec_json(end.gamma);
  jend["delta"] = end.delta;
  jend["rho"] = fs.lift.rho.back();
  jend["phi"] = vec_json(fs.phi.back());
  rep["endpoint"] = std::move(jend);
  ordered_json jj;
  jj["lo"] = fs.j_lo;
  jj["hi"] = fs.j_hi;
  jj["lo_at_window"] = fs.j_lo_at_window;
  jj["hi_at_window"] = fs.j_hi_at_window;
  rep["interval"] = std::move(jj);
  rep["max_flow_deviation"] = max_dev;
  emit(rep, out_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"varjet: variational jet and quadratic coupling verifier"};
  app.require_subcommand(1);
  app.footer(kExitFooter);

  // selftest
  std::uint64_t st_seed = 0xa11ceULL;
  std::size_t st_trials = 500, st_polar = 200;
  std::string st_out;
  CLI::App* st = app.add_subcommand(
      "selftest", "run the seeded algebra and polarization property suites");
  st->add_option("--seed", st_seed, "random seed")->capture_default_str();
  st->add_option("--trials", st_trials, "instances per algebra property")
      ->capture_default_str();
  st->add_option("--polarize-trials", st_polar,
                 "instances per polarization property")
      ->capture_default_str();
  st->add_option("--out", st_out, "report path (default stdout)");

  // flow
  std::string fl_sys, fl_xi, fl_h, fl_out;
  double fl_tau = 0.0, fl_t = 0.0;
  IntegFlags fl_integ;
  CLI::App* fl = app.add_subcommand(
      "flow", "integrate the jets of the flow map, full or directional");
  // Frees the short -h so --h can name the direction argument.
  fl->set_help_flag("--help", "print this help message and exit");
  fl->add_option("--system", fl_sys, "system document path")->required();
  fl->add_option("--tau", fl_tau, "start time")->capture_default_str();
  fl->add_option("--xi", fl_xi, "initial state, comma separated")->required();
  fl->add_option("--t", fl_t, "end time")->required();
  fl->add_option("--h", fl_h, "direction (switches to directional jets)");
  add_integ_flags(fl, fl_integ);
  fl->add_option("--out", fl_out, "report path (default stdout)");

  // verify-allwright
  std::string va_sys, va_xi, va_h, va_csv, va_out;
  double va_tau = 0.0, va_t = 0.0;
  IntegFlags va_integ;
  CLI::App* va = app.add_subcommand(
      "verify-allwright",
      "check the third order integral identity along a trajectory");
  va->set_help_flag("--help", "print this help message and exit");
  va->add_option("--system", va_sys, "system document path")->required();
  va->add_option("--tau", va_tau, "start time")->capture_default_str();
  va->add_option("--xi", va_xi, "initial state, comma separated")->required();
  va->add_option("--h", va_h, "direction, comma separated")->required();
  va->add_option("--t", va_t, "end time")->required();
  add_integ_flags(va, va_integ);
  va->add_option("--csv", va_csv, "per-sample CSV output path");
  va->add_option("--out", va_out, "report path (default stdout)");

  // verify-eq8
  std::string ve_sys, ve_xi, ve_out;
  double ve_tau = 0.0, ve_t = 0.0;
  IntegFlags ve_integ;
  CLI::App* ve = app.add_subcommand(
      "verify-eq8",
      "check the second order integral formula along a trajectory");
  ve->add_option("--system", ve_sys, "system document path")->required();
  ve->add_option("--tau", ve_tau, "start time")->capture_default_str();
  ve->add_option("--xi", ve_xi, "initial state, comma separated")->required();
  ve->add_option("--t", ve_t, "end time")->required();
  add_integ_flags(ve, ve_integ);
  ve->add_option("--out", ve_out, "report path (default stdout)");

  // scalar
  std::string sc_sys, sc_out;
  double sc_tau = 0.0, sc_xi = 0.0, sc_t = 0.0;
  IntegFlags sc_integ;
  CLI::App* sc = app.add_subcommand(
      "scalar", "scalar quadrature formulas and their cross identities");
  sc->add_option("--system", sc_sys, "system document path (n=1)")
      ->required();
  sc->add_option("--tau", sc_tau, "start time")->capture_default_str();
  sc->add_option("--xi", sc_xi, "initial state")->required();
  sc->add_option("--t", sc_t, "end time")->required();
  add_integ_flags(sc, sc_integ);
  sc->add_option("--out", sc_out, "report path (default stdout)");

  // detect-riccati
  std::string dr_sys, dr_mode = "both", dr_out;
  double dr_tau = 0.0, dr_lo = 0.0, dr_hi = 0.3, dr_tol = 1e-7;
  std::size_t dr_samples = 8;
  std::uint64_t dr_seed = 0x7a11e5ULL;
  IntegFlags dr_integ;
  CLI::App* dr = app.add_subcommand(
      "detect-riccati",
      "decide whether the system has the scaled-projection coupling");
  dr->add_option("--system", dr_sys, "system document path")->required();
  dr->add_option("--mode", dr_mode, "structural, flow, or both")
      ->check(CLI::IsMember({"structural", "flow", "both"}))
      ->capture_default_str();
  dr->add_option("--tau", dr_tau, "start time")->capture_default_str();
  dr->add_option("--window-lo", dr_lo, "window start")->capture_default_str();
  dr->add_option("--window-hi", dr_hi, "window end")->capture_default_str();
  dr->add_option("--samples", dr_samples, "number of (xi, h) draws")
      ->capture_default_str();
  dr->add_option("--seed", dr_seed, "random seed")->capture_default_str();
  dr->add_option("--tol", dr_tol, "normalized acceptance threshold")
      ->capture_default_str();
  add_integ_flags(dr, dr_integ);
  dr->add_option("--out", dr_out, "report path (default stdout)");

  // frac-linear
  std::string fr_ric, fr_xi, fr_out;
  double fr_tau = 0.0, fr_t = 0.0;
  IntegFlags fr_integ;
  CLI::App* fr = app.add_subcommand(
      "frac-linear",
      "companion-matrix solution with direct-integration comparison");
  fr->add_option("--riccati", fr_ric, "riccati document path")->required();
  fr->add_option("--tau", fr_tau, "start time")->capture_default_str();
  fr->add_option("--xi", fr_xi, "initial state, comma separated")->required();
  fr->add_option("--t", fr_t, "end time")->required();
  add_integ_flags(fr, fr_integ);
  fr->add_option("--out", fr_out, "report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (st->parsed()) {
      return run_selftest(st_seed, st_trials, st_polar, st_out);
    }
    if (fl->parsed()) {
      std::optional<Vec> h;
      if (!fl_h.empty()) h = parse_vec(fl_h);
      return run_flow(fl_sys, fl_tau, parse_vec(fl_xi), h, fl_t, fl_integ,
                      fl_out);
    }
    if (va->parsed()) {
      return run_verify_allwright(va_sys, va_tau, parse_vec(va_xi),
                                  parse_vec(va_h), va_t, va_integ, va_csv,
                                  va_out);
    }
    if (ve->parsed()) {
      return run_verify_eq8(ve_sys, ve_tau, parse_vec(ve_xi), ve_t, ve_integ,
                            ve_out);
    }
    if (sc->parsed()) {
      return run_scalar(sc_sys, sc_tau, sc_xi, sc_t, sc_integ, sc_out);
    }
    if (dr->parsed()) {
      return run_detect(dr_sys, dr_mode, dr_tau, dr_lo, dr_hi, dr_samples,
                        dr_seed, dr_tol, dr_integ, dr_out);
    }
    if (fr->parsed()) {
      return run_frac_linear(fr_ric, fr_tau, parse_vec(fr_xi), fr_t, fr_integ,
                             fr_out);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const SingularMatrixError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSingular;
  } catch (const BlowUpError& e) {
    std::cerr << "error: " << e.what() << " (escape near t=" << e.t_escape
              << ")\n";
    return kExitBlowUp;
  } catch (const PoleCrossedError& e) {
    std::cerr << "error: " << e.what() << " (boundary near t=" << e.boundary
              << ")\n";
    return kExitPoleCrossed;
  } catch (const IllConditionedFlowError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIllConditioned;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  return kExitUsage;
}
