#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blowup/correspondence.hpp"
#include "blowup/flow.hpp"
#include "blowup/report.hpp"
#include "blowup/systemfile.hpp"

namespace {

using namespace blowup;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitUsage = 3;

struct GlobalOpts {
  std::uint64_t seed = 0;
  double h = 1e-3;
  double tau_max = 4000.0;
  std::string out;
  int json_indent = 2;
};

Vector parse_csv_vector(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    vals.push_back(std::stod(item));
  }
  Vector v(static_cast<int>(vals.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = vals[static_cast<std::size_t>(i)];
  return v;
}

std::vector<double> parse_csv_list(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    vals.push_back(std::stod(item));
  }
  return vals;
}

void write_output(const GlobalOpts& g, const std::string& payload) {
  if (g.out.empty()) {
    std::cout << payload;
    if (!payload.empty() && payload.back() != '\n') std::cout << '\n';
  } else {
    std::ofstream os(g.out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file " + g.out);
    os << payload;
  }
}

void write_json(const GlobalOpts& g, const ordered_json& j) {
  write_output(g, g.json_indent >= 0 ? j.dump(g.json_indent) + "\n" : j.dump() + "\n");
}

int cmd_validate(const std::string& path, const GlobalOpts& g) {
  SystemFile sf = load_system_file(path);
  EmbeddingSpec spec = EmbeddingSpec::from(sf.def.sig);
  std::mt19937_64 rng(g.seed);
  std::vector<double> scales{2.0, 5.0, 10.0};
  auto qh = validate_qh(sf.def, 200, scales, rng);
  auto res = validate_res(sf.def, spec, 50, rng);

  ordered_json j;
  j["system"] = sf.def.name;
  j["seed"] = g.seed;
  ordered_json sc = ordered_json::array(), eu = ordered_json::array(), rs = ordered_json::array();
  for (const auto& chk : qh.scaling)
    sc.push_back(ordered_json{{"component", chk.component},
                              {"pass", chk.pass},
                              {"worst_residual", chk.worst_residual},
                              {"note", chk.note}});
  for (const auto& chk : qh.euler)
    eu.push_back(ordered_json{{"component", chk.component},
                              {"pass", chk.pass},
                              {"worst_residual", chk.worst_residual},
                              {"note", chk.note}});
  for (const auto& chk : res.components)
    rs.push_back(ordered_json{{"component", chk.component},
                              {"pass", chk.pass},
                              {"fitted_exponent", chk.worst_residual},
                              {"note", chk.note}});
  j["quasi_homogeneous_scaling"] = std::move(sc);
  j["euler_identity"] = std::move(eu);
  j["residual_order"] = std::move(rs);
  bool pass = qh.pass && res.pass;
  j["pass"] = pass;
  write_json(g, j);
  return pass ? kExitOk : kExitValidation;
}

int cmd_balance(const std::string& path, double t, const GlobalOpts& g) {
  SystemFile sf = load_system_file(path);
  auto roots = find_roots(sf.def, t, sf.seeds);
  ordered_json j;
  j["system"] = sf.def.name;
  j["seed"] = g.seed;
  j["t"] = t;
  ordered_json arr = ordered_json::array();
  for (const auto& r : roots)
    arr.push_back(ordered_json{{"Y0", json_vector(r.Y0)},
                               {"residual", r.residual_norm},
                               {"r_Y0", r.r_Y0}});
  j["roots"] = std::move(arr);
  write_json(g, j);
  return kExitOk;
}

int cmd_spectrum(const std::string& path, double t, const GlobalOpts& g) {
  SystemFile sf = load_system_file(path);
  DesingField df = build(sf.def);
  auto roots = find_roots(sf.def, t, sf.seeds);
  ordered_json j;
  j["system"] = sf.def.name;
  j["seed"] = g.seed;
  j["t"] = t;
  ordered_json arr = ordered_json::array();
  for (const auto& r : roots) {
    auto pm = power_matrix(sf.def, r);
    auto eq = root_to_equilibrium(df, r);
    Matrix Dg = jacobian(df, eq.t_star, eq.x_star);
    Eigen::EigenSolver<Matrix> es(Dg);
    ComplexVector specA(sf.def.sig.n + 1);
    specA[0] = 0.0;
    specA.tail(sf.def.sig.n) = pm.eig_A;
    arr.push_back(ordered_json{{"Y0", json_vector(r.Y0)},
                               {"C_star", eq.C_star},
                               {"r", eq.r},
                               {"equilibrium_x", json_vector(eq.x_star)},
                               {"spec_A_ext", json_cvector(specA)},
                               {"spec_Dg", json_cvector(es.eigenvalues())}});
  }
  j["roots"] = std::move(arr);
  write_json(g, j);
  return kExitOk;
}

int cmd_correspond(const std::string& path, double t, const GlobalOpts& g) {
  SystemFile sf = load_system_file(path);
  DesingField df = build(sf.def);
  write_json(g, correspond_at(df, sf, t, g.seed));
  return kExitOk;
}

int cmd_flow(const std::string& path, double t0, const std::string& x0s, const std::string& y0s,
             const GlobalOpts& g) {
  SystemFile sf = load_system_file(path);
  DesingField df = build(sf.def);
  Vector x0;
  if (!x0s.empty()) {
    x0 = parse_csv_vector(x0s);
  } else if (!y0s.empty()) {
    x0 = embed(df.spec, t0, parse_csv_vector(y0s)).x;
  } else {
    std::cerr << "flow needs --x0 or --y0\n";
    return kExitUsage;
  }
  if (x0.size() != sf.def.sig.n) {
    std::cerr << "initial point has wrong dimension\n";
    return kExitUsage;
  }
  Trajectory traj = integrate(df, t0, x0, g.h, g.tau_max);
  std::ostringstream csv;
  write_trajectory_csv(csv, df, traj);
  write_output(g, csv.str());
  return traj.status == Trajectory::Status::Converged ? kExitOk : kExitNumeric;
}

int cmd_tmax(const std::string& path, double t0, const std::string& x0s, const std::string& y0s,
             const GlobalOpts& g) {
  SystemFile sf = load_system_file(path);
  DesingField df = build(sf.def);
  Vector x0;
  if (!x0s.empty()) {
    x0 = parse_csv_vector(x0s);
  } else if (!y0s.empty()) {
    x0 = embed(df.spec, t0, parse_csv_vector(y0s)).x;
  } else {
    std::cerr << "tmax needs --x0 or --y0\n";
    return kExitUsage;
  }
  Trajectory traj = integrate(df, t0, x0, g.h, g.tau_max);
  if (traj.status != Trajectory::Status::Converged) {
    std::cerr << "trajectory did not converge\n";
    return kExitNumeric;
  }
  TmaxResult tm = t_max(df, traj);
  ordered_json j{{"system", sf.def.name},
                 {"t0", t0},
                 {"t_max", tm.value},
                 {"via_quadrature", tm.via_quadrature},
                 {"via_t_limit", tm.via_t_limit},
                 {"tail", tm.tail},
                 {"route_gap", tm.route_gap}};
  write_json(g, j);
  return kExitOk;
}

int cmd_report(const std::string& path, double t0, const std::string& x0s, const std::string& y0s,
               const GlobalOpts& g) {
  SystemFile sf = load_system_file(path);
  DesingField df = build(sf.def);
  ReportOptions opt;
  opt.t0 = t0;
  opt.h = g.h;
  opt.tau_max = g.tau_max;
  opt.seed = g.seed;
  if (!x0s.empty()) opt.x0 = parse_csv_vector(x0s);
  if (!y0s.empty()) opt.y0 = parse_csv_vector(y0s);
  if (!opt.x0 && !opt.y0) {
    std::cerr << "report needs --x0 or --y0\n";
    return kExitUsage;
  }
  ReportResult rr = run_report(df, sf, opt);
  write_json(g, rr.json);
  return rr.converged ? kExitOk : kExitNumeric;
}

int cmd_sweep(const std::string& path, bool t0_list_given, const std::string& t0_list,
              const std::string& x0s, const GlobalOpts& g) {
  SystemFile sf = load_system_file(path);
  DesingField df = build(sf.def);
  std::vector<double> t0s;
  if (t0_list_given) {
    t0s = parse_csv_list(t0_list);
  } else if (sf.t_grid) {
    const auto& tg = *sf.t_grid;
    for (int i = 0; i < tg.count; ++i)
      t0s.push_back(tg.count == 1 ? tg.start
                                  : tg.start + (tg.stop - tg.start) * i / double(tg.count - 1));
  } else {
    std::cerr << "sweep needs --t0-list or a t_grid in the system file\n";
    return kExitUsage;
  }
  if (x0s.empty()) {
    std::cerr << "sweep needs --x0\n";
    return kExitUsage;
  }
  Vector x0 = parse_csv_vector(x0s);

  // Rows are independent; the field is immutable, so they run in parallel.
  struct Row {
    bool ok = false;
    double tmax = 0.0;
    char sign = 0;
    std::string error;
  };
  std::vector<std::future<Row>> futures;
  for (double t0 : t0s)
    futures.push_back(std::async(std::launch::async, [&df, &g, x0, t0]() {
      Row row;
      try {
        Trajectory traj = integrate(df, t0, x0, g.h, g.tau_max);
        if (traj.status != Trajectory::Status::Converged)
          throw numeric_error("trajectory did not converge (status " +
                              std::to_string(static_cast<int>(traj.status)) + ")");
        row.tmax = t_max(df, traj).value;
        if (df.sys.sig.n >= 3) row.sign = traj.x_end[0] * traj.x_end[2] > 0 ? '+' : '-';
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      return row;
    }));

  std::ostringstream csv;
  csv << "t0,t_max,sign_x1x3,sin_tmax\n";
  char buf[64];
  auto emit = [&](double v) {
    int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    csv.write(buf, len);
  };
  bool any_failed = false;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    Row row = futures[i].get();
    emit(t0s[i]);
    if (row.ok) {
      csv << ',';
      emit(row.tmax);
      csv << ',';
      if (row.sign) csv << row.sign;
      csv << ',';
      emit(std::sin(row.tmax));
      csv << '\n';
    } else {
      any_failed = true;
      std::cerr << "sweep row t0 = " << t0s[i] << " failed: " << row.error << "\n";
      csv << ",nan,?,nan\n";
    }
  }
  write_output(g, csv.str());
  return any_failed ? kExitNumeric : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamics at infinity for finite-time blow-up in nonautonomous ODE systems"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_flag("--help", "print help and exit");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "RNG seed, recorded in every report");
  app.add_option("--h", g.h, "integrator step size in the rescaled time");
  app.add_option("--tau-max", g.tau_max, "rescaled-time budget for integrations");
  app.add_option("--out", g.out, "output file (stdout when omitted)");
  app.add_option("--json-indent", g.json_indent, "JSON indent; negative for compact");

  std::string file;
  double t = 0.0, t0 = 0.0;
  std::string x0s, y0s, t0_list;

  auto* validate = app.add_subcommand("validate", "check the declared structure of a system file");
  validate->add_option("file", file, "system definition JSON")->required();

  auto* balance = app.add_subcommand("balance", "find balance-law roots at a fixed t");
  balance->add_option("file", file)->required();
  balance->add_option("--t", t, "time treated as a parameter")->required();

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues on both sides at a fixed t");
  spectrum->add_option("file", file)->required();
  spectrum->add_option("--t", t)->required();

  auto* correspond = app.add_subcommand("correspond", "full eigenstructure correspondence at a fixed t");
  correspond->add_option("file", file)->required();
  correspond->add_option("--t", t)->required();

  auto* flow = app.add_subcommand("flow", "integrate the desingularized field, emit a CSV trajectory");
  flow->add_option("file", file)->required();
  flow->add_option("--t0", t0, "initial time")->required();
  flow->add_option("--x0", x0s, "initial point, embedded coordinates (comma separated)");
  flow->add_option("--y0", y0s, "initial point, original coordinates");

  auto* tmax = app.add_subcommand("tmax", "blow-up time of one trajectory");
  tmax->add_option("file", file)->required();
  tmax->add_option("--t0", t0)->required();
  tmax->add_option("--x0", x0s);
  tmax->add_option("--y0", y0s);

  auto* report = app.add_subcommand("report", "end-to-end analysis of one trajectory");
  report->add_option("file", file)->required();
  report->add_option("--t0", t0)->required();
  report->add_option("--x0", x0s);
  report->add_option("--y0", y0s);

  auto* sweep = app.add_subcommand("sweep", "batch of blow-up times over a list of t0");
  sweep->add_option("file", file)->required();
  sweep->add_option("--t0-list", t0_list, "comma separated t0 values (default: the file's t_grid)");
  sweep->add_option("--x0", x0s)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand(validate)) return cmd_validate(file, g);
    if (app.got_subcommand(balance)) return cmd_balance(file, t, g);
    if (app.got_subcommand(spectrum)) return cmd_spectrum(file, t, g);
    if (app.got_subcommand(correspond)) return cmd_correspond(file, t, g);
    if (app.got_subcommand(flow)) return cmd_flow(file, t0, x0s, y0s, g);
    if (app.got_subcommand(tmax)) return cmd_tmax(file, t0, x0s, y0s, g);
    if (app.got_subcommand(report)) return cmd_report(file, t0, x0s, y0s, g);
    if (app.got_subcommand(sweep))
      return cmd_sweep(file, sweep->count("--t0-list") > 0, t0_list, x0s, g);
  } catch (const schema_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
