#include "mbp/scenario.hpp"

#include <cstdlib>
#include <optional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mbp {

namespace {

double default_tolerance() {
  if (const char* env = std::getenv("MBP_DEFAULT_TOL")) {
    try {
      return std::stod(env);
    } catch (...) {
    }
  }
  return 1e-7;
}

KernelRep build_kernel(const json& cfg, int n_hint) {
  if (cfg.contains("builtin")) {
    const std::string name = cfg["builtin"].get<std::string>();
    if (name == "hilbert") {
      int count = cfg.value("moments", 2 * n_hint + 8);
      std::vector<Mat> moments;
      for (int k = 0; k < count; ++k) moments.push_back(Mat::Constant(1, 1, 1.0 / (k + 1)));
      return KernelRep::hankel(std::move(moments), 1.0, std::make_shared<LebesgueProvider>());
    }
    if (name == "diag_discrete") {
      std::vector<cd> nodes;
      for (const auto& v : cfg.at("nodes")) nodes.push_back(complex_from_json(v));
      std::vector<cd> wts;
      for (const auto& v : cfg.at("weights")) wts.push_back(complex_from_json(v));
      if (nodes.size() != wts.size()) fail(Err::SchemaError, "diag_discrete: size mismatch");
      const size_t m = nodes.size();
      std::vector<Mat> weights(m * m, Mat::Zero(1, 1));
      for (size_t i = 0; i < m; ++i) weights[i * m + i] = Mat::Constant(1, 1, wts[i]);
      return KernelRep::discrete(nodes, nodes, std::move(weights));
    }
    fail(Err::SchemaError, "unknown builtin kernel: " + name);
  }
  return kernel_from_json(cfg);
}

std::vector<MassTerm> parse_masses(const json& cfg, int p) {
  std::vector<MassTerm> masses;
  if (!cfg.contains("masses")) return masses;
  for (const auto& m : cfg["masses"]) {
    MassTerm t;
    t.eig_index = m.value("eig", 0);
    t.chain_index = m.value("chain", 0);
    t.order = m.value("order", 0);
    t.xi = vec_functional_from_json(m.at("xi"), p);
    masses.push_back(std::move(t));
  }
  return masses;
}

json h_series(const std::vector<Mat>& h) {
  json out = json::array();
  for (const auto& m : h) out.push_back(m.norm());
  return out;
}

json run_factorize(const KernelRep& kernel, int n, double tolerance) {
  json step;
  step["type"] = "factorize";
  step["n"] = n;
  Factorization f = gauss_borel(kernel, n);
  step["reconstruction_residual"] = f.reconstruction_residual();
  // biorthogonality against the kernel
  double bio = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Mat g = kernel.pairing(f.P1(i), f.P2(j));
      Mat expect = i == j ? f.H(i) : Mat::Zero(kernel.p(), kernel.p());
      bio = std::max(bio, (g - expect).norm() /
                              std::max(1.0, f.H(std::min(i, j)).norm()));
    }
  step["biorthogonality_residual"] = bio;
  json hj = json::array(), hc = json::array();
  for (int i = 0; i < n; ++i) {
    hj.push_back(mat_to_json(f.H(i)));
    hc.push_back(rcond(f.H(i)));
  }
  step["H"] = hj;
  step["H_rcond"] = hc;
  json series;
  series["H_norms"] = h_series(f.H());
  step["series"] = series;
  step["pass"] = f.reconstruction_residual() < tolerance && bio < tolerance;
  return step;
}

json run_transform(const KernelRep& kernel, const json& cfg, int n, double tolerance,
                   std::mt19937_64& rng) {
  json step;
  step["type"] = "transform";
  const std::string kind = cfg.value("kind", "geronimus");
  step["kind"] = kind;
  const int p = kernel.p();
  std::vector<std::string> routes;
  if (cfg.contains("routes"))
    for (const auto& r : cfg["routes"]) routes.push_back(r.get<std::string>());
  if (routes.empty()) routes = {"direct"};

  // resolvent/connection residuals against the perturbed factorization
  std::optional<KernelRep> perturbed;
  MatPoly res_wc = MatPoly::identity(p);
  MatPoly res_wg = MatPoly::identity(p);

  std::vector<TransformResult> results;
  if (kind == "geronimus" || kind == "christoffel") {
    MatPoly W_G = kind == "christoffel" ? unimodular_inverse(matpoly_from_json(cfg.at("W")))
                                        : matpoly_from_json(cfg.at("W_G"));
    std::optional<SpectralData> sd;
    auto masses = parse_masses(cfg, p);
    if (!masses.empty() || (W_G.degree() > 0 && W_G.monic()))
      sd.emplace(spectral_data_from_poly(W_G));
    perturbed = geronimus_kernel(kernel, W_G, masses, sd ? &*sd : nullptr);
    res_wg = W_G;
    Factorization f = gauss_borel(kernel, n + std::max(1, W_G.degree()) + 2);
    for (const auto& r : routes) {
      if (r == "direct")
        results.push_back(geronimus_direct(kernel, W_G, masses, sd ? &*sd : nullptr, n));
      else if (r == "spectral")
        results.push_back(geronimus_spectral(f, kernel, W_G, *sd, masses, n));
      else if (r == "nonspectral")
        results.push_back(
            geronimus_nonspectral(f, kernel, W_G, masses, sd ? &*sd : nullptr, n));
      else
        fail(Err::SchemaError, "unknown geronimus route: " + r);
    }
  } else if (kind == "geronimus_uvarov") {
    MatPoly W_C = matpoly_from_json(cfg.at("W_C"));
    MatPoly W_G = matpoly_from_json(cfg.at("W_G"));
    auto masses = parse_masses(cfg, p);
    std::optional<SpectralData> sd;
    if (W_G.degree() > 0 && W_G.monic()) sd.emplace(spectral_data_from_poly(W_G));
    perturbed = geronimus_uvarov_kernel(kernel, W_C, W_G, masses, sd ? &*sd : nullptr);
    res_wc = W_C;
    res_wg = W_G;
    Factorization f = gauss_borel(kernel, n + W_C.degree() + std::max(1, W_G.degree()) + 2);
    for (const auto& r : routes) {
      GURoute route = r == "direct"     ? GURoute::Direct
                      : r == "spectral" ? GURoute::Spectral
                      : r == "mixed"    ? GURoute::Mixed
                                        : throw Error(Err::SchemaError, "unknown GU route " + r);
      results.push_back(
          geronimus_uvarov(f, kernel, W_C, W_G, masses, sd ? &*sd : nullptr, n, route));
    }
  } else if (kind == "uvarov") {
    std::vector<UvarovTerm> terms;
    for (const auto& t : cfg.at("uvarov")) terms.push_back(uvarov_term_from_json(t, p));
    Factorization f = gauss_borel(kernel, n + 2);
    for (const auto& r : routes) {
      if (r == "direct")
        results.push_back(uvarov_direct(kernel, terms, n));
      else if (r == "formula" || r == "uvarov")
        results.push_back(uvarov(f, kernel, terms, n));
      else
        fail(Err::SchemaError, "unknown uvarov route: " + r);
    }
  } else {
    fail(Err::SchemaError, "unknown transform kind: " + kind);
  }

  json agreements;
  double worst = 0.0;
  for (size_t i = 1; i < results.size(); ++i) {
    double dev = results[i].deviation(results[0], n);
    agreements[results[i].route + "_vs_" + results[0].route] = dev;
    worst = std::max(worst, dev);
  }
  step["agreement"] = agreements;
  json per_route;
  for (const auto& r : results) {
    json rj;
    rj["H_norms"] = h_series(r.H);
    rj["H"] = json::array();
    for (const auto& hm : r.H) rj["H"].push_back(mat_to_json(hm));
    per_route[r.route] = rj;
  }
  step["routes"] = per_route;
  bool residuals_ok = true;
  if (perturbed) {
    // shrink the window if the instance runs out of numerical rank
    const int win_min = res_wc.degree() + res_wg.degree() + 3;
    for (int win = n + win_min; win >= win_min; --win) {
      try {
        Factorization f = gauss_borel(kernel, win);
        Factorization ft = gauss_borel(*perturbed, win);
        auto rep = resolvent_and_connection(f, ft, kernel, *perturbed, res_wc, res_wg, rng);
        json table;
        table["band"] = rep.band_residual;
        table["omegaA"] = rep.last_subdiag_residual;
        table["connection_P"] = rep.connection_P_residual;
        table["connection_C"] = rep.connection_C_residual;
        table["cd_connection"] = std::max(rep.cd_connection_residual, rep.cd_mixed_residual);
        step["residual_table"] = table;
        double rworst = std::max({rep.band_residual, rep.last_subdiag_residual,
                                  rep.connection_P_residual, rep.connection_C_residual,
                                  rep.cd_connection_residual, rep.cd_mixed_residual});
        residuals_ok = rworst <= std::max(tolerance, 1e-8);
        break;
      } catch (const Error& e) {
        if (e.code() != Err::QuasidefinitenessFailure || win == win_min) throw;
      }
    }
  }
  json series;
  series["H_norms"] = h_series(results[0].H);
  json agr = json::array();
  for (auto& [key, val] : agreements.items()) agr.push_back(val);
  series["route_agreement"] = agr;
  step["series"] = series;
  step["pass"] = worst <= tolerance && residuals_ok;
  return step;
}

json run_toda(const KernelRep& kernel, const json& cfg, int n, double tolerance) {
  json step;
  step["type"] = "toda";
  std::vector<double> t1, t2;
  if (cfg.contains("t1"))
    for (const auto& v : cfg["t1"]) t1.push_back(v.get<double>());
  if (cfg.contains("t2"))
    for (const auto& v : cfg["t2"]) t2.push_back(v.get<double>());
  TodaState state = evolve(kernel, t1, t2, n);
  double h = cfg.value("h", 1e-3);
  bool pass = true;
  json results;
  std::vector<std::string> checks;
  if (cfg.contains("checks"))
    for (const auto& c : cfg["checks"]) checks.push_back(c.get<std::string>());
  json series;
  for (const auto& c : checks) {
    if (c == "toda") {
      auto r1 = toda_residual(state, h);
      auto r2 = toda_residual(state, h / 2);
      json rj;
      rj["residual"] = r1.max();
      rj["residual_half_h"] = r2.max();
      double ratio = r2.max() > 0 ? r1.max() / r2.max() : 4.0;
      rj["richardson_ratio"] = ratio;
      results["toda"] = rj;
      series["richardson_toda"] = json::array({r1.max(), r2.max()});
      pass = pass && r1.max() < tolerance && ratio > 3.0 && ratio < 5.0;
    } else if (c == "sato_wilson") {
      int j = cfg.value("j", 1);
      auto r1 = sato_wilson_residual(state, j, h);
      auto r2 = sato_wilson_residual(state, j, h / 2);
      json rj;
      rj["residual"] = r1.max();
      rj["richardson_ratio"] = r2.max() > 0 ? r1.max() / r2.max() : 4.0;
      results["sato_wilson"] = rj;
      series["richardson_sato_wilson"] = json::array({r1.max(), r2.max()});
      pass = pass && r1.max() < tolerance;
    } else if (c == "sato") {
      cd z = cfg.contains("z") ? complex_from_json(cfg["z"]) : cd(5.0, 0.0);
      auto r = sato_check(state, z, cfg.value("sato_n", std::min(4, n - 2)));
      json rj;
      rj["p1"] = r.p1;
      rj["c2"] = r.c2;
      rj["c1"] = r.c1;
      rj["p2"] = r.p2;
      results["sato"] = rj;
      pass = pass && r.max() < tolerance;
    } else if (c == "kp_linear") {
      int site = cfg.value("site", 1);
      cd z = cfg.contains("z") ? complex_from_json(cfg["z"]) : cd(0.7, 0.2);
      auto r = kp_linear_residual(state, site, h, z);
      json rj;
      rj["second_order"] = r.second_order;
      rj["third_order"] = r.third_order;
      results["kp_linear"] = rj;
      pass = pass && r.second_order < tolerance;
    } else if (c == "kp") {
      int site = cfg.value("site", 1);
      auto r = kp_residual(state, site, cfg.value("kp_h", 1e-2));
      json rj;
      rj["residual"] = r.residual;
      rj["commutator_norm"] = r.commutator_norm;
      results["kp"] = rj;
      pass = pass && r.residual < std::max(tolerance, 1e-3);
    } else if (c == "bilinear") {
      const auto& bs = cfg.at("bilinear");
      MatPoly W_C = matpoly_from_json(bs.at("W_C"));
      MatPoly W_G = matpoly_from_json(bs.at("W_G"));
      std::vector<double> t1p, t2p;
      if (bs.contains("t1p"))
        for (const auto& v : bs["t1p"]) t1p.push_back(v.get<double>());
      if (bs.contains("t2p"))
        for (const auto& v : bs["t2p"]) t2p.push_back(v.get<double>());
      TodaState sp = evolve(kernel, t1p, t2p, n);
      auto r = bilinear_residual(state, sp, W_C, W_G, bs.value("k", 1), bs.value("l", 1),
                                 bs.value("r1", 4.0), bs.value("r2", 4.0), bs.value("M", 256));
      json rj;
      rj["c_identity"] = r.c_identity;
      rj["tau_identity"] = r.tau_identity;
      results["bilinear"] = rj;
      pass = pass && r.c_identity < tolerance;
    } else {
      fail(Err::SchemaError, "unknown toda check: " + c);
    }
  }
  step["results"] = results;
  step["series"] = series;
  step["pass"] = pass;
  return step;
}

}  // namespace

json run_scenario(const json& scenario, unsigned long long seed_override,
                  bool have_seed_override) {
  if (!scenario.is_object() || !scenario.contains("kernel") || !scenario.contains("steps"))
    fail(Err::SchemaError, "scenario needs kernel and steps");
  json report;
  report["name"] = scenario.value("name", "scenario");
  unsigned long long seed =
      have_seed_override ? seed_override : scenario.value("seed", 12345ULL);
  report["seed"] = seed;
  std::mt19937_64 rng(seed);
  const int n = scenario.value("n", 6);
  if (n < 1 || n > 64) fail(Err::SchemaError, "truncation n out of range");
  KernelRep kernel = build_kernel(scenario["kernel"], n);
  json steps = json::array();
  bool pass = true;
  for (const auto& step_cfg : scenario["steps"]) {
    const std::string type = step_cfg.value("type", "");
    double tolerance = step_cfg.value("tolerance", default_tolerance());
    json step;
    if (type == "factorize")
      step = run_factorize(kernel, n, std::max(tolerance, tol::fac));
    else if (type == "transform")
      step = run_transform(kernel, step_cfg, n, tolerance, rng);
    else if (type == "toda")
      step = run_toda(kernel, step_cfg, n, step_cfg.value("tolerance", 1e-5));
    else
      fail(Err::SchemaError, "unknown step type: " + type);
    pass = pass && step.value("pass", false);
    steps.push_back(step);
  }
  report["steps"] = steps;
  report["pass"] = pass;
  return report;
}

int run_scenario_file(const std::string& path, const std::string& out_dir,
                      unsigned long long seed_override, bool have_seed_override,
                      std::string* report_path_out) {
  json scenario;
  {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "cannot open scenario file: " << path << "\n";
      return 2;
    }
    try {
      in >> scenario;
    } catch (const std::exception& e) {
      std::cerr << "scenario parse error: " << e.what() << "\n";
      return 2;
    }
  }
  json report;
  try {
    report = run_scenario(scenario, seed_override, have_seed_override);
  } catch (const Error& e) {
    if (e.code() == Err::SchemaError) {
      std::cerr << "schema error: " << e.what() << "\n";
      return 2;
    }
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  }
  std::filesystem::path dir =
      out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::filesystem::path out =
      dir / (report["name"].get<std::string>() + "_report.json");
  std::ofstream of(out);
  of << report.dump(2) << "\n";
  if (report_path_out) *report_path_out = out.string();
  return report["pass"].get<bool>() ? 0 : 1;
}

std::string emit_plot_data(const json& report, const std::string& series) {
  if (series.empty()) fail(Err::UnknownSeries, "empty series name");
  for (const auto& step : report.value("steps", json::array())) {
    if (!step.contains("series")) continue;
    const auto& s = step["series"];
    if (!s.contains(series)) continue;
    const auto& data = s[series];
    std::ostringstream out;
    bool complex_vals = !data.empty() && data[0].is_array();
    if (complex_vals)
      out << "index," << series << "_re," << series << "_im\n";
    else
      out << "index," << series << "\n";
    int idx = 0;
    for (const auto& v : data) {
      out << idx++;
      if (v.is_array())
        out << "," << v[0].get<double>() << "," << v[1].get<double>();
      else
        out << "," << v.get<double>();
      out << "\n";
    }
    return out.str();
  }
  fail(Err::UnknownSeries, "series not found in report: " + series);
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) {
    std::cerr << "usage: mbp run <scenario.json> [--out dir] [--seed N]\n"
              << "       mbp plot <report.json> --series <name> [--out file]\n";
    return 2;
  }
  const std::string cmd = args[0];
  try {
    if (cmd == "run") {
      if (args.size() < 2) {
        std::cerr << "run: scenario file required\n";
        return 2;
      }
      std::string out_dir;
      unsigned long long seed = 0;
      bool have_seed = false;
      for (size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--out" && i + 1 < args.size())
          out_dir = args[++i];
        else if (args[i] == "--seed" && i + 1 < args.size()) {
          seed = std::stoull(args[++i]);
          have_seed = true;
        } else {
          std::cerr << "unknown argument: " << args[i] << "\n";
          return 2;
        }
      }
      std::string report_path;
      int rc = run_scenario_file(args[1], out_dir, seed, have_seed, &report_path);
      if (!report_path.empty()) std::cout << "report: " << report_path << "\n";
      return rc;
    }
    if (cmd == "plot") {
      if (args.size() < 2) {
        std::cerr << "plot: report file required\n";
        return 2;
      }
      std::string series, out_file;
      for (size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--series" && i + 1 < args.size())
          series = args[++i];
        else if (args[i] == "--out" && i + 1 < args.size())
          out_file = args[++i];
        else {
          std::cerr << "unknown argument: " << args[i] << "\n";
          return 2;
        }
      }
      std::ifstream in(args[1]);
      if (!in) {
        std::cerr << "cannot open report: " << args[1] << "\n";
        return 2;
      }
      json report;
      in >> report;
      std::string csv = emit_plot_data(report, series);
      if (out_file.empty())
        std::cout << csv;
      else {
        std::ofstream of(out_file);
        of << csv;
      }
      return 0;
    }
  } catch (const Error& e) {
    if (e.code() == Err::SchemaError || e.code() == Err::UnknownSeries) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << "unknown command: " << cmd << "\n";
  return 2;
}

}  // namespace mbp
