#include "commands.hpp"

#include "bnngp/analytics.hpp"
#include "bnngp/datasets.hpp"
#include "bnngp/errors.hpp"
#include "bnngp/kernel.hpp"
#include "bnngp/likelihood.hpp"
#include "bnngp/parallel.hpp"
#include "bnngp/sampler.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bnngp::cli {

namespace {

struct Global {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out = "-";
};

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

std::string fmt(double v) { return format_double(v); }

void emit(const CsvTable& table, const Global& g, std::ostream& out) {
  if (g.out.empty() || g.out == "-")
    out << table.str();
  else
    table.write(g.out);
}

void add_common_config(CsvTable& t, const std::string& command, const Global& g) {
  t.add_config("command", command);
  t.add_config("seed", std::to_string(g.seed));
}

// "a:b:n" gives n evenly spaced values from a to b; otherwise a comma list.
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  if (std::count(spec.begin(), spec.end(), ':') == 2) {
    std::istringstream in(spec);
    std::string a, b, n;
    std::getline(in, a, ':');
    std::getline(in, b, ':');
    std::getline(in, n, ':');
    const double lo = std::stod(a), hi = std::stod(b);
    const int count = std::stoi(n);
    if (count < 1) throw Error(ErrorKind::InvalidInput, "grid needs at least one point");
    for (int i = 0; i < count; ++i) out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    return out;
  }
  std::istringstream in(spec);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(std::stod(cell));
  if (out.empty()) throw Error(ErrorKind::InvalidInput, "empty grid");
  return out;
}

Dataset load_or_rings(const std::string& path, bool raw) {
  Dataset d = path.empty() || path == "rings" ? generate_rings() : load_csv(path);
  return raw ? d : standardize(d);
}

// cos(pi x), exact where it vanishes
double cos_pi(double x) {
  const double r = std::remainder(x, 2.0);
  if (std::abs(std::abs(r) - 0.5) == 0.0) return 0.0;
  return std::cos(r * M_PI);
}

Matrix unit_axes() {
  Matrix X(2, 2);
  X << 1, 0, 0, 1;
  return X;
}

// --- rings-gen ---------------------------------------------------------------

int rings_gen(const Global& g, std::ostream& out) {
  // the dataset file is plain x_/y_ CSV so it loads back unchanged
  const std::string text = to_csv(generate_rings());
  if (g.out.empty() || g.out == "-")
    out << text;
  else
    write_text_file(g.out, text);
  return kOk;
}

// --- mll-sweep ---------------------------------------------------------------

struct SweepArgs {
  std::string data;
  bool raw = false;
  int d1 = 1;
  std::vector<int> widths{2, 8, 64, 1024};
  std::vector<int> depths{1, 3, 7};
  int n_mc = 100;
  int final_n_mc = 1000;
  int max_iters = 1000;
  double lr = 0.1;
  double vb = 0.1, vw = 1.0, vn = 0.1;
};

int mll_sweep_cmd(const SweepArgs& a, const Global& g, std::ostream& out) {
  const Dataset d = load_or_rings(a.data, a.raw);
  OptimizeOptions opts;
  opts.n_mc = a.n_mc;
  opts.final_n_mc = a.final_n_mc;
  opts.max_iters = a.max_iters;
  opts.lr0 = a.lr;
  opts.threads = g.threads;
  const auto cells = mll_sweep(d.X, d.Y, a.d1, a.widths, a.depths, Nonlinearity::relu(),
                               Hyperparams{a.vb, a.vw, a.vn}, opts, RngSeed{g.seed});
  CsvTable t({"H", "D2", "status", "v_b", "v_w", "v_n", "mll_per_point", "se_per_point", "iterations", "error"});
  add_common_config(t, "mll-sweep", g);
  t.add_config("data", a.data.empty() ? "rings" : a.data);
  t.add_config("standardized", a.raw ? "no" : "yes");
  t.add_config("n_points", std::to_string(d.size()));
  t.add_config("d1", std::to_string(a.d1));
  t.add_config("widths", join(a.widths));
  t.add_config("depths", join(a.depths));
  t.add_config("n_mc", std::to_string(a.n_mc));
  t.add_config("final_n_mc", std::to_string(a.final_n_mc));
  t.add_config("max_iters", std::to_string(a.max_iters));
  t.add_config("lr0", fmt(a.lr));
  t.add_config("init", "v_b=" + fmt(a.vb) + " v_w=" + fmt(a.vw) + " v_n=" + fmt(a.vn));
  int ok = 0;
  for (const auto& c : cells) {
    std::string err = c.error;
    std::replace(err.begin(), err.end(), ',', ';');
    ok += c.ok ? 1 : 0;
    t.add_row({c.H == 0 ? "inf" : std::to_string(c.H), std::to_string(c.D2), c.ok ? "ok" : "failed",
               c.ok ? fmt(c.hyper.v_b) : "", c.ok ? fmt(c.hyper.v_w) : "", c.ok ? fmt(c.hyper.v_n) : "",
               c.ok ? fmt(c.mll_per_point) : "", c.ok ? fmt(c.se_per_point) : "",
               c.ok ? std::to_string(c.iterations) : "", err});
  }
  emit(t, g, out);
  return ok > 0 ? kOk : kNumerical;
}

// --- quadcorr ------------------------------------------------------------------

struct QuadArgs {
  std::string mode = "compare";
  std::vector<int> h_list{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int d = 2;
  double vb = 1.0, vw = 1.0, vn = 1e-4;
  int n_samples = 1000000;
  int n_runs = 10;
  double beta_over_pi = -1.0;
};

int quadcorr_cmd(const QuadArgs& a, const Global& g, std::ostream& out) {
  if (a.mode != "theory" && a.mode != "sim" && a.mode != "compare")
    throw Error(ErrorKind::InvalidInput, "--mode must be theory, sim or compare");
  if (a.d < 1) throw Error(ErrorKind::InvalidInput, "--d must be >= 1");
  const Hyperparams h{a.vb, a.vw, a.vn};
  const Matrix X = unit_axes();
  BottleneckGeometry geom = BottleneckGeometry::from_inputs(X, h, 1, true);
  const bool custom_beta = a.beta_over_pi >= 0.0;
  if (custom_beta) {
    if (a.mode != "theory") throw Error(ErrorKind::InvalidInput, "--beta is only available in theory mode");
    Matrix C = geom.C;
    C(0, 1) = C(1, 0) = cos_pi(a.beta_over_pi) * std::sqrt(C(0, 0) * C(1, 1));
    geom = BottleneckGeometry::from_covariance(C);
  }
  const bool theory = a.mode != "sim";
  const bool sim = a.mode != "theory";
  CsvTable t({"H", "D", "theory", "sim_mean", "sim_std", "sim_se", "abs_diff"});
  add_common_config(t, "quadcorr", g);
  t.add_config("mode", a.mode);
  t.add_config("inputs", "(1,0) (0,1)");
  t.add_config("architecture", "1 wide layer; bottleneck H; D-1 wide layers; bottleneck noise on");
  t.add_config("D", std::to_string(a.d));
  t.add_config("hyper", "v_b=" + fmt(a.vb) + " v_w=" + fmt(a.vw) + " v_n=" + fmt(a.vn));
  t.add_config("beta_over_pi", custom_beta ? fmt(a.beta_over_pi) : fmt(geom.beta / M_PI));
  if (sim) {
    t.add_config("n_samples", std::to_string(a.n_samples));
    t.add_config("n_runs", std::to_string(a.n_runs));
  }
  for (std::size_t k = 0; k < a.h_list.size(); ++k) {
    const int H = a.h_list[k];
    std::string th, mean, sd, se, diff;
    double theory_value = 0.0;
    if (theory) {
      theory_value = quad_corr_between(geom, h, a.d, H, 0, 1);
      th = fmt(theory_value);
    }
    if (sim) {
      Architecture arch = Architecture::single_bottleneck(2, 2, 1, H, a.d - 1);
      arch.bottleneck_noise = true;
      const RepeatedEstimate r =
          repeated_quad_corr(arch, h, X, a.n_samples, a.n_runs, RngSeed{g.seed}.child(k), 0, 1, 0, 1, g.threads);
      mean = fmt(r.mean);
      sd = fmt(r.std);
      se = fmt(r.std_error);
      if (theory) diff = fmt(std::abs(r.mean - theory_value));
    }
    t.add_row({std::to_string(H), std::to_string(a.d), th, mean, sd, se, diff});
  }
  emit(t, g, out);
  return kOk;
}

// --- phase ---------------------------------------------------------------------

struct PhaseArgs {
  std::string quantity = "qx-inf";
  std::string vw_grid = "0.5:1.5:101";
  std::vector<double> alpha_list{0.25, 0.5, 0.75};
  double vb = 0.09;
  double vn = 0.0;
  int H = 2;
};

int phase_cmd(const PhaseArgs& a, const Global& g, std::ostream& out) {
  if (a.quantity != "qx-inf" && a.quantity != "q-inf" && a.quantity != "depth-scale")
    throw Error(ErrorKind::InvalidInput, "--quantity must be qx-inf, q-inf or depth-scale");
  const std::vector<double> grid = parse_grid(a.vw_grid);
  CsvTable t({"quantity", "alpha_over_pi", "beta_over_pi", "v_w", "value"});
  add_common_config(t, "phase", g);
  t.add_config("quantity", a.quantity);
  t.add_config("vw_grid", a.vw_grid);
  t.add_config("alpha_over_pi", join(a.alpha_list));
  t.add_config("v_b", fmt(a.vb));
  t.add_config("v_n", fmt(a.vn));
  t.add_config("H", std::to_string(a.H));
  t.add_config("inputs", "unit norm; no pre-bottleneck hidden layers");
  const std::vector<double> alphas = a.quantity == "depth-scale" ? std::vector<double>{0.0} : a.alpha_list;
  for (double alpha_pi : alphas) {
    for (double vw : grid) {
      const Hyperparams h{a.vb, vw, a.vn};
      double value = 0.0;
      std::string beta_col;
      if (a.quantity == "depth-scale") {
        value = depth_scale(h);
      } else {
        BottleneckGeometry geom = BottleneckGeometry::from_input_angle(alpha_pi * M_PI, h);
        if (a.vn > 0.0) {
          Matrix C = geom.C;
          C.diagonal().array() += a.vn;
          geom = BottleneckGeometry::from_covariance(C);
        }
        beta_col = fmt(geom.beta / M_PI);
        value = a.quantity == "qx-inf" ? quad_corr_between_inf(geom, h, a.H, 0, 1)
                                       : quad_corr_single_inf(geom, h, a.H, 0, 1);
      }
      t.add_row({a.quantity, a.quantity == "depth-scale" ? "" : fmt(alpha_pi), beta_col, fmt(vw),
                 std::isinf(value) ? "inf" : fmt(value)});
    }
  }
  emit(t, g, out);
  return kOk;
}

// --- multi-bottleneck ----------------------------------------------------------

struct MultiArgs {
  std::vector<int> widths{1, 2, 4, 8, 16, 256};
  std::vector<int> counts{0, 1, 2, 3};
  int total_hidden = 11;
  int n_samples = 1000000;
  int n_runs = 10;
  double vb = 1.0, vw = 1.0, vn = 0.0;
};

int multi_cmd(const MultiArgs& a, const Global& g, std::ostream& out) {
  const Hyperparams h{a.vb, a.vw, a.vn};
  CsvTable t({"width", "n_bottlenecks", "positions", "q_mean", "q_std"});
  add_common_config(t, "multi-bottleneck", g);
  t.add_config("total_hidden", std::to_string(a.total_hidden));
  t.add_config("inputs", "(1,0) (0,1)");
  t.add_config("hyper", "v_b=" + fmt(a.vb) + " v_w=" + fmt(a.vw) + " v_n=" + fmt(a.vn));
  t.add_config("n_samples", std::to_string(a.n_samples));
  t.add_config("n_runs", std::to_string(a.n_runs));
  std::uint64_t index = 0;
  for (int width : a.widths) {
    for (int k : a.counts) {
      const auto pos = equally_spaced_positions(a.total_hidden, k);
      std::string pos_s;
      for (std::size_t i = 0; i < pos.size(); ++i) pos_s += (i ? " " : "") + std::to_string(pos[i]);
      const MultiBottleneckRow r = multi_bottleneck_experiment(a.total_hidden, k, width, h, unit_axes(),
                                                               a.n_samples, a.n_runs,
                                                               RngSeed{g.seed}.child(index++), g.threads);
      t.add_row({std::to_string(width), std::to_string(k), pos_s, fmt(r.q_mean), fmt(r.q_std)});
    }
  }
  emit(t, g, out);
  return kOk;
}

// --- correspondence ------------------------------------------------------------

struct CorrespondenceArgs {
  std::string data;
  bool raw = false;
  int subset = 10;
  int d1 = 1;
  int d2 = 1;
  std::vector<int> ladder{4, 16, 64, 256, 1024};
  int n_mc = 200;
  double vb = 0.1, vw = 1.0, vn = 0.1;
};

int correspondence_cmd(const CorrespondenceArgs& a, const Global& g, std::ostream& out) {
  Dataset d = load_or_rings(a.data, a.raw);
  if (a.subset > 0 && a.subset < d.size()) d = every_kth_subset(d, a.subset);
  const auto rows = wide_correspondence_check(a.d1, a.d2, a.ladder, Hyperparams{a.vb, a.vw, a.vn}, d.X, d.Y,
                                              a.n_mc, RngSeed{g.seed}, Nonlinearity::relu(), g.threads);
  CsvTable t({"H", "mll_h", "mll_h_se", "mll_inf", "abs_gap", "zh_frobenius_error"});
  add_common_config(t, "correspondence", g);
  t.add_config("data", a.data.empty() ? "rings" : a.data);
  t.add_config("standardized", a.raw ? "no" : "yes");
  t.add_config("n_points", std::to_string(d.size()));
  t.add_config("d1", std::to_string(a.d1));
  t.add_config("d2", std::to_string(a.d2));
  t.add_config("n_mc", std::to_string(a.n_mc));
  t.add_config("hyper", "v_b=" + fmt(a.vb) + " v_w=" + fmt(a.vw) + " v_n=" + fmt(a.vn));
  for (const auto& r : rows)
    t.add_row({std::to_string(r.H), fmt(r.mll_h), fmt(r.mll_h_se), fmt(r.mll_inf), fmt(r.gap), fmt(r.zh_error)});
  emit(t, g, out);
  return kOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::ArchitectureValidation:
      return kUsage;
    case ErrorKind::Io:
    case ErrorKind::Parse:
      return kIo;
    default:
      return kNumerical;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bottleneck NNGP kernels, likelihoods, samplers and correlation analytics", "bnngp"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "Root random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores); results do not depend on it");
  app.add_option("--out", g.out, "Output CSV path, '-' for stdout")->capture_default_str();

  auto* rings = app.add_subcommand("rings-gen", "Write the 120-point Rings dataset (columns x_0,x_1,x_2,y_0)");

  SweepArgs sw;
  auto* sweep = app.add_subcommand(
      "mll-sweep",
      "Optimize hyperparameters per (H, D2) and report MLL/N. Columns: H,D2,status,v_b,v_w,v_n,"
      "mll_per_point,se_per_point,iterations,error (H = inf is the no-bottleneck NNGP)");
  sweep->add_option("--data", sw.data, "Dataset CSV (default: generated Rings)");
  sweep->add_flag("--raw", sw.raw, "Do not standardize the data");
  sweep->add_option("--d1", sw.d1, "Wide layers before the bottleneck")->capture_default_str();
  sweep->add_option("--widths", sw.widths, "Bottleneck widths")->delimiter(',')->capture_default_str();
  sweep->add_option("--depths", sw.depths, "Post-bottleneck wide layers D2")->delimiter(',')->capture_default_str();
  sweep->add_option("--n-mc", sw.n_mc, "MC samples per optimization step")->capture_default_str();
  sweep->add_option("--final-n-mc", sw.final_n_mc, "MC samples for the final MLL")->capture_default_str();
  sweep->add_option("--max-iters", sw.max_iters, "Iteration cap per cell")->capture_default_str();
  sweep->add_option("--lr", sw.lr, "Initial Adam learning rate")->capture_default_str();
  sweep->add_option("--init-vb", sw.vb)->capture_default_str();
  sweep->add_option("--init-vw", sw.vw)->capture_default_str();
  sweep->add_option("--init-vn", sw.vn)->capture_default_str();

  QuadArgs qa;
  auto* quad = app.add_subcommand(
      "quadcorr",
      "Between-output quadratic correlation at inputs (1,0),(0,1). Columns: H,D,theory,sim_mean,sim_std,"
      "sim_se,abs_diff (sim_std is the run-to-run standard deviation)");
  quad->add_option("--mode", qa.mode, "theory, sim or compare")->capture_default_str();
  quad->add_option("--h-list", qa.h_list, "Bottleneck widths")->delimiter(',')->capture_default_str();
  quad->add_option("--d", qa.d, "Post-bottleneck depth D (weight layers)")->capture_default_str();
  quad->add_option("--vb", qa.vb)->capture_default_str();
  quad->add_option("--vw", qa.vw)->capture_default_str();
  quad->add_option("--vn", qa.vn)->capture_default_str();
  quad->add_option("--n-samples", qa.n_samples)->capture_default_str();
  quad->add_option("--n-runs", qa.n_runs)->capture_default_str();
  quad->add_option("--beta", qa.beta_over_pi, "Theory only: bottleneck angle in units of pi");

  PhaseArgs pa;
  auto* phase = app.add_subcommand(
      "phase", "Infinite-depth quantities over a v_w grid. Columns: quantity,alpha_over_pi,beta_over_pi,v_w,value");
  phase->add_option("--quantity", pa.quantity, "qx-inf, q-inf or depth-scale")->capture_default_str();
  phase->add_option("--vw-grid", pa.vw_grid, "Comma list or lo:hi:n")->capture_default_str();
  phase->add_option("--alpha-list", pa.alpha_list, "Input angles in units of pi")->delimiter(',')->capture_default_str();
  phase->add_option("--vb", pa.vb)->capture_default_str();
  phase->add_option("--vn", pa.vn, "Noise added to the bottleneck covariance")->capture_default_str();
  phase->add_option("--H", pa.H)->capture_default_str();

  MultiArgs ma;
  auto* multi = app.add_subcommand(
      "multi-bottleneck",
      "q_cross with several equally spaced bottlenecks. Columns: width,n_bottlenecks,positions,q_mean,q_std");
  multi->add_option("--widths", ma.widths)->delimiter(',')->capture_default_str();
  multi->add_option("--n-bottlenecks-list", ma.counts)->delimiter(',')->capture_default_str();
  multi->add_option("--total-hidden", ma.total_hidden)->capture_default_str();
  multi->add_option("--n-samples", ma.n_samples)->capture_default_str();
  multi->add_option("--n-runs", ma.n_runs)->capture_default_str();
  multi->add_option("--vb", ma.vb)->capture_default_str();
  multi->add_option("--vw", ma.vw)->capture_default_str();
  multi->add_option("--vn", ma.vn)->capture_default_str();

  CorrespondenceArgs ca;
  auto* corr = app.add_subcommand(
      "correspondence",
      "Single-bottleneck MLL against the NNGP limit over a width ladder. Columns: H,mll_h,mll_h_se,mll_inf,"
      "abs_gap,zh_frobenius_error");
  corr->add_option("--data", ca.data, "Dataset CSV (default: generated Rings)");
  corr->add_flag("--raw", ca.raw, "Do not standardize the data");
  corr->add_option("--subset", ca.subset, "Keep every (N/subset)-th point; 0 keeps all")->capture_default_str();
  corr->add_option("--d1", ca.d1)->capture_default_str();
  corr->add_option("--d2", ca.d2)->capture_default_str();
  corr->add_option("--width-ladder", ca.ladder)->delimiter(',')->capture_default_str();
  corr->add_option("--n-mc", ca.n_mc)->capture_default_str();
  corr->add_option("--vb", ca.vb)->capture_default_str();
  corr->add_option("--vw", ca.vw)->capture_default_str();
  corr->add_option("--vn", ca.vn)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    set_default_threads(g.threads);
    if (*rings) return rings_gen(g, out);
    if (*sweep) return mll_sweep_cmd(sw, g, out);
    if (*quad) return quadcorr_cmd(qa, g, out);
    if (*phase) return phase_cmd(pa, g, out);
    if (*multi) return multi_cmd(ma, g, out);
    if (*corr) return correspondence_cmd(ca, g, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}

}  // namespace bnngp::cli
