// speckle: simulate, estimate, reconstruct and evaluate correlated multi-look
// holographic speckle measurements.
//
// Exit codes:
//   0  success (grad-check: every check passed)
//   1  grad-check ran but at least one check failed
//   2  usage error or invalid argument
//   3  file I/O or format error
//   4  capability limit (e.g. dense oracle size cap)
//   5  numerical failure (CG did not converge, non-PD operator)
//   6  degenerate input (e.g. all-zero measurements)
//   70 unexpected internal error

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "speckle/estimate.hpp"
#include "speckle/gradcheck.hpp"
#include "speckle/io.hpp"
#include "speckle/kernels.hpp"
#include "speckle/metrics.hpp"
#include "speckle/recon.hpp"
#include "speckle/scene.hpp"
#include "speckle/sim.hpp"

using namespace speckle;

namespace {

enum Exit { kOk = 0, kChecksFailed = 1, kUsage = 2, kIo = 3, kCapability = 4, kNumerical = 5,
            kDegenerate = 6, kInternal = 70 };

struct Options {
  // shared
  int threads = 0;
  std::string config;
  // simulate
  std::string image;
  std::size_t scene_size = 0;
  std::string aperture = "circular:1.0";
  double alpha = 0.0;
  int looks = 4;
  double sigma_z = 15.0;  // 8-bit units
  std::uint64_t seed = 0;
  std::string out;
  std::string truth_out;
  // estimate-alpha / reconstruct
  std::string meas;
  std::string csv;
  std::string alpha_spec = "auto";
  std::string projector = "tv:0.02";
  int iters = 50;
  int mc_probes = 50;
  double cg_tol = 1e-6;
  std::string m_inverse = "split";
  std::string probe_law = "gaussian";
  std::string log;
  std::string truth;
  // evaluate
  std::string recon;
  // grad-check
  std::size_t size = 16;
  // scene
  int bits = 8;
};

// Long option names accepted in a --config file, per subcommand.
std::vector<std::string> option_names(const CLI::App* sub) {
  std::vector<std::string> names;
  for (const auto* opt : sub->get_options()) {
    for (const auto& n : opt->get_lnames())
      if (n != "help" && n != "config") names.push_back(n);
  }
  return names;
}

// Appends "--key value" for every config entry whose flag is not already on
// the command line, so flags override the file.
std::vector<std::string> merge_config(const std::vector<std::string>& args, const CLI::App* sub,
                                      const std::string& path) {
  const auto entries = io::read_run_config(path, option_names(sub));
  std::set<std::string> given;
  for (const auto& a : args)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));
  std::vector<std::string> merged = args;
  for (const auto& [key, value] : entries) {
    if (given.count(key)) continue;
    merged.push_back("--" + key);
    merged.push_back(value);
  }
  return merged;
}

std::shared_ptr<const ApertureMask> make_aperture(const std::string& spec, Shape shape) {
  return std::make_shared<const ApertureMask>(parse_aperture(spec, shape));
}

int cmd_simulate(const Options& o) {
  if (o.image.empty() == (o.scene_size == 0))
    throw InvalidArgument("simulate: give exactly one of --image or --scene");
  const ReflectivityImage x = o.image.empty() ? synthetic_scene(o.scene_size, o.scene_size)
                                              : io::load_reflectivity(o.image);
  const AcquisitionParams params{o.looks, o.alpha, sigma_from_8bit(o.sigma_z), o.seed};
  const auto meas = simulate_measurements(x, make_aperture(o.aperture, x.shape()), params);
  io::write_cfld(o.out, meas);
  if (!o.truth_out.empty()) io::write_pgm(o.truth_out, x.values(), 16);
  std::cout << "wrote " << o.out << ": " << meas.size() << " looks of " << to_string(x.shape())
            << "\n";
  return kOk;
}

int cmd_estimate(const Options& o) {
  const auto file = io::read_cfld(o.meas);
  const auto est = estimate_alpha(file.meas.looks);
  std::cout.precision(10);
  std::cout << "gamma_hat " << est.gamma_hat << "\n"
            << "alpha_raw " << est.alpha_raw << "\n"
            << "alpha_hat " << est.alpha_hat << "\n";
  if (!o.csv.empty()) {
    const bool fresh = !std::filesystem::exists(o.csv);
    std::ofstream os(o.csv, std::ios::app);
    if (!os) throw IoError("cannot open '" + o.csv + "' for appending");
    os.precision(17);
    if (fresh) os << "file,looks,gamma_hat,alpha_raw,alpha_hat\n";
    os << o.meas << ',' << est.looks_used << ',' << est.gamma_hat << ',' << est.alpha_raw << ','
       << est.alpha_hat << '\n';
  }
  return kOk;
}

int cmd_reconstruct(const Options& o) {
  auto file = io::read_cfld(o.meas);
  MeasurementSet& meas = file.meas;
  const double sigma = sigma_from_8bit(o.sigma_z);
  if (std::abs(sigma - file.header.sigma_z) > 1e-9 * file.header.sigma_z)
    std::cerr << "warning: --sigma-z " << o.sigma_z << " differs from the file header ("
              << sigma_to_8bit(file.header.sigma_z) << ")\n";
  if (!o.truth.empty()) {
    auto t = io::load_reflectivity(o.truth);
    require_same_shape(t.shape(), meas.shape(), "--truth");
    meas.truth = std::move(t);
  }
  std::optional<double> alpha;
  if (o.alpha_spec != "auto") {
    try {
      std::size_t used = 0;
      alpha = std::stod(o.alpha_spec, &used);
      if (used != o.alpha_spec.size()) throw std::invalid_argument("");
    } catch (const std::logic_error&) {
      throw InvalidArgument("--alpha must be 'auto' or a number in [0, 1]");
    }
  }
  SolverConfig solver;
  solver.max_pgd_iters = o.iters;
  solver.mc_probes = o.mc_probes;
  solver.cg_tol = o.cg_tol;
  solver.nested_cg_tol = std::min(solver.nested_cg_tol, o.cg_tol);
  solver.m_inverse = parse_m_inverse(o.m_inverse);
  solver.probe_law = parse_probe_law(o.probe_law);
  solver.validate();
  const auto projector = Projector::parse(o.projector);

  const auto result = pgd_reconstruct(meas, make_aperture(o.aperture, meas.shape()), sigma, alpha,
                                      projector, solver, RngStream(o.seed, "reconstruct"));
  io::write_pgm(o.out, result.image.values(), 16);
  if (!o.log.empty()) {
    std::ofstream os(o.log);
    if (!os) throw IoError("cannot open '" + o.log + "' for writing");
    write_trace_csv(os, result.report);
  }
  std::cout << "alpha " << result.report.alpha_used
            << (result.report.alpha_estimate ? " (estimated)" : "") << "\n"
            << "iterations " << result.report.iterations
            << (result.report.converged ? " (converged)" : "") << "\n";
  if (meas.truth && !result.report.trace.empty() && result.report.trace.back().psnr)
    std::cout << "psnr " << *result.report.trace.back().psnr << "\n";
  return kOk;
}

int cmd_evaluate(const Options& o) {
  const auto recon = io::load_reflectivity(o.recon);
  const auto truth = io::load_reflectivity(o.truth);
  const auto score = score_8bit(truth.values(), recon.values());
  std::cout.precision(6);
  std::cout << std::fixed << "psnr " << score.psnr_db << "\nssim " << score.ssim << "\n";
  return kOk;
}

int cmd_grad_check(const Options& o) {
  GradCheckConfig cfg;
  cfg.size = o.size;
  cfg.looks = o.looks;
  cfg.alpha = o.alpha;
  cfg.seed = o.seed;
  cfg.sigma_z = sigma_from_8bit(o.sigma_z);
  cfg.aperture = o.aperture;
  const auto report = run_grad_check(cfg);
  for (const auto& c : report.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << " (tol "
              << c.tolerance << ")\n";
  std::cout << (report.pass() ? "PASS" : "FAIL") << "\n";
  return report.pass() ? kOk : kChecksFailed;
}

int cmd_scene(const Options& o) {
  const auto x = synthetic_scene(o.scene_size, o.scene_size);
  io::write_pgm(o.out, x.values(), o.bits);
  return kOk;
}

void add_threads(CLI::App* sub, Options& o) {
  sub->add_option("--threads", o.threads, "Worker threads (default: SPECKLE_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--config", o.config, "key=value file; flags given on the command line win");
}

void build(CLI::App& app, Options& o) {
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Generate correlated multi-look measurements");
  sim->add_option("--image", o.image, "Grayscale PGM or PNG reflectivity");
  sim->add_option("--scene", o.scene_size, "Use the built-in synthetic scene at this size");
  sim->add_option("--aperture", o.aperture, "circular:<f> | annular[:<outer>[:<inner>]] | full");
  sim->add_option("--alpha", o.alpha, "Inter-look correlation")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--looks", o.looks, "Number of looks")->check(CLI::PositiveNumber);
  sim->add_option("--sigma-z", o.sigma_z, "Noise std in 8-bit intensity units")
      ->check(CLI::PositiveNumber);
  sim->add_option("--seed", o.seed);
  sim->add_option("--out", o.out, "Output CFLD file")->required();
  sim->add_option("--truth-out", o.truth_out, "Also write the reflectivity as 16-bit PGM");
  add_threads(sim, o);

  auto* est = app.add_subcommand("estimate-alpha", "Moment estimate of the correlation");
  est->add_option("--meas", o.meas, "CFLD measurements")->required();
  est->add_option("--csv", o.csv, "Append the result to this CSV file");
  add_threads(est, o);

  auto* rec = app.add_subcommand("reconstruct", "Projected gradient descent reconstruction");
  rec->add_option("--meas", o.meas, "CFLD measurements")->required();
  rec->add_option("--aperture", o.aperture);
  rec->add_option("--sigma-z", o.sigma_z, "Noise std in 8-bit intensity units")
      ->required()
      ->check(CLI::PositiveNumber);
  rec->add_option("--alpha", o.alpha_spec, "auto or a value in [0, 1]");
  rec->add_option("--projector", o.projector, "clamp | tv:<lambda> (lambda on the [0, 1] scale)");
  rec->add_option("--iters", o.iters)->check(CLI::NonNegativeNumber);
  rec->add_option("--mc-probes", o.mc_probes)->check(CLI::PositiveNumber);
  rec->add_option("--cg-tol", o.cg_tol)->check(CLI::PositiveNumber);
  rec->add_option("--m-inverse", o.m_inverse, "split | nested");
  rec->add_option("--probe-law", o.probe_law, "gaussian | rademacher");
  rec->add_option("--seed", o.seed);
  rec->add_option("--out", o.out, "Output 16-bit PGM")->required();
  rec->add_option("--log", o.log, "Per-iteration CSV log");
  rec->add_option("--truth", o.truth, "Ground truth image; adds PSNR to the log");
  add_threads(rec, o);

  auto* ev = app.add_subcommand("evaluate", "PSNR and SSIM against ground truth");
  ev->add_option("--recon", o.recon)->required();
  ev->add_option("--truth", o.truth)->required();
  add_threads(ev, o);

  auto* gc = app.add_subcommand("grad-check", "Compare matrix-free and dense computations");
  gc->add_option("--size", o.size, "Image side length")->check(CLI::PositiveNumber);
  gc->add_option("--looks", o.looks)->check(CLI::PositiveNumber);
  gc->add_option("--alpha", o.alpha)->check(CLI::Range(0.0, 1.0));
  gc->add_option("--sigma-z", o.sigma_z)->check(CLI::PositiveNumber);
  gc->add_option("--aperture", o.aperture);
  gc->add_option("--seed", o.seed);
  add_threads(gc, o);

  auto* sc = app.add_subcommand("scene", "Write the built-in synthetic scene as PGM");
  sc->add_option("--size", o.scene_size, "Side length")->required()->check(CLI::PositiveNumber);
  sc->add_option("--bits", o.bits, "8 or 16")->check(CLI::IsMember({8, 16}));
  sc->add_option("--out", o.out)->required();
  add_threads(sc, o);
}

int dispatch(const CLI::App& app, Options& o) {
  int threads = o.threads;
  if (threads == 0) {
    if (const char* env = std::getenv("SPECKLE_THREADS")) {
      threads = std::atoi(env);
      if (threads < 1) throw InvalidArgument("SPECKLE_THREADS must be a positive integer");
    }
  }
  if (threads > 0) kernels::set_threads(threads);

  const auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (name == "simulate") return cmd_simulate(o);
  if (name == "estimate-alpha") return cmd_estimate(o);
  if (name == "reconstruct") return cmd_reconstruct(o);
  if (name == "evaluate") return cmd_evaluate(o);
  if (name == "grad-check") return cmd_grad_check(o);
  if (name == "scene") return cmd_scene(o);
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  Options o;
  CLI::App app{"Correlated multi-look holographic speckle toolkit", "speckle"};
  build(app, o);
  try {
    // Config entries are merged before parsing so they can satisfy required flags.
    std::vector<std::string> merged = args;
    if (!args.empty()) {
      std::string config;
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
      }
      if (!config.empty()) {
        const CLI::App* sub = nullptr;
        try {
          sub = app.get_subcommand(args.front());
        } catch (const CLI::OptionNotFound&) {
        }
        if (sub) merged = merge_config(args, sub, config);
      }
    }
    std::vector<std::string> rev(merged.rbegin(), merged.rend());
    app.parse(rev);
    return dispatch(app, o);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const CapabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCapability;
  } catch (const DegenerateInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDegenerate;
  } catch (const SolverFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
