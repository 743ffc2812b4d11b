#include "ddpseg/driver.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ddpseg/costmodel.hpp"
#include "ddpseg/dynprog.hpp"
#include "ddpseg/evalloss.hpp"
#include "ddpseg/fit.hpp"
#include "ddpseg/gradients.hpp"
#include "ddpseg/imageio.hpp"
#include "ddpseg/phantom.hpp"
#include "ddpseg/softdp.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;

namespace ddpseg {

namespace {

inline constexpr int kConfigVersion = 1;

bool user_gave(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

std::string scalar_token(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// Expands `--config file.json` into extra arguments for options the user
// did not pass explicitly.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  auto verb_it = std::find_if(args.begin(), args.end(), [](const std::string& a) { return !a.starts_with("-"); });
  if (verb_it == args.end()) return args;
  std::string path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
    if (args[k].starts_with("--config=")) path = args[k].substr(9);
  }
  if (path.empty()) return args;

  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!cfg.is_object() || !cfg.contains("version") || !cfg["version"].is_number_integer() ||
      cfg["version"].get<int>() != kConfigVersion)
    throw ValidationError(path + ": config must be an object with \"version\": 1");
  std::vector<std::string> out = args;
  if (!cfg.contains(*verb_it)) return out;
  const auto& section = cfg[*verb_it];
  if (!section.is_object()) throw ValidationError(path + ": section '" + *verb_it + "' must be an object");
  for (const auto& [key, value] : section.items()) {
    if (user_gave(args, key)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back("--" + key);
    } else if (value.is_array()) {
      out.push_back("--" + key);
      for (const auto& e : value) out.push_back(scalar_token(e));
    } else {
      out.push_back("--" + key);
      out.push_back(scalar_token(value));
    }
  }
  return out;
}

ImageFormat image_format(const std::string& explicit_format, const fs::path& path) {
  return explicit_format.empty() ? format_from_extension(path) : parse_image_format(explicit_format);
}

std::vector<Polarity> parse_polarities(const std::vector<std::string>& names, int surfaces) {
  std::vector<Polarity> out;
  for (const auto& n : names) out.push_back(parse_polarity(n));
  // Default alternates, starting dark-to-bright at the top boundary.
  if (out.empty())
    for (int i = 0; i < surfaces; ++i) out.push_back(i % 2 == 0 ? Polarity::DarkToBright : Polarity::BrightToDark);
  if (static_cast<int>(out.size()) != surfaces)
    throw ValidationError("need one polarity per surface (" + std::to_string(surfaces) + ")");
  return out;
}

DropoutSpan parse_dropout(const std::string& text) {
  const auto parts = detail::split(text, ':');
  if (parts.size() == 3) {
    const auto s = detail::parse_int(parts[0]);
    const auto a = detail::parse_int(parts[1]);
    const auto b = detail::parse_int(parts[2]);
    if (s && a && b) return {*s, *a, *b};
  }
  throw ValidationError("dropout must be surface:start:end, got '" + text + "'");
}

struct CommonOptions {
  std::string config;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOptions& c) {
  cmd->add_option("--config", c.config, "JSON config; its section for this verb supplies defaults");
  cmd->add_option("--threads", c.threads, "Worker threads for per-surface work")->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constrained differentiable dynamic programming for layered surface segmentation", "ddpseg"};
  app.require_subcommand(1);
  CommonOptions common;

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic layered B-scan with ground truth");
  add_common(gen, common);
  std::string gen_spec, gen_out, gen_format = "csv";
  std::uint64_t gen_seed = 1;
  int gen_width = 0, gen_height = 0, gen_surfaces = 0;
  double gen_noise = 0.0, gen_gap = 0.0;
  std::vector<double> gen_amp, gen_wave, gen_contrasts;
  std::vector<std::string> gen_dropouts;
  gen->add_option("--spec", gen_spec, "Phantom spec JSON");
  gen->add_option("--out", gen_out, "Output directory (image, truth.csv, phantom.json)")->required();
  gen->add_option("--image-format", gen_format, "csv (lossless) or pgm (16-bit)")->capture_default_str();
  auto* o_seed = gen->add_option("--seed", gen_seed, "RNG seed");
  auto* o_width = gen->add_option("--width", gen_width, "Columns X (default 128)")->check(CLI::Range(2, 1 << 20));
  auto* o_height = gen->add_option("--height", gen_height, "Rows Z (default 64)")->check(CLI::Range(2, 1 << 20));
  auto* o_surf = gen->add_option("--surfaces", gen_surfaces, "Surface count N (default 2)")->check(CLI::PositiveNumber);
  auto* o_noise = gen->add_option("--noise", gen_noise, "Gaussian noise sigma (default 0)");
  auto* o_gap = gen->add_option("--min-gap", gen_gap, "Minimum surface separation (default 8)");
  auto* o_amp = gen->add_option("--amplitude", gen_amp, "Sinusoid amplitude per surface, or one for all (default 4)");
  auto* o_wave = gen->add_option("--wavelength", gen_wave, "Sinusoid wavelength per surface, or one for all (default 64)");
  auto* o_con = gen->add_option("--contrasts", gen_contrasts, "N+1 layer intensities, top to bottom");
  gen->add_option("--dropout", gen_dropouts, "Weak-boundary span surface:start:end (end exclusive)");

  // cost
  auto* cost = app.add_subcommand("cost", "Image or logits -> soft-argmax mu -> cost volume -(z-mu)^2");
  add_common(cost, common);
  std::string cost_image, cost_logits, cost_out, cost_format, cost_logits_out, cost_mu_out;
  std::vector<std::string> cost_polarity;
  int cost_surfaces = 1;
  double cost_gain = kDefaultHeuristicGain;
  auto* o_ci = cost->add_option("--image", cost_image, "Input B-scan (.csv or .pgm)");
  auto* o_cl = cost->add_option("--logits", cost_logits, "Input logit volume CSV");
  o_ci->excludes(o_cl);
  cost->add_option("--image-format", cost_format, "Override format detection (csv, pgm)");
  cost->add_option("--polarity", cost_polarity, "Per-surface edge polarity: dark-to-bright | bright-to-dark");
  cost->add_option("--surfaces", cost_surfaces, "Surface count when --polarity is omitted")
      ->check(CLI::PositiveNumber)->capture_default_str();
  cost->add_option("--gain", cost_gain, "Heuristic logit gain")->capture_default_str();
  cost->add_option("--out", cost_out, "Output cost volume CSV")->required();
  cost->add_option("--logits-out", cost_logits_out, "Also write the logits");
  cost->add_option("--mu-out", cost_mu_out, "Also write mu as a surface CSV");

  // solve
  auto* solve = app.add_subcommand("solve", "Cost volume -> surfaces (hard DP or differentiable DP)");
  add_common(solve, common);
  std::string solve_cost, solve_out;
  std::vector<std::string> solve_train;
  bool solve_hard = false, solve_soft = false;
  int solve_delta = -1;
  double solve_alpha = 1.0, solve_eps = 1e-2, solve_temp = 0.0;
  solve->add_option("--cost", solve_cost, "Cost volume CSV")->required();
  auto* o_hard = solve->add_flag("--hard", solve_hard, "Exact max-sum DP");
  auto* o_soft = solve->add_flag("--soft", solve_soft, "Smoothed DP with soft backtracking (default)");
  o_hard->excludes(o_soft);
  auto* o_delta = solve->add_option("--delta", solve_delta, "Uniform smoothness limit")->check(CLI::NonNegativeNumber);
  auto* o_train = solve->add_option("--train", solve_train, "Training tracings for delta estimation");
  o_delta->excludes(o_train);
  solve->add_option("--alpha", solve_alpha, "Margin added to the largest training step")->capture_default_str();
  solve->add_option("--epsilon", solve_eps, "Smoothed-max approximation tolerance")->capture_default_str();
  auto* o_temp = solve->add_option("--temperature", solve_temp, "Explicit temperature for all surfaces")
                     ->check(CLI::PositiveNumber);
  solve->add_option("--out", solve_out, "Output surface CSV")->required();

  // fit
  auto* fitc = app.add_subcommand("fit", "Pretrain then fine-tune per-column logits through the DDP module");
  add_common(fitc, common);
  std::string fit_image, fit_logits, fit_truth, fit_out, fit_history, fit_mu_out, fit_format;
  std::vector<std::string> fit_train, fit_polarity;
  double fit_gain = kDefaultFitGain;
  FitConfig fit_cfg;
  auto* o_fi = fitc->add_option("--image", fit_image, "Input B-scan; logits come from the gradient heuristic");
  auto* o_fl = fitc->add_option("--logits", fit_logits, "Initial logit volume CSV");
  o_fi->excludes(o_fl);
  fitc->add_option("--image-format", fit_format, "Override format detection (csv, pgm)");
  fitc->add_option("--truth", fit_truth, "Ground-truth surface CSV")->required();
  fitc->add_option("--train", fit_train, "Training tracings for delta estimation (default: --truth)");
  fitc->add_option("--polarity", fit_polarity, "Per-surface edge polarity for --image");
  fitc->add_option("--gain", fit_gain, "Heuristic logit gain")->capture_default_str();
  fitc->add_option("--alpha", fit_cfg.alpha, "Delta margin")->capture_default_str();
  fitc->add_option("--epsilon", fit_cfg.epsilon, "Smoothed-max tolerance")->capture_default_str();
  fitc->add_option("--pretrain-steps", fit_cfg.pretrain_steps, "Phase-1 steps")->capture_default_str();
  fitc->add_option("--finetune-steps", fit_cfg.finetune_steps, "Phase-2 steps")->capture_default_str();
  fitc->add_option("--lr", fit_cfg.learning_rate, "Learning rate")->capture_default_str();
  fitc->add_option("--finetune-lr", fit_cfg.finetune_learning_rate, "Phase-2 learning rate (negative: same as --lr)")
      ->capture_default_str();
  fitc->add_option("--out", fit_out, "Output surface CSV")->required();
  fitc->add_option("--history", fit_history, "Loss history CSV");
  fitc->add_option("--mu-out", fit_mu_out, "Final soft-argmax mu as surface CSV");

  // eval
  auto* eval = app.add_subcommand("eval", "Compare predicted and ground-truth surfaces");
  add_common(eval, common);
  std::string eval_pred, eval_truth, eval_out;
  double eval_res = kDukeAxialResolutionUm;
  eval->add_option("--pred", eval_pred, "Predicted surface CSV")->required();
  eval->add_option("--truth", eval_truth, "Ground-truth surface CSV")->required();
  eval->add_option("--resolution", eval_res, "Axial resolution in um per pixel")
      ->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--out", eval_out, "Metric JSON (stdout when omitted)");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic DDP gradients with central differences");
  add_common(gc, common);
  std::string gc_cost, gc_out;
  int gc_delta = 1;
  double gc_eps = 1e-1, gc_temp = 0.0, gc_h = kDefaultFiniteDiffStep;
  gc->add_option("--cost", gc_cost, "Cost volume CSV")->required();
  gc->add_option("--delta", gc_delta, "Uniform smoothness limit")->check(CLI::NonNegativeNumber)->capture_default_str();
  gc->add_option("--epsilon", gc_eps, "Smoothed-max tolerance")->capture_default_str();
  auto* o_gtemp = gc->add_option("--temperature", gc_temp, "Explicit temperature")->check(CLI::PositiveNumber);
  gc->add_option("--step", gc_h, "Finite-difference step")->check(CLI::PositiveNumber)->capture_default_str();
  gc->add_option("--out", gc_out, "Report JSON (stdout when omitted)");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp&) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err << "ddpseg: " << e.what() << "\n";
      return kExitValidation;
    }
    const int threads = common.threads;

    if (gen->parsed()) {
      PhantomSpec s = gen_spec.empty() ? PhantomSpec::with_surfaces(o_surf->count() ? gen_surfaces : 2)
                                       : phantom_spec_from_json(read_text_file(gen_spec));
      if (o_surf->count() && gen_surfaces != s.surfaces) {
        const PhantomSpec d = PhantomSpec::with_surfaces(gen_surfaces);
        s.surfaces = d.surfaces;
        s.amplitude = d.amplitude;
        s.wavelength = d.wavelength;
        s.contrasts = d.contrasts;
      }
      auto broadcast = [&](const std::vector<double>& v) {
        return v.size() == 1 ? std::vector<double>(static_cast<std::size_t>(s.surfaces), v[0]) : v;
      };
      if (o_seed->count()) s.seed = gen_seed;
      if (o_width->count()) s.width = gen_width;
      if (o_height->count()) s.height = gen_height;
      if (o_noise->count()) s.noise_sigma = gen_noise;
      if (o_gap->count()) s.min_gap = gen_gap;
      if (o_amp->count()) s.amplitude = broadcast(gen_amp);
      if (o_wave->count()) s.wavelength = broadcast(gen_wave);
      if (o_con->count()) s.contrasts = gen_contrasts;
      if (!gen_dropouts.empty()) {
        s.dropouts.clear();
        for (const auto& d : gen_dropouts) s.dropouts.push_back(parse_dropout(d));
      }
      const ImageFormat fmt = parse_image_format(gen_format);
      const Phantom ph = generate(s);
      std::error_code ec;
      fs::create_directories(gen_out, ec);
      if (ec) throw IoError("cannot create directory '" + gen_out + "'");
      const fs::path dir(gen_out);
      save_bscan(ph.image, dir / (fmt == ImageFormat::Csv ? "image.csv" : "image.pgm"), fmt);
      write_surfaces(ph.truth.positions(), dir / "truth.csv");
      auto j = nlohmann::ordered_json::parse(to_json(s));
      j["step_bound"] = ph.step_bound;
      std::vector<std::string> pol;
      for (auto p : s.polarities()) pol.emplace_back(to_string(p));
      j["polarity"] = pol;
      write_file_atomic(dir / "phantom.json", j.dump(2) + "\n");
      return kExitOk;
    }

    if (cost->parsed()) {
      LogitVolume logits;
      if (!cost_logits.empty()) {
        logits = LogitVolume(read_volume(cost_logits));
      } else if (!cost_image.empty()) {
        const BScan img = load_bscan(cost_image, image_format(cost_format, cost_image));
        const int n = cost_polarity.empty() ? cost_surfaces : static_cast<int>(cost_polarity.size());
        const auto pol = parse_polarities(cost_polarity, n);
        logits = heuristic_logits(gradient_channels(img), pol, cost_gain);
      } else {
        throw ValidationError("cost needs --image or --logits");
      }
      const MuEstimate mu = surface_mu(softmax_z(logits));
      write_volume(cost_from_mu(mu, logits.height()), cost_out);
      if (!cost_logits_out.empty()) write_volume(logits, cost_logits_out);
      if (!cost_mu_out.empty()) write_surfaces(mu, cost_mu_out);
      return kExitOk;
    }

    if (solve->parsed()) {
      const CostVolume c(read_volume(solve_cost));
      if (!(solve_eps > 0.0)) throw ValidationError("--epsilon must be positive");
      if (!(solve_alpha > 0.0)) throw ValidationError("--alpha must be positive");
      SmoothnessSpec spec;
      if (o_delta->count()) {
        spec = spec_from_deltas(Grid2<int>(c.surfaces(), c.width() - 1, solve_delta), solve_eps, solve_alpha);
      } else if (!solve_train.empty()) {
        std::vector<SurfaceSet> train;
        for (const auto& p : solve_train) train.push_back(read_surfaces(p, c.height()));
        spec = estimate_delta(train, solve_alpha, solve_eps);
      } else {
        throw ValidationError("solve needs --delta or --train");
      }
      if (o_temp->count()) std::fill(spec.temperatures.begin(), spec.temperatures.end(), solve_temp);
      SurfaceSet result;
      if (solve_hard) {
        const HardSolution h = hard_dp_solve(c, spec, threads);
        result = SurfaceSet(c.surfaces(), c.width());
        for (int i = 0; i < c.surfaces(); ++i)
          for (int x = 0; x < c.width(); ++x) result(i, x) = h.path(i, x);
      } else {
        result = segment(c, spec, threads);
      }
      write_surfaces(result, solve_out);
      return kExitOk;
    }

    if (fitc->parsed()) {
      fit_cfg.threads = threads;
      LogitVolume init;
      if (!fit_logits.empty()) {
        init = LogitVolume(read_volume(fit_logits));
      } else if (!fit_image.empty()) {
        const BScan img = load_bscan(fit_image, image_format(fit_format, fit_image));
        const SurfaceSet probe = read_surfaces(fit_truth);
        const auto pol = parse_polarities(fit_polarity, probe.surfaces());
        init = heuristic_logits(gradient_channels(img), pol, fit_gain);
      } else {
        throw ValidationError("fit needs --image or --logits");
      }
      const GroundTruth gt(read_surfaces(fit_truth, init.height()), init.height());
      std::vector<SurfaceSet> train;
      if (fit_train.empty()) train.push_back(gt.positions());
      for (const auto& p : fit_train) train.push_back(read_surfaces(p, init.height()));
      const SmoothnessSpec spec = estimate_delta(train, fit_cfg.alpha, fit_cfg.epsilon);
      const FitResult r = fit_surfaces(init, gt, spec, fit_cfg);
      write_surfaces(r.surfaces, fit_out);
      if (!fit_history.empty()) write_file_atomic(fit_history, history_csv(r.history));
      if (!fit_mu_out.empty()) write_surfaces(r.mu, fit_mu_out);
      return kExitOk;
    }

    if (eval->parsed()) {
      const SurfaceSet pred = read_surfaces(eval_pred);
      const SurfaceSet truth = read_surfaces(eval_truth);
      const std::string json = to_json(metrics(pred, truth, eval_res));
      if (eval_out.empty())
        out << json;
      else
        write_file_atomic(eval_out, json);
      return kExitOk;
    }

    if (gc->parsed()) {
      const CostVolume c(read_volume(gc_cost));
      SmoothnessSpec spec = spec_from_deltas(Grid2<int>(c.surfaces(), c.width() - 1, gc_delta), gc_eps);
      if (o_gtemp->count()) std::fill(spec.temperatures.begin(), spec.temperatures.end(), gc_temp);
      const std::string json = to_json(finite_diff_check(c, spec, gc_h)) + "\n";
      if (gc_out.empty())
        out << json;
      else
        write_file_atomic(gc_out, json);
      return kExitOk;
    }
  } catch (const IoError& e) {
    err << "ddpseg: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "ddpseg: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace ddpseg
