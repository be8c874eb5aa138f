// rmdm-cli: synthesize data, fit and evaluate MDM models, cross-validate and
// replay adaptive sessions. CSV goes to --out (or stdout where optional);
// human-readable summaries go to stderr.

#include "rmdm/errors.hpp"
#include "rmdm/evaluation.hpp"
#include "rmdm/io.hpp"
#include "rmdm/session.hpp"
#include "rmdm/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace rmdm;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// ---- options shared by fit and crossval -----------------------------------

struct RecipeOptions {
  std::string modality;  // empty: take it from the epoch file
  std::string shrinkage = "auto";
  std::vector<double> freqs;
  double width_hz = kSsvepWidthHz;
  int ssvep_order = kSsvepOrder;
  int subjects = 1;
  int target_class = kP300Target;
  int nontarget_class = kP300NonTarget;
  std::vector<double> band;  // low high
  int filter_order = 4;
  bool causal = false;
  bool raw = false;
  double decimate_to = 0.0;
  double mean_tol = 0.0;  // 0: default
  int mean_max_iter = 60;
};

void add_recipe_options(CLI::App* cmd, RecipeOptions& o) {
  cmd->add_option("--modality", o.modality, "mi, erp, p300, ssvep or mu_p300 (default: from the epoch file)");
  cmd->add_option("--shrinkage", o.shrinkage, "auto or a coefficient in [0, 1]")->capture_default_str();
  cmd->add_option("--freqs", o.freqs, "SSVEP stimulation frequencies in Hz");
  cmd->add_option("--width", o.width_hz, "SSVEP filter bank bandwidth in Hz")->capture_default_str();
  cmd->add_option("--ssvep-order", o.ssvep_order, "SSVEP filter bank Butterworth order")->capture_default_str();
  cmd->add_option("--subjects", o.subjects, "subjects stacked in each mu_p300 epoch")->capture_default_str();
  cmd->add_option("--target-class", o.target_class)->capture_default_str();
  cmd->add_option("--nontarget-class", o.nontarget_class)->capture_default_str();
  cmd->add_option("--band", o.band, "band-pass edges in Hz (default: 8 30 for mi, 1 16 for ERP modes)")
      ->expected(2);
  cmd->add_option("--filter-order", o.filter_order, "band-pass Butterworth order")->capture_default_str();
  cmd->add_flag("--causal", o.causal, "single forward pass instead of zero-phase filtering");
  cmd->add_flag("--raw", o.raw, "skip band-pass filtering");
  cmd->add_option("--decimate", o.decimate_to, "target sampling rate after filtering (Hz)");
  cmd->add_option("--mean-tol", o.mean_tol, "geometric mean tolerance (default 1e-8 * dim)");
  cmd->add_option("--mean-max-iter", o.mean_max_iter, "geometric mean iteration cap")->capture_default_str();
}

Shrinkage parse_shrinkage(const std::string& s) {
  if (s == "auto") return AutoShrinkage{};
  std::size_t used = 0;
  double g = 0.0;
  try {
    g = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !(g >= 0.0 && g <= 1.0)) {
    throw ContractError("--shrinkage must be auto or a number in [0, 1], got '" + s + "'");
  }
  return g;
}

MeanConfig mean_config(const RecipeOptions& o) {
  MeanConfig m;
  if (o.mean_tol > 0.0) m.tol = o.mean_tol;
  m.max_iter = o.mean_max_iter;
  return m;
}

FeatureRecipe make_recipe(const RecipeOptions& o, const std::string& file_modality) {
  const std::string name = o.modality.empty() ? file_modality : o.modality;
  if (name.empty()) throw ContractError("no modality: pass --modality or use an epoch file that records one");
  FeatureRecipe r;
  r.modality = parse_modality(name);
  r.shrinkage = parse_shrinkage(o.shrinkage);
  if (r.modality == Modality::Ssvep) {
    r.freqs = o.freqs.empty() ? SsvepSpec{}.freqs : o.freqs;
    r.width_hz = o.width_hz;
    r.order = o.ssvep_order;
  } else if (!o.freqs.empty()) {
    throw ContractError("--freqs only applies to ssvep");
  }
  if (r.modality == Modality::P300TwoClass || r.modality == Modality::MultiUserP300) {
    r.target_class = o.target_class;
    r.nontarget_class = o.nontarget_class;
  }
  if (r.modality == Modality::MultiUserP300) r.n_subjects = o.subjects;
  return r;
}

std::optional<Preprocess> make_preprocess(const RecipeOptions& o, Modality m) {
  Preprocess p;
  if (!o.raw) {
    if (!o.band.empty()) {
      p.band = BandSpec{o.band[0], o.band[1]};
    } else if (m == Modality::MotorImagery) {
      p.band = kMotorImageryBand;
    } else if (m != Modality::Ssvep) {
      p.band = kErpBand;
    }
    if (p.band) {
      p.band->order = o.filter_order;
      p.band->phase = o.causal ? FilterPhase::Causal : FilterPhase::ZeroPhase;
    }
  }
  if (o.decimate_to > 0.0) p.decimate_to = o.decimate_to;
  if (!p.band && !p.decimate_to) return std::nullopt;
  return p;
}

std::vector<Epoch> apply(const std::optional<Preprocess>& p, std::vector<Epoch> epochs) {
  if (!p) return epochs;
  for (auto& e : epochs) e = preprocess(e, *p);
  return epochs;
}

// CSV to a file (atomically) or to stdout.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text << std::flush;
  } else {
    write_file_atomic(path, text);
  }
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << std::fixed << v;
  return s.str();
}

// ---- synth -----------------------------------------------------------------

struct SynthOptions {
  std::string modality = "mi";
  std::string out;
  int classes = 2;
  int trials = 50;
  int nontarget_ratio = 5;
  std::uint64_t seed = 0;
  std::uint64_t subject_seed = 1;
  int channels = 0;  // 0: modality default
  int samples = 0;
  double fs = 0.0;
  double snr = kDefaultP300Snr;
  std::vector<double> freqs;
  double duration = 0.0;
  double amplitude = 1.0;
  double noise = 1.0;
};

int cmd_synth(const SynthOptions& o) {
  std::vector<Epoch> epochs;
  std::ostringstream summary;
  const Modality m = parse_modality(o.modality);
  if (m == Modality::MotorImagery) {
    MiSpec s = default_mi_spec(o.classes, o.channels > 0 ? o.channels : 8);
    if (o.samples > 0) s.n_samples = o.samples;
    if (o.fs > 0.0) s.fs = o.fs;
    s.trials_per_class = o.trials;
    s.seed = o.seed;
    epochs = generate_mi(s);
    summary << "mi: " << o.classes << " classes x " << o.trials << " trials, " << s.class_covs.front().rows()
            << " channels, " << s.n_samples << " samples at " << s.fs << " Hz";
  } else if (m == Modality::P300TwoClass) {
    P300Spec s;
    if (o.channels > 0) s.n_channels = o.channels;
    if (o.samples > 0) s.n_samples = o.samples;
    if (o.fs > 0.0) s.fs = o.fs;
    s.snr = o.snr;
    s.n_target = o.trials;
    s.n_nontarget = o.trials * o.nontarget_ratio;
    s.subject_seed = o.subject_seed;
    s.seed = o.seed;
    epochs = generate_p300(s).epochs;
    summary << "p300: " << s.n_target << " targets, " << s.n_nontarget << " non-targets, " << s.n_channels
            << " channels, " << s.n_samples << " samples at " << s.fs << " Hz, snr " << s.snr;
  } else if (m == Modality::Ssvep) {
    SsvepSpec s;
    if (!o.freqs.empty()) s.freqs = o.freqs;
    if (o.channels > 0) s.n_channels = o.channels;
    if (o.fs > 0.0) s.fs = o.fs;
    if (o.duration > 0.0) s.duration_s = o.duration;
    s.trials_per_class = o.trials;
    s.amplitude = o.amplitude;
    s.noise_sd = o.noise;
    s.seed = o.seed;
    epochs = generate_ssvep(s);
    summary << "ssvep: " << s.freqs.size() + 1 << " classes x " << o.trials << " trials, " << s.n_channels
            << " channels, " << s.duration_s << " s at " << s.fs << " Hz";
  } else {
    throw ContractError("synth supports mi, p300 and ssvep");
  }
  std::ostringstream bytes;
  write_epochs(bytes, epochs, to_string(m));
  write_file_atomic(o.out, bytes.str());
  std::cerr << summary.str() << " -> " << o.out << " (" << epochs.size() << " trials, seed " << o.seed << ")\n";
  return 0;
}

// ---- fit -------------------------------------------------------------------

struct FitOptions {
  std::string in;
  std::string out;
  RecipeOptions recipe;
};

int cmd_fit(const FitOptions& o) {
  const EpochSet data = read_epochs(std::filesystem::path(o.in));
  const FeatureRecipe recipe = make_recipe(o.recipe, data.modality);
  const auto pre = make_preprocess(o.recipe, recipe.modality);
  const MdmModel model = fit(apply(pre, data.epochs), recipe, mean_config(o.recipe));
  write_model(o.out, model, pre);
  std::cerr << "fit " << to_string(recipe.modality) << " model on " << data.epochs.size() << " trials: "
            << model.n_classes() << " classes, feature dim " << model.means.front().dim() << " -> " << o.out << "\n";
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalOptions {
  std::string model;
  std::string in;
  std::string out;
};

int cmd_eval(const EvalOptions& o) {
  const LoadedModel lm = read_model(o.model);
  const EpochSet data = read_epochs(std::filesystem::path(o.in));
  const EvalReport r = evaluate(lm.model, apply(lm.preprocess, data.epochs));
  std::ostringstream csv;
  csv << "n_trials,n_correct,accuracy" << (r.auc ? ",auc" : "") << "\n";
  csv << r.n_trials << ',' << r.n_correct << ',' << fmt(r.accuracy);
  if (r.auc) csv << ',' << fmt(*r.auc);
  csv << "\n";
  emit(o.out, csv.str());
  std::cerr << "accuracy " << fmt(100.0 * r.accuracy) << "% (" << r.n_correct << "/" << r.n_trials << ")";
  if (r.auc) std::cerr << ", AUC " << fmt(*r.auc);
  std::cerr << "\n";
  return 0;
}

// ---- crossval --------------------------------------------------------------

struct CrossvalOptions {
  std::string in;
  std::string out;
  int k = 8;
  std::uint64_t seed = 0;
  RecipeOptions recipe;
};

int cmd_crossval(const CrossvalOptions& o) {
  const EpochSet data = read_epochs(std::filesystem::path(o.in));
  const FeatureRecipe recipe = make_recipe(o.recipe, data.modality);
  const auto pre = make_preprocess(o.recipe, recipe.modality);
  const auto folds = crossval(apply(pre, data.epochs), recipe, o.k, o.seed, mean_config(o.recipe));
  const bool with_auc = std::all_of(folds.begin(), folds.end(), [](const FoldReport& f) { return f.report.auc; });
  std::ostringstream csv;
  csv << "fold,n_trials,n_correct,accuracy" << (with_auc ? ",auc" : "") << "\n";
  double acc = 0.0, auc = 0.0;
  int n = 0, c = 0;
  for (const auto& f : folds) {
    csv << f.fold + 1 << ',' << f.report.n_trials << ',' << f.report.n_correct << ',' << fmt(f.report.accuracy);
    if (with_auc) csv << ',' << fmt(*f.report.auc);
    csv << "\n";
    acc += f.report.accuracy;
    if (with_auc) auc += *f.report.auc;
    n += f.report.n_trials;
    c += f.report.n_correct;
  }
  const double k = static_cast<double>(folds.size());
  csv << "mean," << n << ',' << c << ',' << fmt(acc / k);
  if (with_auc) csv << ',' << fmt(auc / k);
  csv << "\n";
  emit(o.out, csv.str());
  std::cerr << o.k << "-fold cross-validation: mean accuracy " << fmt(100.0 * acc / k) << "%";
  if (with_auc) std::cerr << ", mean AUC " << fmt(auc / k);
  std::cerr << "\n";
  return 0;
}

// ---- simulate --------------------------------------------------------------

struct SimulateOptions {
  std::string out;
  int sessions = 1;
  int levels = 12;
  int items = 36;
  int cap = 8;
  int flashes = 2;
  int channels = 16;
  int samples = 128;
  double fs = 128.0;
  double snr = kDefaultP300Snr;
  double generic_snr = 0.0;  // 0: same as the user
  std::uint64_t seed = 0;
  std::uint64_t subject_seed = 50;
  std::uint64_t generic_subject = 1001;
  int calib_targets = 60;
  int calib_nontargets = 300;
  int ramp = 40;
  std::string shrinkage = "auto";
  double mean_tol = 0.0;
  int mean_max_iter = 60;
};

int cmd_simulate(const SimulateOptions& o) {
  if (o.sessions < 1) throw ContractError("--sessions must be >= 1");
  MeanConfig mean_cfg;
  if (o.mean_tol > 0.0) mean_cfg.tol = o.mean_tol;
  mean_cfg.max_iter = o.mean_max_iter;
  FusionConfig fusion;
  fusion.ramp = o.ramp;
  fusion.mean_cfg = mean_cfg;

  std::ostringstream csv;
  write_session_csv_header(csv);
  std::vector<std::vector<LevelResult>> trained_runs, adaptive_runs;
  for (int s = 0; s < o.sessions; ++s) {
    SyntheticScenarioConfig cfg;
    cfg.user.n_channels = o.channels;
    cfg.user.n_samples = o.samples;
    cfg.user.fs = o.fs;
    cfg.user.snr = o.snr;
    cfg.user.subject_seed = o.subject_seed + static_cast<std::uint64_t>(s);
    cfg.generic_subject_seed = o.generic_subject;
    if (o.generic_snr > 0.0) cfg.generic_snr = o.generic_snr;
    cfg.calibration_targets = o.calib_targets;
    cfg.calibration_nontargets = o.calib_nontargets;
    cfg.levels.n_levels = o.levels;
    cfg.levels.n_items = o.items;
    cfg.levels.max_repetitions = o.cap;
    cfg.levels.flashes_per_repetition = o.flashes;
    cfg.levels.seed = o.seed + static_cast<std::uint64_t>(s);
    cfg.shrinkage = parse_shrinkage(o.shrinkage);
    const SyntheticScenario sc = make_synthetic_scenario(cfg, mean_cfg);
    const PairedSession p = compare_modes(sc.levels, sc.generic, sc.calibration, fusion, mean_cfg);
    write_session_csv(csv, s + 1, p.non_adaptive.levels);
    write_session_csv(csv, s + 1, p.adaptive.levels);
    trained_runs.push_back(p.non_adaptive.levels);
    adaptive_runs.push_back(p.adaptive.levels);
  }
  emit(o.out, csv.str());

  const SessionSummary trained = summarize(trained_runs);
  const SessionSummary adaptive = summarize(adaptive_runs);
  std::cerr << "level  non-adaptive NRD (capped)  adaptive NRD (capped)\n";
  for (std::size_t l = 0; l < trained.levels.size(); ++l) {
    std::fprintf(stderr, "%5d  %8.3f (%d)  %8.3f (%d)\n", trained.levels[l].level, trained.levels[l].mean_nrd,
                 trained.levels[l].n_capped, adaptive.levels[l].mean_nrd, adaptive.levels[l].n_capped);
  }
  std::cerr << "slope: non-adaptive " << fmt(trained.slope) << ", adaptive " << fmt(adaptive.slope) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian minimum distance to mean classification of EEG trials"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "write a synthetic epoch file");
  c_synth->add_option("--modality", synth.modality, "mi, p300 or ssvep")->capture_default_str();
  c_synth->add_option("--out", synth.out, "epoch file to write")->required();
  c_synth->add_option("--classes", synth.classes, "mi classes")->capture_default_str();
  c_synth->add_option("--trials", synth.trials, "trials per class (targets for p300)")->capture_default_str();
  c_synth->add_option("--nontarget-ratio", synth.nontarget_ratio, "p300 non-targets per target")->capture_default_str();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--subject-seed", synth.subject_seed, "p300 simulated user")->capture_default_str();
  c_synth->add_option("--channels", synth.channels, "channel count (modality default when omitted)");
  c_synth->add_option("--samples", synth.samples, "samples per trial (mi, p300)");
  c_synth->add_option("--fs", synth.fs, "sampling rate in Hz");
  c_synth->add_option("--snr", synth.snr, "p300 template amplitude over background")->capture_default_str();
  c_synth->add_option("--freqs", synth.freqs, "ssvep stimulation frequencies in Hz");
  c_synth->add_option("--duration", synth.duration, "ssvep trial length in seconds");
  c_synth->add_option("--amplitude", synth.amplitude, "ssvep response amplitude")->capture_default_str();
  c_synth->add_option("--noise", synth.noise, "ssvep background standard deviation")->capture_default_str();

  FitOptions fitopt;
  auto* c_fit = app.add_subcommand("fit", "fit an MDM model");
  c_fit->add_option("--in", fitopt.in, "training epoch file")->required();
  c_fit->add_option("--out", fitopt.out, "model file to write")->required();
  add_recipe_options(c_fit, fitopt.recipe);

  EvalOptions evalopt;
  auto* c_eval = app.add_subcommand("eval", "evaluate a model on labeled epochs");
  c_eval->add_option("--model", evalopt.model, "model file")->required();
  c_eval->add_option("--in", evalopt.in, "test epoch file")->required();
  c_eval->add_option("--out", evalopt.out, "CSV report (default: stdout)");

  CrossvalOptions cvopt;
  auto* c_cv = app.add_subcommand("crossval", "stratified k-fold cross-validation");
  c_cv->add_option("--in", cvopt.in, "epoch file")->required();
  c_cv->add_option("--out", cvopt.out, "CSV report (default: stdout)");
  c_cv->add_option("-k,--folds", cvopt.k, "number of folds")->capture_default_str();
  c_cv->add_option("--seed", cvopt.seed, "fold assignment seed")->capture_default_str();
  add_recipe_options(c_cv, cvopt.recipe);

  SimulateOptions simopt;
  auto* c_sim = app.add_subcommand("simulate", "replay synthetic P300 game sessions, adaptive and non-adaptive");
  c_sim->add_option("--out", simopt.out, "session CSV to write")->required();
  c_sim->add_option("--sessions", simopt.sessions)->capture_default_str();
  c_sim->add_option("--levels", simopt.levels)->capture_default_str();
  c_sim->add_option("--items", simopt.items, "items per level")->capture_default_str();
  c_sim->add_option("--cap", simopt.cap, "maximum repetitions per level")->capture_default_str();
  c_sim->add_option("--flashes", simopt.flashes, "flashes averaged per item and repetition")->capture_default_str();
  c_sim->add_option("--channels", simopt.channels)->capture_default_str();
  c_sim->add_option("--samples", simopt.samples)->capture_default_str();
  c_sim->add_option("--fs", simopt.fs)->capture_default_str();
  c_sim->add_option("--snr", simopt.snr, "user template amplitude over background")->capture_default_str();
  c_sim->add_option("--generic-snr", simopt.generic_snr, "SNR behind the generic model (default: --snr)");
  c_sim->add_option("--seed", simopt.seed, "level seed of the first session")->capture_default_str();
  c_sim->add_option("--subject-seed", simopt.subject_seed, "user of the first session")->capture_default_str();
  c_sim->add_option("--generic-subject", simopt.generic_subject, "user behind the generic model")
      ->capture_default_str();
  c_sim->add_option("--calib-targets", simopt.calib_targets)->capture_default_str();
  c_sim->add_option("--calib-nontargets", simopt.calib_nontargets)->capture_default_str();
  c_sim->add_option("--ramp", simopt.ramp, "repetitions until the individual model takes over")->capture_default_str();
  c_sim->add_option("--shrinkage", simopt.shrinkage, "auto or a coefficient in [0, 1]")->capture_default_str();
  c_sim->add_option("--mean-tol", simopt.mean_tol, "geometric mean tolerance (default 1e-8 * dim)");
  c_sim->add_option("--mean-max-iter", simopt.mean_max_iter)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_synth) return cmd_synth(synth);
    if (*c_fit) return cmd_fit(fitopt);
    if (*c_eval) return cmd_eval(evalopt);
    if (*c_cv) return cmd_crossval(cvopt);
    if (*c_sim) return cmd_simulate(simopt);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
