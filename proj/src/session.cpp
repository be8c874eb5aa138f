#include "rmdm/session.hpp"

#include "rmdm/errors.hpp"

#include <cmath>
#include <map>
#include <ostream>

namespace rmdm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

}  // namespace

std::string to_string(Mode m) { return m == Mode::Adaptive ? "adaptive" : "non-adaptive"; }

LevelResult run_level(const LevelSpec& spec, LevelClassifier& clf, Mode mode) {
  if (spec.n_items < 2) throw ContractError("run_level: need at least 2 items");
  if (spec.target < 0 || spec.target >= spec.n_items) throw ContractError("run_level: target is not an item");
  if (spec.max_repetitions < 1) throw ContractError("run_level: max_repetitions must be >= 1");
  if (!spec.source) throw ContractError("run_level: no epoch source");

  LevelResult res;
  res.target = spec.target;
  res.mode = mode;
  CumulativeSelector selector(clf.target_class(), clf.nontarget_class());
  for (int rep = 0; rep < spec.max_repetitions; ++rep) {
    const std::vector<Epoch> epochs = spec.source(rep);
    if (static_cast<int>(epochs.size()) != spec.n_items) {
      throw ContractError("run_level: epoch source returned " + std::to_string(epochs.size()) + " epochs for " +
                          std::to_string(spec.n_items) + " items");
    }
    std::map<int, DistanceVector> per_item;
    for (int item = 0; item < spec.n_items; ++item) {
      per_item.emplace(item, clf.distances(epochs[static_cast<std::size_t>(item)]));
    }
    selector.add_repetition(per_item);
    const int chosen = selector.selected();
    res.selected.push_back(chosen);
    if (mode == Mode::Adaptive) {
      for (int item = 0; item < spec.n_items; ++item) {
        clf.learn(epochs[static_cast<std::size_t>(item)],
                  item == spec.target ? clf.target_class() : clf.nontarget_class());
      }
      clf.end_repetition();
    }
    if (chosen == spec.target) {
      res.solved = true;
      res.nrd = rep + 1;
      return res;
    }
  }
  res.nrd = spec.max_repetitions;
  return res;
}

double ols_slope(const std::vector<double>& y) {
  const auto n = static_cast<double>(y.size());
  if (y.size() < 2) return 0.0;
  const double mx = (n + 1.0) / 2.0;
  double my = 0.0;
  for (double v : y) my += v;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dx = static_cast<double>(i + 1) - mx;
    sxy += dx * (y[i] - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

SessionSummary summarize(const std::vector<std::vector<LevelResult>>& sessions) {
  SessionSummary s;
  if (sessions.empty()) return s;
  const std::size_t n_levels = sessions.front().size();
  for (const auto& sess : sessions) {
    if (sess.size() != n_levels) throw ContractError("summarize: sessions differ in level count");
  }
  std::vector<double> means;
  for (std::size_t l = 0; l < n_levels; ++l) {
    LevelSummary ls;
    ls.level = static_cast<int>(l) + 1;
    double sum = 0.0;
    for (const auto& sess : sessions) {
      sum += sess[l].nrd;
      ls.n_capped += sess[l].solved ? 0 : 1;
    }
    ls.mean_nrd = sum / static_cast<double>(sessions.size());
    if (sessions.size() > 1) {
      double ss = 0.0;
      for (const auto& sess : sessions) ss += std::pow(sess[l].nrd - ls.mean_nrd, 2);
      ls.sd_nrd = std::sqrt(ss / static_cast<double>(sessions.size() - 1));
    }
    means.push_back(ls.mean_nrd);
    s.levels.push_back(ls);
  }
  s.slope = ols_slope(means);
  return s;
}

SessionResult run_session(const std::vector<LevelSpec>& levels, LevelClassifier& clf, Mode mode) {
  SessionResult out;
  for (const auto& spec : levels) out.levels.push_back(run_level(spec, clf, mode));
  out.summary = summarize({out.levels});
  return out;
}

PairedSession compare_modes(const std::vector<LevelSpec>& levels, const MdmModel& generic,
                            std::span<const Epoch> training, const FusionConfig& fusion,
                            const MeanConfig& mean_cfg) {
  FeatureRecipe recipe = generic.recipe;
  recipe.prototypes.clear();
  StaticClassifier trained(fit(training, recipe, mean_cfg));
  AdaptiveClassifier adaptive{FusedClassifier(generic, fusion)};
  PairedSession out;
  out.non_adaptive = run_session(levels, trained, Mode::NonAdaptive);
  out.adaptive = run_session(levels, adaptive, Mode::Adaptive);
  return out;
}

void write_session_csv_header(std::ostream& out) { out << "session,level,mode,repetition,selected,target,nrd,capped\n"; }

void write_session_csv(std::ostream& out, int session, const std::vector<LevelResult>& levels) {
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const LevelResult& r = levels[l];
    for (std::size_t rep = 0; rep < r.selected.size(); ++rep) {
      out << session << ',' << (l + 1) << ',' << to_string(r.mode) << ',' << (rep + 1) << ',' << r.selected[rep]
          << ',' << r.target << ',' << r.nrd << ',' << (r.solved ? 0 : 1) << '\n';
    }
  }
}

std::vector<LevelSpec> synthetic_levels(std::shared_ptr<const P300Subject> subject, const SyntheticLevelConfig& cfg) {
  if (!subject) throw ContractError("synthetic_levels: no subject");
  if (cfg.flashes_per_repetition < 1) throw ContractError("synthetic_levels: need at least one flash per repetition");
  std::vector<LevelSpec> levels;
  for (int l = 0; l < cfg.n_levels; ++l) {
    const std::uint64_t level_seed = mix(cfg.seed, static_cast<std::uint64_t>(l));
    LevelSpec spec;
    spec.n_items = cfg.n_items;
    spec.max_repetitions = cfg.max_repetitions;
    spec.target = static_cast<int>(level_seed % static_cast<std::uint64_t>(cfg.n_items));
    const int target = spec.target;
    spec.source = [subject, cfg, level_seed, target](int rep) {
      Rng rng(mix(level_seed, static_cast<std::uint64_t>(rep) + 1));
      std::vector<Epoch> epochs;
      epochs.reserve(static_cast<std::size_t>(cfg.n_items));
      for (int item = 0; item < cfg.n_items; ++item) {
        const bool is_target = item == target;
        Epoch e = draw_p300_epoch(*subject, cfg.snr, is_target, rng);
        for (int f = 1; f < cfg.flashes_per_repetition; ++f) {
          e.data += draw_p300_epoch(*subject, cfg.snr, is_target, rng).data;
        }
        e.data /= static_cast<double>(cfg.flashes_per_repetition);
        epochs.push_back(std::move(e));
      }
      return epochs;
    };
    levels.push_back(std::move(spec));
  }
  return levels;
}

SyntheticScenario make_synthetic_scenario(const SyntheticScenarioConfig& cfg, const MeanConfig& mean_cfg) {
  FeatureRecipe recipe;
  recipe.modality = Modality::P300TwoClass;
  recipe.shrinkage = cfg.shrinkage;
  recipe.target_class = kP300Target;
  recipe.nontarget_class = kP300NonTarget;

  P300Spec source = cfg.user;
  source.subject_seed = cfg.generic_subject_seed;
  if (cfg.generic_snr) source.snr = *cfg.generic_snr;
  source.n_target = cfg.calibration_targets;
  source.n_nontarget = cfg.calibration_nontargets;
  source.seed = mix(cfg.levels.seed, 0xA11CEULL);

  P300Spec user = cfg.user;
  user.n_target = cfg.calibration_targets;
  user.n_nontarget = cfg.calibration_nontargets;
  user.seed = mix(cfg.levels.seed, 0xB0BULL);

  SyntheticScenario out;
  out.generic = fit(generate_p300(source).epochs, recipe, mean_cfg);
  out.calibration = generate_p300(user).epochs;
  SyntheticLevelConfig lv = cfg.levels;
  lv.snr = cfg.user.snr;
  out.levels = synthetic_levels(std::make_shared<const P300Subject>(make_p300_subject(cfg.user)), lv);
  return out;
}

}  // namespace rmdm
