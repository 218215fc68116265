// confcov: split conformal prediction and its coverage guarantees from the
// command line. Every run prints exactly one JSON document on stdout;
// human-oriented notes go to stderr.

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "confcov/conformal.hpp"
#include "confcov/error.hpp"
#include "confcov/guarantees.hpp"
#include "confcov/io.hpp"
#include "confcov/simulation.hpp"

namespace {

using namespace confcov;

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kInput = 3,
  kNotFound = 4,
};

constexpr const char* kExitCodes =
    "\nExit codes:\n"
    "  0  success\n"
    "  2  usage error (unknown flag, missing or out-of-range value)\n"
    "  3  input or validation error (unreadable or malformed file, unlabeled\n"
    "     calibration rows, class-count mismatch, inadequate pool)\n"
    "  4  plan: no calibration size up to --m-max meets the target\n"
    "\nstdout always carries a single JSON document, including on failure.\n";

// Flag values that parse but fail domain validation are usage errors.
struct UsageError : Error {
  using Error::Error;
};

template <typename F>
void as_usage(F&& check) {
  try {
    check();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
}

void emit(const io::JsonWriter& w) { std::cout << w.finish(); }

std::string short_real(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void note(const std::string& message) { std::cerr << "confcov: " << message << '\n'; }

io::ProbabilityTable load_table(const std::string& path) {
  try {
    return io::parse_probability_file(io::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.where(), path + ": " + e.detail());
  }
}

CalibratedPredictor load_predictor(const std::string& path) {
  const std::string bytes = io::read_file(path);
  try {
    return io::parse_predictor(bytes);
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.where(), path + ": " + e.detail());
  }
}

void require_same_classes(const CalibratedPredictor& predictor, const io::ProbabilityTable& table) {
  if (predictor.labels != table.labels) {
    throw InputError("scores file has " + std::to_string(table.labels.num_classes) +
                     " classes, model expects " + std::to_string(predictor.labels.num_classes));
  }
}

std::vector<std::string> unlabeled_ids(const io::ProbabilityTable& table) {
  std::vector<std::string> ids;
  for (const auto& r : table.records) {
    if (!r.label) ids.push_back(r.id);
  }
  return ids;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < 10; ++i) {
    if (i) out += ", ";
    out += "'" + ids[i] + "'";
  }
  if (ids.size() > 10) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

// ---- calibrate ----

struct CalibrateArgs {
  std::string scores;
  double alpha = 0.0;
  std::optional<double> jitter;
  std::uint64_t jitter_seed = 0;
  std::string score_fn = "lac";
  std::string out;
};

int run_calibrate(const CalibrateArgs& a) {
  CalibrationOptions options;
  as_usage([&] {
    validate_alpha(a.alpha);
    if (a.jitter && !(*a.jitter >= 0.0 && *a.jitter < 0.5)) {
      throw InputError("--jitter must be in [0, 0.5)");
    }
  });
  options.score_fn = parse_score_function(a.score_fn);
  options.jitter = a.jitter;
  options.jitter_seed = a.jitter_seed;

  const auto table = load_table(a.scores);
  if (const auto missing = unlabeled_ids(table); !missing.empty()) {
    throw InputError("calibration rows need labels; unlabeled: " + join_ids(missing));
  }
  if (table.records.empty()) throw InputError(a.scores + ": no calibration rows");

  const auto predictor = calibrate_records(table.records, a.alpha, table.labels, options);
  io::write_file(a.out, io::serialize_predictor(predictor));

  if (predictor.ties_warning && !a.jitter) {
    note("calibration scores contain ties; coverage may exceed the nominal level "
         "(pass --jitter to break them)");
  }
  if (predictor.q_hat.is_cover_all()) {
    note("m = " + std::to_string(predictor.m) + " is too small for alpha = " +
         short_real(a.alpha) + "; every prediction set will contain all classes");
  }

  io::JsonWriter w;
  w.begin_object();
  w.field("command", "calibrate");
  w.field("out", a.out);
  w.key("predictor").begin_object();
  io::write_predictor_fields(w, predictor);
  w.end_object();
  w.field("conformal_rank", static_cast<std::uint64_t>(conformal_rank(predictor.m, a.alpha)));
  w.field("marginal_coverage_exact", marginal_coverage_exact(predictor.m, a.alpha));
  if (a.jitter) {
    w.field("jitter", *a.jitter);
  } else {
    w.key("jitter").null();
  }
  w.end_object();
  emit(w);
  return kOk;
}

// ---- predict / evaluate ----

struct PredictArgs {
  std::string model;
  std::string scores;
  std::string out;
  bool force_nonempty = false;
};

int run_predict(const PredictArgs& a) {
  const auto predictor = load_predictor(a.model);
  const auto table = load_table(a.scores);
  require_same_classes(predictor, table);

  std::vector<io::PredictionRow> rows;
  rows.reserve(table.records.size());
  std::size_t empty = 0;
  std::size_t forced = 0;
  std::size_t total_size = 0;
  for (const auto& r : table.records) {
    auto set = predict_set(r, predictor);
    if (set.labels.empty()) ++empty;
    if (a.force_nonempty && force_nonempty(set, r.probs, predictor)) ++forced;
    total_size += set.set_size();
    rows.push_back({r.id, std::move(set)});
  }
  io::write_file(a.out, io::write_prediction_table(rows));
  if (empty && !a.force_nonempty) {
    note(std::to_string(empty) + " row(s) received an empty prediction set");
  }

  io::JsonWriter w;
  w.begin_object();
  w.field("command", "predict");
  w.field("out", a.out);
  w.field("rows", static_cast<std::uint64_t>(rows.size()));
  w.field("mean_set_size",
          rows.empty() ? 0.0 : static_cast<double>(total_size) / static_cast<double>(rows.size()));
  w.field("empty_sets", static_cast<std::uint64_t>(empty));
  w.field("force_nonempty", a.force_nonempty);
  w.field("forced_rows", static_cast<std::uint64_t>(forced));
  w.end_object();
  emit(w);
  return kOk;
}

void write_coverage(io::JsonWriter& w, const CoverageReport& r) {
  w.begin_object();
  w.field("n_eval", static_cast<std::uint64_t>(r.n_eval));
  w.field("covered", static_cast<std::uint64_t>(r.covered));
  w.field("empirical_coverage", r.empirical_coverage);
  w.field("mean_set_size", r.mean_set_size);
  w.end_object();
}

int run_evaluate(const PredictArgs& a) {
  const auto predictor = load_predictor(a.model);
  const auto table = load_table(a.scores);
  require_same_classes(predictor, table);
  if (const auto missing = unlabeled_ids(table); !missing.empty()) {
    throw InputError("evaluation rows need labels; unlabeled: " + join_ids(missing));
  }
  const auto raw = evaluate_coverage(table.records, predictor);

  // Forcing a label into empty sets can only raise coverage; report both.
  CoverageReport forced_report;
  std::size_t forced = 0;
  if (a.force_nonempty) {
    std::size_t total_size = 0;
    for (const auto& r : table.records) {
      auto set = predict_set(r, predictor);
      if (force_nonempty(set, r.probs, predictor)) ++forced;
      forced_report.covered += set.contains(*r.label) ? 1 : 0;
      total_size += set.set_size();
    }
    forced_report.n_eval = table.records.size();
    if (forced_report.n_eval) {
      const auto n = static_cast<double>(forced_report.n_eval);
      forced_report.empirical_coverage = static_cast<double>(forced_report.covered) / n;
      forced_report.mean_set_size = static_cast<double>(total_size) / n;
    }
  }

  io::JsonWriter w;
  w.begin_object();
  w.field("command", "evaluate");
  w.field("alpha", predictor.alpha);
  w.field("m", static_cast<std::uint64_t>(predictor.m));
  w.field("marginal_coverage_exact", marginal_coverage_exact(predictor.m, predictor.alpha));
  w.key("coverage");
  write_coverage(w, raw);
  if (a.force_nonempty) {
    w.key("force_nonempty").begin_object();
    w.field("forced_rows", static_cast<std::uint64_t>(forced));
    w.key("coverage");
    write_coverage(w, forced_report);
    w.field("coverage_change", forced_report.empirical_coverage - raw.empirical_coverage);
    w.end_object();
  } else {
    w.key("force_nonempty").null();
  }
  w.end_object();
  emit(w);
  return kOk;
}

// ---- guarantees ----

int run_bound(const GuaranteeQuery& q) {
  as_usage([&] { q.validate(); });
  const double delta = vovk_delta(q);
  io::JsonWriter w;
  w.begin_object();
  w.field("command", "bound");
  w.field("m", static_cast<std::uint64_t>(q.m));
  w.field("alpha", q.alpha);
  w.field("epsilon", q.epsilon);
  w.field("alpha_tilde", q.alpha_tilde());
  w.field("cdf_index", static_cast<std::int64_t>(vovk_cdf_index(q.m, q.alpha)));
  w.field("delta", delta);
  w.field("coverage_level", 1.0 - q.alpha - q.epsilon);
  w.end_object();
  emit(w);
  return kOk;
}

struct CoverageDistArgs {
  std::size_t m = 0;
  double alpha = 0.0;
  std::optional<double> threshold;
};

int run_coverage_dist(const CoverageDistArgs& a) {
  as_usage([&] {
    validate_alpha(a.alpha);
    if (a.m == 0) throw InputError("--m must be at least 1");
    if (a.threshold && !(*a.threshold > 0.0 && *a.threshold < 1.0)) {
      throw InputError("--threshold must be in (0, 1)");
    }
  });
  const auto law = coverage_law(a.m, a.alpha);
  io::JsonWriter w;
  w.begin_object();
  w.field("command", "coverage-dist");
  w.key("law");
  io::write_coverage_law(w, law);
  w.field("marginal_coverage_exact", marginal_coverage_exact(a.m, a.alpha));
  if (a.threshold) {
    w.field("threshold", *a.threshold);
    w.field("shortfall", shortfall_probability(law, *a.threshold));
  }
  w.end_object();
  emit(w);
  return kOk;
}

int run_plan(const PlanSpec& spec) {
  as_usage([&] { spec.validate(); });
  const auto result = plan_min_m(spec);
  if (!result.found) {
    note("no m <= " + std::to_string(spec.m_max) + " reaches delta <= " +
         short_real(spec.delta_target));
  }
  io::JsonWriter w;
  w.begin_object();
  w.field("command", "plan");
  w.key("plan");
  io::write_plan_result(w, spec, result);
  w.end_object();
  emit(w);
  return result.found ? kOk : kNotFound;
}

// ---- simulate ----

struct SimulateArgs {
  SimulationConfig config;
  std::string pool;
  std::string synthetic;
  std::string sampling = "without-replacement";
  std::size_t threads = 1;
  std::string out;
};

int run_simulate(SimulateArgs a) {
  as_usage([&] {
    a.config.sampling = parse_sampling_mode(a.sampling);
    a.config.validate();
  });
  ScoreSource source = ScoreSource::synthetic();
  if (!a.pool.empty()) {
    source = ScoreSource::empirical(load_table(a.pool).records);
  }
  RunOptions options;
  options.threads = a.threads;
  const auto report = run_simulation(a.config, source, options);
  const auto files = io::write_report(report);
  io::save_report(files, a.out);
  note("wrote report.json, histogram.csv and trials.csv to " + a.out);
  std::cout << files.report_json;
  return kOk;
}

// ---- error reporting ----

int report_error(const std::string& command, int code, const std::string& kind,
                 const std::string& message, const SourceLocation* where = nullptr) {
  note(message);
  io::JsonWriter w;
  w.begin_object();
  w.field("command", command);
  w.key("error").begin_object();
  w.field("kind", kind);
  w.field("message", message);
  if (where && !where->json_path.empty()) {
    w.key("location").begin_object().field("json_path", where->json_path).end_object();
  } else if (where) {
    w.key("location").begin_object();
    w.field("row", static_cast<std::uint64_t>(where->row));
    w.field("column", static_cast<std::uint64_t>(where->column));
    w.end_object();
  } else {
    w.key("location").null();
  }
  w.end_object();
  w.field("exit_code", code);
  w.end_object();
  emit(w);
  return code;
}

// Values are checked by the library so the messages stay in one place; CLI11
// only enforces presence and type.
CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& description) {
  auto* sub = app.add_subcommand(name, description);
  sub->footer(kExitCodes);
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Split conformal prediction, coverage guarantees and coverage simulation."};
  app.require_subcommand(1);
  app.footer(kExitCodes);
  app.set_version_flag("--version", "confcov 0.1.0");

  std::function<int()> action;

  CalibrateArgs cal;
  auto* c = add_command(app, "calibrate", "Calibrate a LAC threshold on labeled probability rows");
  c->add_option("--scores", cal.scores, "Probability file (id,label,p_0..p_{C-1}); all rows labeled")
      ->required();
  c->add_option("--alpha", cal.alpha, "Miscoverage level in (0, 1)")->required();
  c->add_option("--jitter", cal.jitter,
                "Break score ties with uniform noise of this magnitude in [0, 0.5), e.g. 1e-9");
  c->add_option("--jitter-seed", cal.jitter_seed, "Seed for --jitter noise")->capture_default_str();
  c->add_option("--score-fn", cal.score_fn, "Conformity score function (lac)")->capture_default_str();
  c->add_option("--out", cal.out, "Predictor JSON file to write")->required();
  c->callback([&] { action = [&] { return run_calibrate(cal); }; });

  PredictArgs pred;
  auto* p = add_command(app, "predict", "Apply a calibrated predictor to probability rows");
  p->add_option("--model", pred.model, "Predictor JSON from calibrate")->required();
  p->add_option("--scores", pred.scores, "Probability file; labels may be empty")
      ->required();
  p->add_option("--out", pred.out, "Prediction table to write (id,set_size,labels)")->required();
  p->add_flag("--force-nonempty", pred.force_nonempty,
              "Put the lowest-score class into otherwise empty sets (count is reported)");
  p->callback([&] { action = [&] { return run_predict(pred); }; });

  PredictArgs ev;
  auto* e = add_command(app, "evaluate", "Empirical coverage and set size on labeled rows");
  e->add_option("--model", ev.model, "Predictor JSON from calibrate")->required();
  e->add_option("--scores", ev.scores, "Labeled probability file")->required();
  e->add_flag("--force-nonempty", ev.force_nonempty,
              "Also report coverage with empty sets forced to the lowest-score class");
  e->callback([&] { action = [&] { return run_evaluate(ev); }; });

  GuaranteeQuery bound{};
  auto* b = add_command(app, "bound", "Vovk's delta: P(conditional coverage < 1 - alpha - epsilon)");
  b->add_option("--m", bound.m, "Calibration set size (>= 1)")->required();
  b->add_option("--alpha", bound.alpha, "Miscoverage level in (0, 1)")->required();
  b->add_option("--epsilon", bound.epsilon, "Coverage slack (> 0)")->required();
  b->callback([&] { action = [&] { return run_bound(bound); }; });

  CoverageDistArgs dist;
  auto* d = add_command(app, "coverage-dist", "Distribution of calibration-conditional coverage");
  d->add_option("--m", dist.m, "Calibration set size (>= 1)")->required();
  d->add_option("--alpha", dist.alpha, "Miscoverage level in (0, 1)")->required();
  d->add_option("--threshold", dist.threshold, "Also print P(coverage < threshold), threshold in (0, 1)");
  d->callback([&] { action = [&] { return run_coverage_dist(dist); }; });

  PlanSpec plan{};
  auto* pl = add_command(app, "plan", "Smallest calibration size m with delta(m) <= target");
  pl->add_option("--alpha", plan.alpha, "Miscoverage level in (0, 1)")->required();
  pl->add_option("--epsilon", plan.epsilon, "Coverage slack (> 0)")->required();
  pl->add_option("--delta", plan.delta_target, "Target failure probability in (0, 1]")->required();
  pl->add_option("--m-max", plan.m_max, "Largest m to scan")->capture_default_str();
  pl->callback([&] { action = [&] { return run_plan(plan); }; });

  SimulateArgs sim;
  sim.config.trials = 10000;
  sim.config.eval_size = 1000;
  auto* s = add_command(app, "simulate", "Monte Carlo distribution of conditional coverage");
  s->add_option("--m", sim.config.m, "Calibration set size per trial (>= 1)")->required();
  s->add_option("--alpha", sim.config.alpha, "Miscoverage level in (0, 1)")->required();
  s->add_option("--trials", sim.config.trials, "Number of calibration draws M")->capture_default_str();
  s->add_option("--eval", sim.config.eval_size, "Evaluation rows per trial K")->capture_default_str();
  s->add_option("--seed", sim.config.seed, "Master seed (unsigned 64-bit)")->required();
  auto* pool_opt = s->add_option("--pool", sim.pool, "Draw rows from this labeled probability file");
  s->add_option("--synthetic", sim.synthetic,
                "Synthetic source: 'uniform' (9 classes, true-label score ~ U(0,1)); the default")
      ->check(CLI::IsMember({"uniform"}))
      ->excludes(pool_opt);
  s->add_option("--threshold", sim.config.shortfall_threshold, "Shortfall threshold in (0, 1)")
      ->capture_default_str();
  s->add_option("--bins", sim.config.histogram_bins, "Histogram bins over [0, 1]")->capture_default_str();
  s->add_option("--sampling", sim.sampling,
                "Pool sampling: without-replacement (per trial) or with-replacement")
      ->capture_default_str();
  s->add_option("--threads", sim.threads, "Worker threads, 0 = all cores; results do not depend on it")
      ->capture_default_str();
  s->add_option("--out", sim.out, "Directory for report.json, histogram.csv, trials.csv")->required();
  s->callback([&] { action = [&] { return run_simulate(sim); }; });

  std::string command = "confcov";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForVersion& v) {
    return app.exit(v);
  } catch (const CLI::ParseError& err) {
    if (!app.get_subcommands().empty()) command = app.get_subcommands().front()->get_name();
    return report_error(command, kUsage, "usage", err.what());
  }
  command = app.get_subcommands().front()->get_name();

  try {
    return action();
  } catch (const UsageError& err) {
    return report_error(command, kUsage, "usage", err.what());
  } catch (const ConfigError& err) {
    return report_error(command, kUsage, "usage", err.what());
  } catch (const VersionError& err) {
    return report_error(command, kInput, "version", err.what());
  } catch (const ParseError& err) {
    const auto where = err.where();
    return report_error(command, kInput, to_string(err.kind()), err.what(), &where);
  } catch (const InputError& err) {
    return report_error(command, kInput, "input", err.what());
  } catch (const ExecutionError& err) {
    return report_error(command, kInput, "execution", err.what());
  } catch (const Error& err) {
    return report_error(command, kInput, "io", err.what());
  }
}
