// Predictor documents and simulation reports.

#include <cmath>
#include <json.hpp>
#include <string>

#include "confcov/error.hpp"
#include "confcov/io.hpp"

namespace confcov::io {

namespace {

constexpr std::string_view kCoverAll = "COVER_ALL";

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& detail) {
  throw ParseError(ParseErrorKind::kSchema, SourceLocation{0, 0, path}, detail);
}

SourceLocation location_of_byte(std::string_view bytes, std::size_t byte) {
  // nlohmann reports the 1-based count of bytes read when the error fired.
  const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, bytes.size());
  SourceLocation loc{1, 1, {}};
  for (std::size_t i = 0; i < end; ++i) {
    if (bytes[i] == '\n') {
      ++loc.row;
      loc.column = 1;
    } else {
      ++loc.column;
    }
  }
  return loc;
}

const json& require(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) schema_error(std::string("/") + key, "missing required field");
  return *it;
}

std::uint64_t require_count(const json& doc, const char* key, std::uint64_t min_value) {
  const json& v = require(doc, key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    schema_error(std::string("/") + key, "expected a non-negative integer");
  }
  const auto n = v.get<std::uint64_t>();
  if (n < min_value) {
    schema_error(std::string("/") + key, "must be at least " + std::to_string(min_value));
  }
  return n;
}

}  // namespace

void write_predictor_fields(JsonWriter& w, const CalibratedPredictor& predictor) {
  w.field("format_version", kFormatVersion);
  w.field("alpha", predictor.alpha);
  w.field("m", static_cast<std::uint64_t>(predictor.m));
  w.field("num_classes", static_cast<std::uint64_t>(predictor.labels.num_classes));
  w.field("score_fn", to_string(predictor.score_fn));
  if (predictor.q_hat.is_cover_all()) {
    w.field("q_hat", kCoverAll);
  } else {
    w.field("q_hat", predictor.q_hat.value());
  }
  w.field("ties_warning", predictor.ties_warning);
}

std::string serialize_predictor(const CalibratedPredictor& predictor) {
  JsonWriter w;
  w.begin_object();
  write_predictor_fields(w, predictor);
  w.end_object();
  return w.finish();
}

CalibratedPredictor parse_predictor(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(ParseErrorKind::kMalformedJson, location_of_byte(bytes, e.byte), e.what());
  }
  if (!doc.is_object()) schema_error("/", "predictor document must be a JSON object");

  const json& version = require(doc, "format_version");
  if (!version.is_number_integer()) schema_error("/format_version", "expected an integer");
  if (version.get<long long>() != kFormatVersion) throw VersionError(version.get<long long>());

  static const char* const kKnown[] = {"format_version", "alpha", "m", "num_classes",
                                       "score_fn", "q_hat", "ties_warning"};
  for (const auto& item : doc.items()) {
    bool known = false;
    for (const char* k : kKnown) known = known || item.key() == k;
    if (!known) schema_error("/" + item.key(), "unknown field");
  }

  CalibratedPredictor p;

  const json& alpha = require(doc, "alpha");
  if (!alpha.is_number()) schema_error("/alpha", "expected a number");
  p.alpha = alpha.get<double>();
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) schema_error("/alpha", "must lie in (0, 1)");

  p.m = require_count(doc, "m", 1);
  p.labels = LabelSpace{require_count(doc, "num_classes", 2)};

  const json& score_fn = require(doc, "score_fn");
  if (!score_fn.is_string()) schema_error("/score_fn", "expected a string");
  try {
    p.score_fn = parse_score_function(score_fn.get<std::string>());
  } catch (const ConfigError& e) {
    schema_error("/score_fn", e.what());
  }

  const json& q_hat = require(doc, "q_hat");
  if (q_hat.is_string()) {
    if (q_hat.get<std::string>() != kCoverAll) {
      schema_error("/q_hat", "string value must be \"COVER_ALL\"");
    }
    p.q_hat = Threshold::cover_all();
  } else if (q_hat.is_number()) {
    const double v = q_hat.get<double>();
    // LAC scores live in [0, 1].
    if (!(v >= 0.0 && v <= 1.0)) schema_error("/q_hat", "must lie in [0, 1]");
    p.q_hat = Threshold::at(v);
  } else {
    schema_error("/q_hat", "expected a number or \"COVER_ALL\"");
  }
  const bool should_cover_all = conformal_rank(p.m, p.alpha) > p.m;
  if (should_cover_all != p.q_hat.is_cover_all()) {
    schema_error("/q_hat", should_cover_all ? "alpha and m put this predictor in the cover-all regime"
                                            : "COVER_ALL is only valid when ceil((1-alpha)(m+1)) > m");
  }

  const json& ties = require(doc, "ties_warning");
  if (!ties.is_boolean()) schema_error("/ties_warning", "expected a boolean");
  p.ties_warning = ties.get<bool>();
  return p;
}

void write_coverage_law(JsonWriter& w, const CoverageLaw& law) {
  w.begin_object();
  w.field("m", static_cast<std::uint64_t>(law.m));
  w.field("alpha", law.alpha);
  w.field("degenerate", law.degenerate);
  if (law.degenerate) {
    w.key("beta").null();
    w.field("point_mass_at", 1.0);
  } else {
    w.key("beta").begin_object();
    w.field("a", static_cast<std::uint64_t>(law.a));
    w.field("b", static_cast<std::uint64_t>(law.b));
    w.end_object();
  }
  w.field("mean", law.mean());
  w.end_object();
}

void write_plan_result(JsonWriter& w, const PlanSpec& spec, const PlanResult& result) {
  w.begin_object();
  w.field("alpha", spec.alpha);
  w.field("epsilon", spec.epsilon);
  w.field("delta_target", spec.delta_target);
  w.field("m_max", static_cast<std::uint64_t>(spec.m_max));
  w.field("found", result.found);
  if (result.m_min) {
    w.field("m_min", static_cast<std::uint64_t>(*result.m_min));
    w.field("delta_at_m_min", *result.delta_at_m_min);
  } else {
    w.key("m_min").null();
    w.key("delta_at_m_min").null();
  }
  w.field("scanned_up_to", static_cast<std::uint64_t>(result.scanned_up_to));
  w.end_object();
}

ReportFiles write_report(const SimulationReport& report) {
  const SimulationConfig& c = report.config;
  ReportFiles files;

  JsonWriter w;
  w.begin_object();
  w.field("format_version", kFormatVersion);

  w.key("config").begin_object();
  w.field("m", static_cast<std::uint64_t>(c.m));
  w.field("alpha", c.alpha);
  w.field("trials", static_cast<std::uint64_t>(c.trials));
  w.field("eval_size", static_cast<std::uint64_t>(c.eval_size));
  w.field("seed", c.seed);
  w.field("shortfall_threshold", c.shortfall_threshold);
  w.field("sampling", to_string(c.sampling));
  w.field("histogram_bins", static_cast<std::uint64_t>(c.histogram_bins));
  w.key("source").begin_object();
  w.field("kind", to_string(report.source_kind));
  w.field("num_classes", static_cast<std::uint64_t>(report.num_classes));
  w.field("pool_size", static_cast<std::uint64_t>(report.pool_size));
  w.end_object();
  w.end_object();

  w.key("summary").begin_object();
  w.field("mean_coverage", report.mean_coverage);
  w.field("mean_coverage_std_error", report.mean_coverage_std_error);
  w.field("shortfall_fraction", report.shortfall_fraction);
  w.field("shortfall_std_error", report.shortfall_std_error);
  w.field("mean_set_size", report.mean_set_size);
  w.field("cover_all_trials", static_cast<std::uint64_t>(report.cover_all_trials));
  w.field("marginal_coverage_exact", report.marginal_coverage);
  if (report.analytic_law) {
    w.key("analytic_law");
    write_coverage_law(w, *report.analytic_law);
    w.field("analytic_shortfall", *report.analytic_shortfall);
  } else {
    w.key("analytic_law").null();
    w.key("analytic_shortfall").null();
  }
  w.end_object();

  w.key("files").begin_object();
  w.field("histogram", "histogram.csv");
  w.field("trials", "trials.csv");
  w.end_object();
  w.end_object();
  files.report_json = w.finish();

  const Histogram& h = report.histogram;
  std::string& hist = files.histogram_csv;
  hist = "bin_left,bin_right,count,frequency\n";
  for (std::size_t i = 0; i < h.bins(); ++i) {
    hist += format_real(h.edges[i]) + "," + format_real(h.edges[i + 1]) + "," +
            std::to_string(h.counts[i]) + "," + format_real(h.frequencies[i]) + "\n";
  }

  std::string& trials = files.trials_csv;
  trials = "trial_index,trial_seed,conditional_coverage,mean_set_size\n";
  for (const auto& t : report.trials) {
    trials += std::to_string(t.trial_index) + "," + std::to_string(t.trial_seed) + "," +
              format_real(t.conditional_coverage) + "," + format_real(t.mean_set_size) + "\n";
  }
  return files;
}

}  // namespace confcov::io
