#pragma once

// File formats.
//
// Probability table (text, comma-delimited, LF or CRLF):
//     id,label,p_0,p_1,...,p_{C-1}
//     a,0,0.7,0.3
//     b,,0.5,0.5           <- empty label: unlabeled inference row
// ids match [A-Za-z0-9_-]+; no quoting. Every rejection is a ParseError with
// a 1-based row (line) and column (field).
//
// Predictor (JSON, format_version 1):
//     {"format_version": 1, "alpha": ..., "m": ..., "num_classes": ...,
//      "score_fn": "lac", "q_hat": <number> | "COVER_ALL", "ties_warning": bool}
//
// Simulation report: report.json (config echo + summary), histogram.csv
// (bin_left,bin_right,count,frequency) and trials.csv
// (trial_index,trial_seed,conditional_coverage,mean_set_size).
//
// All writers are deterministic: fixed key order, reals with 17 significant
// digits, LF line endings.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confcov/conformal.hpp"
#include "confcov/guarantees.hpp"
#include "confcov/simulation.hpp"

namespace confcov::io {

inline constexpr int kFormatVersion = 1;

// Fixed rendering: 17 significant digits, "." decimal
// separator regardless of locale.
std::string format_real(double value);

// Minimal streaming JSON emitter with two-space indentation and insertion-order
// keys. Used wherever byte-stable output is required.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view name);

  JsonWriter& value(double v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(std::uint64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(unsigned v) { return value(static_cast<std::uint64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(std::string_view v);
  JsonWriter& value(const char* v) { return value(std::string_view(v)); }
  JsonWriter& null();

  template <typename T>
  JsonWriter& field(std::string_view name, const T& v) {
    key(name);
    return value(v);
  }

  // The document followed by a single trailing LF.
  std::string finish() const;

 private:
  void before_value();
  void newline();

  struct Frame {
    bool is_object;
    bool empty;
  };
  std::string out_;
  std::vector<Frame> stack_;
  bool after_key_ = false;
};

std::string escape_json_string(std::string_view s);

struct ProbabilityTable {
  LabelSpace labels;
  std::vector<ProbabilityRecord> records;
};

ProbabilityTable parse_probability_file(std::string_view bytes);
std::string write_probability_file(const ProbabilityTable& table);

std::string serialize_predictor(const CalibratedPredictor& predictor);
// Throws ParseError (malformed JSON or schema, with JSON path) or
// VersionError (unsupported format_version).
CalibratedPredictor parse_predictor(std::string_view bytes);

struct PredictionRow {
  std::string id;
  PredictionSet set;
};

// id,set_size,labels  with labels rendered as {0;1}, {} for the empty set.
std::string write_prediction_table(std::span<const PredictionRow> rows);

struct ReportFiles {
  std::string report_json;
  std::string histogram_csv;
  std::string trials_csv;
};

ReportFiles write_report(const SimulationReport& report);

// Writes the three report files into `dir` (created if missing). Throws
// Error naming the path on I/O failure.
void save_report(const ReportFiles& files, const std::filesystem::path& dir);

// Reads a whole file; throws InputError naming the path.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// JSON summaries shared by the CLI and the report writer.
void write_coverage_law(JsonWriter& w, const CoverageLaw& law);
void write_plan_result(JsonWriter& w, const PlanSpec& spec, const PlanResult& result);
void write_predictor_fields(JsonWriter& w, const CalibratedPredictor& predictor);

}  // namespace confcov::io
