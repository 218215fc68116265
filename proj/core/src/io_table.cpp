// Text-table formats, the JSON emitter and file helpers.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "confcov/error.hpp"
#include "confcov/io.hpp"

namespace confcov::io {

std::string format_real(double value) {
  if (!std::isfinite(value)) throw InputError("cannot serialize a non-finite real");
  if (value == 0.0) return "0";  // also folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// JsonWriter

std::string escape_json_string(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  out.push_back('"');
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\r':
        out += "\\r";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        if (c < 0x20) {
          static constexpr char kHex[] = "0123456789abcdef";
          out += "\\u00";
          out.push_back(kHex[c >> 4]);
          out.push_back(kHex[c & 0xF]);
        } else {
          out.push_back(ch);
        }
    }
  }
  out.push_back('"');
  return out;
}

void JsonWriter::newline() {
  out_.push_back('\n');
  out_.append(2 * stack_.size(), ' ');
}

void JsonWriter::before_value() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (!stack_.empty()) {
    if (!stack_.back().empty) out_.push_back(',');
    stack_.back().empty = false;
    newline();
  }
}

JsonWriter& JsonWriter::begin_object() {
  before_value();
  out_.push_back('{');
  stack_.push_back({true, true});
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  const bool empty = stack_.back().empty;
  stack_.pop_back();
  if (!empty) newline();
  out_.push_back('}');
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  before_value();
  out_.push_back('[');
  stack_.push_back({false, true});
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  const bool empty = stack_.back().empty;
  stack_.pop_back();
  if (!empty) newline();
  out_.push_back(']');
  return *this;
}

JsonWriter& JsonWriter::key(std::string_view name) {
  before_value();
  out_ += escape_json_string(name);
  out_ += ": ";
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  before_value();
  out_ += format_real(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
  before_value();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::uint64_t v) {
  before_value();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  before_value();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(std::string_view v) {
  before_value();
  out_ += escape_json_string(v);
  return *this;
}

JsonWriter& JsonWriter::null() {
  before_value();
  out_ += "null";
  return *this;
}

std::string JsonWriter::finish() const { return out_ + "\n"; }

// ---------------------------------------------------------------------------
// Probability table

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  for (const char c : id) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string printable(std::string_view cell) {
  std::string out;
  for (const char ch : cell.substr(0, 40)) {
    const auto c = static_cast<unsigned char>(ch);
    out.push_back(c >= 0x20 && c < 0x7F ? ch : '?');
  }
  if (cell.size() > 40) out += "...";
  return out;
}

[[noreturn]] void fail(ParseErrorKind kind, std::size_t row, std::size_t column,
                       const std::string& detail) {
  throw ParseError(kind, SourceLocation{row, column, {}}, detail);
}

// Splits into lines on LF, dropping one trailing CR per line. A final empty
// line (file ends with a newline) is not reported.
std::vector<std::string_view> split_lines(std::string_view bytes) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < bytes.size()) {
    std::size_t end = bytes.find('\n', start);
    const bool last = end == std::string_view::npos;
    if (last) end = bytes.size();
    std::string_view line = bytes.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (last) break;
    start = end + 1;
  }
  return lines;
}

double parse_probability(std::string_view cell, std::size_t row, std::size_t column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, value, std::chars_format::general);
  if (cell.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(value)) {
    fail(ParseErrorKind::kNonNumeric, row, column, "'" + printable(cell) + "' is not a number");
  }
  if (!(value >= 0.0 && value <= 1.0)) {
    fail(ParseErrorKind::kProbabilityRange, row, column,
         "probability " + printable(cell) + " outside [0, 1]");
  }
  return value;
}

}  // namespace

ProbabilityTable parse_probability_file(std::string_view bytes) {
  if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);
  const auto lines = split_lines(bytes);
  if (lines.empty() || (lines.size() == 1 && lines[0].empty())) {
    fail(ParseErrorKind::kEmptyInput, 1, 1, "no header row");
  }

  const auto header = split_fields(lines[0]);
  if (header.size() < 4) {
    fail(ParseErrorKind::kMalformedHeader, 1, header.size() + 1,
         "expected id,label,p_0,...,p_{C-1} with at least two classes");
  }
  if (header[0] != "id") fail(ParseErrorKind::kMalformedHeader, 1, 1, "first column must be 'id'");
  if (header[1] != "label") {
    fail(ParseErrorKind::kMalformedHeader, 1, 2, "second column must be 'label'");
  }
  const std::size_t classes = header.size() - 2;
  for (std::size_t c = 0; c < classes; ++c) {
    const std::string expected = "p_" + std::to_string(c);
    if (header[c + 2] != expected) {
      fail(ParseErrorKind::kMalformedHeader, 1, c + 3,
           "expected '" + expected + "', found '" + printable(header[c + 2]) + "'");
    }
  }

  ProbabilityTable table;
  table.labels = LabelSpace{classes};
  const std::size_t width = classes + 2;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t row = i + 1;
    const bool trailing_empty = i + 1 == lines.size() && lines[i].empty();
    if (trailing_empty) break;

    const auto fields = split_fields(lines[i]);
    if (fields.size() != width) {
      fail(ParseErrorKind::kColumnCount, row, std::min(fields.size(), width) + 1,
           "expected " + std::to_string(width) + " columns, found " +
               std::to_string(fields.size()));
    }

    ProbabilityRecord record;
    if (!valid_id(fields[0])) {
      fail(ParseErrorKind::kInvalidId, row, 1,
           "id '" + printable(fields[0]) + "' must match [A-Za-z0-9_-]+");
    }
    record.id = std::string(fields[0]);

    if (!fields[1].empty()) {
      std::size_t label = 0;
      const char* first = fields[1].data();
      const char* last = first + fields[1].size();
      const auto res = std::from_chars(first, last, label);
      if (res.ec != std::errc() || res.ptr != last || label >= classes) {
        fail(ParseErrorKind::kInvalidLabel, row, 2,
             "label '" + printable(fields[1]) + "' is not a class index below " +
                 std::to_string(classes) + " (row '" + record.id + "')");
      }
      record.label = label;
    }

    record.probs.reserve(classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = parse_probability(fields[c + 2], row, c + 3);
      record.probs.push_back(p);
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
      fail(ParseErrorKind::kProbabilitySum, row, 3,
           "probabilities of row '" + record.id + "' sum to " + format_real(sum));
    }
    table.records.push_back(std::move(record));
  }
  return table;
}

std::string write_probability_file(const ProbabilityTable& table) {
  std::string out = "id,label";
  for (std::size_t c = 0; c < table.labels.num_classes; ++c) out += ",p_" + std::to_string(c);
  out.push_back('\n');
  for (const auto& r : table.records) {
    out += r.id;
    out.push_back(',');
    if (r.label) out += std::to_string(*r.label);
    for (double p : r.probs) {
      out.push_back(',');
      out += format_real(p);
    }
    out.push_back('\n');
  }
  return out;
}

std::string write_prediction_table(std::span<const PredictionRow> rows) {
  std::string out = "id,set_size,labels\n";
  for (const auto& row : rows) {
    out += row.id;
    out.push_back(',');
    out += std::to_string(row.set.set_size());
    out += ",{";
    for (std::size_t i = 0; i < row.set.labels.size(); ++i) {
      if (i > 0) out.push_back(';');
      out += std::to_string(row.set.labels[i]);
    }
    out += "}\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw InputError("error reading '" + path.string() + "'");
  return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error("error writing '" + path.string() + "'");
}

void save_report(const ReportFiles& files, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir.string() + "': " + ec.message());
  write_file(dir / "report.json", files.report_json);
  write_file(dir / "histogram.csv", files.histogram_csv);
  write_file(dir / "trials.csv", files.trials_csv);
}

}  // namespace confcov::io
