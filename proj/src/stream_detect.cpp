#include "ecusum/stream_detect.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "ecusum/num_format.hpp"
#include "ecusum/simulate.hpp"

namespace ecusum::stream {

namespace {

struct Detector {
  Detector(double mu_, Threshold nu_, Variant variant_)
      : mu(mu_), nu(nu_), variant(variant_) {
    require_nonzero_mu(mu_);
  }

  // Returns true when this record fires the alarm.
  bool update(const StreamRecord& rec) {
    const double h = rec.t - prev_t;
    const double du = sim::loglik_increment(mu, h, rec.dxi);
    state = variant == Variant::cusum
                ? sim::step_cusum(state, du, nu, h)
                : sim::step_ecusum(state, du, rec.occ, nu, h);
    prev_t = rec.t;
    return state.stopped;
  }

  double mu;
  Threshold nu;
  Variant variant;
  sim::EcusumState state;
  double prev_t = 0.0;
};

double parse_field(std::string_view field, std::size_t line, const char* name) {
  double value = 0.0;
  const auto res =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size() ||
      !std::isfinite(value))
    throw StreamFormatError(line, std::string("field '") + name +
                                      "' is not a finite number: '" +
                                      std::string(field) + "'");
  return value;
}

// Splits a CSV line into exactly three fields.
std::array<std::string_view, 3> split3(std::string_view lineText,
                                       std::size_t line) {
  std::array<std::string_view, 3> out;
  std::size_t start = 0;
  for (int i = 0; i < 2; ++i) {
    const std::size_t comma = lineText.find(',', start);
    if (comma == std::string_view::npos)
      throw StreamFormatError(line, "expected 3 comma-separated fields");
    out[i] = lineText.substr(start, comma - start);
    start = comma + 1;
  }
  out[2] = lineText.substr(start);
  if (out[2].find(',') != std::string_view::npos)
    throw StreamFormatError(line, "expected 3 comma-separated fields");
  return out;
}

void strip_line_ends(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

void strip_bom(std::string& s) {
  if (s.size() >= 3 && s[0] == '\xEF' && s[1] == '\xBB' && s[2] == '\xBF')
    s.erase(0, 3);
}

StreamRecord parse_record(std::string_view lineText, std::size_t line,
                          double prev_t, bool levels_input, double prev_level,
                          double* level_out) {
  const auto fields = split3(lineText, line);
  StreamRecord rec;
  rec.t = parse_field(fields[0], line, "t");
  const double mid = parse_field(fields[1], line, levels_input ? "xi" : "dxi");
  if (fields[2] == "0")
    rec.occ = false;
  else if (fields[2] == "1")
    rec.occ = true;
  else
    throw StreamFormatError(line, "field 'occ' must be 0 or 1, got '" +
                                      std::string(fields[2]) + "'");
  if (!(rec.t > prev_t))
    throw StreamFormatError(
        line, "timestamps must be strictly increasing (t=" +
                  format_double(rec.t) + " after t=" + format_double(prev_t) +
                  ")");
  if (levels_input) {
    rec.dxi = mid - prev_level;
    *level_out = mid;
  } else {
    rec.dxi = mid;
  }
  return rec;
}

template <typename OnRecord>
void for_each_csv_record(std::istream& in, bool levels_input,
                         const OnRecord& on_record) {
  std::string lineText;
  if (!std::getline(in, lineText))
    throw StreamFormatError(1, "missing header line");
  strip_bom(lineText);
  strip_line_ends(lineText);
  const std::string expected = levels_input ? "t,xi,occ" : "t,dxi,occ";
  if (lineText != expected)
    throw StreamFormatError(1, "header must be '" + expected + "', got '" +
                                   lineText + "'");
  std::size_t line = 1;
  double prev_t = 0.0;
  double prev_level = 0.0;
  while (std::getline(in, lineText)) {
    ++line;
    strip_line_ends(lineText);
    if (lineText.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw StreamFormatError(line, "blank line inside the stream");
    }
    double level = prev_level;
    const StreamRecord rec =
        parse_record(lineText, line, prev_t, levels_input, prev_level, &level);
    prev_t = rec.t;
    prev_level = level;
    if (!on_record(rec)) return;  // consumer stopped (alarm)
  }
}

}  // namespace

StreamFormatError::StreamFormatError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what),
      line_(line) {}

AlarmReport run_detector(std::span<const StreamRecord> records, double mu,
                         Threshold nu, Variant variant) {
  Detector det(mu, nu, variant);
  AlarmReport report;
  std::size_t index = 0;
  for (const StreamRecord& rec : records) {
    ++index;
    if (!(rec.t > det.prev_t))
      throw StreamFormatError(index + 1, "timestamps must be strictly increasing");
    ++report.n_records;
    if (rec.occ) ++report.n_occurrences;
    if (det.update(rec)) {
      report.alarm_time = rec.t;
      break;
    }
  }
  report.final_y = det.state.y;
  return report;
}

AlarmReport run_detector_csv(std::istream& in, double mu, Threshold nu,
                             Variant variant, bool levels_input) {
  Detector det(mu, nu, variant);
  AlarmReport report;
  for_each_csv_record(in, levels_input, [&](const StreamRecord& rec) {
    ++report.n_records;
    if (rec.occ) ++report.n_occurrences;
    if (det.update(rec)) {
      report.alarm_time = rec.t;
      return false;
    }
    return true;
  });
  report.final_y = det.state.y;
  return report;
}

std::vector<StreamRecord> read_stream_csv(std::istream& in) {
  std::vector<StreamRecord> records;
  for_each_csv_record(in, false, [&](const StreamRecord& rec) {
    records.push_back(rec);
    return true;
  });
  return records;
}

void write_stream_csv(std::ostream& out,
                      std::span<const StreamRecord> records) {
  out << "t,dxi,occ\n";
  for (const StreamRecord& rec : records)
    out << format_double(rec.t) << ',' << format_double(rec.dxi) << ','
        << (rec.occ ? '1' : '0') << '\n';
}

std::string alarm_csv_header() {
  return "alarmed,alarm_time,final_y,n_records,n_occurrences";
}

std::string alarm_csv_row(const AlarmReport& r) {
  std::ostringstream os;
  os << (r.alarm_time ? '1' : '0') << ',';
  if (r.alarm_time) os << format_double(*r.alarm_time);
  os << ',' << format_double(r.final_y) << ',' << r.n_records << ','
     << r.n_occurrences;
  return os.str();
}

}  // namespace ecusum::stream
