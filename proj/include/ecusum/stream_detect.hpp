#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecusum/core_types.hpp"

namespace ecusum::stream {

// One input record: timestamp (strictly increasing, first interval starts at
// 0), observation increment over the interval, occurrence flag at t.
struct StreamRecord {
  double t = 0.0;
  double dxi = 0.0;
  bool occ = false;
};

struct AlarmReport {
  std::optional<double> alarm_time;  // timestamp of the first record with y >= nu
  double final_y = 0.0;              // statistic after the last processed record
  std::size_t n_records = 0;
  std::size_t n_occurrences = 0;
};

enum class Variant { ecusum, cusum };

// Malformed input; line 1 is the header.
class StreamFormatError : public std::runtime_error {
 public:
  StreamFormatError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Feeds the records through the detector in order, starting from y = 0.
// Consumption stops at the alarm. Memory use is independent of the stream
// length. Throws StreamFormatError on a non-increasing timestamp.
AlarmReport run_detector(std::span<const StreamRecord> records, double mu,
                         Threshold nu, Variant variant);

// Single-pass CSV variant. Expects header "t,dxi,occ" (or "t,xi,occ" with
// levels_input, in which case the middle column holds the observation level
// starting from 0 and is differenced on the fly). occ must be 0 or 1,
// decimal separator '.', one record per line.
AlarmReport run_detector_csv(std::istream& in, double mu, Threshold nu,
                             Variant variant, bool levels_input = false);

// Full parse with the same validation; convenient for tests and replay.
std::vector<StreamRecord> read_stream_csv(std::istream& in);
void write_stream_csv(std::ostream& out, std::span<const StreamRecord> records);

std::string alarm_csv_header();  // alarmed,alarm_time,final_y,n_records,n_occurrences
std::string alarm_csv_row(const AlarmReport& report);

}  // namespace ecusum::stream
