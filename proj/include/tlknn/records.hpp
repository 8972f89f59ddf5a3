#pragma once

// The sweep record and its CSV form, which is the stable public contract:
// a fixed header row, '#'-prefixed comment lines, doubles written to
// round-trip exactly.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tlknn {

struct RateRecord {
  std::size_t n_source = 0;
  std::size_t n_target = 0;
  std::size_t trial = 0;
  std::size_t k_used = 0;
  std::size_t queries_made = 0;
  double excess_error = 0.0;
  double ci_half_width = 0.0;
  double wall_time_ms = 0.0;

  bool operator==(const RateRecord&) const = default;
};

inline constexpr const char* kRecordHeader =
    "n_P,n_Q,trial,k_used,queries_made,excess_error,ci_half_width,wall_time_ms";

/// Comment lines are written verbatim after a "# " prefix.
void write_records_csv(std::ostream& out, const std::vector<RateRecord>& records,
                       const std::vector<std::string>& comments = {});

struct RecordBlock {
  std::string policy;  // from a "# policy: <name>" comment, empty if none
  std::vector<RateRecord> records;
};

struct ParsedRecords {
  std::vector<std::string> comments;
  std::vector<RecordBlock> blocks;

  std::vector<RateRecord> all() const;
};

/// Throws std::runtime_error naming missing columns or malformed rows.
ParsedRecords read_records_csv(std::istream& in);

std::vector<RateRecord> parse_records_csv(std::istream& in);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace tlknn
