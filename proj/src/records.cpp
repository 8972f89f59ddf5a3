#include "tlknn/records.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tlknn {

namespace {

const std::vector<std::string> kColumns = {"n_P",          "n_Q",          "trial",
                                           "k_used",       "queries_made", "excess_error",
                                           "ci_half_width", "wall_time_ms"};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

std::size_t parse_size(const std::string& s, std::size_t line) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::runtime_error("records csv line " + std::to_string(line) +
                             ": bad integer '" + s + "'");
  return v;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("records csv line " + std::to_string(line) +
                             ": bad number '" + s + "'");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_records_csv(std::ostream& out, const std::vector<RateRecord>& records,
                       const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << kRecordHeader << '\n';
  for (const auto& r : records) {
    out << r.n_source << ',' << r.n_target << ',' << r.trial << ',' << r.k_used << ','
        << r.queries_made << ',' << format_double(r.excess_error) << ','
        << format_double(r.ci_half_width) << ',' << format_double(r.wall_time_ms) << '\n';
  }
}

std::vector<RateRecord> ParsedRecords::all() const {
  std::vector<RateRecord> out;
  for (const auto& b : blocks) out.insert(out.end(), b.records.begin(), b.records.end());
  return out;
}

ParsedRecords read_records_csv(std::istream& in) {
  ParsedRecords parsed;
  std::vector<int> column_of;  // position of each expected column
  std::string header;
  std::string raw;
  std::size_t line_no = 0;
  std::string policy;
  auto current_block = [&]() -> RecordBlock& {
    if (parsed.blocks.empty() || parsed.blocks.back().policy != policy)
      parsed.blocks.push_back(RecordBlock{policy, {}});
    return parsed.blocks.back();
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string c = trim(line.substr(1));
      if (c.rfind("policy:", 0) == 0) {
        policy = trim(c.substr(7));
        current_block();
      }
      parsed.comments.push_back(std::move(c));
      continue;
    }
    if (line == header) continue;  // concatenated files repeat the header
    const auto cells = split(line, ',');
    if (column_of.empty()) {
      header = line;
      std::vector<std::string> missing;
      for (const auto& col : kColumns) {
        auto it = std::find(cells.begin(), cells.end(), col);
        if (it == cells.end()) missing.push_back(col);
        column_of.push_back(static_cast<int>(it - cells.begin()));
      }
      if (!missing.empty()) {
        std::string msg = "records csv: missing columns:";
        for (const auto& m : missing) msg += " " + m;
        throw std::runtime_error(msg);
      }
      continue;
    }
    if (cells.size() < kColumns.size())
      throw std::runtime_error("records csv line " + std::to_string(line_no) +
                               ": expected " + std::to_string(kColumns.size()) + " fields");
    auto cell = [&](std::size_t c) { return trim(cells.at(static_cast<std::size_t>(column_of[c]))); };
    RateRecord r;
    r.n_source = parse_size(cell(0), line_no);
    r.n_target = parse_size(cell(1), line_no);
    r.trial = parse_size(cell(2), line_no);
    r.k_used = parse_size(cell(3), line_no);
    r.queries_made = parse_size(cell(4), line_no);
    r.excess_error = parse_double(cell(5), line_no);
    r.ci_half_width = parse_double(cell(6), line_no);
    r.wall_time_ms = parse_double(cell(7), line_no);
    current_block().records.push_back(r);
  }
  if (column_of.empty()) throw std::runtime_error("records csv: missing header row");
  return parsed;
}

std::vector<RateRecord> parse_records_csv(std::istream& in) {
  return read_records_csv(in).all();
}

}  // namespace tlknn
