#ifndef PROPNET_INGEST_CSV_HPP
#define PROPNET_INGEST_CSV_HPP

#include <string>
#include <vector>

namespace propnet::ingest {

using CsvRow = std::vector<std::string>;

// RFC 4180-style parsing: quoted fields may contain commas, doubled quotes,
// and embedded newlines. CRLF and LF both accepted.
std::vector<CsvRow> parse_csv(const std::string& text);
std::vector<CsvRow> read_csv_file(const std::string& path);

std::string csv_escape(const std::string& field);
std::string format_csv_row(const CsvRow& row);

}  // namespace propnet::ingest

#endif  // PROPNET_INGEST_CSV_HPP
