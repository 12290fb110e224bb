#ifndef FEDIDS_CSV_H_
#define FEDIDS_CSV_H_

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace fedids {

// Minimal RFC 4180 reader: comma separated, optional double quotes, "" as an
// escaped quote, LF or CRLF line ends, quoted fields may span lines.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Reads the next record into `fields`. Returns false at end of input.
  // Throws FormatError on an unterminated quoted field.
  bool Next(std::vector<std::string>& fields);

  // 1-based line number where the last returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t next_line_ = 1;
  std::size_t record_line_ = 0;
};

}  // namespace fedids

#endif  // FEDIDS_CSV_H_
