#include "fedids/csv.h"

#include "fedids/error.h"

namespace fedids {

bool CsvReader::Next(std::vector<std::string>& fields) {
  fields.clear();
  int c = in_.get();
  if (c == std::char_traits<char>::eof()) return false;
  record_line_ = next_line_;

  std::string cell;
  bool quoted = false;
  bool in_quotes = false;
  for (;; c = in_.get()) {
    if (c == std::char_traits<char>::eof()) {
      if (in_quotes) {
        throw FormatError("line " + std::to_string(record_line_) +
                          ": unterminated quoted field");
      }
      break;
    }
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          cell += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++next_line_;
        cell += ch;
      }
      continue;
    }
    if (ch == '"' && cell.empty() && !quoted) {
      quoted = in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cell));
      cell.clear();
      quoted = false;
    } else if (ch == '\n') {
      ++next_line_;
      break;
    } else if (ch == '\r' && in_.peek() == '\n') {
      // swallow; the LF ends the record
    } else {
      cell += ch;
    }
  }
  fields.push_back(std::move(cell));
  return true;
}

}  // namespace fedids
