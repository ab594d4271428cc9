#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace locvec::csv {

// Minimal RFC 4180 reader: comma separated, `"`-quoted fields with `""`
// escapes, quoted fields may span lines. A trailing '\r' is stripped.
class Reader {
 public:
  Reader(std::istream& in, std::string source);

  // Returns false at end of input.
  bool next(std::vector<std::string>& fields);

  // 1-based line number where the last returned record started.
  std::size_t line() const { return record_line_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

// Reads the header and checks it against `expected`, throwing
// SchemaError when it differs.
void expect_header(Reader& reader, const std::vector<std::string_view>& expected);

std::string escape(std::string_view field);

// Writes one comma-separated row, quoting where needed.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace locvec::csv
