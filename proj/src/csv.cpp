#include "locvec/csv.hpp"

#include "locvec/error.hpp"

namespace locvec::csv {

Reader::Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

bool Reader::next(std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  if (!std::getline(in_, line)) return false;
  ++line_;
  record_line_ = line_;

  std::string field;
  bool in_quotes = false;
  bool quoted = false;
  for (;;) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (!in_quotes && c == '\r' && i + 1 == line.size()) break;
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        if (!field.empty() || quoted) {
          throw ParseError(source_ + ":" + std::to_string(record_line_) +
                           ": unexpected quote inside field");
        }
        in_quotes = true;
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        quoted = false;
      } else {
        if (quoted) {
          throw ParseError(source_ + ":" + std::to_string(record_line_) +
                           ": text after closing quote");
        }
        field.push_back(c);
      }
    }
    if (!in_quotes) break;
    // Quoted field continues on the next physical line.
    if (!std::getline(in_, line)) {
      throw ParseError(source_ + ":" + std::to_string(record_line_) + ": unterminated quote");
    }
    ++line_;
    field.push_back('\n');
  }
  fields.push_back(std::move(field));
  return true;
}

void expect_header(Reader& reader, const std::vector<std::string_view>& expected) {
  std::vector<std::string> fields;
  if (!reader.next(fields)) {
    throw SchemaError(reader.source() + ": empty file, expected a header row");
  }
  if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
  bool ok = fields.size() == expected.size();
  for (std::size_t i = 0; ok && i < fields.size(); ++i) ok = fields[i] == expected[i];
  if (!ok) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) want += ',';
      want += expected[i];
    }
    throw SchemaError(reader.source() + ":1: header mismatch, expected `" + want + "`");
  }
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace locvec::csv
