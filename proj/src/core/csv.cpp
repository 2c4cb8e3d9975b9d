#include "core/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace obdet {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  require(res.ec == std::errc(), "number formatting failed");
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::nan("");
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw_format_error("bad number: '" + text + "'");
  return v;
}

long parse_long(const std::string& text) {
  long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw_format_error("bad integer: '" + text + "'");
  return v;
}

std::string join_csv_row(const std::vector<std::string>& fields) {
  std::string row;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    require(fields[i].find_first_of(",\"\r\n") == std::string::npos,
            "CSV field would need quoting: '" + fields[i] + "'");
    if (i) row.push_back(',');
    row += fields[i];
  }
  return row;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      if (!cur.empty()) lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty() && cur.back() == '\r') cur.pop_back();
  if (!cur.empty()) lines.push_back(std::move(cur));
  return lines;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io_error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io_error("cannot write file: " + path);
  out << text;
  if (!out) throw_io_error("write failed: " + path);
}

}  // namespace obdet
