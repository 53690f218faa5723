#include "nbelnet/cli/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace nbelnet::cli {

Index CsvTable::find(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<Index>(i);
  }
  return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& source, long line, const std::string& what) {
  std::ostringstream os;
  os << source << ":" << line << ": " << what;
  throw InputError(os.str());
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  std::string line;
  long lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) {
      if (!have_header) fail(source, lineno, "empty header line");
      continue;
    }
    auto fields = split_line(line);
    if (!have_header) {
      for (auto& f : fields) {
        f = trim(f);
        if (f.empty()) fail(source, lineno, "empty column name in header");
      }
      for (std::size_t i = 0; i < fields.size(); ++i) {
        for (std::size_t k = 0; k < i; ++k) {
          if (fields[i] == fields[k]) fail(source, lineno, "duplicate column name '" + fields[i] + "'");
        }
      }
      t.header = fields;
      t.columns.assign(fields.size(), {});
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      std::ostringstream os;
      os << "expected " << t.header.size() << " fields, found " << fields.size();
      fail(source, lineno, os.str());
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string f = trim(fields[c]);
      std::ostringstream where;
      where << "column " << (c + 1) << " ('" << t.header[c] << "'): ";
      if (f.empty()) fail(source, lineno, where.str() + "missing value");
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (end != f.c_str() + f.size() || errno == ERANGE || !std::isfinite(v)) {
        fail(source, lineno, where.str() + "cannot parse '" + f + "' as a finite number");
      }
      t.columns[c].push_back(v);
    }
    ++t.rows;
  }
  if (!have_header) fail(source, 1, "missing header");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_csv(in, path);
}

LoadedData load_dataset(const std::string& path, double theta) {
  const CsvTable t = read_csv(path);
  const Index yc = t.find("y");
  if (yc < 0) throw InputError(path + ": no 'y' column in header");
  if (t.rows < 1) throw InputError(path + ": no data rows");
  const Index muc = t.find("mu");
  std::vector<Index> cov;
  std::vector<std::string> names;
  for (Index c = 0; c < static_cast<Index>(t.header.size()); ++c) {
    if (c == yc || c == muc) continue;
    cov.push_back(c);
    names.push_back(t.header[static_cast<std::size_t>(c)]);
  }
  if (cov.empty()) throw InputError(path + ": no covariate columns");
  Matrix X(t.rows, static_cast<Index>(cov.size()));
  Vector y(t.rows);
  for (Index i = 0; i < t.rows; ++i) {
    const double v = t.columns[static_cast<std::size_t>(yc)][static_cast<std::size_t>(i)];
    if (v < 0.0 || v != std::floor(v)) {
      std::ostringstream os;
      os << path << ":" << (i + 2) << ": column " << (yc + 1)
         << " ('y'): response must be a nonnegative integer, got " << v;
      throw InputError(os.str());
    }
    y[i] = v;
    for (std::size_t k = 0; k < cov.size(); ++k) {
      X(i, static_cast<Index>(k)) = t.columns[static_cast<std::size_t>(cov[k])][static_cast<std::size_t>(i)];
    }
  }
  LoadedData out{Dataset(std::move(X), std::move(y), theta), std::move(names), {}};
  if (muc >= 0) out.mu = t.columns[static_cast<std::size_t>(muc)];
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

namespace {

void emit(std::string& out, const nlohmann::json& v, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (v.type()) {
    case nlohmann::json::value_t::null:
    case nlohmann::json::value_t::discarded:
      out += "null";
      break;
    case nlohmann::json::value_t::boolean:
      out += v.get<bool>() ? "true" : "false";
      break;
    case nlohmann::json::value_t::number_integer:
      out += std::to_string(v.get<std::int64_t>());
      break;
    case nlohmann::json::value_t::number_unsigned:
      out += std::to_string(v.get<std::uint64_t>());
      break;
    case nlohmann::json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? format_double(d) : "null";
      break;
    }
    case nlohmann::json::value_t::string:
      out += v.dump();
      break;
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        break;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        out += pad;
        emit(out, v[i], depth + 1);
        out += i + 1 < v.size() ? ",\n" : "\n";
      }
      out += close + "]";
      break;
    }
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      std::size_t i = 0;
      for (auto it = v.begin(); it != v.end(); ++it, ++i) {
        out += pad + nlohmann::json(it.key()).dump() + ": ";
        emit(out, it.value(), depth + 1);
        out += i + 1 < v.size() ? ",\n" : "\n";
      }
      out += close + "}";
      break;
    }
    case nlohmann::json::value_t::binary:
      throw std::invalid_argument("binary JSON values are not supported");
  }
}

}  // namespace

std::string format_json(const nlohmann::json& value) {
  std::string out;
  emit(out, value, 0);
  out += "\n";
  return out;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
  if (!out) throw InputError("failed writing '" + path + "'");
}

}  // namespace nbelnet::cli
