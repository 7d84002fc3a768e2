#include "rcore/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rcore/data.hpp"

namespace rcore {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

ConfigDoc ConfigDoc::parse(const std::string& text) {
  ConfigDoc doc;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw DataError("config: empty key at line " + std::to_string(line_no));
    doc.values_[key] = value;
  }
  return doc;
}

ConfigDoc ConfigDoc::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("config: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse(buf.str());
}

bool ConfigDoc::has(const std::string& key) const { return values_.count(key) > 0; }

void ConfigDoc::set(const std::string& key, const std::string& raw_value) {
  values_[key] = raw_value;
}

void ConfigDoc::set_double(const std::string& key, double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  values_[key] = os.str();
}

void ConfigDoc::set_long(const std::string& key, long v) { values_[key] = std::to_string(v); }

void ConfigDoc::set_bool(const std::string& key, bool v) { values_[key] = v ? "true" : "false"; }

std::string ConfigDoc::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw DataError("config: missing key '" + key + "'");
  return unquote(it->second);
}

std::string ConfigDoc::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : unquote(it->second);
}

double ConfigDoc::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw DataError("config: key '" + key + "' is not a number: " + it->second);
  }
}

long ConfigDoc::get_long(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stol(it->second);
  } catch (const std::exception&) {
    throw DataError("config: key '" + key + "' is not an integer: " + it->second);
  }
}

bool ConfigDoc::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw DataError("config: key '" + key + "' is not a boolean: " + v);
}

std::vector<double> ConfigDoc::get_double_list(const std::string& key,
                                               const std::vector<double>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = trim(it->second);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw DataError("config: key '" + key + "' is not an array: " + v);
  std::vector<double> out;
  std::string body = v.substr(1, v.size() - 2);
  std::istringstream in(body);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw DataError("config: array element '" + tok + "' in key '" + key + "' is not a number");
    }
  }
  return out;
}

std::string ConfigDoc::dump() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
  return os.str();
}

void ConfigDoc::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw DataError("config: cannot write " + path);
  f << dump();
}

}  // namespace rcore
