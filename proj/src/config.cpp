#include "dgsipg/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dgsipg/polylib.hpp"

namespace dgsipg {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_number(const std::string& key, const std::string& v) {
  // "pi" and "2pi"-style multiples are accepted for wavenumbers
  const double pi = std::acos(-1.0);
  if (v.size() >= 2 && v.compare(v.size() - 2, 2, "pi") == 0) {
    const std::string head = trim(std::string_view(v).substr(0, v.size() - 2));
    if (head.empty()) return pi;
    const std::string h = head.back() == '*' ? head.substr(0, head.size() - 1) : head;
    return parse_number(key, h) * pi;
  }
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw Error("key '" + key + "': '" + v + "' is not a number");
  return d;
}

}  // namespace

Config Config::from_text(std::string_view text) {
  Config c;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw Error("config line " + std::to_string(lineno) + ": empty key");
    c.values_[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return c;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw Error("override '" + std::string(assignment) + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw Error("override '" + std::string(assignment) + "' has an empty key");
  values_[key] = trim(assignment.substr(eq + 1));
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int Config::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const double d = parse_number(key, get(key, ""));
  if (d != std::floor(d)) throw Error("key '" + key + "' must be an integer");
  return static_cast<int>(d);
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_number(key, get(key, "")) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = get(key, "");
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error("key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> Config::get_list(const std::string& key, const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::string> out;
  std::stringstream ss(get(key, ""));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& key, const std::vector<int>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<int> out;
  for (const auto& s : get_list(key, {})) {
    const double d = parse_number(key, s);
    if (d != std::floor(d)) throw Error("key '" + key + "' must list integers");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

void Config::check_keys(const std::vector<std::string>& known) const {
  for (const auto& [k, v] : values_) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw Error("unknown config key '" + k + "'");
  }
}

}  // namespace dgsipg
