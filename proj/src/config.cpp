#include "tslab/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "tslab/csv.hpp"
#include "tslab/errors.hpp"

namespace tslab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end)
    throw ArgumentError("config key '" + key + "': cannot parse '" + text + "' as a number");
  return value;
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::string section;
  std::size_t offset = 0;
  std::size_t line_no = 0;
  while (offset <= text.size()) {
    const auto nl = text.find('\n', offset);
    const std::size_t end = nl == std::string::npos ? text.size() : nl;
    std::string line = text.substr(offset, end - offset);
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    const std::string where = "config line " + std::to_string(line_no);
    if (!line.empty()) {
      if (line.front() == '[') {
        if (line.back() != ']') throw FormatError(where + ": unterminated section header", offset);
        section = trim(line.substr(1, line.size() - 2));
        if (!valid_name(section)) throw FormatError(where + ": invalid section name", offset);
      } else {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError(where + ": expected key = value", offset);
        const std::string key = trim(line.substr(0, eq));
        if (!valid_name(key)) throw FormatError(where + ": invalid key", offset);
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.values_.contains(full)) throw FormatError(where + ": duplicate key '" + full + "'", offset);
        cfg.values_[full] = trim(line.substr(eq + 1));
      }
    }
    if (nl == std::string::npos) break;
    offset = nl + 1;
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> Config::lookup(const std::string& key) {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
  const std::string v = lookup(key).value_or(fallback);
  resolved_[key] = v;
  return v;
}

std::string Config::require_string(const std::string& key) {
  const auto v = lookup(key);
  if (!v || v->empty()) throw ArgumentError("config key '" + key + "' is required");
  resolved_[key] = *v;
  return *v;
}

double Config::get_double(const std::string& key, double fallback) {
  const auto v = lookup(key);
  double out = fallback;
  if (v) {
    // Accept fractions such as 25/255.
    const auto slash = v->find('/');
    if (slash != std::string::npos) {
      const double num = parse_number<double>(key, trim(v->substr(0, slash)));
      const double den = parse_number<double>(key, trim(v->substr(slash + 1)));
      if (den == 0.0) throw ArgumentError("config key '" + key + "': division by zero");
      out = num / den;
    } else {
      out = parse_number<double>(key, *v);
    }
  }
  resolved_[key] = v ? *v : format_double(fallback);
  return out;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) {
  const auto v = lookup(key);
  const std::int64_t out = v ? parse_number<std::int64_t>(key, *v) : fallback;
  resolved_[key] = std::to_string(out);
  return out;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) {
  const auto v = lookup(key);
  const std::uint64_t out = v ? parse_number<std::uint64_t>(key, *v) : fallback;
  resolved_[key] = std::to_string(out);
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) {
  const auto v = lookup(key);
  bool out = fallback;
  if (v) {
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
      out = true;
    } else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
      out = false;
    } else {
      throw ArgumentError("config key '" + key + "': expected a boolean, got '" + *v + "'");
    }
  }
  resolved_[key] = out ? "true" : "false";
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) {
  const auto v = lookup(key);
  std::vector<double> out;
  if (!v) {
    out = fallback;
  } else {
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(key, trim(item)));
  }
  std::string echo;
  for (std::size_t i = 0; i < out.size(); ++i) echo += (i ? "," : "") + format_double(out[i]);
  resolved_[key] = v ? *v : echo;
  return out;
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!resolved_.contains(k)) out.push_back(k);
  return out;
}

std::string Config::manifest() const {
  std::map<std::string, std::map<std::string, std::string>> sections;
  for (const auto& [k, v] : resolved_) {
    const auto dot = k.find('.');
    if (dot == std::string::npos)
      sections[""][k] = v;
    else
      sections[k.substr(0, dot)][k.substr(dot + 1)] = v;
  }
  std::ostringstream out;
  for (const auto& [name, entries] : sections) {
    if (!name.empty()) out << "\n[" << name << "]\n";
    for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
  }
  return out.str();
}

}  // namespace tslab
