#include "hqnet/config_text.h"

#include <cctype>
#include <charconv>
#include <sstream>

#include "hqnet/error.h"

namespace hqnet {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw Error(ErrorCode::config_invalid, "line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

int bracket_balance(const std::string& s) {
  int depth = 0;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

class ValueParser {
 public:
  ValueParser(const std::string& text, int line) : s_(text), line_(line) {}

  ConfigValue parse() {
    ConfigValue v = value();
    skip_space();
    if (pos_ != s_.size()) fail(line_, "unexpected trailing text '" + s_.substr(pos_) + "'");
    return v;
  }

 private:
  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  ConfigValue value() {
    skip_space();
    if (pos_ >= s_.size()) fail(line_, "missing value");
    ConfigValue v;
    v.line = line_;
    const char c = s_[pos_];
    if (c == '[') {
      v.kind = ConfigValue::Kind::array;
      ++pos_;
      skip_space();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      while (true) {
        v.items.push_back(value());
        skip_space();
        if (pos_ >= s_.size()) fail(line_, "unterminated array");
        if (s_[pos_] == ',') {
          ++pos_;
          skip_space();
          if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return v;
          }
          continue;
        }
        if (s_[pos_] == ']') {
          ++pos_;
          return v;
        }
        fail(line_, "expected ',' or ']' in array");
      }
    }
    if (c == '"') {
      v.kind = ConfigValue::Kind::string;
      ++pos_;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
        v.text.push_back(s_[pos_++]);
      }
      if (pos_ >= s_.size()) fail(line_, "unterminated string");
      ++pos_;
      return v;
    }
    const auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    const std::string token = s_.substr(start, pos_ - start);
    if (token == "true" || token == "false") {
      v.kind = ConfigValue::Kind::boolean;
      v.boolean = token == "true";
      v.text = token;
      return v;
    }
    std::string digits;
    for (char ch : token)
      if (ch != '_') digits.push_back(ch);
    const char* first = digits.data();
    if (!digits.empty() && digits[0] == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, digits.data() + digits.size(), v.number);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) fail(line_, "cannot parse value '" + token + "'");
    v.kind = ConfigValue::Kind::number;
    v.text = digits;
    return v;
  }

  const std::string& s_;
  int line_;
  std::size_t pos_ = 0;
};

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  return true;
}

}  // namespace

const ConfigEntry* ConfigDocument::find(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

ConfigEntry* ConfigDocument::find(const std::string& key) {
  for (auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

ConfigDocument parse_config(const std::string& text) {
  ConfigDocument doc;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.size() < 3 || line.back() != ']' || line[1] == '[')
        fail(line_no, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) fail(line_no, "malformed section name '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) fail(line_no, "malformed key '" + key + "'");
    std::string value = trim(line.substr(eq + 1));
    const int start_line = line_no;
    while (bracket_balance(value) > 0) {
      if (!std::getline(in, raw)) fail(start_line, "unterminated array for key '" + key + "'");
      ++line_no;
      value += " " + trim(strip_comment(raw));
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (doc.find(full)) fail(start_line, "duplicate key '" + full + "'");
    doc.entries.push_back({full, ValueParser(value, start_line).parse()});
  }
  return doc;
}

std::string format_value(const ConfigValue& v) {
  switch (v.kind) {
    case ConfigValue::Kind::number: return v.text;
    case ConfigValue::Kind::boolean: return v.boolean ? "true" : "false";
    case ConfigValue::Kind::string: {
      std::string out = "\"";
      for (char c : v.text) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      return out + "\"";
    }
    case ConfigValue::Kind::array: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.items.size(); ++i) out += (i ? ", " : "") + format_value(v.items[i]);
      return out + "]";
    }
  }
  return {};
}

}  // namespace hqnet
