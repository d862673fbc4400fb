#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace pmrel::toml {

// Minimal TOML subset: [tables], key = value with string / integer /
// float / bool / flat arrays, and # comments. Keys are flattened to
// dotted paths. Enough for run configuration files.

using Value = std::variant<std::string, std::int64_t, double, bool, std::vector<std::string>>;

class Document {
  public:
    bool contains(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback = {}) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (auto* s = std::get_if<std::string>(&it->second)) return *s;
        throw std::runtime_error("toml: '" + key + "' is not a string");
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
        throw std::runtime_error("toml: '" + key + "' is not an integer");
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (auto* d = std::get_if<double>(&it->second)) return *d;
        if (auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
        throw std::runtime_error("toml: '" + key + "' is not a number");
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (auto* b = std::get_if<bool>(&it->second)) return *b;
        throw std::runtime_error("toml: '" + key + "' is not a boolean");
    }

    std::vector<std::string> get_string_array(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return {};
        if (auto* a = std::get_if<std::vector<std::string>>(&it->second)) return *a;
        throw std::runtime_error("toml: '" + key + "' is not an array");
    }

    void set(const std::string& key, Value v) { values_[key] = std::move(v); }

  private:
    std::map<std::string, Value> values_;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        else if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

inline std::string parse_basic_string(const std::string& raw, int line_no) {
    if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"')
        throw std::runtime_error("toml: bad string at line " + std::to_string(line_no));
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        char c = raw[i];
        if (c == '\\' && i + 2 < raw.size() + 1) {
            char n = raw[++i];
            switch (n) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default:
                    throw std::runtime_error("toml: unsupported escape at line " + std::to_string(line_no));
            }
        } else {
            out += c;
        }
    }
    return out;
}

inline Value parse_scalar(const std::string& raw, int line_no) {
    if (!raw.empty() && raw.front() == '"') return parse_basic_string(raw, line_no);
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.find_first_of(".eE") != std::string::npos &&
        raw.find_first_not_of("+-0123456789.eE") == std::string::npos) {
        try {
            return std::stod(raw);
        } catch (...) {
        }
    }
    if (raw.find_first_not_of("+-0123456789_") == std::string::npos && !raw.empty()) {
        std::string digits;
        for (char c : raw)
            if (c != '_') digits += c;
        try {
            return static_cast<std::int64_t>(std::stoll(digits));
        } catch (...) {
        }
    }
    throw std::runtime_error("toml: cannot parse value '" + raw + "' at line " + std::to_string(line_no));
}

}  // namespace detail

inline Document parse(const std::string& text) {
    Document doc;
    std::istringstream in(text);
    std::string line;
    std::string prefix;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim(detail::strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("toml: bad table header at line " + std::to_string(line_no));
            prefix = detail::trim(line.substr(1, line.size() - 2)) + ".";
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("toml: expected key = value at line " + std::to_string(line_no));
        std::string key = detail::trim(line.substr(0, eq));
        std::string raw = detail::trim(line.substr(eq + 1));
        if (key.empty() || raw.empty())
            throw std::runtime_error("toml: empty key or value at line " + std::to_string(line_no));
        if (raw.front() == '[') {
            if (raw.back() != ']')
                throw std::runtime_error("toml: bad array at line " + std::to_string(line_no));
            std::vector<std::string> items;
            std::string body = raw.substr(1, raw.size() - 2);
            std::string item;
            bool in_str = false;
            for (char c : body) {
                if (c == '"') in_str = !in_str;
                if (c == ',' && !in_str) {
                    items.push_back(item);
                    item.clear();
                } else {
                    item += c;
                }
            }
            if (!detail::trim(item).empty()) items.push_back(item);
            std::vector<std::string> out;
            for (auto& it : items) {
                Value v = detail::parse_scalar(detail::trim(it), line_no);
                if (auto* s = std::get_if<std::string>(&v)) out.push_back(*s);
                else if (auto* i = std::get_if<std::int64_t>(&v)) out.push_back(std::to_string(*i));
                else throw std::runtime_error("toml: unsupported array element at line " + std::to_string(line_no));
            }
            doc.set(prefix + key, out);
        } else {
            doc.set(prefix + key, detail::parse_scalar(raw, line_no));
        }
    }
    return doc;
}

inline Document read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("toml: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace pmrel::toml
