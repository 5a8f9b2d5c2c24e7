#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cbricks/error.hpp"
#include "cbricks/io/csv.hpp"

namespace cbricks::app {

// Experiment configuration as `[section]` headers followed by `key = value`
// lines; `#` starts a comment. Keys are addressed as "section.key". Getters
// take a default and record it, so `text()` always shows the resolved run.
class Config {
public:
    static Config parse(std::istream& is) {
        Config c;
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const std::string where = "config line " + std::to_string(lineno) + ": ";
            if (line.front() == '[') {
                require(line.back() == ']' && line.size() > 2, where + "malformed section header");
                section = trim(line.substr(1, line.size() - 2));
                require(valid_name(section), where + "bad section name");
                continue;
            }
            const auto eq = line.find('=');
            require(eq != std::string::npos, where + "expected key = value");
            require(!section.empty(), where + "key outside of any section");
            const std::string key = trim(line.substr(0, eq));
            require(valid_name(key), where + "bad key name");
            c.values_[section + "." + key] = trim(line.substr(eq + 1));
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path);
        require(static_cast<bool>(f), "cannot open config file " + path);
        return parse(f);
    }

    /// Applies a "section.key=value" override.
    void set_assignment(const std::string& assignment) {
        const auto eq = assignment.find('=');
        require(eq != std::string::npos, "override must look like section.key=value");
        set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
    }

    void set(const std::string& key, const std::string& value) {
        const auto dot = key.find('.');
        require(dot != std::string::npos && valid_name(key.substr(0, dot)) && valid_name(key.substr(dot + 1)),
                "config key must look like section.key: " + key);
        values_[key] = value;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        used_.insert(key);
        auto [it, inserted] = values_.try_emplace(key, fallback);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) {
        return parse_double(key, get_string(key, io::format_double(fallback)));
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        return parse_u64(key, get_string(key, std::to_string(fallback)));
    }

    std::size_t get_size(const std::string& key, std::size_t fallback) {
        return static_cast<std::size_t>(get_u64(key, fallback));
    }

    bool get_bool(const std::string& key, bool fallback) {
        const std::string v = get_string(key, fallback ? "true" : "false");
        if (v == "true") return true;
        if (v == "false") return false;
        throw ValidationError(key + ": expected true or false, got '" + v + "'");
    }

    /// Comma- or space-separated list.
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) {
        std::string def;
        for (std::size_t i = 0; i < fallback.size(); ++i) def += (i ? "," : "") + io::format_double(fallback[i]);
        std::vector<double> out;
        for (const auto& item : split_list(get_string(key, def))) out.push_back(parse_double(key, item));
        return out;
    }

    std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) {
        std::string def;
        for (std::size_t i = 0; i < fallback.size(); ++i) def += (i ? "," : "") + std::to_string(fallback[i]);
        std::vector<std::size_t> out;
        for (const auto& item : split_list(get_string(key, def)))
            out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
        return out;
    }

    /// Keys that were supplied but never read by the command.
    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    void require_all_used() const {
        const auto unused = unused_keys();
        require(unused.empty(), "unknown config key " + (unused.empty() ? std::string() : unused.front()));
    }

    /// Resolved configuration in the same format `parse` reads.
    std::string text() const {
        std::ostringstream os;
        std::string section;
        for (const auto& [k, v] : values_) {
            const auto dot = k.find('.');
            const std::string s = k.substr(0, dot);
            if (s != section) {
                if (!section.empty()) os << '\n';
                os << '[' << s << "]\n";
                section = s;
            }
            os << k.substr(dot + 1) << " = " << v << '\n';
        }
        return os.str();
    }

    const std::map<std::string, std::string>& values() const { return values_; }

    bool operator==(const Config& o) const { return values_ == o.values_; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static bool valid_name(const std::string& s) {
        if (s.empty()) return false;
        for (char c : s)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
        return true;
    }

    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s + ",") {
            if (c == ',' || c == ' ' || c == '\t') {
                if (!cur.empty()) out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        return out;
    }

    static double parse_double(const std::string& key, const std::string& v) {
        char* end = nullptr;
        const double d = std::strtod(v.c_str(), &end);
        require(!v.empty() && end == v.c_str() + v.size(), key + ": expected a number, got '" + v + "'");
        return d;
    }

    static std::uint64_t parse_u64(const std::string& key, const std::string& v) {
        std::uint64_t out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        require(ec == std::errc() && ptr == v.data() + v.size(),
                key + ": expected a non-negative integer, got '" + v + "'");
        return out;
    }

    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

}  // namespace cbricks::app
