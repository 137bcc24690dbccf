#include "qdsps/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qdsps/error.hpp"

namespace qdsps {

namespace {

std::string where(const std::string& source, int line)
{
    return source + ":" + std::to_string(line) + ": ";
}

bool valid_key(const std::string& key)
{
    if (key.empty()) return false;
    return std::all_of(key.begin(), key.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-';
    });
}

bool valid_table_name(const std::string& name)
{
    if (name.empty()) return false;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = name.find('.', start);
        if (!valid_key(name.substr(start, dot - start))) return false;
        if (dot == std::string::npos) return true;
        start = dot + 1;
    }
}

class LineParser {
public:
    LineParser(std::string_view text, const std::string& source, int line)
        : s_(text), source_(source), line_(line)
    {
    }

    ConfigValue value()
    {
        skip_ws();
        ConfigValue v;
        v.line = line_;
        if (done()) error("missing value");
        const char c = s_[pos_];
        if (c == '"') {
            v.data = string();
        } else if (c == '[') {
            v.data = array();
        } else if (starts_with("true")) {
            pos_ += 4;
            v.data = true;
        } else if (starts_with("false")) {
            pos_ += 5;
            v.data = false;
        } else {
            v.data = number();
        }
        return v;
    }

    void expect_end()
    {
        skip_ws();
        if (!done() && s_[pos_] != '#') error("unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
    }

private:
    [[noreturn]] void error(const std::string& msg) const
    {
        throw ConfigError(where(source_, line_) + msg);
    }

    bool done() const { return pos_ >= s_.size(); }
    bool starts_with(std::string_view word) const { return s_.substr(pos_, word.size()) == word; }
    void skip_ws()
    {
        while (!done() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
    }

    std::string string()
    {
        ++pos_;
        std::string out;
        while (true) {
            if (done()) error("unterminated string");
            const char c = s_[pos_++];
            if (c == '"') return out;
            if (c == '\\') {
                if (done()) error("unterminated escape");
                const char e = s_[pos_++];
                switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: error(std::string("unsupported escape \\") + e);
                }
            } else {
                out += c;
            }
        }
    }

    ConfigArray array()
    {
        ++pos_;
        ConfigArray out;
        while (true) {
            skip_ws();
            if (done()) error("unterminated array");
            if (s_[pos_] == ']') {
                ++pos_;
                return out;
            }
            out.push_back(value());
            skip_ws();
            if (done()) error("unterminated array");
            if (s_[pos_] == ',') {
                ++pos_;
            } else if (s_[pos_] != ']') {
                error("expected ',' or ']' in array");
            }
        }
    }

    std::variant<bool, std::int64_t, double, std::string, ConfigArray> number()
    {
        const std::size_t start = pos_;
        while (!done() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' &&
               !std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
        std::string tok(s_.substr(start, pos_ - start));
        tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
        if (tok.empty()) error("missing value");
        const bool is_float = tok.find_first_of(".eE") != std::string::npos || tok == "inf" ||
                              tok == "nan" || tok == "+inf" || tok == "-inf";
        const char* b = tok.data() + (tok[0] == '+' ? 1 : 0);
        const char* e = tok.data() + tok.size();
        if (is_float) {
            double d = 0.0;
            const auto [p, ec] = std::from_chars(b, e, d);
            if (ec != std::errc() || p != e) error("invalid number '" + tok + "'");
            return d;
        }
        std::int64_t i = 0;
        const auto [p, ec] = std::from_chars(b, e, i);
        if (ec != std::errc() || p != e) error("invalid value '" + tok + "'");
        return i;
    }

    std::string_view s_;
    const std::string& source_;
    int line_;
    std::size_t pos_ = 0;
};

std::string format_double(double d)
{
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, d);
        if (std::strtod(buf, nullptr) == d) break;
    }
    std::string s(buf);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

void write_value(std::ostream& os, const ConfigValue& v)
{
    std::visit(
        [&os](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>) {
                os << (x ? "true" : "false");
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                os << x;
            } else if constexpr (std::is_same_v<T, double>) {
                os << format_double(x);
            } else if constexpr (std::is_same_v<T, std::string>) {
                os << '"';
                for (char c : x) {
                    if (c == '"' || c == '\\') os << '\\' << c;
                    else if (c == '\n') os << "\\n";
                    else if (c == '\t') os << "\\t";
                    else os << c;
                }
                os << '"';
            } else {
                os << '[';
                for (std::size_t i = 0; i < x.size(); ++i) {
                    if (i) os << ", ";
                    write_value(os, x[i]);
                }
                os << ']';
            }
        },
        v.data);
}

const char* type_name(const ConfigValue& v)
{
    switch (v.data.index()) {
    case 0: return "boolean";
    case 1: return "integer";
    case 2: return "float";
    case 3: return "string";
    default: return "array";
    }
}

} // namespace

const ConfigValue* ConfigTable::find(const std::string& key) const
{
    for (const auto& [k, v] : entries_) {
        if (k == key) return &v;
    }
    return nullptr;
}

const ConfigValue& ConfigTable::at(const std::string& key) const
{
    const ConfigValue* v = find(key);
    if (!v) {
        throw ConfigError(where(source_, line_) + "field '" +
                          (name_.empty() ? key : name_ + "." + key) + "': required field missing");
    }
    return *v;
}

bool ConfigTable::has(const std::string& key) const { return find(key) != nullptr; }

void ConfigTable::set(const std::string& key, ConfigValue value)
{
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    entries_.emplace_back(key, std::move(value));
}

void ConfigTable::fail(const std::string& key, const std::string& message) const
{
    const ConfigValue* v = find(key);
    const int line = v ? v->line : line_;
    throw ConfigError(where(source_, line) + "field '" + (name_.empty() ? key : name_ + "." + key) +
                      "': " + message);
}

double ConfigTable::get_double(const std::string& key) const
{
    const ConfigValue& v = at(key);
    if (const auto* d = std::get_if<double>(&v.data)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v.data)) return static_cast<double>(*i);
    fail(key, std::string("expected a number, got ") + type_name(v));
}

double ConfigTable::get_double(const std::string& key, double fallback) const
{
    return has(key) ? get_double(key) : fallback;
}

std::int64_t ConfigTable::get_int(const std::string& key) const
{
    const ConfigValue& v = at(key);
    if (const auto* i = std::get_if<std::int64_t>(&v.data)) return *i;
    fail(key, std::string("expected an integer, got ") + type_name(v));
}

std::int64_t ConfigTable::get_int(const std::string& key, std::int64_t fallback) const
{
    return has(key) ? get_int(key) : fallback;
}

bool ConfigTable::get_bool(const std::string& key, bool fallback) const
{
    if (!has(key)) return fallback;
    const ConfigValue& v = at(key);
    if (const auto* b = std::get_if<bool>(&v.data)) return *b;
    fail(key, std::string("expected a boolean, got ") + type_name(v));
}

std::string ConfigTable::get_string(const std::string& key) const
{
    const ConfigValue& v = at(key);
    if (const auto* s = std::get_if<std::string>(&v.data)) return *s;
    fail(key, std::string("expected a string, got ") + type_name(v));
}

std::string ConfigTable::get_string(const std::string& key, const std::string& fallback) const
{
    return has(key) ? get_string(key) : fallback;
}

std::vector<double> ConfigTable::get_doubles(const std::string& key) const
{
    const ConfigValue& v = at(key);
    const auto* arr = std::get_if<ConfigArray>(&v.data);
    if (!arr) fail(key, std::string("expected an array of numbers, got ") + type_name(v));
    std::vector<double> out;
    for (const ConfigValue& e : *arr) {
        if (const auto* d = std::get_if<double>(&e.data)) {
            out.push_back(*d);
        } else if (const auto* i = std::get_if<std::int64_t>(&e.data)) {
            out.push_back(static_cast<double>(*i));
        } else {
            fail(key, std::string("array element is a ") + type_name(e) + ", expected a number");
        }
    }
    return out;
}

std::vector<double> ConfigTable::get_doubles(const std::string& key, std::vector<double> fallback) const
{
    return has(key) ? get_doubles(key) : fallback;
}

std::vector<std::string> ConfigTable::get_strings(const std::string& key) const
{
    const ConfigValue& v = at(key);
    const auto* arr = std::get_if<ConfigArray>(&v.data);
    if (!arr) fail(key, std::string("expected an array of strings, got ") + type_name(v));
    std::vector<std::string> out;
    for (const ConfigValue& e : *arr) {
        const auto* s = std::get_if<std::string>(&e.data);
        if (!s) fail(key, std::string("array element is a ") + type_name(e) + ", expected a string");
        out.push_back(*s);
    }
    return out;
}

void ConfigTable::reject_unknown(const std::vector<std::string>& known) const
{
    for (const auto& [k, v] : entries_) {
        if (std::find(known.begin(), known.end(), k) == known.end()) fail(k, "unknown field");
    }
}

Config Config::parse(const std::string& text, const std::string& source)
{
    Config cfg;
    cfg.source_ = source;
    cfg.tables_.emplace_back("", source, 1);
    std::size_t current = 0;

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line(raw);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;

        if (line.front() == '[') {
            const std::size_t close = line.find(']');
            if (close == std::string_view::npos) {
                throw ConfigError(where(source, lineno) + "unterminated table header");
            }
            std::string name(line.substr(1, close - 1));
            name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
            if (!valid_table_name(name)) {
                throw ConfigError(where(source, lineno) + "invalid table name '" + name + "'");
            }
            std::string_view rest = line.substr(close + 1);
            while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
            if (!rest.empty() && rest.front() != '#') {
                throw ConfigError(where(source, lineno) + "unexpected text after table header");
            }
            if (cfg.has_table(name)) {
                throw ConfigError(where(source, lineno) + "duplicate table [" + name + "]");
            }
            cfg.tables_.emplace_back(name, source, lineno);
            current = cfg.tables_.size() - 1;
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(where(source, lineno) + "expected 'key = value'");
        }
        std::string key(line.substr(0, eq));
        while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
        if (!valid_key(key)) throw ConfigError(where(source, lineno) + "invalid key '" + key + "'");
        ConfigTable& table = cfg.tables_[current];
        if (table.has(key)) {
            throw ConfigError(where(source, lineno) + "field '" +
                              (table.name().empty() ? key : table.name() + "." + key) +
                              "' defined twice");
        }
        LineParser p(line.substr(eq + 1), source, lineno);
        ConfigValue v = p.value();
        p.expect_end();
        table.set(key, std::move(v));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string Config::serialize() const
{
    std::ostringstream os;
    bool first = true;
    for (const ConfigTable& t : tables_) {
        if (!t.name().empty()) {
            if (!first) os << '\n';
            os << '[' << t.name() << "]\n";
        }
        for (const auto& [k, v] : t.entries()) {
            os << k << " = ";
            write_value(os, v);
            os << '\n';
        }
        first = false;
    }
    return os.str();
}

bool Config::has_table(const std::string& name) const
{
    return std::any_of(tables_.begin(), tables_.end(),
                       [&](const ConfigTable& t) { return t.name() == name; });
}

const ConfigTable& Config::table(const std::string& name) const
{
    for (const ConfigTable& t : tables_) {
        if (t.name() == name) return t;
    }
    throw ConfigError(source_ + ": missing table [" + name + "]");
}

std::vector<const ConfigTable*> Config::tables_under(const std::string& prefix) const
{
    std::vector<const ConfigTable*> out;
    const std::string p = prefix + ".";
    for (const ConfigTable& t : tables_) {
        if (t.name().rfind(p, 0) == 0) out.push_back(&t);
    }
    return out;
}

} // namespace qdsps
