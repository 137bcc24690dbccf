#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

// Minimal TOML-style configuration: `[table.sub]` headers, `key = value`
// lines, `#` comments. Values are booleans, integers, floats, double-quoted
// strings and single-line arrays of those. Every value remembers its source
// line so that errors can point at the offending field.
namespace qdsps {

struct ConfigValue;
using ConfigArray = std::vector<ConfigValue>;

struct ConfigValue {
    std::variant<bool, std::int64_t, double, std::string, ConfigArray> data;
    int line = 0;

    bool operator==(const ConfigValue& other) const { return data == other.data; }
};

class ConfigTable {
public:
    ConfigTable() = default;
    ConfigTable(std::string name, std::string source, int line)
        : name_(std::move(name)), source_(std::move(source)), line_(line)
    {
    }

    const std::string& name() const { return name_; }
    int line() const { return line_; }
    const std::vector<std::pair<std::string, ConfigValue>>& entries() const { return entries_; }

    bool has(const std::string& key) const;
    void set(const std::string& key, ConfigValue value);

    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
    std::vector<std::string> get_strings(const std::string& key) const;

    /// Raises ConfigError naming the first key outside `known`.
    void reject_unknown(const std::vector<std::string>& known) const;

    /// "source:line: field 'table.key': message"
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

    bool operator==(const ConfigTable& other) const
    {
        return name_ == other.name_ && entries_ == other.entries_;
    }

private:
    const ConfigValue& at(const std::string& key) const;
    const ConfigValue* find(const std::string& key) const;

    std::string name_;
    std::string source_;
    int line_ = 0;
    std::vector<std::pair<std::string, ConfigValue>> entries_;
};

class Config {
public:
    static Config parse(const std::string& text, const std::string& source = "<config>");
    static Config load(const std::filesystem::path& path);

    /// Canonical text form; parse(serialize()) == *this.
    std::string serialize() const;

    /// The root table has the empty name.
    const ConfigTable& root() const { return tables_.front(); }
    bool has_table(const std::string& name) const;
    const ConfigTable& table(const std::string& name) const;
    const std::vector<ConfigTable>& tables() const { return tables_; }
    /// Tables whose name starts with `prefix` + ".", in file order.
    std::vector<const ConfigTable*> tables_under(const std::string& prefix) const;

    const std::string& source() const { return source_; }

    bool operator==(const Config& other) const { return tables_ == other.tables_; }

private:
    std::string source_;
    std::vector<ConfigTable> tables_;
};

} // namespace qdsps
