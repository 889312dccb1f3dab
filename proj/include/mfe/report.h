#pragma once

#include <concepts>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mfe {

/// Structured text report: a title line, a timestamp line, then `[section]` blocks of
/// `key = value` lines separated by blank lines. Reals are written with 17 significant
/// digits, so two runs with identical inputs differ only in the timestamp line.
class Report {
public:
    explicit Report(std::string title) : title_(std::move(title)) {}

    Report& section(const std::string& name);
    Report& add(const std::string& key, const std::string& value);
    Report& add(const std::string& key, const char* value) { return add(key, std::string(value)); }
    Report& add(const std::string& key, double value);
    Report& add(const std::string& key, bool value) { return add(key, std::string(value ? "true" : "false")); }
    template <std::integral T>
        requires(!std::same_as<T, bool>)
    Report& add(const std::string& key, T value) {
        return add(key, std::to_string(value));
    }

    std::string render(const std::string& timestamp) const;
    /// Renders with the current UTC time and writes the file.
    void write(const std::filesystem::path& path) const;

    /// Copy of a rendered report without its timestamp line.
    static std::string strip_timestamp(const std::string& text);

private:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };
    std::string title_;
    std::vector<Section> sections_;
};

}  // namespace mfe
