#include "mfe/report.h"

#include "mfe/errors.h"
#include "mfe/field_io.h"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace mfe {

namespace {

constexpr const char* timestamp_key = "timestamp = ";

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

Report& Report::section(const std::string& name) {
    sections_.push_back({name, {}});
    return *this;
}

Report& Report::add(const std::string& key, const std::string& value) {
    if (sections_.empty()) section("result");
    if (value.find('\n') != std::string::npos) throw InternalError("report values must be single-line: " + key);
    sections_.back().entries.emplace_back(key, value);
    return *this;
}

Report& Report::add(const std::string& key, double value) { return add(key, format_double(value)); }

std::string Report::render(const std::string& timestamp) const {
    std::ostringstream out;
    out << "# " << title_ << '\n' << timestamp_key << timestamp << '\n';
    for (const auto& s : sections_) {
        out << "\n[" << s.name << "]\n";
        for (const auto& [k, v] : s.entries) out << k << " = " << v << '\n';
    }
    return out.str();
}

void Report::write(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write report " + path.string());
    f << render(utc_now());
    if (!f) throw ConfigError("failed writing report " + path.string());
}

std::string Report::strip_timestamp(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(timestamp_key, 0) == 0) continue;
        out << line << '\n';
    }
    return out.str();
}

}  // namespace mfe
