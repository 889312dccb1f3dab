#include "mfe/field_io.h"

#include "mfe/errors.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mfe {

namespace {

double parse_double(std::string_view s, int line) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("cannot parse number '" + std::string(s) + "'", line);
    }
    return x;
}

std::map<std::string, std::string> descriptor_fields(const std::string& descriptor, std::string& kind) {
    std::istringstream is(descriptor);
    is >> kind;
    std::map<std::string, std::string> out;
    std::string token;
    while (is >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw ConfigError("bad grid descriptor token '" + token + "'");
        out[token.substr(0, eq)] = token.substr(eq + 1);
    }
    return out;
}

const std::string& require_key(const std::map<std::string, std::string>& m, const std::string& key) {
    const auto it = m.find(key);
    if (it == m.end()) throw ConfigError("grid descriptor lacks '" + key + "'");
    return it->second;
}

double key_double(const std::map<std::string, std::string>& m, const std::string& key) {
    const auto& s = require_key(m, key);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("bad value for '" + key + "'");
    return x;
}

int key_int(const std::map<std::string, std::string>& m, const std::string& key) {
    const auto& s = require_key(m, key);
    int x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("bad value for '" + key + "'");
    return x;
}

}  // namespace

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

GridPtr grid_from_descriptor(const std::string& descriptor) {
    std::string kind;
    const auto m = descriptor_fields(descriptor, kind);
    if (kind == "annulus") {
        return build_annulus_grid(key_double(m, "r_inner"), key_double(m, "r_outer"), key_int(m, "nr"),
                                  key_int(m, "ntheta"));
    }
    if (kind == "torus") {
        TorusStencil stencil = TorusStencil::spectral;
        if (const auto it = m.find("stencil"); it != m.end()) {
            if (it->second == "five_point") {
                stencil = TorusStencil::five_point;
            } else if (it->second != "spectral") {
                throw ConfigError("unknown torus stencil '" + it->second + "'");
            }
        }
        return build_torus_grid(key_double(m, "lx"), key_double(m, "ly"), key_int(m, "nx"), key_int(m, "ny"),
                                stencil);
    }
    throw ConfigError("unknown domain kind '" + kind + "'");
}

void write_field_csv(std::ostream& out, const Field& f) {
    const auto& g = *f.grid;
    out << "# " << g.describe() << '\n';
    if (g.kind() == DomainKind::annulus) {
        const auto& a = g.annulus();
        out << "r,theta,value\n";
        for (int i = 0; i < a.n_r(); ++i) {
            for (int j = 0; j < a.n_theta(); ++j) {
                out << format_double(a.radius(i)) << ',' << format_double(a.angle(j)) << ','
                    << format_double(f[a.index(i, j)]) << '\n';
            }
        }
    } else {
        out << "x,y,value\n";
        for (std::size_t k = 0; k < g.size(); ++k) {
            const Point x = g.node(k);
            out << format_double(x.x) << ',' << format_double(x.y) << ',' << format_double(f[k]) << '\n';
        }
    }
}

Field read_field_csv(std::istream& in) {
    std::string line;
    int line_no = 1;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
        throw ParseError("missing geometry comment line", line_no);
    }
    GridPtr grid;
    try {
        grid = grid_from_descriptor(line.substr(2));
    } catch (const ParseError&) {
        throw;
    } catch (const ConfigError& e) {
        throw ParseError(e.what(), line_no);
    }
    ++line_no;
    if (!std::getline(in, line)) throw ParseError("missing column header", line_no);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const char* expected = grid->kind() == DomainKind::annulus ? "r,theta,value" : "x,y,value";
    if (line != expected) throw ParseError(std::string("expected header '") + expected + "'", line_no);

    Eigen::VectorXd values(static_cast<Eigen::Index>(grid->size()));
    for (std::size_t k = 0; k < grid->size(); ++k) {
        ++line_no;
        if (!std::getline(in, line)) {
            throw ParseError("truncated file: expected " + std::to_string(grid->size()) + " rows", line_no);
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos) throw ParseError("expected three columns", line_no);
        const std::string_view sv(line);
        const double a = parse_double(sv.substr(0, c1), line_no);
        const double b = parse_double(sv.substr(c1 + 1, c2 - c1 - 1), line_no);
        values[static_cast<Eigen::Index>(k)] = parse_double(sv.substr(c2 + 1), line_no);

        double ea = 0.0;
        double eb = 0.0;
        if (grid->kind() == DomainKind::annulus) {
            const auto& g = grid->annulus();
            ea = g.radius(static_cast<int>(k / g.n_theta()));
            eb = g.angle(static_cast<int>(k % g.n_theta()));
        } else {
            const Point x = grid->node(k);
            ea = x.x;
            eb = x.y;
        }
        if (std::abs(a - ea) > 1e-9 * (1.0 + std::abs(ea)) || std::abs(b - eb) > 1e-9 * (1.0 + std::abs(eb))) {
            throw ParseError("node coordinates do not match the declared grid", line_no);
        }
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line != "\r") throw ParseError("unexpected trailing data", line_no);
    }
    return Field(grid, std::move(values));
}

void save_field(const Field& f, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
    write_field_csv(out, f);
    if (!out) throw ConfigError("write to '" + path.string() + "' failed");
}

Field load_field(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    return read_field_csv(in);
}

Field load_field(const std::filesystem::path& path, const GridPtr& expected) {
    Field f = load_field(path);
    if (!expected->same_geometry(*f.grid)) {
        throw ConfigError("field file geometry '" + f.grid->describe() + "' does not match '" +
                          expected->describe() + "'");
    }
    return Field(expected, std::move(f.values));
}

}  // namespace mfe
