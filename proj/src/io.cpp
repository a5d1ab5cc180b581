#include "friction/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace friction {

const char* const version_string = "0.1.0";

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

Config Config::parse_text(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        if (!c.kv.emplace(key, trim(t.substr(eq + 1))).second)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": duplicate key '" + key + "'");
    }
    return c;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

std::string Config::str(const std::string& key) const {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
}

std::string Config::str_or(const std::string& key, const std::string& dflt) const {
    const auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
}

double Config::num(const std::string& key) const {
    const std::string v = str(key);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "': not a number: '" + v + "'");
    return x;
}

double Config::num_or(const std::string& key, double dflt) const {
    return has(key) ? num(key) : dflt;
}

long long Config::integer(const std::string& key) const {
    const std::string v = str(key);
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
    return x;
}

long long Config::integer_or(const std::string& key, long long dflt) const {
    return has(key) ? integer(key) : dflt;
}

std::uint64_t Config::u64_or(const std::string& key, std::uint64_t dflt) const {
    if (!has(key)) return dflt;
    const std::string v = str(key);
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "': not an unsigned integer: '" + v + "'");
    return x;
}

bool Config::flag_or(const std::string& key, bool dflt) const {
    if (!has(key)) return dflt;
    const std::string v = str(key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("key '" + key + "': not a boolean: '" + v + "'");
}

std::uint64_t Config::hash() const {
    std::uint64_t h = 1469598103934665603ull; // FNV-1a
    auto mix = [&](const std::string& s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 1099511628211ull;
        }
    };
    for (const auto& [k, v] : kv) { // std::map: sorted, deterministic
        mix(k);
        mix("=");
        mix(v);
        mix("\n");
    }
    return h;
}

void write_metadata_header(std::ostream& os, const RunMeta& meta) {
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  (unsigned long long)meta.config_hash);
    os << "# version: " << version_string << "\n"
       << "# scenario: " << meta.scenario << "\n"
       << "# config_hash: " << hex << "\n"
       << "# seed: " << meta.seed << "\n"
       << "# timestamp: " << meta.timestamp << "\n";
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open output file '" + path + "'");
    return os;
}

} // namespace

void write_timeseries_csv(const std::string& path, const RunMeta& meta,
                          const EvolutionResult& res) {
    auto os = open_out(path);
    write_metadata_header(os, meta);
    const bool se = !res.std_error.empty();
    os << "t,x,p,xx,xp,pp,energy";
    if (se) os << ",x_se,p_se,xx_se,xp_se,pp_se,energy_se";
    os << "\n";
    for (Eigen::Index i = 0; i < res.times.size(); ++i) {
        const Moments1D& m = res.moments[i].m1;
        os << fmt(res.times[i]) << ',' << fmt(m.x) << ',' << fmt(m.p) << ','
           << fmt(m.xx) << ',' << fmt(m.xp) << ',' << fmt(m.pp) << ','
           << fmt(res.energy[i]);
        if (se) {
            const Moments1D& e = res.std_error[i];
            os << ',' << fmt(e.x) << ',' << fmt(e.p) << ',' << fmt(e.xx) << ','
               << fmt(e.xp) << ',' << fmt(e.pp) << ','
               << fmt(res.energy_std_error[i]);
        }
        os << "\n";
    }
}

void write_stability_csv(const std::string& path, const RunMeta& meta,
                         const StabilityScan& scan) {
    auto os = open_out(path);
    write_metadata_header(os, meta);
    os << "gamma,alpha,max_re\n";
    for (Eigen::Index i = 0; i < scan.gammas.size(); ++i)
        for (Eigen::Index j = 0; j < scan.alphas.size(); ++j)
            os << fmt(scan.gammas[i]) << ',' << fmt(scan.alphas[j]) << ','
               << fmt(scan.max_re(i, j)) << "\n";
}

void write_char_csv(const std::string& path, const RunMeta& meta,
                    const CharFunction& chi) {
    auto os = open_out(path);
    write_metadata_header(os, meta);
    os << "P,X,re,im\n";
    const Grid& g = chi.grid;
    for (int a = 0; a < g.n; ++a)
        for (int b = 0; b < g.n; ++b)
            os << fmt(g.p(a)) << ',' << fmt(g.x(b)) << ','
               << fmt(chi.chi(a, b).real()) << ',' << fmt(chi.chi(a, b).imag())
               << "\n";
}

} // namespace friction
