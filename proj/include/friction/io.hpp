#pragma once
// Run plumbing: INI-style flat key-value configuration ("section.key"
// addressing), deterministic metadata headers, and CSV emitters for the
// result types. Output files are bit-reproducible for a fixed (config,
// seed); the timestamp line is the only run-dependent field.

#include "friction/dynamics.hpp"
#include "friction/phase_space.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace friction {

extern const char* const version_string;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Config {
    std::map<std::string, std::string> kv; // "section.key" -> raw value

    // '#' / ';' full-line comments; [section] headers prefix the keys that
    // follow; duplicate keys are an error
    static Config parse_text(const std::string& text);
    static Config parse_file(const std::string& path);

    bool has(const std::string& key) const { return kv.count(key) != 0; }

    // missing keys and malformed values throw ConfigError naming the key
    std::string str(const std::string& key) const;
    std::string str_or(const std::string& key, const std::string& dflt) const;
    double num(const std::string& key) const;
    double num_or(const std::string& key, double dflt) const;
    long long integer(const std::string& key) const;
    long long integer_or(const std::string& key, long long dflt) const;
    std::uint64_t u64_or(const std::string& key, std::uint64_t dflt) const;
    bool flag_or(const std::string& key, bool dflt) const;

    std::uint64_t hash() const; // FNV-1a over the sorted key=value lines
};

struct RunMeta {
    std::string scenario;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string timestamp; // excluded from reproducibility comparisons
};

// "# key: value" lines: version, scenario, config_hash (hex), seed, timestamp
void write_metadata_header(std::ostream& os, const RunMeta& meta);

// t, x, p, xx, xp, pp, energy; Monte Carlo results append the _se columns
void write_timeseries_csv(const std::string& path, const RunMeta& meta,
                          const EvolutionResult& res);
// gamma, alpha, max_re (row-major over the scan grid)
void write_stability_csv(const std::string& path, const RunMeta& meta,
                         const StabilityScan& scan);
// P, X, re, im
void write_char_csv(const std::string& path, const RunMeta& meta,
                    const CharFunction& chi);

} // namespace friction
