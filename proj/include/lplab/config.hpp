#pragma once

#include "lplab/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lplab {

/// Schema violation, located by a JSON-pointer-style path such as /field/kind.
class ConfigError : public InvalidArgument {
public:
    ConfigError(std::string pointer, const std::string& message)
        : InvalidArgument(pointer + ": " + message), pointer_(std::move(pointer)) {}
    [[nodiscard]] const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

/// Experiment configuration in the versioned key = value format:
///
///   # lplab-config v1
///   subcommand = rellich-sweep
///   field.kind = trigonometric
///   epsilons = 1, 0.5, 0.25, 0.125
///
/// The header must be the first non-blank line. Other lines starting with #
/// are comments. Keys are dotted paths checked against a fixed schema when
/// parsed, so getters only fail on programming errors.
class Config {
public:
    static Config parse(std::string_view text);
    static Config load(const std::string& path);

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    [[nodiscard]] std::string subcommand() const { return values_.at("subcommand"); }

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_number(const std::string& key, double fallback) const;
    [[nodiscard]] int get_int(const std::string& key, int fallback) const;
    [[nodiscard]] std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
    [[nodiscard]] std::vector<double> get_list(const std::string& key,
                                               const std::vector<double>& fallback) const;
    [[nodiscard]] std::vector<std::string> get_names(const std::string& key,
                                                     const std::vector<std::string>& fallback) const;

    /// Validated override (command line flags).
    void set(const std::string& key, const std::string& value);

    /// Header plus sorted key = value lines; the hash input.
    [[nodiscard]] std::string canonical() const;
    [[nodiscard]] std::uint64_t hash() const { return fnv1a(canonical()); }
    [[nodiscard]] std::string hash_hex() const;

    /// "field.kind" -> "/field/kind"
    static std::string pointer(std::string_view key);
    /// Keys accepted by the schema, sorted.
    static std::vector<std::string> schema_keys();

private:
    std::map<std::string, std::string> values_;
};

inline constexpr std::string_view kConfigHeader = "# lplab-config v1";

}  // namespace lplab
