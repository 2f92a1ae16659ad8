#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lsi/errors.hpp"

namespace lsi {

/// Flat `section.key = value` configuration with a closed key registry:
/// unknown keys are rejected, every key has a default, and the fully
/// resolved set can be written back out for reproducibility.
class RunConfig {
public:
    RunConfig(); // registry defaults

    static RunConfig from_file(const std::string& path);
    void apply_file(const std::string& path);
    void apply_override(const std::string& key_equals_value); // "a.b=c"
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_seed(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    void write(const std::string& path) const;
    std::string serialize() const;

    static const std::vector<std::pair<std::string, std::string>>& registry();

private:
    std::map<std::string, std::string> values_;
};

} // namespace lsi
