#pragma once

#include <stdexcept>
#include <string>

#include "entro/scheme.hpp"

namespace entro::config {

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& what)
        : std::runtime_error("config line " + std::to_string(line_) + ": " + what),
          line(line_) {}
};

/// Parses the flat `key = value` / `[section]` config format and returns
/// a fully validated SchemeConfig. Unknown keys are rejected; validation
/// errors name the violated condition.
scheme::SchemeConfig parse_text(const std::string& text);
scheme::SchemeConfig parse_file(const std::string& path);

/// Emits the config in canonical section order; parse(serialize(c)) == c.
std::string serialize(const scheme::SchemeConfig& cfg);

}  // namespace entro::config
