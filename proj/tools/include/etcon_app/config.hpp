#pragma once

#include "etcon/analysis.hpp"
#include "etcon/simulator.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace etcon::app {

/// Parse or schema failure. `field` is a dotted path ("protocol.alpha"),
/// `line` is set for syntax errors.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message, std::optional<int> line = std::nullopt);

    [[nodiscard]] const std::string& field() const noexcept { return field_; }
    [[nodiscard]] std::optional<int> line() const noexcept { return line_; }

private:
    std::string field_;
    std::optional<int> line_;
};

struct ExperimentConfig {
    std::string name;
    SimConfig sim;
    std::optional<LyapunovParams> lyapunov;
    int trajectory_stride = 1;
    nlohmann::json document;  // after overrides
};

/// "a.b.c=value"; the value is read as JSON when it parses, otherwise as a string.
struct Override {
    std::string path;
    std::string value;
};

[[nodiscard]] Override parse_override(std::string_view spec);

/// Applies overrides to a parsed document; intermediate objects are created
/// as needed (unknown keys are still rejected by the schema afterwards).
void apply_overrides(nlohmann::json& doc, const std::vector<Override>& overrides);

[[nodiscard]] ExperimentConfig parse_config(std::string_view text, const std::vector<Override>& overrides = {});
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path,
                                           const std::vector<Override>& overrides = {});

/// Validated experiment from an already-parsed document.
[[nodiscard]] ExperimentConfig build_experiment(const nlohmann::json& doc);

}  // namespace etcon::app
