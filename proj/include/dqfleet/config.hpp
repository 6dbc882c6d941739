#ifndef DQFLEET_CONFIG_HPP
#define DQFLEET_CONFIG_HPP

#include <map>
#include <string>

#include "dqfleet/sim_harness.hpp"

namespace dqf {

/// Parses a flat key=value config ('#' starts a comment). Overrides win
/// over file values. Unknown keys raise an error naming the nearest valid
/// key; bad values raise an error naming the key. All keys are optional.
ScenarioConfig parse_config(const std::string& text,
                            const std::map<std::string, std::string>& overrides);

ScenarioConfig load_config(const std::string& path,
                           const std::map<std::string, std::string>& overrides);

/// Serializes a fully-resolved config; the output is itself a valid config
/// file, so re-running a manifest reproduces the run bit-identically.
std::string manifest_text(const ScenarioConfig& config, const std::string& out_dir,
                          const std::string& version);

/// Sorted list of recognized keys (for --help and error messages).
std::string documented_keys();

}  // namespace dqf

#endif  // DQFLEET_CONFIG_HPP
