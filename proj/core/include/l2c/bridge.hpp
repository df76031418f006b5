#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2c/feature_table.hpp"
#include "l2c/prediction.hpp"

namespace l2c {

using HyperParams = nlohmann::ordered_json;

inline constexpr int kBridgeProtocolVersion = 1;

/// Environment variable holding the default host command line.
inline constexpr const char* kBridgeHostEnv = "L2C_BRIDGE_HOST";

struct BridgeOptions {
  std::vector<std::string> command;  // argv of the host process, resolved via PATH
  double timeout_seconds = 3600.0;   // whole-session deadline
};

/// Wire encodings of protocol v1. Each returns a single line without the newline.
std::string hello_line(Task task, std::span<const Column> columns, const HyperParams& hparams);
std::string row_line(std::size_t id, std::span<const std::optional<double>> x, std::optional<double> y);
std::string end_line(std::string_view which);  // "train" or "test"

/// Splits a command line on whitespace; single and double quotes group words.
std::vector<std::string> split_command(std::string_view command_line);

/// Runs one session against an external model host over its standard streams:
/// hello -> ready, train rows, end-of-train, test rows (y null), end-of-test,
/// then one prediction per test row in order and a terminal done record.
/// Test-row targets are never sent. Throws Error(Bridge) when the host refuses
/// or exits nonzero, Error(Protocol) for malformed or out-of-order replies and
/// Error(Timeout) when the deadline passes.
std::vector<PredictionRecord> bridge_session(const BridgeOptions& options, Task task,
                                             const HyperParams& hparams, const FeatureTable& train,
                                             const FeatureTable& test);

}  // namespace l2c
