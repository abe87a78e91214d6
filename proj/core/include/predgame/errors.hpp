#pragma once

#include <stdexcept>
#include <string>

namespace predgame {

// Error taxonomy used across the workbench. The CLI maps these onto its
// documented exit codes (config -> 2, unsupported -> 3, missing artifact -> 4,
// everything else -> 1).

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Step called on a finished episode, mismatched agent counts, etc.
struct ProtocolError : std::runtime_error {
  explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InsufficientDataError : std::runtime_error {
  explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnsupportedPairingError : std::runtime_error {
  explicit UnsupportedPairingError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ArtifactNotFoundError : std::runtime_error {
  explicit ArtifactNotFoundError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace predgame
