#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace onsd {

/// Bad or unreadable input data (files, dimensions, malformed CSV).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter or configuration value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A processing stage could not produce a result. Carries the stage name and,
/// when known, the frame being processed.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& what,
                std::optional<int> frame = std::nullopt)
      : std::runtime_error(format(stage, what, frame)),
        stage_(std::move(stage)),
        message_(what),
        frame_(frame) {}

  const std::string& stage() const noexcept { return stage_; }
  /// The message without the stage and frame prefix.
  const std::string& message() const noexcept { return message_; }
  std::optional<int> frame() const noexcept { return frame_; }

 private:
  static std::string format(const std::string& stage, const std::string& what,
                            std::optional<int> frame) {
    std::string s = "[" + stage + "]";
    if (frame) s += " frame " + std::to_string(*frame) + ":";
    return s + " " + what;
  }

  std::string stage_;
  std::string message_;
  std::optional<int> frame_;
};

}  // namespace onsd
