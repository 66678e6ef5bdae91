#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "onsd/image.hpp"

namespace onsd {

struct SequenceMetadata {
  std::optional<double> mm_per_pixel;
  std::optional<double> frame_rate;
};

/// Binary (P5) portable graymap, maxval 255. Throws InputError.
PixelMatrix read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const PixelMatrix& pixels);

/// Parses `key=value` lines (`#` comments allowed). Unknown keys are ignored.
SequenceMetadata read_metadata(const std::filesystem::path& path);
void write_metadata(const std::filesystem::path& path, const SequenceMetadata& meta);

/// Loads every `*.pgm` in `directory`, ordered by the integer embedded in the
/// file name. `metadata` defaults to `directory/meta.txt`; when that file is
/// absent the sequence has no calibration. Throws InputError naming the
/// offending frame.
VideoSequence load_sequence(const std::filesystem::path& directory,
                            std::optional<std::filesystem::path> metadata = std::nullopt);

/// Writes `frame_NNNN.pgm` files plus `meta.txt`.
void write_sequence(const VideoSequence& seq, const std::filesystem::path& directory);

std::string frame_file_name(int index);

}  // namespace onsd
