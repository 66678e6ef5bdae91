#include "onsd/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "onsd/errors.hpp"
#include "onsd/keyvalue.hpp"

namespace fs = std::filesystem;

namespace onsd {

namespace {

// Next whitespace-delimited header token, skipping `#` comments.
std::string header_token(std::istream& in) {
  std::string tok;
  while (in) {
    const int c = in.get();
    if (c == EOF) break;
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int parse_positive(const std::string& tok, const fs::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used == tok.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw InputError(path.string() + ": malformed PGM header");
}

std::optional<long> embedded_index(const std::string& stem) {
  std::string digits;
  for (char c : stem) {
    if (std::isdigit(static_cast<unsigned char>(c))) digits.push_back(c);
  }
  if (digits.empty()) return std::nullopt;
  return std::stol(digits);
}

}  // namespace

PixelMatrix read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  if (header_token(in) != "P5") {
    throw InputError(path.string() + ": not a binary PGM (P5) file");
  }
  const int width = parse_positive(header_token(in), path);
  const int height = parse_positive(header_token(in), path);
  const int maxval = parse_positive(header_token(in), path);
  if (maxval != 255) {
    throw InputError(path.string() + ": only 8-bit PGM (maxval 255) is supported");
  }
  PixelMatrix pixels(height, width);
  in.read(reinterpret_cast<char*>(pixels.data()),
          static_cast<std::streamsize>(pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(pixels.size())) {
    throw InputError(path.string() + ": truncated pixel data");
  }
  return pixels;
}

void write_pgm(const fs::path& path, const PixelMatrix& pixels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "P5\n" << pixels.cols() << ' ' << pixels.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

SequenceMetadata read_metadata(const fs::path& path) {
  SequenceMetadata meta;
  try {
    const KeyValues kv = read_key_values(path);
    double v = 0.0;
    if (kv.count("mm_per_pixel")) {
      read_value(kv, "mm_per_pixel", v);
      meta.mm_per_pixel = v;
    }
    if (kv.count("frame_rate")) {
      read_value(kv, "frame_rate", v);
      meta.frame_rate = v;
    }
  } catch (const ConfigError& e) {
    throw InputError(std::string("metadata: ") + e.what());
  }
  return meta;
}

void write_metadata(const fs::path& path, const SequenceMetadata& meta) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  if (meta.mm_per_pixel) out << "mm_per_pixel=" << format_double(*meta.mm_per_pixel) << '\n';
  if (meta.frame_rate) out << "frame_rate=" << format_double(*meta.frame_rate) << '\n';
}

std::string frame_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.pgm", index);
  return buf;
}

VideoSequence load_sequence(const fs::path& directory,
                            std::optional<fs::path> metadata) {
  if (!fs::is_directory(directory)) {
    throw InputError(directory.string() + " is not a directory");
  }
  std::vector<std::pair<long, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".pgm") continue;
    const auto index = embedded_index(entry.path().stem().string());
    if (!index) {
      throw InputError(entry.path().string() + ": frame name carries no index");
    }
    files.emplace_back(*index, entry.path());
  }
  if (files.empty()) throw InputError(directory.string() + " contains no PGM frames");
  std::sort(files.begin(), files.end());
  for (std::size_t i = 1; i < files.size(); ++i) {
    if (files[i].first == files[i - 1].first) {
      throw InputError("duplicate frame index " + std::to_string(files[i].first));
    }
  }

  SequenceMetadata meta;
  const fs::path meta_path = metadata.value_or(directory / "meta.txt");
  if (fs::exists(meta_path)) {
    meta = read_metadata(meta_path);
  } else if (metadata) {
    throw InputError("metadata file " + meta_path.string() + " not found");
  }

  std::vector<GrayFrame> frames;
  frames.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    PixelMatrix pixels = read_pgm(files[i].second);
    if (!frames.empty() && (pixels.cols() != frames.front().width() ||
                            pixels.rows() != frames.front().height())) {
      throw InputError("frame " + std::to_string(i) + " (" +
                       files[i].second.filename().string() + ") is " +
                       std::to_string(pixels.cols()) + "x" + std::to_string(pixels.rows()) +
                       ", expected " + std::to_string(frames.front().width()) + "x" +
                       std::to_string(frames.front().height()));
    }
    try {
      frames.emplace_back(std::move(pixels), meta.mm_per_pixel);
    } catch (const std::invalid_argument& e) {
      throw InputError("frame " + std::to_string(i) + " (" +
                       files[i].second.filename().string() + "): " + e.what());
    }
  }
  try {
    return VideoSequence(std::move(frames), meta.frame_rate);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

void write_sequence(const VideoSequence& seq, const fs::path& directory) {
  fs::create_directories(directory);
  for (int i = 0; i < seq.size(); ++i) {
    write_pgm(directory / frame_file_name(i), seq[i].pixels());
  }
  write_metadata(directory / "meta.txt", {seq.mm_per_pixel(), seq.frame_rate()});
}

}  // namespace onsd
