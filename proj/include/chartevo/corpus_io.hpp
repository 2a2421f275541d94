#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "chartevo/types.hpp"

namespace chartevo {

// Binary corpus layout, little-endian, version 1 (see docs/formats.md):
//
//   magic    8 bytes  "CEVOCORP"
//   version  u32
//   split    u8       0 training, 1 validation, 2 test
//   charts   u64
//   per chart:
//     id_len u32, source_id bytes
//     entry  i32      days since 1970-01-01
//     limit  u8
//     values 64 x f64 row-major (step, channel)
//     nret   u32, then nret x (k i32, r f64)
inline constexpr std::uint32_t kCorpusFormatVersion = 1;

void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& file, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& file);

/// `<dir>/<split>.bin` for each split.
std::filesystem::path dataset_path(const std::filesystem::path& dir, Split split);
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace chartevo
