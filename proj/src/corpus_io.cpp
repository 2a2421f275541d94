#include "chartevo/corpus_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace chartevo {

static_assert(std::endian::native == std::endian::little,
              "corpus files are written in native byte order, which must be little-endian");

namespace {

constexpr char kMagic[8] = {'C', 'E', 'V', 'O', 'C', 'O', 'R', 'P'};
constexpr std::uint32_t kMaxIdLength = 1u << 16;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw FormatError(std::string("corpus truncated while reading ") + what);
  }
  return value;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& dataset) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCorpusFormatVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(dataset.split));
  put<std::uint64_t>(out, dataset.charts.size());
  for (const Chart& chart : dataset.charts) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(chart.source_id.size()));
    out.write(chart.source_id.data(), static_cast<std::streamsize>(chart.source_id.size()));
    put<std::int32_t>(out, chart.entry_date.days_since_epoch());
    put<std::uint8_t>(out, chart.limit_hit ? 1 : 0);
    out.write(reinterpret_cast<const char*>(chart.values.data()),
              static_cast<std::streamsize>(sizeof(double) * chart.values.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(chart.returns.size()));
    for (const auto& [k, r] : chart.returns) {
      put<std::int32_t>(out, k);
      put<double>(out, r);
    }
  }
  if (!out) throw FormatError("failed writing corpus stream");
}

Dataset read_dataset(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw FormatError("corrupt corpus header: bad magic");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kCorpusFormatVersion) {
    throw FormatError("unsupported corpus format version " + std::to_string(version));
  }
  const auto split_code = get<std::uint8_t>(in, "split");
  if (split_code > 2) throw FormatError("corrupt corpus header: bad split code");
  Dataset dataset;
  dataset.split = static_cast<Split>(split_code);
  const auto count = get<std::uint64_t>(in, "chart count");
  for (std::uint64_t i = 0; i < count; ++i) {
    Chart chart;
    const auto id_len = get<std::uint32_t>(in, "id length");
    if (id_len > kMaxIdLength) throw FormatError("corrupt corpus: implausible id length");
    chart.source_id.resize(id_len);
    if (!in.read(chart.source_id.data(), id_len)) throw FormatError("corpus truncated in id");
    chart.entry_date = Date(get<std::int32_t>(in, "entry date"));
    chart.limit_hit = get<std::uint8_t>(in, "limit flag") != 0;
    if (!in.read(reinterpret_cast<char*>(chart.values.data()),
                 static_cast<std::streamsize>(sizeof(double) * chart.values.size()))) {
      throw FormatError("corpus truncated in chart values");
    }
    const auto nret = get<std::uint32_t>(in, "return count");
    if (nret > 1024) throw FormatError("corrupt corpus: implausible return count");
    for (std::uint32_t j = 0; j < nret; ++j) {
      const auto k = get<std::int32_t>(in, "horizon");
      chart.returns[k] = get<double>(in, "return");
    }
    dataset.charts.push_back(std::move(chart));
  }
  return dataset;
}

void save_dataset(const std::filesystem::path& file, const Dataset& dataset) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + file.string() + "' for writing");
  write_dataset(out, dataset);
}

Dataset load_dataset(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open corpus file '" + file.string() + "'");
  try {
    return read_dataset(in);
  } catch (const FormatError& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

std::filesystem::path dataset_path(const std::filesystem::path& dir, Split split) {
  return dir / (std::string(to_string(split)) + ".bin");
}

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  for (Split s : {Split::training, Split::validation, Split::test}) {
    save_dataset(dataset_path(dir, s), corpus.at(s));
  }
}

Corpus load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw FormatError("corpus directory '" + dir.string() + "' does not exist");
  }
  Corpus corpus;
  for (Split s : {Split::training, Split::validation, Split::test}) {
    corpus.at(s) = load_dataset(dataset_path(dir, s));
    if (corpus.at(s).split != s) {
      throw FormatError(dataset_path(dir, s).string() + ": split tag does not match file name");
    }
  }
  return corpus;
}

}  // namespace chartevo
