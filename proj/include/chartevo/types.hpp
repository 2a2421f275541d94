#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chartevo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user-supplied configuration (overlapping splits, out-of-range rates...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input or persisted file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Violated structural invariant (cycle in a CPPN, shape mismatch...).
class StructuralError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kChartSteps = 32;
inline constexpr std::size_t kChartChannels = 2;
inline constexpr std::size_t kChartInputs = kChartSteps * kChartChannels;

/// Calendar day, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}

  static Date from_ymd(int year, unsigned month, unsigned day);
  /// Parses ISO `YYYY-MM-DD`; throws FormatError.
  static Date parse(std::string_view text);

  std::string to_string() const;
  constexpr std::int32_t days_since_epoch() const { return days_; }
  /// 0 = Monday ... 6 = Sunday.
  int weekday() const;

  constexpr Date operator+(std::int32_t days) const { return Date(days_ + days); }
  constexpr auto operator<=>(const Date&) const = default;

 private:
  std::int32_t days_ = 0;
};

struct DateRange {
  Date first;
  Date last;

  bool contains(Date d) const { return first <= d && d <= last; }
  bool overlaps(const DateRange& other) const {
    return first <= other.last && other.first <= last;
  }
};

/// Daily closes of one instrument.
struct PriceSeries {
  std::string instrument_id;
  std::vector<Date> dates;
  std::vector<double> closes;

  std::size_t size() const { return closes.size(); }
  /// Throws FormatError unless dates strictly increase and every close is positive.
  void validate() const;
  /// Index of `d` in dates, if present.
  std::optional<std::size_t> index_of(Date d) const;
};

enum class Split : std::uint8_t { training = 0, validation = 1, test = 2 };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

/// One preprocessed 32x2 window. values are row-major: values[step * 2 + channel],
/// channel 0 = daily log change, channel 1 = scaled log change to the window's last day.
struct Chart {
  std::array<double, kChartInputs> values{};
  Date entry_date;
  std::map<int, double> returns;
  bool limit_hit = false;
  std::string source_id;

  double value(std::size_t step, std::size_t channel) const {
    return values[step * kChartChannels + channel];
  }
  double& value(std::size_t step, std::size_t channel) {
    return values[step * kChartChannels + channel];
  }
  std::optional<double> forward_return(int k) const;
  /// `source_id@YYYY-MM-DD`, unique within a corpus.
  std::string id() const;

  bool operator==(const Chart&) const = default;
};

struct Dataset {
  Split split = Split::training;
  std::vector<Chart> charts;

  std::size_t size() const { return charts.size(); }
  bool operator==(const Dataset&) const = default;
};

struct Corpus {
  Dataset training{Split::training, {}};
  Dataset validation{Split::validation, {}};
  Dataset test{Split::test, {}};

  const Dataset& at(Split split) const;
  Dataset& at(Split split);
};

struct FitnessReport {
  std::size_t match_count = 0;
  double mean_log_return = 0.0;
  double penalty = 1.0;
  double fitness = 0.0;
  int k = 0;

  bool operator==(const FitnessReport&) const = default;
};

}  // namespace chartevo
