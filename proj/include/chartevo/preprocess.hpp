#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chartevo/types.hpp"

namespace chartevo {

struct SplitRanges {
  DateRange training{Date::from_ymd(2012, 1, 1), Date::from_ymd(2014, 12, 31)};
  DateRange validation{Date::from_ymd(2015, 1, 1), Date::from_ymd(2015, 12, 31)};
  DateRange test{Date::from_ymd(2016, 1, 1), Date::from_ymd(2016, 12, 31)};

  const DateRange& at(Split split) const;
  /// Split whose range contains `d`, if any.
  std::optional<Split> classify(Date d) const;
};

struct PreprocessConfig {
  int smoothing_window = 24;
  int slice_window = 128;
  int downsample_factor = 4;
  double channel2_scale = 1.0 / 32.0;
  std::vector<int> horizons{20, 50, 100};
  /// Entry-day close-to-close change at or above this marks the chart untradeable.
  double limit_threshold = 0.295;
  SplitRanges split_ranges;

  /// Throws ConfigError. Also requires slice_window / downsample_factor == 32.
  void validate() const;
};

/// Trailing moving average. Output has closes.size() - window + 1 entries; empty
/// (with a logged warning) when the input is shorter than the window.
std::vector<double> smooth(std::span<const double> closes, int window);

/// Same as above; the smoothed value at index j is dated by the last day of its window.
PriceSeries smooth(const PriceSeries& series, int window);

/// All length-`window` slices with stride one day: exactly l - s + 1 of them.
std::vector<std::span<const double>> slice(std::span<const double> smoothed, int window);

/// Builds the 32x2 chart matrix from one smoothed window. `preceding` is the smoothed
/// value of the day before the window. Throws FormatError on non-positive prices.
Chart make_chart(std::span<const double> window, double preceding, const PreprocessConfig& config);

/// Sets return[k] = ln(close[e+k] / close[e]) on raw closes, e = chart.entry_date.
/// Horizons extending past the series are left absent. Throws FormatError if the entry
/// date is not part of the series.
Chart label_returns(Chart chart, const PriceSeries& raw, std::span<const int> horizons);

/// limit_hit = raw change from the day before entry to the entry day >= threshold.
Chart flag_limit_hit(Chart chart, const PriceSeries& raw, double threshold);

struct SeriesDiagnostics {
  std::size_t windows = 0;
  std::size_t charts = 0;
  std::size_t dropped_no_history = 0;
  std::size_t dropped_no_entry = 0;
  std::size_t rejected = 0;
};

/// Every chart of one instrument in date order, independent of split assignment.
std::vector<Chart> build_series_charts(const PriceSeries& raw, const PreprocessConfig& config,
                                       SeriesDiagnostics* diagnostics = nullptr);

/// Preprocesses every series and assigns charts to splits by entry date. Charts outside
/// all ranges are dropped. Output order is stable: instrument_id, then entry date.
Corpus build_corpus(std::span<const PriceSeries> series_set, const PreprocessConfig& config,
                    std::size_t workers = 1);

}  // namespace chartevo
