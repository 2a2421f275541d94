#include "chartevo/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "chartevo/parallel.hpp"

namespace chartevo {

const DateRange& SplitRanges::at(Split split) const {
  switch (split) {
    case Split::training: return training;
    case Split::validation: return validation;
    case Split::test: return test;
  }
  throw ConfigError("unknown split");
}

std::optional<Split> SplitRanges::classify(Date d) const {
  for (Split s : {Split::training, Split::validation, Split::test}) {
    if (at(s).contains(d)) return s;
  }
  return std::nullopt;
}

void PreprocessConfig::validate() const {
  if (smoothing_window < 1) throw ConfigError("smoothing_window must be >= 1");
  if (downsample_factor < 1) throw ConfigError("downsample_factor must be >= 1");
  if (slice_window < 1 || slice_window % downsample_factor != 0) {
    throw ConfigError("slice_window must be a positive multiple of downsample_factor");
  }
  if (slice_window / downsample_factor != static_cast<int>(kChartSteps)) {
    throw ConfigError("slice_window / downsample_factor must equal " +
                      std::to_string(kChartSteps));
  }
  if (!std::isfinite(channel2_scale)) throw ConfigError("channel2_scale must be finite");
  for (int k : horizons) {
    if (k < 1) throw ConfigError("horizons must be positive");
  }
  if (!(limit_threshold > 0.0)) throw ConfigError("limit_threshold must be positive");
  const Split order[] = {Split::training, Split::validation, Split::test};
  for (Split s : order) {
    if (split_ranges.at(s).last < split_ranges.at(s).first) {
      throw ConfigError(std::string(to_string(s)) + " split range is empty (last < first)");
    }
  }
  for (int i = 0; i < 2; ++i) {
    const DateRange& a = split_ranges.at(order[i]);
    const DateRange& b = split_ranges.at(order[i + 1]);
    if (a.overlaps(b) || !(a.last < b.first)) {
      throw ConfigError("split ranges must be disjoint and ordered training < validation < test");
    }
  }
  if (split_ranges.training.overlaps(split_ranges.test)) {
    throw ConfigError("split ranges must be disjoint");
  }
}

std::vector<double> smooth(std::span<const double> closes, int window) {
  if (window < 1) throw ConfigError("smoothing window must be >= 1");
  const auto w = static_cast<std::size_t>(window);
  if (closes.size() < w) {
    spdlog::warn("series of length {} is shorter than smoothing window {}", closes.size(), w);
    return {};
  }
  std::vector<double> out(closes.size() - w + 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = i; j < i + w; ++j) sum += closes[j];
    out[i] = sum / static_cast<double>(w);
  }
  return out;
}

PriceSeries smooth(const PriceSeries& series, int window) {
  PriceSeries out;
  out.instrument_id = series.instrument_id;
  out.closes = smooth(std::span<const double>(series.closes), window);
  if (!out.closes.empty()) {
    out.dates.assign(series.dates.begin() + (window - 1), series.dates.end());
  }
  return out;
}

std::vector<std::span<const double>> slice(std::span<const double> smoothed, int window) {
  std::vector<std::span<const double>> out;
  if (window < 1) throw ConfigError("slice window must be >= 1");
  const auto s = static_cast<std::size_t>(window);
  if (smoothed.size() < s) return out;
  out.reserve(smoothed.size() - s + 1);
  for (std::size_t start = 0; start + s <= smoothed.size(); ++start) {
    out.push_back(smoothed.subspan(start, s));
  }
  return out;
}

Chart make_chart(std::span<const double> window, double preceding, const PreprocessConfig& config) {
  const auto s = window.size();
  const auto factor = static_cast<std::size_t>(config.downsample_factor);
  if (factor == 0 || s % factor != 0 || s / factor != kChartSteps) {
    throw ConfigError("window of " + std::to_string(s) + " days does not downsample to " +
                      std::to_string(kChartSteps) + " steps");
  }
  if (!(preceding > 0.0)) throw FormatError("non-positive price preceding chart window");
  for (double p : window) {
    if (!(p > 0.0) || !std::isfinite(p)) throw FormatError("non-positive price in chart window");
  }
  const double last = window[s - 1];
  std::vector<double> daily(s);
  std::vector<double> to_last(s);
  for (std::size_t i = 0; i < s; ++i) {
    const double prev = i == 0 ? preceding : window[i - 1];
    daily[i] = std::log(window[i] / prev);
    to_last[i] = std::log(window[i] / last);
  }
  Chart chart;
  for (std::size_t b = 0; b < kChartSteps; ++b) {
    double d = 0.0;
    double l = 0.0;
    for (std::size_t j = b * factor; j < (b + 1) * factor; ++j) {
      d += daily[j];
      l += to_last[j];
    }
    chart.value(b, 0) = d / static_cast<double>(factor);
    chart.value(b, 1) = (l / static_cast<double>(factor)) * config.channel2_scale;
  }
  return chart;
}

Chart label_returns(Chart chart, const PriceSeries& raw, std::span<const int> horizons) {
  const auto e = raw.index_of(chart.entry_date);
  if (!e) {
    throw FormatError("entry date " + chart.entry_date.to_string() + " not in series '" +
                      raw.instrument_id + "'");
  }
  chart.returns.clear();
  for (int k : horizons) {
    const std::size_t target = *e + static_cast<std::size_t>(k);
    if (target < raw.size()) {
      chart.returns[k] = std::log(raw.closes[target] / raw.closes[*e]);
    }
  }
  return chart;
}

Chart flag_limit_hit(Chart chart, const PriceSeries& raw, double threshold) {
  const auto e = raw.index_of(chart.entry_date);
  if (!e || *e == 0) {
    chart.limit_hit = false;
    return chart;
  }
  const double change = (raw.closes[*e] - raw.closes[*e - 1]) / raw.closes[*e - 1];
  chart.limit_hit = change >= threshold;
  return chart;
}

std::vector<Chart> build_series_charts(const PriceSeries& raw, const PreprocessConfig& config,
                                       SeriesDiagnostics* diagnostics) {
  raw.validate();
  SeriesDiagnostics diag;
  std::vector<Chart> charts;
  const std::vector<double> smoothed = smooth(std::span<const double>(raw.closes),
                                              config.smoothing_window);
  const auto windows = slice(smoothed, config.slice_window);
  diag.windows = windows.size();
  const auto w = static_cast<std::size_t>(config.smoothing_window);
  const auto s = static_cast<std::size_t>(config.slice_window);
  for (std::size_t start = 0; start < windows.size(); ++start) {
    if (start == 0) {
      ++diag.dropped_no_history;
      continue;
    }
    // smoothed index j corresponds to raw index j + w - 1
    const std::size_t entry = start + s - 1 + w - 1 + 1;
    if (entry >= raw.size()) {
      ++diag.dropped_no_entry;
      continue;
    }
    try {
      Chart chart = make_chart(windows[start], smoothed[start - 1], config);
      chart.entry_date = raw.dates[entry];
      chart.source_id = raw.instrument_id;
      chart = label_returns(std::move(chart), raw, config.horizons);
      chart = flag_limit_hit(std::move(chart), raw, config.limit_threshold);
      charts.push_back(std::move(chart));
    } catch (const FormatError& e) {
      ++diag.rejected;
      spdlog::warn("{}: chart at {} rejected: {}", raw.instrument_id,
                   raw.dates[entry].to_string(), e.what());
    }
  }
  diag.charts = charts.size();
  if (diagnostics) *diagnostics = diag;
  return charts;
}

Corpus build_corpus(std::span<const PriceSeries> series_set, const PreprocessConfig& config,
                    std::size_t workers) {
  config.validate();
  std::set<std::string> ids;
  for (const auto& series : series_set) {
    if (!ids.insert(series.instrument_id).second) {
      throw FormatError("duplicate instrument id '" + series.instrument_id + "'");
    }
  }
  std::vector<std::vector<Chart>> per_series(series_set.size());
  parallel_for(series_set.size(), workers, [&](std::size_t i) {
    per_series[i] = build_series_charts(series_set[i], config);
  });

  std::vector<std::size_t> order(series_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return series_set[a].instrument_id < series_set[b].instrument_id;
  });

  Corpus corpus;
  std::size_t dropped = 0;
  for (std::size_t i : order) {
    for (Chart& chart : per_series[i]) {
      if (auto split = config.split_ranges.classify(chart.entry_date)) {
        corpus.at(*split).charts.push_back(std::move(chart));
      } else {
        ++dropped;
      }
    }
  }
  spdlog::info("corpus: {} training, {} validation, {} test charts ({} outside split ranges)",
               corpus.training.size(), corpus.validation.size(), corpus.test.size(), dropped);
  return corpus;
}

}  // namespace chartevo
