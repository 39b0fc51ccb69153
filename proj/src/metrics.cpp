#include "culturesim/metrics.hpp"

#include <algorithm>

namespace culturesim {

AggregatedSeries aggregate(const std::vector<MetricValues>& per_seed) {
  std::size_t length = 0;
  for (const auto& series : per_seed) length = std::max(length, series.size());

  AggregatedSeries out;
  out.mean.resize(length);
  out.std.resize(length);
  out.count.assign(length, 0);
  for (std::size_t g = 0; g < length; ++g) {
    double sum = 0.0;
    int n = 0;
    for (const auto& series : per_seed) {
      if (g < series.size() && series[g]) {
        sum += *series[g];
        ++n;
      }
    }
    out.count[g] = n;
    if (n == 0) continue;
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& series : per_seed) {
      if (g < series.size() && series[g]) sq += (*series[g] - mean) * (*series[g] - mean);
    }
    out.mean[g] = mean;
    out.std[g] = std::sqrt(sq / n);
  }
  return out;
}

}  // namespace culturesim
