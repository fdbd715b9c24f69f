#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>

#include "peatwht/fwht.hpp"
#include "peatwht/pipeline.hpp"
#include "peatwht/rng.hpp"

namespace peatwht {

namespace {

using Clock = std::chrono::steady_clock;

// Repeatable timing of one callable: reset() runs untimed before every
// sample, and each sample loops `calls` invocations.
struct Timer {
  std::function<void()> fn;
  std::function<void()> reset;
  std::size_t calls = 1;
  std::vector<double> samples;

  double sample() {
    reset();
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < calls; ++i) fn();
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }
  // Doubles calls until a sample lasts about five milliseconds.
  void calibrate(std::size_t max_calls) {
    while (sample() < 5e-3 && calls < max_calls) calls = std::min(2 * calls, max_calls);
  }
  void record() { samples.push_back(sample() / static_cast<double>(calls)); }
  double median() {
    std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2),
                     samples.end());
    return samples[samples.size() / 2];
  }
};

}  // namespace

BenchReport bench(const std::vector<std::size_t>& sizes, int repeats) {
  for (const std::size_t n : sizes) {
    if (n > kMaxBenchSize) throw Error(ErrorCode::SizeTooLarge, "size " + std::to_string(n) + " exceeds 2^22");
    log2_exact(n);
  }
  if (repeats < 1) repeats = 1;
  Rng rng(12345);
  std::vector<std::vector<double>> sources, buffers;
  std::vector<Timer> fast, naive;
  sources.reserve(sizes.size());
  buffers.reserve(sizes.size());
  for (const std::size_t n : sizes) {
    auto& source = sources.emplace_back(n);
    for (auto& v : source) v = rng.uniform(-1.0, 1.0);
    auto& data = buffers.emplace_back(source);
    // Each call multiplies the norm by sqrt(n); keep the loop far from
    // overflow.
    const std::size_t max_calls =
        n == 1 ? std::size_t{1} << 20
               : std::max<std::size_t>(1, static_cast<std::size_t>(2000.0 / std::log2(static_cast<double>(n))));
    Timer& t = fast.emplace_back(Timer{[&data] { fwht_inplace(std::span<double>(data)); },
                                       [&data, &source] { std::copy(source.begin(), source.end(), data.begin()); }});
    t.calibrate(max_calls);
    if (n <= kMaxNaiveBenchSize) {
      Timer& u = naive.emplace_back(Timer{[&source] { naive_hadamard_apply(source); }, [] {}});
      u.calibrate(std::size_t{1} << 20);
    }
  }
  // Sizes are sampled round-robin so machine noise hits them alike.
  for (int r = 0; r < repeats; ++r) {
    for (auto& t : fast) t.record();
    for (auto& u : naive) u.record();
  }
  BenchReport report;
  for (std::size_t i = 0, k = 0; i < sizes.size(); ++i) {
    BenchRow row;
    row.n = sizes[i];
    row.fwht_seconds = fast[i].median();
    if (sizes[i] <= kMaxNaiveBenchSize) row.naive_seconds = naive[k++].median();
    report.rows.push_back(row);
  }
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const BenchRow& a = report.rows[i - 1];
    const BenchRow& b = report.rows[i];
    if (a.n >= (std::size_t{1} << 14) && b.n == 2 * a.n) {
      report.max_doubling_ratio = std::max(report.max_doubling_ratio, b.fwht_seconds / a.fwht_seconds);
    }
  }
  return report;
}

nlohmann::json to_json(const BenchReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json j = {{"n", r.n}, {"fwht_seconds", r.fwht_seconds}};
    if (r.naive_seconds) {
      j["naive_seconds"] = *r.naive_seconds;
      j["speedup"] = *r.naive_seconds / r.fwht_seconds;
    }
    rows.push_back(j);
  }
  return {{"rows", rows}, {"max_doubling_ratio_from_2^14", report.max_doubling_ratio}};
}

}  // namespace peatwht
