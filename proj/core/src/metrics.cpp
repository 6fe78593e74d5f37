#include "beam/metrics.hpp"

#include <cmath>
#include <cstdio>

namespace beam {

Aggregate aggregate(const std::vector<double>& values) {
  require(!values.empty(), "aggregate of zero values");
  Aggregate a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

std::string format_mean_std(const Aggregate& a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f±%.3f", a.mean, a.stddev);
  return buf;
}

namespace {

std::vector<double> collect(const std::vector<SeedMetrics>& seeds, double (Confusion::*fn)() const) {
  std::vector<double> out;
  out.reserve(seeds.size());
  for (const SeedMetrics& s : seeds) out.push_back((s.sample_level.*fn)());
  return out;
}

}  // namespace

Aggregate RunReport::accuracy() const { return aggregate(collect(seeds, &Confusion::accuracy)); }
Aggregate RunReport::sensitivity() const { return aggregate(collect(seeds, &Confusion::sensitivity)); }
Aggregate RunReport::specificity() const { return aggregate(collect(seeds, &Confusion::specificity)); }

std::string RunReport::to_text() const {
  std::string out = "beam-run-report v1\n" + arm_desc + "\n";
  char buf[256];
  for (const SeedMetrics& s : seeds) {
    const Confusion& c = s.sample_level;
    std::snprintf(buf, sizeof(buf),
                  "seed=%llu level=sample accuracy=%.6f sensitivity=%.6f specificity=%.6f tp=%lld fp=%lld "
                  "tn=%lld fn=%lld\n",
                  static_cast<unsigned long long>(s.seed), c.accuracy(), c.sensitivity(), c.specificity(),
                  static_cast<long long>(c.tp), static_cast<long long>(c.fp), static_cast<long long>(c.tn),
                  static_cast<long long>(c.fn));
    out += buf;
    const Confusion& v = s.subject_level;
    std::snprintf(buf, sizeof(buf),
                  "seed=%llu level=subject accuracy=%.6f sensitivity=%.6f specificity=%.6f tp=%lld fp=%lld "
                  "tn=%lld fn=%lld\n",
                  static_cast<unsigned long long>(s.seed), v.accuracy(), v.sensitivity(), v.specificity(),
                  static_cast<long long>(v.tp), static_cast<long long>(v.fp), static_cast<long long>(v.tn),
                  static_cast<long long>(v.fn));
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "aggregate level=sample accuracy=%s sensitivity=%s specificity=%s\n",
                format_mean_std(accuracy()).c_str(), format_mean_std(sensitivity()).c_str(),
                format_mean_std(specificity()).c_str());
  out += buf;
  return out;
}

}  // namespace beam
