#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pnsim/detector.hpp"
#include "pnsim/histogram.hpp"
#include "pnsim/source.hpp"

// Pulsed coincidence experiment: one pair source feeding a trigger detector
// and an idler (monitor) detector. The harness shards pulses into fixed-size
// blocks, each driven by its own derived random stream, so results are
// identical for any worker count and merge exactly.

namespace pnsim {

/// Pulses per shard. Fixed: changing this changes which stream generates
/// which pulse and therefore the sampled records.
inline constexpr std::uint64_t kPulseBlockSize = 16384;

struct ScaWindow {
  int label = 0;
  double low = 0.0;
  double high = 0.0;
};

/// Sorted, pairwise-disjoint single-channel-analyzer windows. Heights are
/// classified against half-open intervals [low, high).
class ScaWindows {
 public:
  ScaWindows() = default;

  explicit ScaWindows(std::vector<ScaWindow> wins) : wins_(std::move(wins)) {
    std::sort(wins_.begin(), wins_.end(),
              [](const ScaWindow& a, const ScaWindow& b) { return a.low < b.low; });
    for (std::size_t i = 0; i < wins_.size(); ++i) {
      const auto& w = wins_[i];
      if (!(w.low < w.high))
        throw std::invalid_argument("ScaWindows: window " + std::to_string(w.label) +
                                    " has low >= high");
      if (w.label <= 0)
        throw std::invalid_argument("ScaWindows: labels must be positive");
      if (i > 0 && wins_[i - 1].high > w.low)
        throw std::invalid_argument("ScaWindows: windows " + std::to_string(wins_[i - 1].label) +
                                    " and " + std::to_string(w.label) + " overlap");
    }
  }

  std::optional<int> classify(PulseHeight h) const {
    for (const auto& w : wins_)
      if (h.value >= w.low && h.value < w.high) return w.label;
    return std::nullopt;
  }

  int max_label() const {
    int m = 0;
    for (const auto& w : wins_) m = std::max(m, w.label);
    return m;
  }

  bool empty() const { return wins_.empty(); }
  const std::vector<ScaWindow>& windows() const { return wins_; }

 private:
  std::vector<ScaWindow> wins_;
};

/// Windows centered at n*G for n = 1..n_max with half-width min(G/2, 3*sigma_n).
/// A noise-free detector (sigma_n == 0) gets the full +-G/2 window; the
/// min() cap keeps neighboring windows disjoint in every case.
inline ScaWindows default_windows(const DetectorConfig& cfg, int n_max) {
  cfg.validate();
  if (n_max < 1) throw std::invalid_argument("default_windows: n_max must be >= 1");
  std::vector<ScaWindow> wins;
  wins.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    const double sigma = cfg.peak_sigma(n);
    const double half = sigma > 0.0 ? std::min(cfg.gain / 2.0, 3.0 * sigma) : cfg.gain / 2.0;
    wins.push_back(ScaWindow{n, n * cfg.gain - half, n * cfg.gain + half});
  }
  return ScaWindows(std::move(wins));
}

enum class TriggerClassification { pulse_height, detected_count };

inline std::string to_string(TriggerClassification c) {
  return c == TriggerClassification::pulse_height ? "pulse_height" : "detected_count";
}

/// Bin geometry for the analog-height histograms.
struct HistogramSpec {
  double low = -2.0;
  double width = 0.02;
  int nbins = 500;

  void validate() const {
    if (!(width > 0.0)) throw std::invalid_argument("HistogramSpec: width must be > 0");
    if (nbins <= 0) throw std::invalid_argument("HistogramSpec: nbins must be > 0");
  }

  Histogram make() const { return Histogram(low, width, nbins); }

  /// Default: bins of G/50 covering [-2 G, (n_max + 4) G].
  static HistogramSpec for_detector(const DetectorConfig& cfg, int n_max) {
    HistogramSpec h;
    h.width = cfg.gain / 50.0;
    h.low = -2.0 * cfg.gain;
    h.nbins = 50 * (n_max + 6);
    return h;
  }
};

struct ExperimentConfig {
  SourceModel source;
  DetectorConfig trigger;
  DetectorConfig monitor;
  ScaWindows windows;
  TriggerClassification classification = TriggerClassification::pulse_height;
  std::uint64_t num_pulses = 0;
  double rep_rate_hz = 45000.0;
  std::uint64_t seed = 1;
  HistogramSpec hist;

  void validate() const {
    source.validate();
    trigger.validate();
    monitor.validate();
    hist.validate();
    if (windows.empty()) throw std::invalid_argument("ExperimentConfig: no SCA windows");
    if (!(rep_rate_hz > 0.0)) throw std::invalid_argument("ExperimentConfig: rep_rate_hz must be > 0");
  }
};

/// Everything recorded about one pulse.
struct PulseRecord {
  int true_pairs = 0;
  int trigger_detected = 0;
  double trigger_height = 0.0;
  std::optional<int> trigger_label;
  int idler_detected = 0;
  double idler_area = 0.0;

  bool operator==(const PulseRecord&) const = default;
};

struct CoincidenceCounts {
  std::uint64_t singles_1 = 0;     // pulses where the trigger fired
  std::uint64_t singles_2 = 0;     // pulses where the idler fired
  std::uint64_t coincidences = 0;  // pulses where both fired
  std::uint64_t pulses = 0;

  void merge(const CoincidenceCounts& o) {
    singles_1 += o.singles_1;
    singles_2 += o.singles_2;
    coincidences += o.coincidences;
    pulses += o.pulses;
  }
};

struct ExperimentSummary {
  std::uint64_t num_pulses = 0;
  std::uint64_t unlabeled = 0;
  std::vector<std::uint64_t> label_counts;  // index = label, [0] unused
  std::vector<std::uint64_t> trigger_counts;  // detected-count pmf, index = count
  std::vector<std::uint64_t> idler_counts;
  std::vector<std::vector<std::uint64_t>> idler_counts_by_label;  // [label][count]
  Histogram trigger_height;
  Histogram idler_area;
  std::vector<Histogram> idler_area_by_label;  // [label], [0] unused
  CoincidenceCounts coincidences;

  static ExperimentSummary make(const ExperimentConfig& cfg) {
    ExperimentSummary s;
    const int n_max = cfg.windows.max_label();
    s.label_counts.assign(static_cast<std::size_t>(n_max) + 1, 0);
    s.idler_counts_by_label.assign(static_cast<std::size_t>(n_max) + 1, {});
    s.trigger_height = cfg.hist.make();
    s.idler_area = cfg.hist.make();
    s.idler_area_by_label.assign(static_cast<std::size_t>(n_max) + 1, cfg.hist.make());
    return s;
  }

  void merge(const ExperimentSummary& o) {
    num_pulses += o.num_pulses;
    unlabeled += o.unlabeled;
    merge_counts(label_counts, o.label_counts);
    merge_counts(trigger_counts, o.trigger_counts);
    merge_counts(idler_counts, o.idler_counts);
    if (o.idler_counts_by_label.size() != idler_counts_by_label.size())
      throw std::invalid_argument("ExperimentSummary::merge: label dimension mismatch");
    for (std::size_t l = 0; l < idler_counts_by_label.size(); ++l)
      merge_counts(idler_counts_by_label[l], o.idler_counts_by_label[l]);
    trigger_height.merge(o.trigger_height);
    idler_area.merge(o.idler_area);
    if (o.idler_area_by_label.size() != idler_area_by_label.size())
      throw std::invalid_argument("ExperimentSummary::merge: label dimension mismatch");
    for (std::size_t l = 0; l < idler_area_by_label.size(); ++l)
      idler_area_by_label[l].merge(o.idler_area_by_label[l]);
    coincidences.merge(o.coincidences);
  }

 private:
  static void merge_counts(std::vector<std::uint64_t>& into,
                           const std::vector<std::uint64_t>& from) {
    if (from.size() > into.size()) into.resize(from.size(), 0);
    for (std::size_t i = 0; i < from.size(); ++i) into[i] += from[i];
  }
};

/// Simulates one pulse: a single pair count feeds both detector chains
/// independently; the trigger height is classified into a window label.
inline PulseRecord run_pulse(const ExperimentConfig& cfg, RngStream& rng) {
  PulseRecord r;
  r.true_pairs = sample_pair_count(cfg.source, rng);
  r.trigger_detected = detect_count(r.true_pairs, cfg.trigger, rng);
  r.trigger_height = pulse_height(r.trigger_detected, cfg.trigger, rng).value;
  r.idler_detected = detect_count(r.true_pairs, cfg.monitor, rng);
  r.idler_area = pulse_height(r.idler_detected, cfg.monitor, rng).value;
  if (cfg.classification == TriggerClassification::pulse_height) {
    r.trigger_label = cfg.windows.classify(PulseHeight{r.trigger_height});
  } else {
    if (r.trigger_detected >= 1 && r.trigger_detected <= cfg.windows.max_label())
      r.trigger_label = r.trigger_detected;
  }
  return r;
}

struct RunOptions {
  int workers = 1;
  bool collect_records = false;
};

struct ExperimentResult {
  ExperimentSummary summary;
  std::vector<PulseRecord> records;  // populated only when collect_records
};

namespace expdetail {

inline void grow_count(std::vector<std::uint64_t>& v, int k) {
  if (static_cast<std::size_t>(k) >= v.size()) v.resize(static_cast<std::size_t>(k) + 1, 0);
  ++v[static_cast<std::size_t>(k)];
}

inline void accumulate(ExperimentSummary& s, const PulseRecord& r) {
  ++s.num_pulses;
  grow_count(s.trigger_counts, r.trigger_detected);
  grow_count(s.idler_counts, r.idler_detected);
  s.trigger_height.add(r.trigger_height);
  s.idler_area.add(r.idler_area);
  if (r.trigger_label) {
    const auto l = static_cast<std::size_t>(*r.trigger_label);
    ++s.label_counts[l];
    grow_count(s.idler_counts_by_label[l], r.idler_detected);
    s.idler_area_by_label[l].add(r.idler_area);
  } else {
    ++s.unlabeled;
  }
  ++s.coincidences.pulses;
  const bool t = r.trigger_detected >= 1;
  const bool i = r.idler_detected >= 1;
  s.coincidences.singles_1 += t ? 1 : 0;
  s.coincidences.singles_2 += i ? 1 : 0;
  s.coincidences.coincidences += (t && i) ? 1 : 0;
}

inline ExperimentResult run_block(const ExperimentConfig& cfg, std::uint64_t block,
                                  bool collect_records) {
  const std::uint64_t first = block * kPulseBlockSize;
  const std::uint64_t last = std::min(first + kPulseBlockSize, cfg.num_pulses);
  RngStream rng(cfg.seed, block);
  ExperimentResult out;
  out.summary = ExperimentSummary::make(cfg);
  if (collect_records) out.records.reserve(last - first);
  for (std::uint64_t i = first; i < last; ++i) {
    const PulseRecord r = run_pulse(cfg, rng);
    accumulate(out.summary, r);
    if (collect_records) out.records.push_back(r);
  }
  return out;
}

}  // namespace expdetail

/// Runs the full pulse train. Blocks are simulated with per-block derived
/// streams and merged in block order, so the result is byte-identical for
/// any worker count, including 1.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  cfg.validate();
  if (opt.workers < 1 || opt.workers > 64)
    throw std::invalid_argument("run_experiment: workers must be in [1, 64]");

  const std::uint64_t nblocks = (cfg.num_pulses + kPulseBlockSize - 1) / kPulseBlockSize;
  ExperimentResult merged;
  merged.summary = ExperimentSummary::make(cfg);
  if (nblocks == 0) return merged;

  std::vector<ExperimentResult> parts(nblocks);
  const int workers = static_cast<int>(std::min<std::uint64_t>(opt.workers, nblocks));
  if (workers == 1) {
    for (std::uint64_t b = 0; b < nblocks; ++b)
      parts[b] = expdetail::run_block(cfg, b, opt.collect_records);
  } else {
    std::atomic<std::uint64_t> next{0};
    auto work = [&]() {
      for (std::uint64_t b = next.fetch_add(1); b < nblocks; b = next.fetch_add(1))
        parts[b] = expdetail::run_block(cfg, b, opt.collect_records);
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  if (opt.collect_records) merged.records.reserve(cfg.num_pulses);
  for (std::uint64_t b = 0; b < nblocks; ++b) {
    merged.summary.merge(parts[b].summary);
    if (opt.collect_records)
      merged.records.insert(merged.records.end(), parts[b].records.begin(),
                            parts[b].records.end());
  }
  return merged;
}

}  // namespace pnsim
