#include "pnsim/csv.hpp"

#include <gtest/gtest.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <type_traits>
#include <vector>

#include "pnsim/config.hpp"
#include "pnsim/histogram.hpp"

namespace pnsim {
namespace {

std::string temp_path(const std::string& name) { return testing::TempDir() + name; }

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream is(path);
  EXPECT_TRUE(is.good()) << path;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
}

std::string thrown_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

TEST(NumberFormatTest, ShortestFormRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, 0.9999680005119947}) {
    const std::string s = format_double(v);
    EXPECT_EQ(parse_double(s, "test"), v) << s;
  }
  EXPECT_TRUE(std::isnan(parse_double(format_double(std::nan("")), "test")));
}

TEST(NumberFormatTest, MalformedInputThrows) {
  EXPECT_THROW(parse_double("", "test"), std::runtime_error);
  EXPECT_THROW(parse_double("1.5x", "test"), std::runtime_error);
  EXPECT_THROW(parse_u64("-3", "test"), std::runtime_error);
  EXPECT_THROW(parse_u64("12.5", "test"), std::runtime_error);
  const std::string msg = thrown_message([] { parse_double("abc", "file.csv:7"); });
  EXPECT_NE(msg.find("file.csv:7"), std::string::npos);
}

TEST(MetaInfoTest, CommentLineFormat) {
  MetaInfo meta;
  meta.version = "0.1.0";
  meta.seed = 42;
  meta.config_hash = "00ff00ff00ff00ff";
  EXPECT_EQ(meta.comment_line(), "# pnsim 0.1.0 seed=42 config_hash=00ff00ff00ff00ff");
}

TEST(RecordsCsvTest, RowLayoutAndEmptyLabel) {
  PulseRecord labeled;
  labeled.true_pairs = 2;
  labeled.trigger_detected = 1;
  labeled.trigger_height = 0.98;
  labeled.trigger_label = 1;
  labeled.idler_detected = 0;
  labeled.idler_area = -0.02;
  PulseRecord unlabeled;
  unlabeled.true_pairs = 0;
  unlabeled.trigger_detected = 0;
  unlabeled.trigger_height = 0.5;
  unlabeled.idler_detected = 1;
  unlabeled.idler_area = 1.25;

  const std::string path = temp_path("records.csv");
  MetaInfo meta;
  meta.seed = 7;
  meta.config_hash = "0123456789abcdef";
  write_records_csv(path, {labeled, unlabeled}, meta);

  const std::vector<std::string> lines = read_lines(path);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], meta.comment_line());
  EXPECT_EQ(lines[1],
            "pulse_index,true_pairs,trigger_detected,trigger_height,trigger_label,"
            "idler_detected,idler_area");
  EXPECT_EQ(lines[2], "0,2,1,0.98,1,0,-0.02");
  EXPECT_EQ(lines[3], "1,0,0,0.5,,1,1.25");
}

TEST(HistogramCsvTest, RoundTripPreservesCountsAndEdges) {
  Histogram h(-2.0, 0.02, 10);
  h.add(-1.99);
  h.add(-1.99);
  h.add(-1.85);
  h.add(5.0);   // overflow, not serialized
  h.add(-9.0);  // underflow, not serialized
  const std::string path = temp_path("hist.csv");
  write_histogram_csv(path, h, MetaInfo{});
  const Histogram back = read_histogram_csv(path);
  ASSERT_EQ(back.size(), h.size());
  for (int i = 0; i < h.size(); ++i) {
    EXPECT_EQ(back.count(i), h.count(i)) << "bin " << i;
    EXPECT_NEAR(back.bin_low(i), h.bin_low(i), 1e-9);
    EXPECT_NEAR(back.bin_high(i), h.bin_high(i), 1e-9);
  }
}

TEST(HistogramCsvTest, EmptyHistogramRoundTrips) {
  const std::string path = temp_path("hist_empty.csv");
  write_histogram_csv(path, Histogram{}, MetaInfo{});
  const std::vector<std::string> lines = read_lines(path);
  ASSERT_EQ(lines.size(), 2u);  // comment and header only
  EXPECT_EQ(read_histogram_csv(path).size(), 0);
}

TEST(HistogramCsvTest, ReaderNamesTheFaultyLine) {
  const std::string path = temp_path("hist_bad.csv");
  write_text(path, "# c\nbin_low,bin_high,count\n0,0.5,2\nbad line\n");
  const std::string msg = thrown_message([&] { read_histogram_csv(path); });
  EXPECT_NE(msg.find(":4"), std::string::npos) << msg;

  write_text(path, "# c\nbin_low,bin_high,count\n0,0.5,2\n0.5,1,oops\n");
  EXPECT_THROW(read_histogram_csv(path), std::runtime_error);
}

TEST(HistogramCsvTest, RejectsWrongHeaderAndBrokenGeometry) {
  const std::string path = temp_path("hist_geom.csv");
  write_text(path, "low,high,count\n");
  EXPECT_THROW(read_histogram_csv(path), std::runtime_error);

  write_text(path, "bin_low,bin_high,count\n0,1,5\n2,3,4\n");
  const std::string gap = thrown_message([&] { read_histogram_csv(path); });
  EXPECT_NE(gap.find("contiguous"), std::string::npos) << gap;

  write_text(path, "bin_low,bin_high,count\n0,1,5\n1,3,4\n");
  const std::string widths = thrown_message([&] { read_histogram_csv(path); });
  EXPECT_NE(widths.find("width"), std::string::npos) << widths;

  EXPECT_THROW(read_histogram_csv(temp_path("does_not_exist.csv")), std::runtime_error);
}

TEST(DistributionCsvTest, WritesEveryComponent) {
  PhotonNumberDistribution p;
  p.probs = {0.5, 0.25, 0.25};
  const std::string path = temp_path("dist.csv");
  write_distribution_csv(path, p, MetaInfo{});
  const std::vector<std::string> lines = read_lines(path);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[1], "n,probability");
  EXPECT_EQ(lines[2], "0,0.5");
  EXPECT_EQ(lines[3], "1,0.25");
  EXPECT_EQ(lines[4], "2,0.25");
}

TEST(ConfigTest, EmptyObjectGetsDefaults) {
  const RunConfig cfg = parse_config("{}", "test");
  EXPECT_DOUBLE_EQ(cfg.experiment.trigger.efficiency, 0.68);
  EXPECT_DOUBLE_EQ(cfg.experiment.monitor.efficiency, 0.58);
  EXPECT_DOUBLE_EQ(cfg.experiment.trigger.dark_mean, 0.01);
  EXPECT_EQ(cfg.experiment.classification, TriggerClassification::pulse_height);
  EXPECT_EQ(cfg.experiment.num_pulses, 100000u);
  EXPECT_EQ(cfg.experiment.seed, 1u);
  EXPECT_EQ(cfg.n_max, 4);
  EXPECT_EQ(cfg.experiment.windows.max_label(), 4);
  EXPECT_FALSE(cfg.sweep.has_value());
  // Histogram geometry follows the trigger gain and label range.
  EXPECT_DOUBLE_EQ(cfg.experiment.hist.width, 0.02);
  EXPECT_DOUBLE_EQ(cfg.experiment.hist.low, -2.0);
  EXPECT_EQ(cfg.experiment.hist.nbins, 500);
}

TEST(ConfigTest, FullDocumentParses) {
  const std::string text = R"({
    "source": {"kind": "thermal", "mean_pairs": 0.4},
    "trigger": {"efficiency": 0.7, "dark_mean": 0.0, "baseline_sigma": 0.1},
    "monitor": {"efficiency": 0.55},
    "classification": "detected_count",
    "windows": {"n_max": 3},
    "num_pulses": 5000,
    "rep_rate_hz": 50000,
    "seed": 9,
    "histogram": {"low": -1.0, "width": 0.05, "nbins": 200},
    "sweep": {"powers": [1, 2], "pulses_per_point": 100, "slope": 0.01, "n_max": 2}
  })";
  const RunConfig cfg = parse_config(text, "test");
  EXPECT_EQ(cfg.experiment.source.kind, SourceKind::thermal);
  EXPECT_DOUBLE_EQ(cfg.experiment.source.mean_pairs, 0.4);
  EXPECT_DOUBLE_EQ(cfg.experiment.trigger.efficiency, 0.7);
  EXPECT_DOUBLE_EQ(cfg.experiment.trigger.baseline_sigma, 0.1);
  EXPECT_DOUBLE_EQ(cfg.experiment.monitor.efficiency, 0.55);
  EXPECT_DOUBLE_EQ(cfg.experiment.monitor.dark_mean, 0.01);
  EXPECT_EQ(cfg.experiment.classification, TriggerClassification::detected_count);
  EXPECT_EQ(cfg.n_max, 3);
  EXPECT_EQ(cfg.experiment.num_pulses, 5000u);
  EXPECT_DOUBLE_EQ(cfg.experiment.rep_rate_hz, 50000.0);
  EXPECT_EQ(cfg.experiment.seed, 9u);
  EXPECT_EQ(cfg.experiment.hist.nbins, 200);
  ASSERT_TRUE(cfg.sweep.has_value());
  EXPECT_EQ(cfg.sweep->powers.size(), 2u);
  EXPECT_EQ(cfg.sweep->pulses_per_point, 100u);
  EXPECT_DOUBLE_EQ(cfg.sweep->slope, 0.01);
  EXPECT_EQ(cfg.sweep->n_max, 2);
}

TEST(ConfigTest, UnknownKeysAreNamed) {
  const std::string top = thrown_message([] { parse_config(R"({"purple": 1})", "test"); });
  EXPECT_NE(top.find("purple"), std::string::npos) << top;

  const std::string nested = thrown_message(
      [] { parse_config(R"({"trigger": {"qe": 0.5}})", "test"); });
  EXPECT_NE(nested.find("qe"), std::string::npos) << nested;
  EXPECT_NE(nested.find("trigger"), std::string::npos) << nested;
}

TEST(ConfigTest, WrongTypesAndValuesRejected) {
  EXPECT_THROW(parse_config(R"({"num_pulses": "many"})", "test"), ConfigError);
  EXPECT_THROW(parse_config(R"({"source": {"kind": "laser", "mean_pairs": 1}})", "test"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"source": {"kind": "poisson"}})", "test"), ConfigError);
  EXPECT_THROW(parse_config(R"({"windows": {"n_max": 0}})", "test"), ConfigError);
  EXPECT_THROW(parse_config(R"([1, 2])", "test"), ConfigError);
  // Invalid detector settings surface as ConfigError naming the section.
  EXPECT_THROW(parse_config(R"({"trigger": {"efficiency": 1.5}})", "test"), ConfigError);
  const std::string msg = thrown_message(
      [] { parse_config(R"({"trigger": {"efficiency": 1.5}})", "test"); });
  EXPECT_NE(msg.find("invalid trigger settings"), std::string::npos) << msg;
  EXPECT_NE(msg.find("efficiency"), std::string::npos) << msg;
}

TEST(ConfigTest, ExplicitWindowsOverrideTheDefaults) {
  const std::string text = R"({
    "windows": {"explicit": [
      {"label": 1, "low": 0.6, "high": 1.4},
      {"label": 2, "low": 1.6, "high": 2.4}
    ]}
  })";
  const RunConfig cfg = parse_config(text, "test");
  EXPECT_EQ(cfg.n_max, 2);
  ASSERT_EQ(cfg.experiment.windows.windows().size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.experiment.windows.windows()[0].low, 0.6);
  EXPECT_DOUBLE_EQ(cfg.experiment.windows.windows()[1].high, 2.4);
  EXPECT_EQ(cfg.experiment.windows.classify(PulseHeight{1.0}).value_or(0), 1);
  EXPECT_FALSE(cfg.experiment.windows.classify(PulseHeight{1.5}).has_value());
}

TEST(ConfigTest, ParseErrorsCarryLineNumbers) {
  const std::string msg =
      thrown_message([] { parse_config("{\n  \"seed\": 1,\n}", "test"); });
  EXPECT_NE(msg.find("test:3"), std::string::npos) << msg;
}

TEST(ConfigTest, SweepSlopeAndCalibrateAreExclusive) {
  const std::string both = R"({
    "sweep": {"powers": [1], "pulses_per_point": 10, "slope": 0.01,
              "calibrate": {"anchor_power": 40}}
  })";
  EXPECT_THROW(parse_config(both, "test"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sweep": {"pulses_per_point": 10}})", "test"), ConfigError);
  EXPECT_THROW(
      parse_config(R"({"sweep": {"powers": [1], "pulses_per_point": 10, "slope": 0}})", "test"),
      ConfigError);

  const std::string calibrated = R"({
    "sweep": {"powers": [1], "pulses_per_point": 10,
              "calibrate": {"target_rate_hz": 9000, "anchor_power": 20}}
  })";
  const RunConfig cfg = parse_config(calibrated, "test");
  ASSERT_TRUE(cfg.sweep.has_value());
  EXPECT_DOUBLE_EQ(cfg.sweep->slope, 0.0);  // resolved later by calibration
  EXPECT_DOUBLE_EQ(cfg.sweep->target_rate_hz, 9000.0);
  EXPECT_DOUBLE_EQ(cfg.sweep->anchor_power, 20.0);
}

TEST(ConfigTest, DeadspotSectionParses) {
  const std::string text = R"({
    "monitor": {"efficiency": 0.58, "deadspot": {"beam_sigma": 150}}
  })";
  const RunConfig cfg = parse_config(text, "test");
  ASSERT_TRUE(cfg.experiment.monitor.deadspot.has_value());
  EXPECT_DOUBLE_EQ(cfg.experiment.monitor.deadspot->beam_sigma, 150.0);
  EXPECT_DOUBLE_EQ(cfg.experiment.monitor.deadspot->active_diameter, 1000.0);
  EXPECT_DOUBLE_EQ(cfg.experiment.monitor.deadspot->spot_diameter, 5.0);
  // beam_sigma is required to run with saturation enabled
  EXPECT_THROW(parse_config(R"({"monitor": {"deadspot": {}}})", "test"), ConfigError);
}

TEST(ConfigTest, HashIgnoresFormattingButTracksContent) {
  const RunConfig a = parse_config(R"({"seed": 3, "num_pulses": 10})", "test");
  const RunConfig b = parse_config("{\n  \"num_pulses\": 10,\n  \"seed\": 3\n}", "test");
  const RunConfig c = parse_config(R"({"seed": 4, "num_pulses": 10})", "test");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a).size(), 16u);
  for (char ch : config_hash(a)) EXPECT_TRUE(std::isxdigit(static_cast<unsigned char>(ch)));
}

TEST(ConfigTest, MissingFileIsAConfigError) {
  EXPECT_THROW(load_config(temp_path("no_such_config.json")), ConfigError);
  // ConfigError must be a runtime_error so the tool's exit-code mapping sees it.
  const bool is_runtime = std::is_base_of_v<std::runtime_error, ConfigError>;
  EXPECT_TRUE(is_runtime);
}

}  // namespace
}  // namespace pnsim
