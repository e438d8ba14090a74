#include "forgenet/evaluator.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include <json.hpp>

namespace forgenet {

void ConfusionMatrix::normalize() noexcept {
  for (int r = 0; r < 2; ++r) {
    const std::uint64_t row = counts[r][0] + counts[r][1];
    for (int c = 0; c < 2; ++c)
      rates[r][c] = row == 0 ? 0.0 : static_cast<double>(counts[r][c]) / static_cast<double>(row);
  }
}

Label classify(double probability) {
  if (!(probability >= 0.0 && probability <= 1.0))
    fail(ErrorKind::Contract, "classify: probability " + std::to_string(probability) +
                                  " is outside [0,1]");
  return probability < 0.5 ? Label::Original : Label::Fake;
}

FrameMetrics frame_metrics(std::span<const PredictionRecord> records) {
  if (records.empty()) fail(ErrorKind::Contract, "frame_metrics: no records");
  FrameMetrics m;
  for (const PredictionRecord& r : records) m.confusion.add(r.truth, classify(r.probability));
  m.confusion.normalize();
  m.misclassified = m.confusion.total() - m.confusion.correct();
  m.accuracy = static_cast<double>(m.confusion.correct()) / static_cast<double>(records.size());
  return m;
}

VideoVerdict majority_vote(std::span<const PredictionRecord> records) {
  if (records.empty()) fail(ErrorKind::Contract, "majority_vote: no records");
  VideoVerdict v;
  v.video_id = records.front().video_id;
  v.truth = records.front().truth;
  for (const PredictionRecord& r : records) {
    if (r.video_id != v.video_id)
      fail(ErrorKind::Contract, "majority_vote: mixed video ids '" + v.video_id + "' and '" +
                                    r.video_id + "'");
    if (r.truth != v.truth)
      fail(ErrorKind::Contract, "majority_vote: video '" + v.video_id +
                                    "' has frames with different ground truth");
    if (classify(r.probability) == Label::Original)
      ++v.frames_original;
    else
      ++v.frames_fake;
  }
  v.predicted = v.frames_original > v.frames_fake ? Label::Original : Label::Fake;
  return v;
}

VideoMetrics video_metrics(std::span<const PredictionRecord> records) {
  if (records.empty()) fail(ErrorKind::Contract, "video_metrics: no records");
  std::vector<std::string> order;
  std::map<std::string, std::vector<PredictionRecord>> by_video;
  for (const PredictionRecord& r : records) {
    auto [it, inserted] = by_video.try_emplace(r.video_id);
    if (inserted) order.push_back(r.video_id);
    it->second.push_back(r);
  }
  VideoMetrics m;
  m.verdicts.reserve(order.size());
  for (const std::string& id : order) {
    VideoVerdict v = majority_vote(by_video.at(id));
    m.confusion.add(v.truth, v.predicted);
    m.verdicts.push_back(std::move(v));
  }
  m.confusion.normalize();
  m.accuracy = static_cast<double>(m.confusion.correct()) / static_cast<double>(order.size());
  return m;
}

std::vector<std::uint64_t> probability_histogram(std::span<const PredictionRecord> records,
                                                 std::size_t bins) {
  if (bins == 0) fail(ErrorKind::Contract, "probability_histogram: bins must be >= 1");
  std::vector<std::uint64_t> counts(bins, 0);
  for (const PredictionRecord& r : records) {
    const double p = r.probability;
    if (!(p >= 0.0 && p <= 1.0))
      fail(ErrorKind::Contract, "probability_histogram: probability " + std::to_string(p) +
                                    " is outside [0,1]");
    const auto bin = static_cast<std::size_t>(std::floor(p * static_cast<double>(bins)));
    ++counts[std::min(bin, bins - 1)];
  }
  return counts;
}

std::vector<PredictionRecord> records_for_video(std::span<const PredictionRecord> records,
                                                std::string_view video_id) {
  std::vector<PredictionRecord> out;
  for (const PredictionRecord& r : records)
    if (r.video_id == video_id) out.push_back(r);
  return out;
}

std::string format_predictions(std::span<const PredictionRecord> records) {
  std::string out = std::string(kPredictionHeader) + "\n";
  char prob[40];
  for (const PredictionRecord& r : records) {
    std::snprintf(prob, sizeof prob, "%.9g", r.probability);
    out += r.video_id + ',' + std::to_string(r.frame_index) + ',' +
           std::to_string(static_cast<int>(r.truth)) + ',' + prob + '\n';
  }
  return out;
}

std::vector<PredictionRecord> parse_predictions(std::string_view text) {
  std::vector<PredictionRecord> out;
  std::set<std::pair<std::string, std::uint32_t>> seen;
  std::size_t pos = 0, line_no = 0;
  bool header = false;
  auto bad = [&](const std::string& what) {
    fail(ErrorKind::Parse, "prediction log line " + std::to_string(line_no) + ": " + what);
  };
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header) {
      if (line != kPredictionHeader) bad("expected header '" + std::string(kPredictionHeader) + "'");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t s = 0;
    for (std::size_t c; (c = line.find(',', s)) != std::string_view::npos; s = c + 1)
      f.push_back(line.substr(s, c - s));
    f.push_back(line.substr(s));
    if (f.size() != 4) bad("expected 4 fields, got " + std::to_string(f.size()));

    PredictionRecord r;
    r.video_id = std::string(f[0]);
    if (r.video_id.empty()) bad("empty video_id");
    auto [p1, e1] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), r.frame_index);
    if (e1 != std::errc{} || p1 != f[1].data() + f[1].size() || f[1].empty())
      bad("bad frame_index '" + std::string(f[1]) + "'");
    if (f[2] == "0")
      r.truth = Label::Original;
    else if (f[2] == "1")
      r.truth = Label::Fake;
    else
      bad("truth '" + std::string(f[2]) + "' is not 0 or 1");
    const std::string prob(f[3]);
    char* endp = nullptr;
    r.probability = std::strtod(prob.c_str(), &endp);
    if (prob.empty() || endp != prob.c_str() + prob.size() || !(r.probability >= 0.0) ||
        !(r.probability <= 1.0))
      bad("probability '" + prob + "' is not a number in [0,1]");
    if (!seen.emplace(r.video_id, r.frame_index).second)
      bad("duplicate frame (" + r.video_id + ", " + std::to_string(r.frame_index) + ")");
    out.push_back(std::move(r));
  }
  if (!header) fail(ErrorKind::Parse, "prediction log line 1: missing header");
  return out;
}

void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << format_predictions(records);
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_predictions(text);
}

std::vector<PredictionRecord> predict_manifest(const Network& net, const DatasetManifest& manifest,
                                               std::size_t batch_size) {
  if (manifest.empty()) fail(ErrorKind::Contract, "predict_manifest: empty manifest");
  const NetworkConfig& c = net.config();
  std::vector<PredictionRecord> out;
  out.reserve(manifest.size());
  for (const auto& indices : make_batches(manifest, batch_size, false, 0)) {
    const Batch batch = load_batch(manifest, indices, c.height, c.width);
    const std::vector<float> p = net.predict(batch.x);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const ManifestRow& row = manifest.rows[indices[i]];
      out.push_back({row.video_id, row.frame_index, row.label, static_cast<double>(p[i])});
    }
  }
  return out;
}

EvaluationReport evaluate(std::span<const PredictionRecord> records, EvalLevel level) {
  EvaluationReport report;
  report.level = level;
  if (level == EvalLevel::Frame) {
    const FrameMetrics m = frame_metrics(records);
    report.accuracy = m.accuracy;
    report.confusion = m.confusion;
    report.misclassified = m.misclassified;
  } else {
    VideoMetrics m = video_metrics(records);
    report.accuracy = m.accuracy;
    report.confusion = m.confusion;
    report.misclassified = m.confusion.total() - m.confusion.correct();
    report.verdicts = std::move(m.verdicts);
  }
  return report;
}

namespace {
const char* level_name(EvalLevel level) { return level == EvalLevel::Frame ? "frame" : "video"; }
}  // namespace

std::string format_report_table(const EvaluationReport& r) {
  const auto& c = r.confusion;
  const char* unit = r.level == EvalLevel::Frame ? "frames" : "videos";
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "%s-level evaluation\n"
                "accuracy: %.4f (%llu of %llu %s misclassified)\n"
                "\n"
                "                       Detected Original   Detected Fake\n"
                "Ground Truth Original  %8.3f (%7llu)  %8.3f (%7llu)\n"
                "Ground Truth Fake      %8.3f (%7llu)  %8.3f (%7llu)\n",
                level_name(r.level), r.accuracy, static_cast<unsigned long long>(r.misclassified),
                static_cast<unsigned long long>(c.total()), unit, c.rates[0][0],
                static_cast<unsigned long long>(c.counts[0][0]), c.rates[0][1],
                static_cast<unsigned long long>(c.counts[0][1]), c.rates[1][0],
                static_cast<unsigned long long>(c.counts[1][0]), c.rates[1][1],
                static_cast<unsigned long long>(c.counts[1][1]));
  std::string out = buf;
  if (r.level == EvalLevel::Video) {
    for (const VideoVerdict& v : r.verdicts) {
      if (v.truth == v.predicted) continue;
      const double total = static_cast<double>(v.frames_original + v.frames_fake);
      std::snprintf(buf, sizeof buf, "misclassified video %s: truth %s, %.1f%% of %llu frames voted original\n",
                    v.video_id.c_str(), v.truth == Label::Fake ? "fake" : "original",
                    100.0 * static_cast<double>(v.frames_original) / total,
                    static_cast<unsigned long long>(v.frames_original + v.frames_fake));
      out += buf;
    }
  }
  return out;
}

std::string format_report_jsonl(const EvaluationReport& r) {
  const char* level = level_name(r.level);
  std::string out;
  auto emit = [&](const std::string& metric, const nlohmann::json& value) {
    out += nlohmann::json{{"level", level}, {"metric", metric}, {"value", value}}.dump() + "\n";
  };
  const char* names[2] = {"original", "fake"};
  emit("accuracy", r.accuracy);
  emit("total", r.confusion.total());
  emit("misclassified", r.misclassified);
  for (int t = 0; t < 2; ++t)
    for (int d = 0; d < 2; ++d) {
      const std::string key = std::string("truth_") + names[t] + ".detected_" + names[d];
      emit("count." + key, r.confusion.counts[t][d]);
      emit("rate." + key, r.confusion.rates[t][d]);
    }
  for (const VideoVerdict& v : r.verdicts)
    if (v.truth != v.predicted) emit("misclassified_video", v.video_id);
  return out;
}

std::string format_histogram_csv(std::span<const std::uint64_t> counts) {
  std::string out = "bin,lower,upper,count\n";
  const double n = static_cast<double>(counts.size());
  char line[96];
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.3f,%.3f,%llu\n", i, static_cast<double>(i) / n,
                  static_cast<double>(i + 1) / n, static_cast<unsigned long long>(counts[i]));
    out += line;
  }
  return out;
}

}  // namespace forgenet
