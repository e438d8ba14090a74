#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forgenet/data.hpp"
#include "forgenet/model.hpp"

namespace forgenet {

struct PredictionRecord {
  std::string video_id;
  std::uint32_t frame_index = 0;
  Label truth = Label::Original;
  double probability = 0.0;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// Rows are ground truth (original, fake), columns are the detected class.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, 2>, 2> counts{};
  std::array<std::array<double, 2>, 2> rates{};

  std::uint64_t total() const noexcept {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
  }
  std::uint64_t correct() const noexcept { return counts[0][0] + counts[1][1]; }

  // Recomputes the row-normalised rates from counts. Empty rows stay 0.
  void normalize() noexcept;
  void add(Label truth, Label detected) noexcept {
    ++counts[static_cast<int>(truth)][static_cast<int>(detected)];
  }
};

struct FrameMetrics {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::uint64_t misclassified = 0;
};

struct VideoVerdict {
  std::string video_id;
  Label truth = Label::Original;
  Label predicted = Label::Original;
  std::uint64_t frames_original = 0;
  std::uint64_t frames_fake = 0;

  friend bool operator==(const VideoVerdict&, const VideoVerdict&) = default;
};

struct VideoMetrics {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<VideoVerdict> verdicts;  // first-appearance order of video ids
};

// p < 0.5 is original, p >= 0.5 is fake. Outside [0,1] is a contract error.
Label classify(double probability);

FrameMetrics frame_metrics(std::span<const PredictionRecord> records);

// Counts hard per-frame classifications; the label with strictly more
// frames wins and a tie goes to fake.
VideoVerdict majority_vote(std::span<const PredictionRecord> records);

VideoMetrics video_metrics(std::span<const PredictionRecord> records);

// Bin i covers [i/bins, (i+1)/bins); the last bin also takes 1.0.
std::vector<std::uint64_t> probability_histogram(std::span<const PredictionRecord> records,
                                                 std::size_t bins = 10);

std::vector<PredictionRecord> records_for_video(std::span<const PredictionRecord> records,
                                                std::string_view video_id);

inline constexpr std::string_view kPredictionHeader = "video_id,frame_index,truth,probability";
std::string format_predictions(std::span<const PredictionRecord> records);
std::vector<PredictionRecord> parse_predictions(std::string_view text);
void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

// Inference-mode probabilities for every manifest row, in manifest order.
std::vector<PredictionRecord> predict_manifest(const Network& net, const DatasetManifest& manifest,
                                               std::size_t batch_size = 128);

enum class EvalLevel { Frame, Video };

struct EvaluationReport {
  EvalLevel level = EvalLevel::Frame;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::uint64_t misclassified = 0;
  std::vector<VideoVerdict> verdicts;  // video level only
};

EvaluationReport evaluate(std::span<const PredictionRecord> records, EvalLevel level);

// Human-readable summary with accuracy and confusion matrix.
std::string format_report_table(const EvaluationReport& report);
// One JSON object per line: {"level":..,"metric":..,"value":..}.
std::string format_report_jsonl(const EvaluationReport& report);
std::string format_histogram_csv(std::span<const std::uint64_t> counts);

}  // namespace forgenet
