/*
 * forgenet C API.
 *
 * Every object is an opaque handle released with its *_destroy function.
 * Every fallible call returns an fgn_status; on failure a message for the
 * calling thread is available from fgn_last_error() until the next call.
 */
#ifndef FORGENET_FORGENET_H
#define FORGENET_FORGENET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FORGENET_BUILDING_LIBRARY)
#    define FGN_API __declspec(dllexport)
#  else
#    define FGN_API __declspec(dllimport)
#  endif
#else
#  define FGN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fgn_status {
  FGN_OK = 0,
  FGN_ERR_SHAPE = 1,
  FGN_ERR_CONFIG = 2,
  FGN_ERR_FORMAT = 3,
  FGN_ERR_PARSE = 4,
  FGN_ERR_DECODE = 5,
  FGN_ERR_IO = 6,
  FGN_ERR_CONTRACT = 7,
  FGN_ERR_DEGENERATE_BATCH = 8,
  FGN_ERR_POISONED_GRADIENT = 9,
  FGN_ERR_INVALID_ARGUMENT = 10, /* null handle or pointer, bad enum */
  FGN_ERR_OUT_OF_RANGE = 11,     /* accessor index past the end */
  FGN_ERR_INTERNAL = 12
} fgn_status;

typedef enum fgn_split { FGN_SPLIT_TRAIN = 0, FGN_SPLIT_VAL = 1, FGN_SPLIT_TEST = 2 } fgn_split;
typedef enum fgn_eval_level { FGN_LEVEL_FRAME = 0, FGN_LEVEL_VIDEO = 1 } fgn_eval_level;
typedef enum fgn_axis { FGN_AXIS_LAYERS = 0, FGN_AXIS_BATCH = 1, FGN_AXIS_FILTERS = 2 } fgn_axis;
typedef enum fgn_report_format { FGN_REPORT_TABLE = 0, FGN_REPORT_JSONL = 1 } fgn_report_format;

FGN_API const char* fgn_version(void);
FGN_API const char* fgn_status_name(fgn_status status);
/* Message of the last failure on this thread; "" if none. */
FGN_API const char* fgn_last_error(void);
/* Worker threads for intra-batch parallelism (results do not depend on it). */
FGN_API void fgn_set_threads(int threads);

/* ---- network ---------------------------------------------------------- */

typedef struct fgn_network_config {
  uint32_t conv_layers;
  uint32_t filters;
  uint32_t height;
  uint32_t width;
  double bn_epsilon;
  double bn_momentum;
  uint64_t seed;
} fgn_network_config;

/* 4 conv layers, 4 filters, 128x128, eps 1e-3, momentum 0.99, seed 0. */
FGN_API void fgn_network_config_default(fgn_network_config* config);
FGN_API fgn_status fgn_count_parameters(const fgn_network_config* config, uint64_t* count);

typedef struct fgn_network fgn_network;

FGN_API fgn_status fgn_network_create(const fgn_network_config* config, fgn_network** out);
/* Architecture from the weights header; expected may be NULL. */
FGN_API fgn_status fgn_network_load(const char* path, const fgn_network_config* expected,
                                    fgn_network** out);
FGN_API fgn_status fgn_network_save(const fgn_network* net, const char* path);
FGN_API fgn_status fgn_network_get_config(const fgn_network* net, fgn_network_config* config);
FGN_API fgn_status fgn_network_parameter_count(const fgn_network* net, uint64_t* count);
/* pixels: count x 3 x height x width floats in [0,1], row-major. */
FGN_API fgn_status fgn_network_predict(const fgn_network* net, const float* pixels, size_t count,
                                       float* probabilities);
FGN_API void fgn_network_destroy(fgn_network* net);

/* ---- data ------------------------------------------------------------- */

typedef struct fgn_manifest fgn_manifest;

FGN_API fgn_status fgn_manifest_load(const char* path, fgn_split split, fgn_manifest** out);
FGN_API size_t fgn_manifest_size(const fgn_manifest* manifest);
/* Counts rows with label 0 (original) and 1 (fake); either pointer may be NULL. */
FGN_API fgn_status fgn_manifest_class_counts(const fgn_manifest* manifest, uint64_t* originals,
                                             uint64_t* fakes);
FGN_API void fgn_manifest_destroy(fgn_manifest* manifest);

/* Writes <destination>/<video_id>/<frame>.ppm and manifest.csv. out may be NULL. */
FGN_API fgn_status fgn_generate_synthetic(uint32_t videos, uint32_t frames_per_video, uint32_t size,
                                          uint64_t seed, const char* destination,
                                          fgn_manifest** out);

/* ---- training --------------------------------------------------------- */

typedef struct fgn_epoch_record {
  uint32_t epoch;
  double train_loss;
  double train_acc;
  double val_acc;
  double wall_time;
} fgn_epoch_record;

/* Called after every completed epoch. */
typedef void (*fgn_epoch_callback)(const fgn_epoch_record* record, void* user_data);

typedef struct fgn_train_options {
  uint32_t epochs;
  uint32_t batch_size;
  double lr;
  double early_stop_delta;
  uint64_t seed;
  const char* checkpoint_path; /* NULL: no checkpoints */
  int fixed_clock;             /* nonzero: durations reported as 0 */
  fgn_epoch_callback on_epoch; /* may be NULL */
  void* user_data;
} fgn_train_options;

/* 10 epochs, batch 128, lr 0.001, early stop 0.01, seed 0. */
FGN_API void fgn_train_options_default(fgn_train_options* options);

typedef struct fgn_training_run fgn_training_run;

FGN_API fgn_status fgn_train(fgn_network* net, const fgn_manifest* train_set,
                             const fgn_manifest* val_set, const fgn_train_options* options,
                             fgn_training_run** out);
FGN_API size_t fgn_training_run_epochs(const fgn_training_run* run);
FGN_API fgn_status fgn_training_run_epoch(const fgn_training_run* run, size_t index,
                                          fgn_epoch_record* record);
/* "epochs_exhausted" or "early_stop". */
FGN_API const char* fgn_training_run_stop_reason(const fgn_training_run* run);
/* CSV: epoch,train_loss,train_acc,val_acc,wall_time */
FGN_API fgn_status fgn_training_run_write_metrics(const fgn_training_run* run, const char* path);
FGN_API void fgn_training_run_destroy(fgn_training_run* run);

/* ---- evaluation ------------------------------------------------------- */

typedef struct fgn_predictions fgn_predictions;

FGN_API fgn_status fgn_predict_manifest(const fgn_network* net, const fgn_manifest* manifest,
                                        fgn_predictions** out);
/* CSV: video_id,frame_index,truth,probability */
FGN_API fgn_status fgn_predictions_load(const char* path, fgn_predictions** out);
FGN_API fgn_status fgn_predictions_save(const fgn_predictions* predictions, const char* path);
FGN_API size_t fgn_predictions_size(const fgn_predictions* predictions);
FGN_API void fgn_predictions_destroy(fgn_predictions* predictions);

typedef struct fgn_confusion {
  uint64_t counts[2][2]; /* [truth][detected], 0 = original, 1 = fake */
  double rates[2][2];    /* row-normalised */
} fgn_confusion;

typedef struct fgn_video_verdict {
  const char* video_id; /* owned by the evaluation handle */
  int truth;
  int predicted;
  uint64_t frames_original;
  uint64_t frames_fake;
} fgn_video_verdict;

typedef struct fgn_evaluation fgn_evaluation;

FGN_API fgn_status fgn_evaluate(const fgn_predictions* predictions, fgn_eval_level level,
                                fgn_evaluation** out);
FGN_API fgn_status fgn_evaluation_accuracy(const fgn_evaluation* eval, double* accuracy);
FGN_API fgn_status fgn_evaluation_confusion(const fgn_evaluation* eval, fgn_confusion* confusion);
FGN_API size_t fgn_evaluation_verdicts(const fgn_evaluation* eval);
FGN_API fgn_status fgn_evaluation_verdict(const fgn_evaluation* eval, size_t index,
                                          fgn_video_verdict* verdict);
/* Text valid until the handle is destroyed. */
FGN_API const char* fgn_evaluation_report(const fgn_evaluation* eval, fgn_report_format format);
FGN_API void fgn_evaluation_destroy(fgn_evaluation* eval);

/* counts must hold `bins` entries. A video with no frames yields zeros. */
FGN_API fgn_status fgn_probability_histogram(const fgn_predictions* predictions,
                                             const char* video_id, size_t bins,
                                             uint64_t* counts);
FGN_API fgn_status fgn_write_histogram_csv(const fgn_predictions* predictions,
                                           const char* video_id, size_t bins, const char* path);

/* ---- ablation --------------------------------------------------------- */

typedef struct fgn_ablation_options {
  fgn_axis axis;
  const uint32_t* values;
  size_t value_count;
  uint32_t epochs; /* 0: full epochs for layers, 1 for batch/filters */
  fgn_network_config network;
  fgn_train_options training;
} fgn_ablation_options;

typedef struct fgn_ablation_row {
  uint32_t value;
  double train_acc;
  double val_acc;
  double test_acc;
  double runtime;
} fgn_ablation_row;

typedef struct fgn_ablation_result fgn_ablation_result;

FGN_API fgn_status fgn_run_ablation(const fgn_ablation_options* options,
                                    const fgn_manifest* train_set, const fgn_manifest* val_set,
                                    const fgn_manifest* test_set, fgn_ablation_result** out);
FGN_API size_t fgn_ablation_result_size(const fgn_ablation_result* result);
FGN_API fgn_status fgn_ablation_result_row(const fgn_ablation_result* result, size_t index,
                                           fgn_ablation_row* row);
/* CSV: axis,value,train_acc,val_acc,test_acc,runtime_s */
FGN_API fgn_status fgn_ablation_result_write_csv(const fgn_ablation_result* result,
                                                 const char* path);
FGN_API void fgn_ablation_result_destroy(fgn_ablation_result* result);

#ifdef __cplusplus
}
#endif

#endif /* FORGENET_FORGENET_H */
