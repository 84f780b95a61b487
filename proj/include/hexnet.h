#ifndef HEXNET_H
#define HEXNET_H

/* C interface to the hexagonal-convolution ResNet engine.
 *
 * Every function returns a hexnet_status; outputs travel through pointer
 * arguments. On failure the return value names the error class and
 * hexnet_last_error() returns a thread-local human-readable message valid
 * until the next failing call on the same thread.
 *
 * Tensors cross the boundary as dense float arrays in (batch, channel, row,
 * column) order with the column index contiguous, described by a 4-element
 * extent array.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hexnet_status {
  HEXNET_OK = 0,
  HEXNET_ERR_INVALID_ARGUMENT = 1,
  HEXNET_ERR_SHAPE_MISMATCH = 2,
  HEXNET_ERR_IO = 3,
  HEXNET_ERR_FORMAT = 4,
  HEXNET_ERR_STATE = 5,
  HEXNET_ERR_NUMERIC = 6,
  HEXNET_ERR_INTERNAL = 7
} hexnet_status;

/* Message for the most recent failure on this thread; empty string if none. */
const char* hexnet_last_error(void);

/* Stable identifier for a status value, e.g. "invalid_argument". */
const char* hexnet_status_name(hexnet_status status);

/* Worker threads used by convolutions. Values below 1 select the hardware
 * count. Thread count 1 (the default) makes every operation sequential and
 * bit-reproducible run to run. */
hexnet_status hexnet_set_threads(int threads);
int hexnet_threads(void);

/* ------------------------------------------------------------------ */
/* Raw convolution operations.                                         */

typedef struct hexnet_conv_spec {
  size_t kernel_h, kernel_w;
  size_t stride_h, stride_w;
  size_t pad_top, pad_bottom, pad_left, pad_right;
  size_t dilation_h, dilation_w;
} hexnet_conv_spec;

/* Output extents of a square convolution: weight_shape is (out_channels,
 * in_channels, kernel_h, kernel_w) and must agree with the conv spec
 * argument. */
hexnet_status hexnet_conv2d_output_shape(const hexnet_conv_spec* spec,
                                         const size_t input_shape[4],
                                         const size_t weight_shape[4],
                                         size_t output_shape[4]);

/* bias may be NULL, otherwise it holds out_channels values. output must
 * have room for the extents hexnet_conv2d_output_shape reports. */
hexnet_status hexnet_conv2d_forward(const hexnet_conv_spec* spec, const float* input,
                                    const size_t input_shape[4], const float* weights,
                                    const size_t weight_shape[4], const float* bias,
                                    float* output);

/* Order of the seven weights of one (out, in) channel pair in the flat
 * weights7 array used below. */
typedef enum hexnet_hex_weight {
  HEXNET_HEX_CENTER = 0,
  HEXNET_HEX_TOP = 1,
  HEXNET_HEX_BOTTOM = 2,
  HEXNET_HEX_TOP_LEFT = 3,
  HEXNET_HEX_BOTTOM_LEFT = 4,
  HEXNET_HEX_TOP_RIGHT = 5,
  HEXNET_HEX_BOTTOM_RIGHT = 6
} hexnet_hex_weight;

#define HEXNET_HEX_WEIGHTS_PER_PAIR 7

/* Size-1 hexagonal convolution producing an output with the input's spatial
 * extents and out_channels channels. weights7 holds
 * out_channels * in_channels * 7 values, pair-major, each pair ordered per
 * hexnet_hex_weight. bias may be NULL. use_reference selects the direct
 * neighborhood evaluation instead of the decomposed fast path; both compute
 * the same function. */
hexnet_status hexnet_hexconv_forward(const float* input, const size_t input_shape[4],
                                     const float* weights7, size_t out_channels,
                                     const float* bias, int use_reference, float* output);

/* ------------------------------------------------------------------ */
/* Models.                                                             */

typedef struct hexnet_model hexnet_model;

/* depth is one of 20, 32, 44, 56; shortcut_mode is "identity_pad",
 * "projection_1x1" or "hex_projection". The model starts uninitialized;
 * train or load before running forward passes. */
hexnet_status hexnet_model_create(int depth, const char* shortcut_mode, size_t num_classes,
                                  hexnet_model** out_model);
void hexnet_model_free(hexnet_model* model);

/* Seeded parameter initialization, for forward passes outside training. */
hexnet_status hexnet_model_init(hexnet_model* model, uint64_t seed);

/* Trainable scalar count; hexagonal kernels count seven per channel pair. */
hexnet_status hexnet_model_param_count(const hexnet_model* model, uint64_t* out_count);

/* Number of layers in the model that apply a hexagonal convolution. */
hexnet_status hexnet_model_hex_layer_count(const hexnet_model* model, uint64_t* out_count);

/* Eval-mode class scores: input is (batch, 3, height, width); out_scores
 * receives batch * num_classes values. */
hexnet_status hexnet_model_forward(hexnet_model* model, const float* input, size_t batch,
                                   size_t height, size_t width, float* out_scores);

/* Writes or reads a full checkpoint. Loading builds a model matching the
 * stored architecture and restores its parameters and buffers. */
hexnet_status hexnet_model_save(hexnet_model* model, const char* path);
hexnet_status hexnet_model_load(const char* path, hexnet_model** out_model);

/* Architecture and progress stored in a checkpoint, without loading the
 * tensors into a model. shortcut_mode_buf receives a NUL-terminated string
 * (32 bytes are always sufficient). */
hexnet_status hexnet_checkpoint_info(const char* path, int* depth, char* shortcut_mode_buf,
                                     size_t shortcut_mode_buf_len, uint64_t* num_classes,
                                     uint64_t* completed_epochs, uint64_t* iteration,
                                     uint64_t* seed);

/* ------------------------------------------------------------------ */
/* Data.                                                               */

typedef struct hexnet_dataset hexnet_dataset;

/* Opens a directory holding the six standard CIFAR-10 binary batch files. */
hexnet_status hexnet_dataset_open(const char* dir, hexnet_dataset** out_dataset);
void hexnet_dataset_free(hexnet_dataset* dataset);
hexnet_status hexnet_dataset_counts(const hexnet_dataset* dataset, uint64_t* out_train,
                                    uint64_t* out_test);

/* Writes a seeded synthetic dataset in the exact CIFAR-10 binary layout. */
hexnet_status hexnet_write_synthetic_cifar(const char* dir, uint64_t seed);

/* ------------------------------------------------------------------ */
/* Training and evaluation.                                            */

typedef struct hexnet_train_options {
  uint64_t epochs;
  uint64_t batch_size;
  double base_lr;
  double momentum;
  double weight_decay;
  const uint64_t* lr_drop_iterations; /* may be NULL when count is 0 */
  size_t lr_drop_count;
  uint64_t seed;
  int decay_on_batchnorm;
  uint64_t train_limit; /* images per epoch; 0 means the full split */
  const char* checkpoint_path; /* rewritten every epoch; NULL disables */
} hexnet_train_options;

/* Fills the reference protocol: 182 epochs, batch 128, lr 0.1 with drops at
 * 32k/48k/64k iterations, momentum 0.9, weight decay 1e-3. */
void hexnet_train_options_defaults(hexnet_train_options* options);

typedef struct hexnet_metrics_record {
  uint64_t epoch;
  int has_train_loss; /* 0 for the eval-only record of a zero-epoch run */
  double train_loss;
  double val_loss;
  double top1_percent;
  double top5_percent;
  double wall_seconds;
} hexnet_metrics_record;

typedef void (*hexnet_metrics_callback)(const hexnet_metrics_record* record, void* user_data);

/* Initializes the model from options->seed and trains. The callback, if
 * non-NULL, receives one record per epoch. */
hexnet_status hexnet_train(hexnet_model* model, const hexnet_dataset* dataset,
                           const hexnet_train_options* options,
                           hexnet_metrics_callback callback, void* user_data);

/* Builds a model from the checkpoint and continues its run until
 * total_epochs (0 keeps the checkpoint's target). checkpoint_path, if
 * non-NULL, receives the rolling per-epoch checkpoint. */
hexnet_status hexnet_train_resume(const hexnet_dataset* dataset, const char* resume_from,
                                  uint64_t total_epochs, const char* checkpoint_path,
                                  hexnet_metrics_callback callback, void* user_data,
                                  hexnet_model** out_model);

/* Eval-mode loss and accuracy over a split: "validation" and "train_split"
 * partition the 50,000 training records by split_seed; "test" is the test
 * batch. */
hexnet_status hexnet_evaluate(hexnet_model* model, const hexnet_dataset* dataset,
                              const char* split, uint64_t split_seed, uint64_t batch_size,
                              double* out_loss, double* out_top1, double* out_top5);

/* ------------------------------------------------------------------ */
/* Verification and benchmarking.                                      */

/* Randomized sweep of the decomposed hexagonal convolution against the
 * neighborhood oracle; reports the worst absolute deviation. */
hexnet_status hexnet_verify_hexconv(size_t cases, uint64_t seed, double* out_max_deviation);

typedef void (*hexnet_line_callback)(const char* line, void* user_data);

/* Central-difference gradient checks for every layer and a truncated
 * network. Each callback line reports one check; the out parameters receive
 * the worst per-layer and whole-model relative errors. */
hexnet_status hexnet_gradcheck(uint64_t seed, hexnet_line_callback callback, void* user_data,
                               double* out_worst_layer, double* out_worst_model);

typedef struct hexnet_bench_result {
  uint64_t repeats;
  double hex_median_ms, hex_min_ms, hex_max_ms;
  double square_median_ms, square_min_ms, square_max_ms;
  double ratio; /* hex median over square median */
} hexnet_bench_result;

/* Median wall time of the hexagonal fast path against a square 3x3
 * convolution at matched shapes. */
hexnet_status hexnet_bench_conv(size_t in_channels, size_t out_channels, size_t spatial,
                                size_t repeats, uint64_t seed, hexnet_bench_result* out_result);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* HEXNET_H */
