#ifndef QAS_H
#define QAS_H

/* Generated by cbindgen from qas-capi; regenerate with `cargo build -p qas-capi --features gen-header`. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a `qas_*` call. Anything but `Ok` leaves a message for
 * `qas_last_error`.
 */
typedef enum QasStatus {
  QasStatus_Ok = 0,
  /**
   * A required pointer argument was NULL.
   */
  QasStatus_NullPointer = 1,
  /**
   * Arguments were readable but outside the domain (bad length, bad
   * qubit count, non-UTF-8 text, ...).
   */
  QasStatus_InvalidArgument = 2,
  /**
   * Text did not match the proposal grammar.
   */
  QasStatus_ParseFailed = 3,
  /**
   * The spec could not be expanded into a circuit.
   */
  QasStatus_BuildFailed = 4,
  /**
   * Training or the campaign loop failed.
   */
  QasStatus_TrainFailed = 5,
  /**
   * Config or log I/O failed.
   */
  QasStatus_IoFailed = 6,
  /**
   * A panic was caught at the boundary; state may be stale.
   */
  QasStatus_Internal = 7,
} QasStatus;

/**
 * An ansatz specification: the ordered block tag list plus per-block
 * TwoLocal settings.
 */
typedef struct QasAnsatz QasAnsatz;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Crate version as a static string; never freed.
 */
const char *qas_version(void);

/**
 * Message from the most recent failing call on this thread. Empty when
 * nothing failed yet. Valid until the next failing call on this thread.
 */
const char *qas_last_error(void);

/**
 * Releases a string returned by a `qas_*` call.
 *
 * # Safety
 * `text` must be a pointer previously returned by this library and not
 * yet freed, or NULL.
 */
void qas_string_free(char *text);

/**
 * Parses a proposal reply (the `improved_ansatz_list = [...]` grammar,
 * including `twolocal_config` lines). Returns NULL on failure.
 *
 * # Safety
 * `reply` must be a valid NUL-terminated string.
 */
struct QasAnsatz *qas_ansatz_parse(const char *reply);

/**
 * Builds an ansatz from raw block tags (1..=4; a TwoLocal block needs
 * settings, so tag 5 must go through `qas_ansatz_parse`). Returns NULL
 * on failure.
 *
 * # Safety
 * `tags` must point to `len` readable bytes.
 */
struct QasAnsatz *qas_ansatz_from_tags(const uint8_t *tags, size_t len);

/**
 * Renders the spec back into the proposal grammar. Free the result with
 * `qas_string_free`. Returns NULL on failure.
 *
 * # Safety
 * `ansatz` must be a live pointer from a `qas_ansatz_*` constructor.
 */
char *qas_ansatz_render(const struct QasAnsatz *ansatz);

/**
 * Number of blocks in the spec. Returns 0 for NULL.
 *
 * # Safety
 * `ansatz` must be a live pointer from a `qas_ansatz_*` constructor.
 */
size_t qas_ansatz_block_count(const struct QasAnsatz *ansatz);

/**
 * Trainable parameter count of the expanded circuit on `n_qubits`.
 *
 * # Safety
 * `ansatz` must be live; `out` must point to writable memory.
 */
enum QasStatus qas_ansatz_param_count(const struct QasAnsatz *ansatz, size_t n_qubits, size_t *out);

/**
 * Greedy-layered depth of the expanded circuit on `n_qubits`.
 *
 * # Safety
 * `ansatz` must be live; `out` must point to writable memory.
 */
enum QasStatus qas_ansatz_depth(const struct QasAnsatz *ansatz, size_t n_qubits, size_t *out);

/**
 * Simulates the generator: |+...+> through the circuit at angles
 * `theta`, writing the 2^n_qubits measurement probabilities to `out`.
 * `theta_len` must equal the circuit's parameter count and `out_len`
 * must equal 2^n_qubits.
 *
 * # Safety
 * `ansatz` must be live; `theta` must point to `theta_len` doubles;
 * `out` must point to `out_len` writable doubles.
 */
enum QasStatus qas_ansatz_probabilities(const struct QasAnsatz *ansatz,
                                        size_t n_qubits,
                                        const double *theta,
                                        size_t theta_len,
                                        double *out,
                                        size_t out_len);

/**
 * Releases an ansatz handle.
 *
 * # Safety
 * `ansatz` must be a pointer from a `qas_ansatz_*` constructor, not yet
 * freed, or NULL.
 */
void qas_ansatz_free(struct QasAnsatz *ansatz);

/**
 * KL divergence between two length-`len` distributions (natural log,
 * zero-target clamp).
 *
 * # Safety
 * `p` and `q` must point to `len` doubles; `out` must be writable.
 */
enum QasStatus qas_kl_divergence(const double *p, const double *q, size_t len, double *out);

/**
 * Runs a whole campaign from a TOML config file, logging every iteration
 * into `log_dir` (created; must not already hold a log).
 *
 * # Safety
 * `config_path` and `log_dir` must be valid NUL-terminated strings.
 */
enum QasStatus qas_campaign_run(const char *config_path, const char *log_dir);

/**
 * Renders the CSV report for a campaign log. Free the result with
 * `qas_string_free`. Returns NULL on failure.
 *
 * # Safety
 * `log_dir` must be a valid NUL-terminated string.
 */
char *qas_report_csv(const char *log_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QAS_H */
