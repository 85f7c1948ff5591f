#ifndef SOUNDABS_H
#define SOUNDABS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SoundabsStatus {
  SOUNDABS_STATUS_OK = 0,
  SOUNDABS_STATUS_NULL_ARGUMENT = 1,
  SOUNDABS_STATUS_INVALID_UTF8 = 2,
  SOUNDABS_STATUS_IO = 3,
  // A domain, QNP, mapping or constraints file did not parse or check.
  SOUNDABS_STATUS_INPUT = 4,
  // Task generation or encoding failed.
  SOUNDABS_STATUS_GENERATION = 5,
  SOUNDABS_STATUS_OUT_OF_RANGE = 6,
  SOUNDABS_STATUS_PANIC = 7,
} SoundabsStatus;

// Overall verdict of a report.
typedef enum SoundabsVerdict {
  SOUNDABS_VERDICT_TRUE = 0,
  SOUNDABS_VERDICT_FALSE = 1,
  SOUNDABS_VERDICT_UNKNOWN = 2,
} SoundabsVerdict;

typedef enum SoundabsTaskClass {
  SOUNDABS_TASK_CLASS_VALID = 0,
  SOUNDABS_TASK_CLASS_REFUTED = 1,
  SOUNDABS_TASK_CLASS_UNKNOWN = 2,
} SoundabsTaskClass;

// Parsed inputs of one verification problem.
typedef struct SoundabsInputs SoundabsInputs;

// The outcome of a verification run.
typedef struct SoundabsReport SoundabsReport;

// Verification settings. A null options pointer means the defaults.
typedef struct SoundabsOptions {
  // Solver command line, or null for `z3 -in`.
  const char *solver_cmd;
  // Per-task limit in seconds; zero or less means 10.
  double timeout_secs;
  // Worker threads; zero means one per CPU.
  size_t jobs;
  // Emit only the basic closure axioms.
  bool basic_axioms;
} SoundabsOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *soundabs_last_error(void);

// Loads `domain.sexp`, `qnp.sexp`, `map.sexp` and `constraints.sexp` from
// directory `dir`.
//
// # Safety
// `dir` must be a NUL-terminated string and `out` a valid pointer.
enum SoundabsStatus soundabs_inputs_load_dir(const char *dir, struct SoundabsInputs **out);

// Parses inputs from the four file contents.
//
// # Safety
// All strings must be NUL-terminated and `out` a valid pointer.
enum SoundabsStatus soundabs_inputs_new(const char *domain,
                                        const char *qnp,
                                        const char *mapping,
                                        const char *constraints,
                                        struct SoundabsInputs **out);

// # Safety
// `inputs` must be null or a handle not yet freed.
void soundabs_inputs_free(struct SoundabsInputs *inputs);

// Number of verification tasks the inputs give rise to.
//
// # Safety
// `inputs` must be a live handle and `out` a valid pointer.
enum SoundabsStatus soundabs_inputs_task_count(const struct SoundabsInputs *inputs, size_t *out);

// Generates and discharges all tasks. `options` may be null.
//
// # Safety
// `inputs` must be a live handle, `options` null or valid, `out` valid.
enum SoundabsStatus soundabs_verify(const struct SoundabsInputs *inputs,
                                    const struct SoundabsOptions *options,
                                    struct SoundabsReport **out);

// # Safety
// `report` must be null or a handle not yet freed.
void soundabs_report_free(struct SoundabsReport *report);

// # Safety
// `report` must be a live handle.
enum SoundabsVerdict soundabs_report_verdict(const struct SoundabsReport *report);

// The report as JSON, owned by the report handle.
//
// # Safety
// `report` must be a live handle.
const char *soundabs_report_json(const struct SoundabsReport *report);

// # Safety
// `report` must be a live handle.
size_t soundabs_report_task_count(const struct SoundabsReport *report);

// Identifier and classification of task `index`. The identifier is owned
// by the report handle.
//
// # Safety
// `report` must be a live handle; `id` and `class` valid pointers.
enum SoundabsStatus soundabs_report_task(const struct SoundabsReport *report,
                                         size_t index,
                                         const char **id,
                                         enum SoundabsTaskClass *class_);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOUNDABS_H */
