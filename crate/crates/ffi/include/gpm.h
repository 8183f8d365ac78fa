#ifndef GPM_H
#define GPM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum GpmStatus {
  GPM_STATUS_OK = 0,
  GPM_STATUS_NULL_POINTER = 1,
  GPM_STATUS_INVALID_ARGUMENT = 2,
  GPM_STATUS_TRUNCATION = 3,
  GPM_STATUS_ZERO_PROBABILITY = 4,
  GPM_STATUS_INTEGRATOR = 5,
  GPM_STATUS_NOT_REACHED = 6,
  GPM_STATUS_BUFFER_TOO_SMALL = 7,
  GPM_STATUS_PANIC = 8,
} GpmStatus;

typedef enum GpmRounding {
  GPM_ROUNDING_FLOOR = 0,
  GPM_ROUNDING_CEIL = 1,
} GpmRounding;

typedef enum GpmProtocol {
  GPM_PROTOCOL_RESONANT = 0,
  GPM_PROTOCOL_DISPERSIVE = 1,
} GpmProtocol;

/**
 * Per-round results of one protocol run.
 */
typedef struct GpmRecord GpmRecord;

/**
 * Pure state of a bosonic mode or of a spin ensemble.
 */
typedef struct GpmState GpmState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gpm_version(void);

/**
 * Message of the last failing call on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *gpm_last_error_message(void);

/**
 * Coherent state with mean photon number `mean`, truncated at `n_max`
 * (0 picks a cutoff whose discarded tail is below 1e-12).
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum GpmStatus gpm_coherent_state_new(double mean, size_t n_max, struct GpmState **out);

/**
 * Coherent state with mean `n_t` at the open-system cutoff (`n_t + 6√n_t`,
 * raised for small `n_t`), as used for noisy runs.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum GpmStatus gpm_noisy_coherent_state_new(size_t n_t, struct GpmState **out);

/**
 * Product state of `spins` spins at polar angle `phi`, in the symmetric
 * subspace (labels `m = -spins/2 ..= spins/2`).
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum GpmStatus gpm_dicke_product_state_new(size_t spins, double phi, struct GpmState **out);

/**
 * # Safety
 * `state` must be NULL or a handle not yet freed.
 */
void gpm_state_free(struct GpmState *state);

/**
 * Number of basis labels, or 0 for NULL.
 *
 * # Safety
 * `state` must be NULL or a live handle.
 */
size_t gpm_state_dim(const struct GpmState *state);

/**
 * Label of the first basis element (0 for a mode, `-J` for spins).
 *
 * # Safety
 * `state` must be NULL or a live handle.
 */
int64_t gpm_state_first_label(const struct GpmState *state);

/**
 * Copies `|amplitude|²` for every label into `out[0..len)`.
 *
 * # Safety
 * `state` must be a live handle and `out` valid for `len` writes.
 */
enum GpmStatus gpm_state_populations(const struct GpmState *state, double *out, size_t len);

/**
 * Quantum Fisher information `4 Var(J_x)` of a spin-ensemble state.
 *
 * # Safety
 * `state` must be a live handle and `out` valid for one write.
 */
enum GpmStatus gpm_dicke_qfi(const struct GpmState *state, double *out);

/**
 * Closed-system resonant protocol towards `|n_t⟩` over `rounds` rounds.
 *
 * # Safety
 * `initial` must be a live mode-state handle and `out` writable.
 */
enum GpmStatus gpm_run_fock(const struct GpmState *initial,
                            size_t n_t,
                            size_t rounds,
                            double g,
                            enum GpmRounding rounding,
                            struct GpmRecord **out);

/**
 * Closed-system dispersive protocol towards `|n_t⟩`.
 *
 * # Safety
 * `initial` must be a live mode-state handle and `out` writable.
 */
enum GpmStatus gpm_run_dispersive(const struct GpmState *initial,
                                  size_t n_t,
                                  size_t rounds,
                                  double chi,
                                  struct GpmRecord **out);

/**
 * Hybrid Dicke protocol towards `|J, 0⟩` (literal ξ indexing).
 *
 * # Safety
 * `initial` must be a live spin-state handle and `out` writable.
 */
enum GpmStatus gpm_run_dicke(const struct GpmState *initial,
                             size_t rounds,
                             double g,
                             enum GpmRounding rounding,
                             struct GpmRecord **out);

/**
 * Lindblad simulation of either protocol. `g` is used by the resonant
 * protocol and `chi` by the dispersive one; rates are in s⁻¹ and
 * `tolerance` is the integrator's relative tolerance. The record carries
 * final mode populations but no final pure state.
 *
 * # Safety
 * `initial` must be a live mode-state handle and `out` writable.
 */
enum GpmStatus gpm_run_noisy(const struct GpmState *initial,
                             enum GpmProtocol protocol,
                             size_t n_t,
                             size_t rounds,
                             double g,
                             double chi,
                             double kappa,
                             double gamma,
                             double gamma_phi,
                             double tolerance,
                             struct GpmRecord **out);

/**
 * # Safety
 * `record` must be NULL or a handle not yet freed.
 */
void gpm_record_free(struct GpmRecord *record);

/**
 * Number of rounds, or 0 for NULL.
 *
 * # Safety
 * `record` must be NULL or a live handle.
 */
size_t gpm_record_rounds(const struct GpmRecord *record);

/**
 * Total protocol time in seconds (NaN for NULL).
 *
 * # Safety
 * `record` must be NULL or a live handle.
 */
double gpm_record_total_time(const struct GpmRecord *record);

/**
 * Product of all per-round success probabilities (NaN for NULL).
 *
 * # Safety
 * `record` must be NULL or a live handle.
 */
double gpm_record_cumulative_success(const struct GpmRecord *record);

/**
 * Target-state fidelity after each round. Copies into `out[0..len)`.
 *
 * # Safety
 * `record` must be a live handle and `out` valid for `len` writes.
 */
enum GpmStatus gpm_record_fidelities(const struct GpmRecord *record, double *out, size_t len);

/**
 * Heralding probability of each round. Copies into `out[0..len)`.
 *
 * # Safety
 * `record` must be a live handle and `out` valid for `len` writes.
 */
enum GpmStatus gpm_record_success_probs(const struct GpmRecord *record, double *out, size_t len);

/**
 * Running product of success probabilities. Copies into `out[0..len)`.
 *
 * # Safety
 * `record` must be a live handle and `out` valid for `len` writes.
 */
enum GpmStatus gpm_record_cumulative_probs(const struct GpmRecord *record, double *out, size_t len);

/**
 * Duration of each round in seconds. Copies into `out[0..len)`.
 *
 * # Safety
 * `record` must be a live handle and `out` valid for `len` writes.
 */
enum GpmStatus gpm_record_durations(const struct GpmRecord *record, double *out, size_t len);

/**
 * Length of the final population vector, or 0 for NULL.
 *
 * # Safety
 * `record` must be NULL or a live handle.
 */
size_t gpm_record_population_len(const struct GpmRecord *record);

/**
 * Populations of the final (mode or spin) state. Copies into `out[0..len)`.
 *
 * # Safety
 * `record` must be a live handle and `out` valid for `len` writes.
 */
enum GpmStatus gpm_record_final_populations(const struct GpmRecord *record,
                                            double *out,
                                            size_t len);

/**
 * Copy of the final pure state of a closed-system run.
 *
 * # Safety
 * `record` must be a live handle and `out` writable.
 */
enum GpmStatus gpm_record_final_state(const struct GpmRecord *record, struct GpmState **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GPM_H */
