#ifndef TOPO_SUPERATOM_H
#define TOPO_SUPERATOM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_POINTER = 1,
  TS_STATUS_INVALID_PARAM = 2,
  TS_STATUS_NOT_TOPOLOGICAL = 3,
  TS_STATUS_GAP_CLOSED = 4,
  TS_STATUS_SINGULAR_SYSTEM = 5,
  TS_STATUS_NUMERICAL_FAILURE = 6,
  TS_STATUS_BUFFER_TOO_SMALL = 7,
  TS_STATUS_PANIC = 8,
} TsStatus;

typedef enum TsTarget {
  TS_TARGET_LEFT_EDGE = 0,
  TS_TARGET_RIGHT_EDGE = 1,
  /**
   * Eigenstate `bulk_index` in ascending energy order.
   */
  TS_TARGET_BULK = 2,
} TsTarget;

/**
 * Opaque dissipation parameters.
 */
typedef struct TsDissipation TsDissipation;

/**
 * Opaque lattice parameters.
 */
typedef struct TsLattice TsLattice;

/**
 * Opaque assembled response system.
 */
typedef struct TsResponse TsResponse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated library version; static storage, never freed.
 */
const char *ts_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`) and returns its full length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t ts_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `out_handle` must be valid for a pointer write.
 */
enum TsStatus ts_lattice_new(double delta,
                             double t_p,
                             double t_c,
                             size_t n_cells,
                             struct TsLattice **out_handle);

/**
 * # Safety
 * `handle` must be null or come from [`ts_lattice_new`], freed once.
 */
void ts_lattice_free(struct TsLattice *handle);

/**
 * Chain dimension `2 N`; 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or a live lattice handle.
 */
size_t ts_lattice_dim(const struct TsLattice *handle);

/**
 * Bulk winding number `|nu|` from `n_k` Brillouin-zone samples.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TsStatus ts_winding_number(const struct TsLattice *handle, size_t n_k, int32_t *out_winding);

/**
 * Open-chain eigenvalues in ascending order into `out_energies[0..2N]`.
 *
 * # Safety
 * `out_energies` must be valid for `len` doubles.
 */
enum TsStatus ts_spectrum(const struct TsLattice *handle, double *out_energies, size_t len);

/**
 * Closed-form left and right edge states, each `2N` long (A/B interleaved).
 *
 * # Safety
 * Both output buffers must be valid for `len` doubles.
 */
enum TsStatus ts_edge_states(const struct TsLattice *handle,
                             double *out_left,
                             double *out_right,
                             size_t len,
                             double *out_localization_length);

/**
 * # Safety
 * `out_handle` must be valid for a pointer write.
 */
enum TsStatus ts_dissipation_new(double gamma_a,
                                 double gamma_b,
                                 double gamma_ab,
                                 double kappa,
                                 struct TsDissipation **out_handle);

/**
 * # Safety
 * `handle` must be null or come from [`ts_dissipation_new`], freed once.
 */
void ts_dissipation_free(struct TsDissipation *handle);

/**
 * Assembles the driven system for `target`; `bulk_index` is read only for
 * [`TsTarget::Bulk`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum TsStatus ts_response_new(const struct TsLattice *lattice,
                              const struct TsDissipation *dissipation,
                              enum TsTarget target,
                              size_t bulk_index,
                              double xi_scale,
                              struct TsResponse **out_handle);

/**
 * # Safety
 * `handle` must be null or come from [`ts_response_new`], freed once.
 */
void ts_response_free(struct TsResponse *handle);

/**
 * `chi(delta_a)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TsStatus ts_susceptibility(const struct TsResponse *handle,
                                double delta_a,
                                double *out_re,
                                double *out_im);

/**
 * Transmission at probe detuning `delta_c`; `shifted` selects the
 * convention `delta_a = delta_c` (nonzero) or `delta_a = 0` (zero).
 *
 * # Safety
 * Pointers must be valid.
 */
enum TsStatus ts_transmission(const struct TsResponse *handle,
                              double delta_c,
                              int32_t shifted,
                              double *out_transmission);

/**
 * Effective decay on the target resonance; `out_dark` is set to 1 when
 * the mode is decoupled from loss (`gamma_eff` is then 0).
 *
 * # Safety
 * `handle` and `out_gamma_eff` must be valid; `out_dark` may be null.
 */
enum TsStatus ts_effective_decay(const struct TsResponse *handle,
                                 double *out_gamma_eff,
                                 int32_t *out_dark);

/**
 * Coherence-transition point of the right edge mode with default sweep
 * options.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TsStatus ts_coherence_transition(const struct TsLattice *lattice,
                                      const struct TsDissipation *dissipation,
                                      double gamma_ab,
                                      double *out_delta_m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPO_SUPERATOM_H */
