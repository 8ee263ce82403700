#ifndef QREPATH_H
#define QREPATH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  QREPATH_STATUS_OK = 0,
  /**
   * Null pointer, bad index, short buffer or invalid configuration.
   */
  QREPATH_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The game text could not be parsed or does not describe a valid game.
   */
  QREPATH_STATUS_PARSE = 2,
  /**
   * The game does not have perfect recall.
   */
  QREPATH_STATUS_RECALL = 3,
  /**
   * The path was traced but did not end at a certified equilibrium.
   */
  QREPATH_STATUS_NO_CONVERGENCE = 4,
  QREPATH_STATUS_IO = 5,
  QREPATH_STATUS_INTERNAL = 6,
} QrepathStatus;

typedef struct QrepathGame QrepathGame;

typedef struct QrepathTrace QrepathTrace;

typedef struct {
  uint64_t seed;
  double kappa0;
  double alpha_scale;
  double t_end;
  double initial_step;
  double min_step;
  double max_step;
  double corrector_tol;
  double eps_nash;
  uint32_t max_restarts;
} QrepathConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *qrepath_last_error(void);

QrepathConfig qrepath_config_default(void);

/**
 * Parse a game from NUL-terminated JSON text and store a new handle in `*out`.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
QrepathStatus qrepath_game_parse(const char *json, QrepathGame **out);

/**
 * # Safety
 * `game` must be null or a handle from [`qrepath_game_parse`] that has not been freed.
 */
void qrepath_game_free(QrepathGame *game);

/**
 * # Safety
 * `game` must be a live handle.
 */
size_t qrepath_game_num_players(const QrepathGame *game);

/**
 * Number of sequences of `player`, the empty sequence included; 0 for a bad index.
 *
 * # Safety
 * `game` must be a live handle.
 */
size_t qrepath_game_num_sequences(const QrepathGame *game, size_t player);

/**
 * Trace one path from the random starting plan drawn from `config.seed`. A trace that ends
 * uncertified is still stored in `*out` and the call returns `NoConvergence`.
 *
 * # Safety
 * `game` must be a live handle; `config` null (defaults) or valid; `out` valid.
 */
QrepathStatus qrepath_solve(const QrepathGame *game,
                            const QrepathConfig *config,
                            QrepathTrace **out);

/**
 * # Safety
 * `trace` must be null or a handle from [`qrepath_solve`] that has not been freed.
 */
void qrepath_trace_free(QrepathTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle.
 */
bool qrepath_trace_converged(const QrepathTrace *trace);

/**
 * Largest best-response gain at the endpoint; NaN for a null handle.
 *
 * # Safety
 * `trace` must be a live handle.
 */
double qrepath_trace_nash_gap(const QrepathTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle.
 */
size_t qrepath_trace_num_points(const QrepathTrace *trace);

/**
 * Expected payoffs at the endpoint, one per player.
 *
 * # Safety
 * `trace` must be a live handle and `out` must hold `len` doubles.
 */
QrepathStatus qrepath_trace_payoffs(const QrepathTrace *trace, double *out, size_t len);

/**
 * Endpoint realization plan of `player`, indexed by sequence.
 *
 * # Safety
 * `trace` must be a live handle and `out` must hold `len` doubles.
 */
QrepathStatus qrepath_trace_realization(const QrepathTrace *trace,
                                        size_t player,
                                        double *out,
                                        size_t len);

/**
 * Write the traced path to `path` as CSV (`json` false) or JSON.
 *
 * # Safety
 * `game` must be the handle the trace was solved on; `path` a valid C string.
 */
QrepathStatus qrepath_trace_export(const QrepathGame *game,
                                   const QrepathTrace *trace,
                                   const char *path,
                                   bool json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QREPATH_H */
