#ifndef LEVEX_H
#define LEVEX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes. Zero is success.
 */
typedef enum LevexStatus {
  LEVEX_STATUS_OK = 0,
  LEVEX_STATUS_NULL_POINTER = 1,
  LEVEX_STATUS_INVALID_ARGUMENT = 2,
  LEVEX_STATUS_INVALID_GRID = 3,
  LEVEX_STATUS_INVALID_BC = 4,
  LEVEX_STATUS_LENGTH_MISMATCH = 5,
  LEVEX_STATUS_NON_FINITE = 6,
  LEVEX_STATUS_DEGENERATE_MASK = 7,
  LEVEX_STATUS_CONTRACT = 8,
  LEVEX_STATUS_SINGULAR = 9,
  LEVEX_STATUS_BREAKDOWN = 10,
  LEVEX_STATUS_TOO_LARGE = 11,
  LEVEX_STATUS_CFL = 12,
  LEVEX_STATUS_PARSE = 13,
  LEVEX_STATUS_IO = 14,
  LEVEX_STATUS_PANIC = 15,
} LevexStatus;

/*
 Boundary condition kinds for [`levex_bc_new`].
 */
typedef enum LevexBcKind {
  LEVEX_BC_KIND_DIRICHLET_ZERO = 0,
  LEVEX_BC_KIND_NEUMANN_ZERO = 1,
  LEVEX_BC_KIND_PERIODIC = 2,
} LevexBcKind;

/*
 Linear solver for [`levex_extend`].
 */
typedef enum LevexMethod {
  LEVEX_METHOD_PCG = 0,
  LEVEX_METHOD_DENSE = 1,
} LevexMethod;

/*
 Extrapolation order for [`levex_extrapolate`].
 */
typedef enum LevexOrder {
  LEVEX_ORDER_CONSTANT = 0,
  LEVEX_ORDER_LINEAR = 1,
  LEVEX_ORDER_QUADRATIC = 2,
} LevexOrder;

/*
 Opaque boundary condition handle.
 */
typedef struct LevexBc LevexBc;

/*
 Opaque grid handle.
 */
typedef struct LevexGrid LevexGrid;

typedef struct LevexSolveStats {
  size_t iterations;
  double relative_residual;
  /*
   1 if the tolerance was reached.
   */
  int32_t converged;
} LevexSolveStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread into `buf` (NUL
 terminated, truncated to `len`). Returns the full message length, or 0
 if there is none.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t levex_last_error(char *buf, size_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *levex_version(void);

/*
 Creates a node-centred grid with `ndim` (1 to 3) axes.

 # Safety
 `dims`, `origin` and `spacing` must point to `ndim` values; `out` must
 be valid for writes.
 */
enum LevexStatus levex_grid_new(size_t ndim,
                                const size_t *dims,
                                const double *origin,
                                const double *spacing,
                                struct LevexGrid **out);

/*
 Number of nodes, or 0 for a null handle.

 # Safety
 `grid` must be null or a live handle.
 */
size_t levex_grid_len(const struct LevexGrid *grid);

/*
 # Safety
 `grid` must be null or a handle from [`levex_grid_new`] not yet freed.
 */
void levex_grid_free(struct LevexGrid *grid);

/*
 Boundary conditions per axis: `low[a]` and `high[a]` for each of the
 `ndim` axes. A periodic axis must be periodic on both faces.

 # Safety
 `low` and `high` must point to `ndim` values; `out` must be valid for
 writes.
 */
enum LevexStatus levex_bc_new(size_t ndim,
                              const enum LevexBcKind *low,
                              const enum LevexBcKind *high,
                              struct LevexBc **out);

/*
 # Safety
 `bc` must be null or a handle from [`levex_bc_new`] not yet freed.
 */
void levex_bc_free(struct LevexBc *bc);

/*
 Biharmonic extension. Nodes with `known[k] != 0` keep `values[k]`; the
 rest of `out` is filled in. `tol <= 0` and `maxit == 0` select the
 defaults. `stats` may be null.

 # Safety
 `values`, `known` and `out` must each hold `len` elements, `len` must
 equal the grid's node count, and the handles must be live.
 */
enum LevexStatus levex_extend(const struct LevexGrid *grid,
                              const struct LevexBc *bc,
                              const double *values,
                              const uint8_t *known,
                              size_t len,
                              enum LevexMethod method,
                              double tol,
                              size_t maxit,
                              double *out,
                              struct LevexSolveStats *stats);

/*
 PDE extrapolation from `phi <= 0` outward along the normals of `phi`,
 with the default pseudo-time settings.

 # Safety
 `values`, `phi` and `out` must each hold `len` elements matching the
 grid's node count; the grid handle must be live.
 */
enum LevexStatus levex_extrapolate(const struct LevexGrid *grid,
                                   const double *values,
                                   const double *phi,
                                   size_t len,
                                   enum LevexOrder order,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVEX_H */
