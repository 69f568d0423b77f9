#ifndef COOPT_H
#define COOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum CooptStatus {
  COOPT_STATUS_OK = 0,
  COOPT_STATUS_NULL_POINTER = 1,
  COOPT_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed or inconsistent case data.
   */
  COOPT_STATUS_INPUT_ERROR = 3,
  /**
   * The optimization problem has no optimal solution.
   */
  COOPT_STATUS_INFEASIBLE = 4,
  /**
   * Period, generator, load or scenario index out of range.
   */
  COOPT_STATUS_OUT_OF_RANGE = 5,
  COOPT_STATUS_INTERNAL_ERROR = 6,
} CooptStatus;

/**
 * A validated market case.
 */
typedef struct CooptCase CooptCase;

/**
 * An optimal schedule with its prices.
 */
typedef struct CooptSolution CooptSolution;

typedef struct CooptGeneratorPrices {
  /**
   * $/MWh
   */
  double energy;
  /**
   * $/MW
   */
  double reserve_up;
  /**
   * $/MW
   */
  double reserve_down;
} CooptGeneratorPrices;

typedef struct CooptSimulationSummary {
  size_t samples;
  double mean_cost;
  double cost_std_error;
  double mean_net_revenue;
  double net_revenue_std_error;
  /**
   * Expected total cost from the recourse tables.
   */
  double expected_cost;
} CooptSimulationSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a case from a NUL-terminated JSON document.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a writable pointer.
 */
enum CooptStatus coopt_case_from_json(const char *json, struct CooptCase **out);

/**
 * Loads a case file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a writable pointer.
 */
enum CooptStatus coopt_case_from_file(const char *path, struct CooptCase **out);

/**
 * Releases a case. Null is ignored.
 *
 * # Safety
 * `case` must come from this library and not be used afterwards.
 */
void coopt_case_free(struct CooptCase *case_);

/**
 * Number of periods, or 0 for a null handle.
 *
 * # Safety
 * `case` must be null or a live case handle.
 */
size_t coopt_case_periods(const struct CooptCase *case_);

/**
 * # Safety
 * `case` must be null or a live case handle.
 */
size_t coopt_case_generators(const struct CooptCase *case_);

/**
 * # Safety
 * `case` must be null or a live case handle.
 */
size_t coopt_case_loads(const struct CooptCase *case_);

/**
 * # Safety
 * `case` must be null or a live case handle.
 */
size_t coopt_case_scenarios(const struct CooptCase *case_);

/**
 * Base-case probability.
 *
 * # Safety
 * `case` must be a live case handle and `out` writable.
 */
enum CooptStatus coopt_case_base_probability(const struct CooptCase *case_, double *out);

/**
 * Solves the co-optimization model and prices the result.
 *
 * # Safety
 * `case` must be a live case handle and `out` writable.
 */
enum CooptStatus coopt_solve(const struct CooptCase *case_, struct CooptSolution **out);

/**
 * Releases a solution. Null is ignored.
 *
 * # Safety
 * `solution` must come from [`coopt_solve`] and not be used afterwards.
 */
void coopt_solution_free(struct CooptSolution *solution);

/**
 * Optimal expected system cost.
 *
 * # Safety
 * `solution` must be a live solution handle and `out` writable.
 */
enum CooptStatus coopt_solution_objective(const struct CooptSolution *solution, double *out);

/**
 * Whether the optimality certificate of the solve passed.
 *
 * # Safety
 * `solution` must be null or a live solution handle.
 */
bool coopt_solution_kkt_passed(const struct CooptSolution *solution);

/**
 * Scheduled output, upward and downward reserve of a generator (zero-based
 * indices), written to `out[0..3]`.
 *
 * # Safety
 * `solution` must be a live solution handle and `out` point to 3 doubles.
 */
enum CooptStatus coopt_solution_schedule(const struct CooptSolution *solution,
                                         size_t period,
                                         size_t generator,
                                         double *out);

/**
 * Energy and reserve prices of a generator.
 *
 * # Safety
 * `solution` must be a live solution handle and `out` writable.
 */
enum CooptStatus coopt_generator_prices(const struct CooptSolution *solution,
                                        size_t period,
                                        size_t generator,
                                        struct CooptGeneratorPrices *out);

/**
 * Energy price of a load.
 *
 * # Safety
 * `solution` must be a live solution handle and `out` writable.
 */
enum CooptStatus coopt_load_price(const struct CooptSolution *solution,
                                  size_t period,
                                  size_t load,
                                  double *out);

/**
 * Expected operator surplus over all periods.
 *
 * # Safety
 * Both handles must be live, `solution` obtained from `case`, and `out`
 * writable.
 */
enum CooptStatus coopt_expected_surplus(const struct CooptCase *case_,
                                        const struct CooptSolution *solution,
                                        double *out);

/**
 * Total profit of a generator over all periods.
 *
 * # Safety
 * Both handles must be live, `solution` obtained from `case`, and `out`
 * writable.
 */
enum CooptStatus coopt_generator_profit(const struct CooptCase *case_,
                                        const struct CooptSolution *solution,
                                        size_t generator,
                                        double *out);

/**
 * Monte Carlo run of the co-optimized schedule.
 *
 * # Safety
 * Both handles must be live, `solution` obtained from `case`, and `out`
 * writable.
 */
enum CooptStatus coopt_simulate(const struct CooptCase *case_,
                                const struct CooptSolution *solution,
                                size_t samples,
                                uint64_t seed,
                                struct CooptSimulationSummary *out);

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *coopt_last_error(void);

/**
 * Static description of a status code.
 */
const char *coopt_status_message(enum CooptStatus status);

/**
 * Library version as a static string.
 */
const char *coopt_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COOPT_H */
