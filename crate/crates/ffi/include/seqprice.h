/* C interface for the seqprice mechanism laboratory.
 *
 * Every fallible function returns a status code; SEQ_OK (0) means success.
 * On error the out parameters are untouched and a thread-local message is
 * available through seq_last_error(). Handles are opaque; release them
 * with the matching *_free (null is accepted). Strings returned through
 * char** are NUL-terminated UTF-8 owned by the library; release them with
 * seq_string_free(). Exact quantities are rational strings like "25/96".
 * Instances and policies are exchanged as JSON in the same dialect the
 * command line tool uses.
 */

#ifndef SEQPRICE_H
#define SEQPRICE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  SEQ_OK = 0,
  SEQ_ERR_INVALID_ARGUMENT = 1,
  SEQ_ERR_INVALID_DISTRIBUTION = 2,
  SEQ_ERR_EMPTY_EVENT = 3,
  SEQ_ERR_UNSUPPORTED_INSTANCE = 4,
  SEQ_ERR_CAPACITY = 5,
  SEQ_ERR_COVERAGE = 6,
  SEQ_ERR_FORMAT = 7,
  SEQ_ERR_INTERNAL = 8,
  SEQ_ERR_IO = 9,
  SEQ_ERR_NULL_POINTER = 10,
  SEQ_ERR_UTF8 = 11
};

/* Opaque valuation instance handle. */
typedef struct SeqInstance SeqInstance;

/* Opaque policy handle. */
typedef struct SeqPolicy SeqPolicy;

/* Message for the most recent error on this thread. Valid until the next
 * failing call on the same thread; never free it. */
const char *seq_last_error(void);

/* Parses an instance from JSON into a new handle. */
int32_t seq_instance_from_json(const char *json, SeqInstance **out);

/* Serializes an instance back to canonical JSON. */
int32_t seq_instance_to_json(const SeqInstance *inst, char **out);

/* Number of buyers. */
int32_t seq_instance_n(const SeqInstance *inst, size_t *out);

/* Number of available items. */
int32_t seq_instance_k(const SeqInstance *inst, size_t *out);

/* Releases an instance handle. Accepts null. */
void seq_instance_free(SeqInstance *inst);

/* Parses a policy from JSON into a new handle. */
int32_t seq_policy_from_json(const char *json, SeqPolicy **out);

/* Serializes a policy back to JSON. */
int32_t seq_policy_to_json(const SeqPolicy *policy, char **out);

/* Releases a policy handle. Accepts null. */
void seq_policy_free(SeqPolicy *policy);

/* Builds the blind-offer policy for the instance from the optimal
 * allocation rule; with dsic nonzero, damps it into the strategyproof
 * variant. */
int32_t seq_build_blind(const SeqInstance *inst, int32_t dsic, SeqPolicy **out);

/* Exact expected revenue of the policy on the instance, as a rational
 * string. */
int32_t seq_exact_revenue(const SeqPolicy *policy, const SeqInstance *inst,
                          char **out);

/* Monte Carlo revenue estimate with a normal-approximation 95% interval. */
int32_t seq_mc_revenue(const SeqPolicy *policy, const SeqInstance *inst,
                       uint64_t trials, uint64_t seed, double *mean,
                       double *half_width_95);

/* Expected optimal social welfare of the instance (best k values per
 * outcome), as a rational string. */
int32_t seq_osw(const SeqInstance *inst, char **out);

/* Upper bound on the revenue of any truthful mechanism for the instance,
 * as a rational string. */
int32_t seq_lp_bound(const SeqInstance *inst, char **out);

/* Converts the policy to outcome-table form and runs the four
 * truthfulness audits, writing the total number of findings. */
int32_t seq_audit_count(const SeqPolicy *policy, const SeqInstance *inst,
                        uint64_t *out);

/* Releases a string returned by this library. Accepts null. */
void seq_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif /* SEQPRICE_H */
