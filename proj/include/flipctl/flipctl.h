/* C interface to the flipctl library.
 *
 * Every object is an opaque handle created by a *_parse / *_load / *_learn
 * call and released by the matching *_free. Functions return a status code;
 * on failure flipctl_last_error() describes the problem (per thread, valid
 * until the next call on that thread). Strings returned through char** are
 * heap-allocated and must be released with flipctl_string_free. */

#ifndef FLIPCTL_FLIPCTL_H
#define FLIPCTL_FLIPCTL_H

#include <stddef.h>
#include <stdint.h>

#if defined(FLIPCTL_BUILDING_LIBRARY)
#define FLIPCTL_API __attribute__((visibility("default")))
#else
#define FLIPCTL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum flipctl_status {
  FLIPCTL_OK = 0,
  FLIPCTL_ERR_PARSE = 1,
  FLIPCTL_ERR_INVALID_ARGUMENT = 2,
  FLIPCTL_ERR_RESOURCE = 3, /* size guard refused a dense allocation */
  FLIPCTL_ERR_STATE = 4,
  FLIPCTL_ERR_IO = 5,
  FLIPCTL_UNREACHABLE = 6,      /* command finished: target not reachable */
  FLIPCTL_ASSERTION_FAILED = 7, /* replication finished with a failed check */
  FLIPCTL_ERR_INTERNAL = 8
} flipctl_status;

FLIPCTL_API const char* flipctl_last_error(void);
FLIPCTL_API const char* flipctl_status_name(flipctl_status status);
FLIPCTL_API void flipctl_string_free(char* s);

/* ---- networks and problems ---------------------------------------------- */

typedef struct flipctl_network flipctl_network;
typedef struct flipctl_problem flipctl_problem;

FLIPCTL_API flipctl_status flipctl_network_parse(const char* text, flipctl_network** out);
FLIPCTL_API flipctl_status flipctl_network_load(const char* path, flipctl_network** out);
FLIPCTL_API void flipctl_network_free(flipctl_network* net);
FLIPCTL_API int flipctl_network_nodes(const flipctl_network* net);
FLIPCTL_API int flipctl_network_inputs(const flipctl_network* net);
/* Canonical network text. */
FLIPCTL_API flipctl_status flipctl_network_format(const flipctl_network* net, char** text);

/* One flipped step. States and inputs are bit strings ("011", x1 first);
 * flip_set is "{1,3}" or "" for no flip. `next` receives n + 1 bytes. */
FLIPCTL_API flipctl_status flipctl_network_step(const flipctl_network* net, const char* state,
                                                const char* input, const char* flip_set,
                                                char* next, size_t next_size);

FLIPCTL_API flipctl_status flipctl_problem_parse(const flipctl_network* net, const char* text,
                                                 flipctl_problem** out);
FLIPCTL_API flipctl_status flipctl_problem_load(const flipctl_network* net, const char* path,
                                                flipctl_problem** out);
FLIPCTL_API void flipctl_problem_free(flipctl_problem* problem);
FLIPCTL_API size_t flipctl_problem_initial_count(const flipctl_problem* problem);
FLIPCTL_API size_t flipctl_problem_target_count(const flipctl_problem* problem);

/* ---- learning ------------------------------------------------------------ */

typedef struct flipctl_training {
  uint64_t episodes;
  uint64_t max_steps; /* 0 selects 2^n - |Md| */
  double beta;
  double omega;
  double gamma;
} flipctl_training;

typedef struct flipctl_kernel_result flipctl_kernel_result;

/* variant: "basic", "fast", "small-memory" or "hybrid". */
FLIPCTL_API flipctl_status flipctl_find_kernels(const flipctl_network* net,
                                                const flipctl_problem* problem,
                                                const char* variant,
                                                const flipctl_training* training, uint64_t seed,
                                                flipctl_kernel_result** out);
FLIPCTL_API void flipctl_kernel_result_free(flipctl_kernel_result* result);
FLIPCTL_API size_t flipctl_kernel_count(const flipctl_kernel_result* result);
/* Kernel i as "{1,2}". */
FLIPCTL_API flipctl_status flipctl_kernel_at(const flipctl_kernel_result* result, size_t index,
                                             char** text);
/* Episodes until certification for flip set `flip_set`, 0 if never certified
 * or not trained. */
FLIPCTL_API uint64_t flipctl_kernel_episodes_to_certify(const flipctl_kernel_result* result,
                                                        const char* flip_set);

typedef struct flipctl_policy flipctl_policy;

/* algorithm: "dense", "sparse" or "min-step". weight_step <= 0 keeps w fixed. */
FLIPCTL_API flipctl_status flipctl_learn_policy(const flipctl_network* net,
                                                const flipctl_problem* problem,
                                                const char* flip_set, const char* algorithm,
                                                const flipctl_training* training, double weight,
                                                double weight_step, uint64_t seed,
                                                flipctl_policy** out);
FLIPCTL_API void flipctl_policy_free(flipctl_policy* policy);
/* Policy text: one "<state> -> u=<bits> flip={..}" line per state. */
FLIPCTL_API flipctl_status flipctl_policy_text(const flipctl_policy* policy, char** text);
/* Rollout of every initial state as CSV (x0,reached,steps,total_flips,return). */
FLIPCTL_API flipctl_status flipctl_policy_evaluate(const flipctl_policy* policy, uint64_t cap,
                                                   double weight, char** csv);
FLIPCTL_API double flipctl_policy_final_weight(const flipctl_policy* policy);

/* ---- batch commands -------------------------------------------------------- */

typedef struct flipctl_config flipctl_config;

FLIPCTL_API flipctl_status flipctl_config_load(const char* path, flipctl_config** out);
/* Relative paths in `text` resolve against base_dir (may be NULL). */
FLIPCTL_API flipctl_status flipctl_config_parse(const char* text, const char* base_dir,
                                                flipctl_config** out);
FLIPCTL_API void flipctl_config_free(flipctl_config* cfg);
FLIPCTL_API flipctl_status flipctl_config_set_seed(flipctl_config* cfg, uint64_t seed);
FLIPCTL_API flipctl_status flipctl_config_set_out(flipctl_config* cfg, const char* dir);

/* command: "kernels", "policy" or "oracle". The report is always set when the
 * status is FLIPCTL_OK, FLIPCTL_UNREACHABLE or FLIPCTL_ASSERTION_FAILED. */
FLIPCTL_API flipctl_status flipctl_run(const char* command, const flipctl_config* cfg,
                                       char** report);
/* example: "example2" or "example3". */
FLIPCTL_API flipctl_status flipctl_replicate(const char* example, const flipctl_config* cfg,
                                             char** report);

#ifdef __cplusplus
}
#endif

#endif /* FLIPCTL_FLIPCTL_H */
