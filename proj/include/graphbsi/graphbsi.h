/* C interface to the graph sampler library. All functions return a status
 * code; on failure gbsi_last_error() describes the problem (per thread). */
#ifndef GRAPHBSI_GRAPHBSI_H
#define GRAPHBSI_GRAPHBSI_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GBSI_API __declspec(dllexport)
#else
#define GBSI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gbsi_status {
  GBSI_OK = 0,
  GBSI_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad buffer */
  GBSI_ERR_CONFIG = 2,           /* invalid parameters or config values */
  GBSI_ERR_NUMERIC = 3,          /* non-finite values, divergence */
  GBSI_ERR_IO = 4,               /* unreadable/unwritable file, bad checkpoint */
  GBSI_ERR_PARSE = 5,            /* malformed text input; message has the line */
  GBSI_ERR_DOMAIN = 6,           /* argument outside an operation's domain */
  GBSI_ERR_INTERNAL = 7
} gbsi_status;

GBSI_API const char* gbsi_last_error(void);
GBSI_API const char* gbsi_version(void);

/* Exponential precision schedule of one channel. */
typedef struct gbsi_schedule_params {
  double beta_start;
  double beta_end;
  double beta0;
} gbsi_schedule_params;

typedef enum gbsi_stability_method {
  GBSI_STABILITY_SAMPLED_GRADIENT = 0, /* 100-point grid, finite-difference beta' */
  GBSI_STABILITY_ANALYTIC = 1,
  GBSI_STABILITY_DENSE_GRID = 2
} gbsi_stability_method;

GBSI_API gbsi_status gbsi_schedule_beta(const gbsi_schedule_params* s, double t, double* out);
GBSI_API gbsi_status gbsi_schedule_beta_prime(const gbsi_schedule_params* s, double t, double* out);
GBSI_API gbsi_status gbsi_min_stability_ratio(const gbsi_schedule_params* s,
                                              gbsi_stability_method method, double* out);
/* Largest gamma for which Euler-Maruyama stays stable at step size dt. */
GBSI_API gbsi_status gbsi_max_stable_gamma(const gbsi_schedule_params* s, double dt,
                                           gbsi_stability_method method, double* out);

/* Run configuration (flat section.key = value). */
typedef struct gbsi_config gbsi_config;

GBSI_API gbsi_status gbsi_config_create(gbsi_config** out);
GBSI_API gbsi_status gbsi_config_load(const char* path, gbsi_config** out);
GBSI_API gbsi_status gbsi_config_set(gbsi_config* cfg, const char* key, const char* value);
/* Copies the value and its terminator into buf if it fits; *needed (optional)
 * receives the required size including the terminator. */
GBSI_API gbsi_status gbsi_config_get(const gbsi_config* cfg, const char* key, char* buf,
                                     size_t buf_len, size_t* needed);
GBSI_API gbsi_status gbsi_config_validate(const gbsi_config* cfg);
GBSI_API void gbsi_config_destroy(gbsi_config* cfg);

typedef void (*gbsi_progress_fn)(size_t step, double loss, void* user);

/* Generates the configured dataset and trains a model. Writes model.ckpt,
 * losses.txt (step,loss) and train.graphs into out_dir, which must exist.
 * final_loss (optional) receives the mean loss of the last 100 steps. */
GBSI_API gbsi_status gbsi_train(const gbsi_config* cfg, const char* out_dir,
                                gbsi_progress_fn progress, void* user, double* final_loss);

typedef struct gbsi_model gbsi_model;

GBSI_API gbsi_status gbsi_model_load(const char* path, gbsi_model** out);
GBSI_API void gbsi_model_destroy(gbsi_model* model);
/* Dataset family the model was trained on, e.g. "all-trees". */
GBSI_API const char* gbsi_model_family(const gbsi_model* model);

typedef struct gbsi_sampler_params {
  const char* scheme; /* discrete | em | ou | inf-noise | inf-noise-fixed-prior */
  int steps;
  double gamma;
  double rho;
} gbsi_sampler_params;

/* Minimum over both channels of the EM stability limit at the largest step
 * of the sampler's time grid. */
GBSI_API gbsi_status gbsi_model_max_stable_gamma(const gbsi_model* model,
                                                 const gbsi_sampler_params* params, double* out);

/* Writes `count` graphs to out_path in the graph file format. */
GBSI_API gbsi_status gbsi_sample_graphs(const gbsi_model* model, const gbsi_sampler_params* params,
                                        uint64_t seed, size_t count, const char* out_path);

typedef struct gbsi_metrics {
  double validity;
  double uniqueness;
  double novelty;
  double degree_hist_tv;
  size_t samples;
} gbsi_metrics;

/* family: all-trees | cycles-vs-paths | two-class-sbm (selects the validity
 * oracle). An empty samples file is a parse error. */
GBSI_API gbsi_status gbsi_evaluate_files(const char* samples_path, const char* train_path,
                                         const char* family, gbsi_metrics* out);

/* Frozen-reconstructor trajectories of a single channel. */
typedef struct gbsi_trajectory_params {
  gbsi_schedule_params schedule;
  size_t categories;
  size_t target_class;
  const char* scheme; /* em | ou | discrete | inf-noise | inf-noise-fixed-prior */
  int steps;
  double rho;
  uint64_t seed;
  size_t runs;        /* trajectories used for the terminal statistics */
  size_t dump_runs;   /* leading trajectories written to the dump */
  int shared_prior;   /* nonzero: every run starts from the same z0 */
} gbsi_trajectory_params;

typedef struct gbsi_trajectory_stats {
  double gamma;
  double target_mean;     /* empirical mean of the target logit at t = 1 */
  double target_mean_se;  /* its standard error */
  double expected_target_mean;
  double variance;        /* per-coordinate variance, averaged over coordinates */
  double expected_variance;
  double blowup_fraction; /* runs with a coordinate beyond 10 analytic sd */
} gbsi_trajectory_stats;

/* For each gamma, runs `runs` trajectories and fills stats[i]. dump_path
 * (optional) receives `# key=value` config lines, then one
 * `gamma,run,step,t,category,logit` row per value of the first dump_runs
 * runs; sidecar_path (optional) receives `t,beta,mean_0..,variance` of the
 * analytic marginal at each grid time. */
GBSI_API gbsi_status gbsi_trajectories(const gbsi_trajectory_params* params, const double* gammas,
                                       size_t n_gammas, const char* dump_path,
                                       const char* sidecar_path, gbsi_trajectory_stats* stats);

#ifdef __cplusplus
}
#endif

#endif
