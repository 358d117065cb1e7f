#ifndef STGNIT_STGNIT_H
#define STGNIT_STGNIT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(STGNIT_BUILDING_LIBRARY)
#define STGNIT_API __attribute__((visibility("default")))
#else
#define STGNIT_API
#endif

/* Status codes double as CLI exit codes. */
typedef enum stgnit_status {
  STGNIT_OK = 0,
  STGNIT_ERR_USAGE = 1,    /* bad argument, config key or value */
  STGNIT_ERR_DATA = 2,     /* malformed or inconsistent input, I/O failure */
  STGNIT_ERR_DIVERGED = 3, /* non-finite training loss */
  STGNIT_ERR_INTERNAL = 4
} stgnit_status;

typedef struct stgnit_config stgnit_config;
typedef struct stgnit_scenes stgnit_scenes;
typedef struct stgnit_grid stgnit_grid;
typedef struct stgnit_model stgnit_model;

/* Message of the last failed call on this thread; never NULL. */
STGNIT_API const char* stgnit_last_error(void);
STGNIT_API const char* stgnit_version(void);
STGNIT_API void stgnit_string_free(char* s);

/* Configuration: defaults, JSON file, key=value overrides. */
STGNIT_API stgnit_status stgnit_config_new(stgnit_config** out);
STGNIT_API stgnit_status stgnit_config_load(const char* path, stgnit_config** out);
/* value is JSON text or a bare string; nested keys use "synth.scenes". */
STGNIT_API stgnit_status stgnit_config_set(stgnit_config* config, const char* key, const char* value);
/* "ff", "pp" or "pf": sets train and test modes. */
STGNIT_API stgnit_status stgnit_config_set_mode(stgnit_config* config, const char* mode_pair);
/* "obs", "code" or "clu". */
STGNIT_API stgnit_status stgnit_config_add_ablation(stgnit_config* config, const char* name);
/* Caller frees *out with stgnit_string_free. */
STGNIT_API stgnit_status stgnit_config_to_json(const stgnit_config* config, char** out);
STGNIT_API void stgnit_config_free(stgnit_config* config);

/* Scene files (JSONL). */
STGNIT_API stgnit_status stgnit_scenes_load(const char* path, stgnit_scenes** out);
STGNIT_API stgnit_status stgnit_scenes_save(const stgnit_scenes* scenes, const char* path);
STGNIT_API size_t stgnit_scenes_count(const stgnit_scenes* scenes);
/* Observed entries over all scenes. */
STGNIT_API size_t stgnit_scenes_observed(const stgnit_scenes* scenes);
/* Corruption per the config's drop_fraction, corruption_seed and t_pred. */
STGNIT_API stgnit_status stgnit_scenes_corrupt(const stgnit_scenes* scenes, const stgnit_config* config,
                                               stgnit_scenes** observation_out);
STGNIT_API void stgnit_scenes_free(stgnit_scenes* scenes);

/* Occupancy grids. */
STGNIT_API stgnit_status stgnit_grid_from_cloud(const char* cloud_path, const stgnit_config* config,
                                                stgnit_grid** out);
STGNIT_API stgnit_status stgnit_grid_load(const char* path, stgnit_grid** out);
STGNIT_API stgnit_status stgnit_grid_save(const stgnit_grid* grid, const char* path);
STGNIT_API size_t stgnit_grid_occupied(const stgnit_grid* grid);
STGNIT_API void stgnit_grid_size(const stgnit_grid* grid, int* width, int* height);
STGNIT_API void stgnit_grid_free(stgnit_grid* grid);

/* Models. */
STGNIT_API stgnit_status stgnit_model_new(const stgnit_config* config, stgnit_model** out);
STGNIT_API stgnit_status stgnit_model_load(const char* path, stgnit_model** out);
STGNIT_API stgnit_status stgnit_model_save(const stgnit_model* model, const stgnit_config* config,
                                           const char* path);
STGNIT_API size_t stgnit_model_parameter_count(const stgnit_model* model);
/* Copies the model's shape (t_obs, n_gru, ...) into the config, and its
   training ablations when the config names none. */
STGNIT_API stgnit_status stgnit_config_adopt_model(stgnit_config* config, const stgnit_model* model);
STGNIT_API void stgnit_model_free(stgnit_model* model);

/* Commands. Paths and settings come from the config; each artifact embeds it. */
STGNIT_API stgnit_status stgnit_ingest(const char* input_path, const char* output_path, size_t* scenes_out);
STGNIT_API stgnit_status stgnit_synth(const stgnit_config* config, const char* out_dir);
STGNIT_API stgnit_status stgnit_corrupt(const stgnit_config* config, const char* out_dir);
/* init may be NULL. On divergence returns STGNIT_ERR_DIVERGED. */
STGNIT_API stgnit_status stgnit_train(const stgnit_config* config, const stgnit_model* init, stgnit_model** out,
                                      int* epochs_run, double* final_loss);
/* Writes report.json and report.txt under out_dir. */
STGNIT_API stgnit_status stgnit_eval(const stgnit_model* model, const stgnit_config* config, const char* out_dir,
                                     char** text_out);
STGNIT_API stgnit_status stgnit_predict(const stgnit_model* model, const stgnit_config* config,
                                        const char* out_path, size_t* records_out);
STGNIT_API stgnit_status stgnit_plot(const stgnit_config* config, const char* predictions_path,
                                     const char* out_dir, size_t* images_out);

#ifdef __cplusplus
}
#endif

#endif
