/* Exercises the shared library through its C interface only. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "stgnit/stgnit.h"

static int failures = 0;

#define EXPECT(cond)                                                      \
  do {                                                                    \
    if (!(cond)) {                                                        \
      fprintf(stderr, "%s:%d: expected %s (last error: %s)\n", __FILE__, \
              __LINE__, #cond, stgnit_last_error());                      \
      ++failures;                                                         \
    }                                                                     \
  } while (0)

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : "capi_work";
  char path[1024];

  EXPECT(strlen(stgnit_version()) > 0);

  /* Argument and usage errors. */
  EXPECT(stgnit_config_new(NULL) == STGNIT_ERR_USAGE);
  EXPECT(strlen(stgnit_last_error()) > 0);
  stgnit_config* cfg = NULL;
  EXPECT(stgnit_config_new(&cfg) == STGNIT_OK);
  EXPECT(stgnit_config_set(cfg, "no_such_key", "1") == STGNIT_ERR_USAGE);
  EXPECT(strstr(stgnit_last_error(), "no_such_key") != NULL);
  EXPECT(stgnit_config_set_mode(cfg, "xx") == STGNIT_ERR_USAGE);
  EXPECT(stgnit_config_add_ablation(cfg, "walls") == STGNIT_ERR_USAGE);
  EXPECT(stgnit_config_set(cfg, "batch_size", "0") == STGNIT_ERR_USAGE);

  /* Data errors. */
  stgnit_scenes* scenes = NULL;
  EXPECT(stgnit_scenes_load("definitely/missing.jsonl", &scenes) == STGNIT_ERR_DATA);
  EXPECT(scenes == NULL);
  stgnit_model* model = NULL;
  EXPECT(stgnit_model_load("definitely/missing.stgnit", &model) == STGNIT_ERR_DATA);

  /* A tiny end-to-end run. */
  EXPECT(stgnit_config_set(cfg, "batch_size", "4") == STGNIT_OK);
  EXPECT(stgnit_config_set(cfg, "n_gru", "8") == STGNIT_OK);
  EXPECT(stgnit_config_set(cfg, "mlp_hidden", "8") == STGNIT_OK);
  EXPECT(stgnit_config_set(cfg, "epochs", "2") == STGNIT_OK);
  EXPECT(stgnit_config_set(cfg, "stride", "6") == STGNIT_OK);
  EXPECT(stgnit_config_set(cfg, "synth.scenes", "1") == STGNIT_OK);
  EXPECT(stgnit_config_set(cfg, "synth.pedestrians", "4") == STGNIT_OK);
  EXPECT(stgnit_config_set(cfg, "synth.frames", "30") == STGNIT_OK);
  EXPECT(stgnit_synth(cfg, dir) == STGNIT_OK);

  snprintf(path, sizeof path, "%s/scenes.jsonl", dir);
  EXPECT(stgnit_scenes_load(path, &scenes) == STGNIT_OK);
  EXPECT(stgnit_scenes_count(scenes) == 1);
  EXPECT(stgnit_scenes_observed(scenes) > 0);
  stgnit_scenes* corrupted = NULL;
  EXPECT(stgnit_scenes_corrupt(scenes, cfg, &corrupted) == STGNIT_OK);
  EXPECT(stgnit_scenes_observed(corrupted) < stgnit_scenes_observed(scenes));
  stgnit_scenes_free(corrupted);
  stgnit_scenes_free(scenes);

  EXPECT(stgnit_config_set(cfg, "dataset", path) == STGNIT_OK);
  snprintf(path, sizeof path, "%s/out", dir);
  EXPECT(stgnit_config_set(cfg, "out", path) == STGNIT_OK);
  int epochs = 0;
  double loss = 0.0;
  EXPECT(stgnit_train(cfg, NULL, &model, &epochs, &loss) == STGNIT_OK);
  EXPECT(epochs == 2);
  EXPECT(loss > 0.0);
  EXPECT(stgnit_model_parameter_count(model) > 0);

  char* text = NULL;
  snprintf(path, sizeof path, "%s/eval", dir);
  EXPECT(stgnit_eval(model, cfg, path, &text) == STGNIT_OK);
  EXPECT(text != NULL && strstr(text, "minADE") != NULL);
  stgnit_string_free(text);

  size_t records = 0;
  snprintf(path, sizeof path, "%s/predictions.jsonl", dir);
  EXPECT(stgnit_predict(model, cfg, path, &records) == STGNIT_OK);
  EXPECT(records > 0);

  /* A model with a different shape is rejected by a mismatched config. */
  snprintf(path, sizeof path, "%s/model.stgnit", dir);
  EXPECT(stgnit_model_save(model, cfg, path) == STGNIT_OK);
  stgnit_model* reloaded = NULL;
  EXPECT(stgnit_model_load(path, &reloaded) == STGNIT_OK);
  EXPECT(stgnit_model_parameter_count(reloaded) == stgnit_model_parameter_count(model));
  stgnit_config* other = NULL;
  EXPECT(stgnit_config_new(&other) == STGNIT_OK);
  EXPECT(stgnit_config_adopt_model(other, reloaded) == STGNIT_OK);
  char* json = NULL;
  EXPECT(stgnit_config_to_json(other, &json) == STGNIT_OK);
  EXPECT(json != NULL && strstr(json, "\"n_gru\": 8") != NULL);
  stgnit_string_free(json);

  stgnit_config_free(other);
  stgnit_model_free(reloaded);
  stgnit_model_free(model);
  stgnit_config_free(cfg);

  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("c api: ok\n");
  return 0;
}
