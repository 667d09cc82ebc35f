/* Exercises the C interface from plain C. */
#include <stdio.h>
#include <string.h>

#include "detform/detform.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: %s failed\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static const char* flow_text =
    "[experiment]\nkind = bounds\n"
    "[flow]\nnu = 1\nL = 6.283185307179586\nresolution = 16\n"
    "force = kolmogorov:k=(0,4):0.05\n";

int main(void) {
  EXPECT(strncmp(df_version(), "detform ", 8) == 0);

  df_config* c = NULL;
  EXPECT(df_config_parse("[flow]\nnu = x\n", &c) == DF_CONFIG);
  EXPECT(c == NULL);
  EXPECT(strstr(df_last_error(), "flow.nu expects a real number") != NULL);

  EXPECT(df_config_parse(flow_text, &c) == DF_OK);
  EXPECT(df_config_set(c, "flow.bogus", "1") == DF_CONFIG);
  EXPECT(df_config_set(c, "experiment.output_dir", "capi_out") == DF_OK);
  EXPECT(df_config_set(c, "bounds.g_count", "3") == DF_OK);
  EXPECT(df_config_finalize(c) == DF_OK);
  EXPECT(strcmp(df_config_get(c, "flow.dt"), "0.01") == 0);
  EXPECT(df_config_get(c, "nudge.mu") == NULL);

  df_flow* f = NULL;
  EXPECT(df_flow_new(c, &f) == DF_OK);
  EXPECT(df_flow_grashof(f) > 0);

  /* Eigenfunction force: the steady state is f / (nu |k|^2) in closed form. */
  df_field* u = NULL;
  double residual = 1;
  EXPECT(df_steady_state(f, &u, &residual) == DF_OK);
  EXPECT(residual < 1e-14);
  double l2 = 0, h1 = 0, h2 = 0, l2b = 0;
  EXPECT(df_field_norms(u, &l2, &h1, &h2) == DF_OK);
  EXPECT(df_step(f, u, 10) == DF_OK);
  EXPECT(df_field_norms(u, &l2b, NULL, NULL) == DF_OK);
  EXPECT(l2b > 0.999999999 * l2 && l2b < 1.000000001 * l2);
  EXPECT(df_field_save(u, "capi_field.dfl") == DF_OK);
  df_field* v = NULL;
  double l2c = 0;
  EXPECT(df_field_load("capi_field.dfl", &v) == DF_OK);
  EXPECT(df_field_norms(v, &l2c, NULL, NULL) == DF_OK);
  EXPECT(l2c == l2b);
  df_field* missing = NULL;
  EXPECT(df_field_load("no_such_file.dfl", &missing) == DF_IO);
  EXPECT(missing == NULL);
  EXPECT(df_step(f, NULL, 1) == DF_INVALID_ARGUMENT);

  df_run* r = NULL;
  EXPECT(df_experiment_run(c, &r) == DF_OK);
  EXPECT(df_run_passed(r) == 1);
  EXPECT(strncmp(df_run_summary(r), "PASS implication_violations", 27) == 0);
  int ok = 0;
  EXPECT(df_manifest_verify(df_run_manifest_path(r), &ok) == DF_OK);
  EXPECT(ok == 1);

  char buf[64];
  size_t needed = 0;
  EXPECT(df_bounds_text(1.0, 10, 1.0, buf, sizeof buf, &needed) == DF_OK);
  EXPECT(needed > sizeof buf);
  EXPECT(strlen(buf) == sizeof buf - 1);
  EXPECT(strncmp(buf, "G=1", 3) == 0);

  df_run_free(r);
  df_field_free(u);
  df_field_free(v);
  df_flow_free(f);
  df_config_free(c);
  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  return failures ? 1 : 0;
}
