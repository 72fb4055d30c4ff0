#include <math.h>
#include <stdio.h>
#include <string.h>

#include "ppde.h"

#define CHECK(cond)                                              \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(void) {
  double knots[2] = {0.0, 1.0};
  double ramp[2] = {0.0, 1.0};
  double flat[2] = {0.0, 0.0};
  PpdePath *a = NULL, *b = NULL;
  CHECK(ppde_path_new(PPDE_PATH_KIND_LINEAR, 1, knots, 2, ramp, &a) == PPDE_STATUS_OK);
  CHECK(ppde_path_new(PPDE_PATH_KIND_LINEAR, 1, knots, 2, flat, &b) == PPDE_STATUS_OK);

  double d = -1.0;
  CHECK(ppde_distance(1.0, a, 1.0, b, 2.0, 1.0, &d) == PPDE_STATUS_OK);
  CHECK(d > 0.0);

  CHECK(ppde_distance(1.0, a, 1.0, b, 0.5, 1.0, &d) == PPDE_STATUS_INVALID_ARGUMENT);
  CHECK(ppde_last_error() != NULL && strlen(ppde_last_error()) > 0);
  CHECK(ppde_distance(1.0, NULL, 1.0, b, 2.0, 1.0, &d) == PPDE_STATUS_NULL_POINTER);

  PpdeConfig *cfg = NULL;
  CHECK(ppde_config_parse("p = 4\n", &cfg) == PPDE_STATUS_CONFIGURATION);
  CHECK(strstr(ppde_last_error(), "line 1") != NULL);

  ppde_path_free(a);
  ppde_path_free(b);
  ppde_path_free(NULL);
  printf("ok %s\n", ppde_version());
  return 0;
}
