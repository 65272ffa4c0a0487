#include <math.h>
#include <stdio.h>
#include <string.h>

#include "acps.h"

#define CHECK(cond)                                              \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "failed: %s (%s)\n", #cond,                \
              acps_last_error_message());                        \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(void) {
  AcpsForecast *f = NULL;
  CHECK(acps_forecast_normal(0.0, 1.0, &f) == ACPS_STATUS_OK);

  AcpsScoreKind crps = {ACPS_FAMILY_CRPS, 0.5, ACPS_WEIGHTING_NONE, ACPS_SCHEME_UNIFORM};
  AcpsScoreKind acps = {ACPS_FAMILY_ACPS, 0.5, ACPS_WEIGHTING_NONE, ACPS_SCHEME_UNIFORM};
  AcpsGrid grid = {-10.0, 10.0, 128};
  AcpsScoreValue c, a;
  CHECK(acps_score(f, 0.0, &crps, &grid, &c) == ACPS_STATUS_OK);
  CHECK(acps_score(f, 0.0, &acps, &grid, &a) == ACPS_STATUS_OK);
  CHECK(fabs(a.value - (20.0 - 4.0 * c.value)) < 1e-9);
  CHECK(c.orientation == ACPS_ORIENTATION_NEGATIVE);

  AcpsForecast *bad = NULL;
  CHECK(acps_forecast_beta(-1.0, 2.0, &bad) == ACPS_STATUS_ERR_DOMAIN);
  CHECK(bad == NULL);
  CHECK(strlen(acps_last_error_message()) > 0);

  acps_forecast_free(f);
  printf("ok %s\n", acps_version());
  return 0;
}
