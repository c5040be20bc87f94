/* Compiled as C to prove plf.h is a usable C header. */
#include <stdio.h>
#include <string.h>

#include "plf.h"

static int failures = 0;

static void expect(int ok, const char* what) {
  if (!ok) {
    ++failures;
    fprintf(stderr, "FAILED: %s\n", what);
  }
}

int main(void) {
  const float data[6] = {3.0f, 4.0f, 0.0f, 5.0f, 0.0f, 12.0f};
  float back[6];
  plf_features* f = NULL;
  plf_distmat* d = NULL;

  expect(plf_version() != NULL && strlen(plf_version()) > 0, "version string");
  expect(strcmp(plf_status_name(PLF_OK), "ok") == 0, "status name for OK");
  expect(strcmp(plf_status_name(PLF_ERR_FORMAT), "format error") == 0, "status name for FORMAT");

  expect(plf_features_create(2, 3, data, &f) == PLF_OK, "create features");
  expect(plf_features_rows(f) == 2 && plf_features_dim(f) == 3, "features shape");
  expect(plf_features_normalize_rows(f) == PLF_OK, "normalize");
  expect(plf_features_copy_data(f, back, 6) == PLF_OK, "copy data");
  expect(back[0] > 0.59f && back[0] < 0.61f, "normalized value");

  expect(plf_pairwise_euclidean(f, &d) == PLF_OK, "pairwise distances");
  expect(plf_distmat_rows(d) == 2 && plf_distmat_cols(d) == 2, "distmat shape");
  expect(plf_distmat_kind(d) == PLF_DIST_EUCLIDEAN, "distmat kind");

  expect(plf_features_create(2, 3, NULL, &f) == PLF_ERR_INVALID_ARG, "null data rejected");
  expect(plf_last_error() != NULL && strlen(plf_last_error()) > 0, "error message set");

  plf_distmat_free(d);
  plf_features_free(f);
  plf_features_free(NULL); /* must be a no-op */
  plf_string_free(NULL);

  if (failures == 0) printf("c_header_check: all checks passed\n");
  return failures == 0 ? 0 : 1;
}
