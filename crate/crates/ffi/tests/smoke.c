#include <stdio.h>
#include <stdlib.h>
#include "chemosim.h"

#define CHECK(call)                                                            \
  do {                                                                         \
    ChemosimStatus s_ = (call);                                                \
    if (s_ != CHEMOSIM_STATUS_OK) {                                            \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, chemosim_last_error()); \
      return 1;                                                                \
    }                                                                          \
  } while (0)

int main(void) {
  const char *text =
      "[grid]\ndim = 1\nnx = 32\nlx = 1\n"
      "[model]\ntau = 1\nbeta = 1\n"
      "[motility]\nfamily = power\nk = 1\n"
      "[consumption]\nfamily = monod\nk = 1\n"
      "[initial]\nu_profile = noise\nu = 1\nu_amplitude = 0.5\nv = 1\nn = 1\n"
      "[time]\nt_end = 1\n[output]\ninterval = 0.5\n";
  ChemosimConfig *cfg = NULL;
  ChemosimSim *sim = NULL;
  CHECK(chemosim_config_parse(text, &cfg));
  CHECK(chemosim_sim_new(cfg, &sim));
  double m0, m1, t;
  size_t nx, ny;
  CHECK(chemosim_sim_total_mass(sim, &m0));
  CHECK(chemosim_sim_advance(sim, 2.0));
  CHECK(chemosim_sim_time(sim, &t));
  CHECK(chemosim_sim_total_mass(sim, &m1));
  CHECK(chemosim_sim_shape(sim, &nx, &ny));
  double *u = malloc(nx * ny * sizeof(double));
  CHECK(chemosim_sim_copy_field(sim, CHEMOSIM_FIELD_U, u, nx * ny));
  if (chemosim_sim_copy_field(sim, CHEMOSIM_FIELD_U, u, 3) != CHEMOSIM_STATUS_INVALID_ARGUMENT) return 2;
  if (chemosim_sim_advance(NULL, 1.0) != CHEMOSIM_STATUS_NULL_POINTER) return 3;
  printf("version=%s t=%.17g nx=%zu ny=%zu m0=%.17g m1=%.17g u0=%.17g\n", chemosim_version(), t, nx, ny, m0, m1, u[0]);
  free(u);
  chemosim_sim_free(sim);
  chemosim_config_free(cfg);
  return 0;
}
