/* C interface to the sphtest library.
 *
 * Every function returns SPHTEST_OK or an error code; the message of the most
 * recent failure on the calling thread is available from sphtest_last_error().
 * Strings returned through char** out-parameters are owned by the caller and
 * released with sphtest_string_free(). Handles are released with their
 * matching *_free function; passing NULL to a free function is a no-op. */
#ifndef SPHTEST_SPHTEST_H
#define SPHTEST_SPHTEST_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SPHTEST_API __declspec(dllexport)
#else
#define SPHTEST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  SPHTEST_OK = 0,
  SPHTEST_USAGE_ERROR = 1,
  SPHTEST_DATA_ERROR = 2,
  SPHTEST_NUMERICAL_ERROR = 3
};

typedef struct sphtest_angular sphtest_angular;
typedef struct sphtest_weights sphtest_weights;
typedef struct sphtest_sample sphtest_sample;

SPHTEST_API const char* sphtest_version(void);
SPHTEST_API const char* sphtest_last_error(void);
SPHTEST_API void sphtest_string_free(char* s);

/* "vmf", "watson", "cauchy", "power" (with b >= 1) or "power_<b>". */
SPHTEST_API int sphtest_angular_create(const char* name, int b, sphtest_angular** out);
SPHTEST_API void sphtest_angular_free(sphtest_angular* f);

/* "rayleigh", "bingham", "3-test" or a comma list v_1,v_2,... */
SPHTEST_API int sphtest_weights_parse(const char* spec, sphtest_weights** out);
SPHTEST_API void sphtest_weights_free(sphtest_weights* w);

/* Sample CSV: header x1,...,xp, one unit vector per line. */
SPHTEST_API int sphtest_sample_from_csv(const char* text, sphtest_sample** out);
/* n draws from the rotationally symmetric law with location e_p (uniform when kappa = 0). */
SPHTEST_API int sphtest_sample_simulate(int p, size_t n, double kappa, const sphtest_angular* f, uint64_t seed,
                                        sphtest_sample** out);
SPHTEST_API int sphtest_sample_to_csv(const sphtest_sample* s, char** out);
SPHTEST_API int sphtest_sample_dim(const sphtest_sample* s);
SPHTEST_API size_t sphtest_sample_size(const sphtest_sample* s);
SPHTEST_API void sphtest_sample_free(sphtest_sample* s);

/* Level-alpha Sobolev test against the null mixture law; writes key=value lines.
 * draws = 0 selects the default Monte Carlo size. */
SPHTEST_API int sphtest_run_test(const sphtest_sample* s, const sphtest_weights* w, double alpha, size_t draws,
                                 uint64_t law_seed, char** record);

/* Detection-threshold classification up to order q (q = 0: as far as f allows). */
SPHTEST_API int sphtest_classify(const sphtest_weights* w, const sphtest_angular* f, int p, int q, char** record);

/* CSV tau,power,se,flag. ell = 0 evaluates at the detection threshold; otherwise
 * at kappa_n = n^{-1/ell} tau with trivial cells flagged 1. */
SPHTEST_API int sphtest_asymptotic_curve(const sphtest_weights* w, const sphtest_angular* f, int p, int ell,
                                         const double* taus, size_t ntau, double alpha, size_t draws, char** csv);

/* Runs an experiment given the text of an [experiment] config; writes the
 * power table CSV. threads > 0 overrides the config. */
SPHTEST_API int sphtest_power_experiment(const char* config_text, unsigned threads, char** csv);

/* Power table CSV to a standalone SVG document. */
SPHTEST_API int sphtest_plot_svg(const char* table_csv, double alpha, char** svg);

#ifdef __cplusplus
}
#endif

#endif /* SPHTEST_SPHTEST_H */
