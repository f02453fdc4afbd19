#ifndef QMF_H
#define QMF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define QMF_API __attribute__((visibility("default")))
#else
#define QMF_API
#endif

typedef enum {
    QMF_OK = 0,
    QMF_ERR_SHAPE,
    QMF_ERR_CONTRACT,
    QMF_ERR_DOMAIN,
    QMF_ERR_UNSUPPORTED,
    QMF_ERR_REFUSED,
    QMF_ERR_TRUNCATION,
    QMF_ERR_NUMERICAL,
    QMF_ERR_MISSING_INPUT,
    QMF_ERR_INTERNAL
} qmf_status;

typedef struct qmf_config qmf_config;
typedef struct qmf_result qmf_result;

QMF_API const char* qmf_version(void);
/* message of the last failing call on this thread ("" after success) */
QMF_API const char* qmf_last_error(void);
QMF_API const char* qmf_status_name(qmf_status s);
/* 0 ok, 1 contract/validation, 2 missing input, 3 numerical or truncation */
QMF_API int qmf_exit_code(qmf_status s);

QMF_API size_t qmf_experiment_count(void);
QMF_API const char* qmf_experiment_name(size_t i);

/* validate a JSON config for an experiment; defaults are filled in */
QMF_API qmf_status qmf_config_parse(const char* experiment, const char* json_text, qmf_config** out);
QMF_API qmf_status qmf_config_load(const char* experiment, const char* path, qmf_config** out);
/* an all-defaults config */
QMF_API qmf_status qmf_config_default(const char* experiment, qmf_config** out);
/* resolved config as JSON; owned by the handle */
QMF_API const char* qmf_config_json(const qmf_config* cfg);
QMF_API const char* qmf_config_hash(const qmf_config* cfg);
QMF_API void qmf_config_free(qmf_config* cfg);

/* run the experiment, writing CSV and summary files into out_dir */
QMF_API qmf_status qmf_run(const qmf_config* cfg, const char* out_dir, uint64_t seed, int threads, qmf_result** out);
/* collect the runs of a directory into report.json and report.gp */
QMF_API qmf_status qmf_report(const char* run_dir, qmf_result** out);
/* summary JSON; owned by the handle */
QMF_API const char* qmf_result_json(const qmf_result* r);
QMF_API void qmf_result_free(qmf_result* r);

/* zero-energy scattering length of a radial potential
   (kind: zero, gaussian, square_well, hard_sphere, soft_coulomb) */
QMF_API qmf_status qmf_scattering_length(const char* kind, double amplitude, double range, double r_max,
                                         double* a0);

#ifdef __cplusplus
}
#endif

#endif
