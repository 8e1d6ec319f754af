#ifndef PRESUP_PRESUP_H
#define PRESUP_PRESUP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(PRESUP_BUILDING_LIBRARY)
#define PRESUP_API __declspec(dllexport)
#else
#define PRESUP_API __declspec(dllimport)
#endif
#else
#define PRESUP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum presup_status {
  PRESUP_OK = 0,
  PRESUP_ERR_RUNTIME = 1,
  PRESUP_ERR_USAGE = 2
} presup_status;

typedef struct presup_config presup_config;
typedef struct presup_model presup_model;
typedef struct presup_samples presup_samples;

/* Message of the most recent failure on the calling thread; never NULL. */
PRESUP_API const char* presup_last_error(void);
PRESUP_API const char* presup_version(void);

/* path may be NULL for the built-in defaults. */
PRESUP_API presup_status presup_config_load(const char* path, presup_config** out);
PRESUP_API void presup_config_free(presup_config* config);
/* "section.key=value"; the value is parsed as JSON, else taken as a string. */
PRESUP_API presup_status presup_config_set(presup_config* config, const char* assignment);
PRESUP_API presup_status presup_config_set_seed(presup_config* config, uint64_t seed);
PRESUP_API presup_status presup_config_set_out(presup_config* config, const char* dir);
/* Writes the effective configuration as JSON into buf (NUL-terminated).
   *needed receives the required size including the terminator. */
PRESUP_API presup_status presup_config_dump(const presup_config* config, char* buf, size_t size,
                                            size_t* needed);

/* Commands. Output paths (may be NULL) receive the main file written;
   they are valid until the next call on this thread. */
PRESUP_API presup_status presup_extract(const presup_config* config, size_t* datasets,
                                        const char** stats_path);
PRESUP_API presup_status presup_train(const presup_config* config, double* best_dev_accuracy,
                                      size_t* best_epoch, const char** checkpoint_path);
PRESUP_API presup_status presup_eval(const presup_config* config, const char* checkpoint,
                                     const char* split, double* accuracy,
                                     const char** report_path);
PRESUP_API presup_status presup_compare(const presup_config* config, const char* checkpoint_a,
                                        const char* checkpoint_b, const char* split,
                                        double* chi2, double* p, int* significant,
                                        const char** report_path);

PRESUP_API presup_status presup_model_load(const char* checkpoint, presup_model** out);
PRESUP_API void presup_model_free(presup_model* model);
PRESUP_API size_t presup_model_param_count(const presup_model* model);

PRESUP_API presup_status presup_samples_read(const char* path, presup_samples** out);
PRESUP_API void presup_samples_free(presup_samples* samples);
PRESUP_API size_t presup_samples_count(const presup_samples* samples);
/* predictions must hold presup_samples_count() entries; 1 = trigger present. */
PRESUP_API presup_status presup_model_predict(const presup_model* model,
                                              const presup_samples* samples, int* predictions,
                                              size_t capacity);

PRESUP_API presup_status presup_mcnemar(uint64_t b, uint64_t c, double* chi2, double* p);

#ifdef __cplusplus
}
#endif

#endif
