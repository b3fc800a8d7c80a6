/* SPDX-License-Identifier: Apache-2.0 */
#ifndef MOLSWAP_MOLSWAP_H
#define MOLSWAP_MOLSWAP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MSW_API __declspec(dllexport)
#else
#define MSW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status. On failure a description is kept
 * per thread and read with msw_last_error(). Strings returned through char**
 * out-parameters are owned by the caller and released with msw_string_free. */
typedef enum msw_status {
  MSW_OK = 0,
  MSW_ERR_SYNTAX,
  MSW_ERR_UNSUPPORTED_FEATURE,
  MSW_ERR_VALENCE,
  MSW_ERR_NOT_CONNECTED,
  MSW_ERR_NOT_BONDED,
  MSW_ERR_TIME_OUT_OF_RANGE,
  MSW_ERR_INFEASIBLE_MOVE,
  MSW_ERR_NO_FEASIBLE_MOVE,
  MSW_ERR_DIMENSION_MISMATCH,
  MSW_ERR_NON_FINITE_GRADIENT,
  MSW_ERR_CORRUPT_FILE,
  MSW_ERR_VERSION_MISMATCH,
  MSW_ERR_EMPTY_DATASET,
  MSW_ERR_INFEASIBLE_FORMULA,
  MSW_ERR_EMPTY_SAMPLE,
  MSW_ERR_EMPTY_LOG,
  MSW_ERR_INVALID_ARGUMENT,
  MSW_ERR_IO,
  MSW_ERR_INTERNAL
} msw_status;

typedef enum msw_model_kind { MSW_MODEL_DIFFUSION = 0, MSW_MODEL_TIME = 1 } msw_model_kind;
typedef enum msw_variant { MSW_VARIANT_BASE = 0, MSW_VARIANT_FPS = 1 } msw_variant;

#define MSW_FINGERPRINT_BYTES 256

MSW_API const char* msw_version(void);
MSW_API const char* msw_status_name(msw_status status);
MSW_API const char* msw_last_error(void);
/* Byte offset into the SMILES text of the last parse failure, (size_t)-1 when
 * the last call succeeded or the failure has no position. */
MSW_API size_t msw_last_error_position(void);
MSW_API void msw_string_free(char* s);

/* Molecules */
typedef struct msw_molecule msw_molecule;

MSW_API msw_status msw_molecule_parse(const char* smiles, msw_molecule** out);
MSW_API void msw_molecule_free(msw_molecule* m);
MSW_API int msw_molecule_atom_count(const msw_molecule* m);
MSW_API int msw_molecule_bond_count(const msw_molecule* m);
MSW_API msw_status msw_molecule_smiles(const msw_molecule* m, char** out);
MSW_API msw_status msw_molecule_signature(const msw_molecule* m, char** out);
MSW_API msw_status msw_molecule_formula(const msw_molecule* m, char** out);
/* 2048 bits, bit i in byte i / 8 at position i % 8. */
MSW_API msw_status msw_molecule_fingerprint(const msw_molecule* m, unsigned char bits[MSW_FINGERPRINT_BYTES]);
MSW_API msw_status msw_tanimoto(const msw_molecule* a, const msw_molecule* b, double* out);
MSW_API msw_status msw_molecule_descriptors(const msw_molecule* m, char** json);
/* Node, edge and graph features at normalized time t, as JSON. */
MSW_API msw_status msw_molecule_features(const msw_molecule* m, double t, char** json);
/* Noising trajectory as JSON; steps <= 0 uses ceil(steps_factor * bonds). */
MSW_API msw_status msw_molecule_noise(const msw_molecule* m, int steps, uint64_t seed, double steps_factor,
                                      char** json);

/* Model weights */
typedef struct msw_weights msw_weights;

MSW_API msw_status msw_weights_init(msw_model_kind kind, msw_variant variant, uint64_t seed, msw_weights** out);
MSW_API msw_status msw_weights_load(const char* path, msw_weights** out);
MSW_API msw_status msw_weights_save(const msw_weights* w, const char* path);
MSW_API void msw_weights_free(msw_weights* w);
MSW_API msw_model_kind msw_weights_kind(const msw_weights* w);
MSW_API msw_variant msw_weights_variant(const msw_weights* w);
MSW_API size_t msw_weights_parameter_count(const msw_weights* w);

/* Pipeline stages. config_json is an object of sections, e.g.
 * {"train": {"epochs": "2"}, "sample": {...}}; NULL means defaults. Paths are
 * written atomically. */
MSW_API msw_status msw_config_load(const char* path, char** json);
MSW_API msw_status msw_ingest(const char* in_path, const char* out_path, const char* config_json, char** report_json);
MSW_API msw_status msw_train(msw_model_kind kind, const char* dataset_path, const char* config_json,
                             const char* weights_out, char** summary_json);
MSW_API msw_status msw_finetune_fps(const char* base_weights_path, const char* dataset_path, const char* config_json,
                                    const char* weights_out, char** summary_json);
/* formulas_path holds molecular formulas, or SMILES when it ends in ".smi"
 * (sample.formula_source overrides). count 0 uses every line once; larger
 * counts cycle through the lines. Writes SMILES to out_path and one JSON line
 * per item to report_path (may be NULL). */
MSW_API msw_status msw_sample(const char* formulas_path, size_t count, const char* diffusion_weights_path,
                              const char* time_weights_path, const char* config_json, const char* out_path,
                              const char* report_path, char** summary_json);
/* training_path lines hold SMILES or canonical signatures; second_path adds a
 * log2 JS-ratio comparison. Both may be NULL. plot_json may be NULL. */
MSW_API msw_status msw_eval(const char* reference_path, const char* generated_path, const char* training_path,
                            const char* second_path, const char* config_json, char** report_json, char** plot_json);
MSW_API msw_status msw_turing_report(const char* log_path, uint64_t seed, char** json);

/* Turing-test HTTP server configured from the "serve" section: host, port,
 * log, originals, generated, origin, static, seed. */
typedef struct msw_server msw_server;

MSW_API msw_status msw_server_create(const char* config_json, msw_server** out);
/* Bound port after msw_server_bind, -1 before. */
MSW_API int msw_server_port(const msw_server* s);
MSW_API msw_status msw_server_bind(msw_server* s);
/* Blocks until msw_server_stop is called from another thread. */
MSW_API msw_status msw_server_run(msw_server* s);
MSW_API void msw_server_stop(msw_server* s);
MSW_API void msw_server_free(msw_server* s);

#ifdef __cplusplus
}
#endif

#endif /* MOLSWAP_MOLSWAP_H */
