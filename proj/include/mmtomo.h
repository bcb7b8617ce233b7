/* mmtomo — multi-master SAR tomography pipeline, C API.
 *
 * The shared library wraps the C++ core behind opaque handles and integer
 * status codes. All functions returning mmt_status leave a human-readable
 * message retrievable via mmt_pipeline_last_error() (pipeline calls) or the
 * caller-provided buffer (standalone calls).
 */

#ifndef MMTOMO_H
#define MMTOMO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MMT_API __declspec(dllexport)
#else
#define MMT_API __attribute__((visibility("default")))
#endif

typedef enum mmt_status {
  MMT_OK = 0,
  MMT_ERR_USAGE = 1,    /* bad arguments to the call itself */
  MMT_ERR_CONFIG = 2,   /* configuration parse/schema failure */
  MMT_ERR_STAGE = 3,    /* stage execution or dependency failure */
  MMT_ERR_IO = 4,       /* file read/write/parse failure */
  MMT_ERR_INTERNAL = 5  /* invariant violation inside the library */
} mmt_status;

typedef struct mmt_pipeline mmt_pipeline;

/* Library version string, static storage. */
MMT_API const char* mmt_version(void);

/* Creates a pipeline from a config file or from config text. On success
 * *out owns the handle; release with mmt_pipeline_destroy. */
MMT_API mmt_status mmt_pipeline_create(const char* config_path,
                                       mmt_pipeline** out);
MMT_API mmt_status mmt_pipeline_create_from_text(const char* config_text,
                                                 mmt_pipeline** out);
MMT_API void mmt_pipeline_destroy(mmt_pipeline* pipeline);

/* Overrides applied on top of the parsed config. */
MMT_API mmt_status mmt_pipeline_set_seed(mmt_pipeline* pipeline, uint64_t seed);
MMT_API mmt_status mmt_pipeline_set_workers(mmt_pipeline* pipeline, int workers);
MMT_API mmt_status mmt_pipeline_set_output_dir(mmt_pipeline* pipeline,
                                               const char* dir);

/* Effective config hash (hex), static per handle until an override changes it. */
MMT_API const char* mmt_pipeline_config_hash(mmt_pipeline* pipeline);

/* Runs a comma-separated stage list ("simulate,filter"), or "all".
 * Stage names: simulate, filter, invert, fuse, validate. */
MMT_API mmt_status mmt_pipeline_run(mmt_pipeline* pipeline, const char* stages);

/* Message for the most recent failing call on this handle. */
MMT_API const char* mmt_pipeline_last_error(const mmt_pipeline* pipeline);

/* Deterministic plot rendering, independent of any pipeline handle.
 * kind: "histogram" (report JSON -> SVG) or "height-raster"
 * (scatterer artifact base path, without extension -> PPM).
 * On failure the message is written to err (if non-NULL), truncated. */
MMT_API mmt_status mmt_plot(const char* input_path, const char* kind,
                            const char* output_path, char* err, size_t err_len);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MMTOMO_H */
