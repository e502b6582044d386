/*
 * uie — underwater image enhancement toolkit, public C API.
 *
 * The core is a C++ library exposed here through opaque handles and status
 * codes. All functions return UIE_OK on success; on failure they return a
 * status code and leave a human-readable message in uie_last_error()
 * (thread-local). Strings returned through char** are heap-allocated and
 * must be released with uie_string_free().
 *
 * Images cross this boundary as packed channel-major (CHW) double arrays of
 * 3*h*w values in [0,1].
 */
#ifndef UIE_H
#define UIE_H

#include <stdint.h>

#ifndef UIE_API
#if defined(_WIN32)
#define UIE_API __declspec(dllexport)
#else
#define UIE_API __attribute__((visibility("default")))
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uie_status {
  UIE_OK = 0,
  UIE_ERR_CONFIG = 1,  /* invalid configuration or checkpoint schema */
  UIE_ERR_IO = 2,      /* file or directory problem */
  UIE_ERR_SHAPE = 3,   /* tensor dimensions violate a contract */
  UIE_ERR_NUMERIC = 4, /* non-finite values reached a numeric kernel */
  UIE_ERR_RUNTIME = 5, /* any other failure */
  UIE_ERR_BADARG = 6   /* null pointer or malformed argument */
} uie_status;

typedef struct uie_model uie_model; /* opaque */

UIE_API const char* uie_version(void);
/* Message for the most recent failure on this thread; empty if none. */
UIE_API const char* uie_last_error(void);
UIE_API void uie_string_free(char* s);

/* Full default configuration document as JSON (model/loss/train sections). */
UIE_API uie_status uie_default_config(char** out_json);
/* Rewrites a configuration document with the small desk-scale preset. */
UIE_API uie_status uie_apply_toy_preset(const char* config_json, char** out_json);

/* ---- model lifecycle ---- */

/* config_json: a full configuration document or a bare model section. */
UIE_API uie_status uie_model_create(const char* config_json, uint64_t seed, uie_model** out);
UIE_API uie_status uie_model_load(const char* checkpoint_path, uie_model** out);
UIE_API uie_status uie_model_save(uie_model* m, const char* checkpoint_path);
UIE_API void uie_model_free(uie_model* m);
UIE_API uie_status uie_model_param_count(uie_model* m, uint64_t* out);
UIE_API uie_status uie_model_config(uie_model* m, char** out_json);

/* ---- inference ---- */

/* Enhances one image; in/out are 3*h*w CHW buffers (out may equal in).
 * Arbitrary h/w: the model pads and crops internally. */
UIE_API uie_status uie_enhance_image(uie_model* m, const double* in_chw, int32_t h, int32_t w,
                                     double* out_chw);
UIE_API uie_status uie_enhance_file(uie_model* m, const char* input_path, const char* output_png);

/* ---- training / evaluation harness ---- */

/* Runs the training loop described by the configuration document (dataset
 * paths included). resume_checkpoint may be NULL. On success *out_json (if
 * non-NULL) receives {"final_checkpoint", "log", "steps", "first_total",
 * "last_total"}. */
UIE_API uie_status uie_train(const char* config_json, const char* resume_checkpoint,
                             char** out_json);

/* Evaluates the model on a paired directory. resize_h/resize_w of 0 keep
 * native sizes. *out_json receives {"model": report, "input": report} where
 * each report carries per-image rows, means, and pre-rendered "text"/"tsv"
 * tables whose columns follow the fixed header (PSNR/SSIM/color-difference,
 * plus LPIPS when a plug-in is registered). */
UIE_API uie_status uie_evaluate(uie_model* m, const char* input_dir, const char* target_dir,
                                int32_t resize_h, int32_t resize_w, char** out_json);

/* Trains and evaluates the seven module on/off combinations at the scale in
 * the configuration document. *out_json receives {"rows": [...], "text": ...,
 * "tsv": ...}. */
UIE_API uie_status uie_ablate(const char* config_json, char** out_json);

/* ---- synthetic degradation ---- */

/* params_json may be NULL for defaults; fields: transmission [r,g,b],
 * ambient [r,g,b], noise_sigma. Deterministic for a given seed. */
UIE_API uie_status uie_degrade_file(const char* input_path, const char* output_png,
                                    const char* params_json, uint64_t seed);
UIE_API uie_status uie_degrade_image(const double* in_chw, int32_t h, int32_t w,
                                     const char* params_json, uint64_t seed, double* out_chw);

/* ---- metrics ---- */

/* Full-reference metrics between two 3*h*w images in [0,1]. Any output
 * pointer may be NULL. PSNR of identical images is +infinity. */
UIE_API uie_status uie_metrics(const double* a, const double* b, int32_t h, int32_t w,
                               double* psnr_out, double* ssim_out, double* delta_e_out);

/* Optional perceptual-metric plug-in; pass fn=NULL to unregister. When set,
 * evaluation reports gain an LPIPS column. */
typedef double (*uie_lpips_fn)(const double* a, const double* b, int32_t c, int32_t h, int32_t w,
                               void* user);
UIE_API uie_status uie_set_lpips_plugin(uie_lpips_fn fn, void* user);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* UIE_H */
