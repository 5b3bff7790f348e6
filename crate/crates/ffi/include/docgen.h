#ifndef DOCGEN_H
#define DOCGEN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of a call.
 */
typedef enum DocgenStatus {
  DOCGEN_STATUS_OK = 0,
  DOCGEN_STATUS_INVALID_ARGUMENT = 1,
  DOCGEN_STATUS_TEMPLATE = 2,
  DOCGEN_STATUS_SAMPLING = 3,
  DOCGEN_STATUS_FONT = 4,
  DOCGEN_STATUS_LAYOUT = 5,
  DOCGEN_STATUS_RENDER = 6,
  DOCGEN_STATUS_ANNOTATION = 7,
  DOCGEN_STATUS_IO = 8,
  DOCGEN_STATUS_VERIFICATION = 9,
  DOCGEN_STATUS_OUT_OF_RANGE = 10,
  DOCGEN_STATUS_PANIC = 11,
} DocgenStatus;

/**
 * Page image encoding.
 */
typedef enum DocgenFormat {
  DOCGEN_FORMAT_PNG = 0,
  DOCGEN_FORMAT_JPEG = 1,
} DocgenFormat;

/**
 * A generated document with its plan, boxes and pages.
 */
typedef struct DocgenDocument DocgenDocument;

/**
 * Loaded templates and resources.
 */
typedef struct DocgenGenerator DocgenGenerator;

/**
 * One ground-truth box. `parent_id` is -1 for top-level elements.
 */
typedef struct DocgenElement {
  uint32_t category_id;
  uint32_t page_index;
  int32_t x;
  int32_t y;
  uint32_t width;
  uint32_t height;
  uint32_t element_id;
  int64_t parent_id;
} DocgenElement;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *docgen_version(void);

/**
 * Code name of the calling thread's last error, or null. Valid until the
 * next call on this thread.
 */
const char *docgen_last_error_code(void);

/**
 * Message of the calling thread's last error, or null.
 */
const char *docgen_last_error_message(void);

/**
 * Release a string returned by this library.
 */
void docgen_string_free(char *s);

/**
 * Load a template, mixture or bundled preset name. `lang` may be null and
 * `dpi` 0 keeps the template resolution.
 */
enum DocgenStatus docgen_generator_new(const char *template_,
                                       const char *lang,
                                       uint32_t dpi,
                                       bool defects,
                                       struct DocgenGenerator **out);

void docgen_generator_free(struct DocgenGenerator *gen);

/**
 * Generate document `doc_id` of the dataset with `seed`.
 */
enum DocgenStatus docgen_generate(const struct DocgenGenerator *gen,
                                  uint64_t doc_id,
                                  uint64_t seed,
                                  struct DocgenDocument **out);

void docgen_document_free(struct DocgenDocument *doc);

/**
 * Number of pages, or 0 for a null handle.
 */
size_t docgen_document_page_count(const struct DocgenDocument *doc);

/**
 * Pixel size shared by all pages.
 */
enum DocgenStatus docgen_document_page_size(const struct DocgenDocument *doc,
                                            uint32_t *width,
                                            uint32_t *height);

/**
 * Copy a page as packed RGB8 rows into `buf`, which must hold
 * `width * height * 3` bytes.
 */
enum DocgenStatus docgen_document_page_rgb(const struct DocgenDocument *doc,
                                           size_t page,
                                           uint8_t *buf,
                                           size_t len);

/**
 * Encode one page to `path`.
 */
enum DocgenStatus docgen_document_write_page(const struct DocgenDocument *doc,
                                             size_t page,
                                             enum DocgenFormat format,
                                             const char *path);

/**
 * Number of ground-truth boxes, or 0 for a null handle.
 */
size_t docgen_document_element_count(const struct DocgenDocument *doc);

enum DocgenStatus docgen_document_element(const struct DocgenDocument *doc,
                                          size_t index,
                                          struct DocgenElement *out);

/**
 * The document plan as JSON. Release with [`docgen_string_free`].
 */
enum DocgenStatus docgen_document_plan_json(const struct DocgenDocument *doc, char **out);

/**
 * The document's annotations as a COCO file with PNG page names.
 */
enum DocgenStatus docgen_document_coco_json(const struct DocgenDocument *doc, char **out);

/**
 * Write a dataset of `count` documents under `out_dir`. `workers` 0 uses
 * one thread per core.
 */
enum DocgenStatus docgen_generate_dataset(const struct DocgenGenerator *gen,
                                          const char *out_dir,
                                          uint64_t count,
                                          uint64_t seed,
                                          size_t workers,
                                          enum DocgenFormat format,
                                          bool emit_plans,
                                          bool plan_only);

/**
 * Update a single template from line-delimited JSON observations and return
 * the posterior template as TOML.
 */
enum DocgenStatus docgen_infer(const char *template_, const char *observations, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOCGEN_H */
