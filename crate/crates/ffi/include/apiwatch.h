#ifndef APIWATCH_H
#define APIWATCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ApwStatus {
  APW_STATUS_OK = 0,
  APW_STATUS_NULL_POINTER = 1,
  APW_STATUS_INVALID_UTF8 = 2,
  APW_STATUS_PARSE_ERROR = 3,
  APW_STATUS_NOT_FOUND = 4,
  APW_STATUS_BUFFER_TOO_SMALL = 5,
  APW_STATUS_INVALID_ARGUMENT = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  APW_STATUS_INTERNAL = 7,
} ApwStatus;

typedef enum ApwClassification {
  APW_CLASSIFICATION_CORRECT = 0,
  APW_CLASSIFICATION_MISUSE = 1,
} ApwClassification;

/**
 * One API usage graph.
 */
typedef struct ApwAug ApwAug;

/**
 * Patterns ordered by support (highest first).
 */
typedef struct ApwPatternSet ApwPatternSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *apw_last_error(void);

/**
 * Parses the first graph of a text in the graph format.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid pointer.
 */
enum ApwStatus apw_aug_parse(const char *text, struct ApwAug **out);

/**
 * Builds the graph of the first method named `method` in a Java source.
 *
 * # Safety
 * `source` and `method` must be NUL-terminated strings; `out` a valid pointer.
 */
enum ApwStatus apw_aug_from_java(const char *source, const char *method, struct ApwAug **out);

/**
 * # Safety
 * `aug` must come from this library and not be used afterwards; null is ignored.
 */
void apw_aug_free(struct ApwAug *aug);

/**
 * # Safety
 * `aug` must be a live handle; the out pointers valid.
 */
enum ApwStatus apw_aug_size(const struct ApwAug *aug, size_t *nodes, size_t *edges);

/**
 * Writes the 64-character hex fingerprint and a NUL into `buf`, which must
 * hold at least 65 bytes.
 *
 * # Safety
 * `aug` must be a live handle; `buf` writable for `len` bytes.
 */
enum ApwStatus apw_aug_fingerprint(const struct ApwAug *aug, char *buf, size_t len);

/**
 * Renders a graph in the text format. Release the string with [`apw_string_free`].
 *
 * # Safety
 * `aug` must be a live handle; `out` a valid pointer.
 */
enum ApwStatus apw_aug_render(const struct ApwAug *aug, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards; null is ignored.
 */
void apw_string_free(char *s);

/**
 * Relaxed containment: node and edge label multisets of `pattern` are
 * included in those of `candidate`.
 *
 * # Safety
 * Both handles must be live; `out` a valid pointer.
 */
enum ApwStatus apw_contains_relaxed(const struct ApwAug *pattern,
                                    const struct ApwAug *candidate,
                                    bool *out);

/**
 * Overlap of a pattern with a usage as an exact fraction.
 *
 * # Safety
 * Both handles must be live; the out pointers valid.
 */
enum ApwStatus apw_overlap(const struct ApwAug *pattern,
                           const struct ApwAug *usage,
                           size_t *num,
                           size_t *den);

/**
 * Mines closed patterns with at least `min_support` (>= 1) containing
 * graphs and at most `max_nodes` nodes (0 for the default bound).
 *
 * # Safety
 * `augs` must point to `count` live handles; `out` a valid pointer.
 */
enum ApwStatus apw_mine(const struct ApwAug *const *augs,
                        size_t count,
                        size_t min_support,
                        size_t max_nodes,
                        struct ApwPatternSet **out);

/**
 * Parses patterns written in the text format with support trailers.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid pointer.
 */
enum ApwStatus apw_patterns_parse(const char *text, struct ApwPatternSet **out);

/**
 * # Safety
 * `set` must be a live handle; `out` a valid pointer.
 */
enum ApwStatus apw_patterns_len(const struct ApwPatternSet *set, size_t *out);

/**
 * # Safety
 * `set` must be a live handle; `out` a valid pointer.
 */
enum ApwStatus apw_pattern_support(const struct ApwPatternSet *set, size_t index, size_t *out);

/**
 * Renders all patterns with their support trailers. Release the string
 * with [`apw_string_free`].
 *
 * # Safety
 * `set` must be a live handle; `out` a valid pointer.
 */
enum ApwStatus apw_patterns_render(const struct ApwPatternSet *set, char **out);

/**
 * # Safety
 * `set` must come from this library and not be used afterwards; null is ignored.
 */
void apw_patterns_free(struct ApwPatternSet *set);

/**
 * Classifies a usage against a pattern set; the overlap is that of the
 * pattern behind the verdict (0/1 when none applies).
 *
 * # Safety
 * Both handles must be live; the out pointers valid.
 */
enum ApwStatus apw_detect(const struct ApwAug *usage,
                          const struct ApwPatternSet *set,
                          enum ApwClassification *classification,
                          size_t *num,
                          size_t *den);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* APIWATCH_H */
