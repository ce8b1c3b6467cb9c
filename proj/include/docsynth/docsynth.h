/* docsynth C API.
 *
 * Every function returning ds_status sets a thread-local error message on
 * failure (ds_last_error). Strings returned through char** are allocated by
 * the library and released with ds_string_free. Handles are opaque and
 * released with their matching *_free function.
 */
#ifndef DOCSYNTH_H
#define DOCSYNTH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ds_status {
  DS_OK = 0,
  DS_ERR_USAGE = 1,    /* invalid arguments */
  DS_ERR_DATA = 2,     /* malformed or inconsistent input files */
  DS_ERR_INTERNAL = 3
} ds_status;

typedef struct ds_facts ds_facts;
typedef struct ds_model ds_model;
typedef struct ds_server ds_server;

const char* ds_version(void);
/* Message of the last failed call on this thread, or "". */
const char* ds_last_error(void);
void ds_string_free(char* s);

/* Default lexicon directory of this build. */
const char* ds_default_lexicon_dir(void);

/* ---- facts ------------------------------------------------------------ */

/* lexicon_dir may be NULL for the default. */
ds_status ds_facts_load(const char* path, const char* lexicon_dir, ds_facts** out);
void ds_facts_free(ds_facts* facts);
ds_status ds_facts_doc_id(const ds_facts* facts, char** out);
/* pattern_json: JSON array, one entry per column: null (any), string or
 * integer. Result: JSON array of rows. */
ds_status ds_facts_query(const ds_facts* facts, const char* relation, const char* pattern_json,
                         char** out_json);

/* ---- corpus generation ------------------------------------------------ */

typedef struct ds_noise {
  double box_jitter;
  double token_drop_prob;
  double keyword_variant_prob;
  double line_shift_prob;
} ds_noise;

/* noise may be NULL (noiseless). */
ds_status ds_gen_corpus(const char* template_path, const char* out_dir, size_t n, uint64_t seed,
                        const ds_noise* noise, const char* lexicon_dir);

/* ---- training --------------------------------------------------------- */

typedef enum ds_annotation {
  DS_ANNOTATE_ACCEPT = 0,
  DS_ANNOTATE_SKIP = 1,
  DS_ANNOTATE_ABORT = 2
} ds_annotation;

/* request_json: {entity, doc_id, round, candidates:[{value, programs,
 * locations}], training_locations}. On DS_ANNOTATE_ACCEPT the callback
 * writes the NUL-terminated value into value_buf (capacity value_cap). */
typedef ds_annotation (*ds_annotator_fn)(void* user, const char* request_json, char* value_buf,
                                         size_t value_cap);

typedef enum ds_train_mode { DS_TRAIN_OS = 0, DS_TRAIN_NS = 1, DS_TRAIN_RAW = 2 } ds_train_mode;

typedef enum ds_annotator_kind {
  DS_ANNOTATOR_TRUTH = 0,    /* answers from the corpus truth file */
  DS_ANNOTATOR_TERMINAL = 1, /* prompts on stdin/stdout */
  DS_ANNOTATOR_CALLBACK = 2
} ds_annotator_kind;

typedef struct ds_train_options {
  const char* corpus_dir;       /* docs/ and truth.json */
  const char* doc_ids;          /* training document; raw mode: comma-separated list */
  const char* annotations_path; /* optional; default: truth of the training document */
  const char* pool;             /* ns mode: comma-separated pool document ids */
  const char* lexicon_dir;      /* optional */
  const char* background_path;  /* optional rules file; default built-in catalog */
  const char* template_id;      /* optional; default: doc id without its _NNNN suffix */
  int mode;                     /* ds_train_mode */
  int depth;
  uint64_t seed;
  int annotator;                /* ds_annotator_kind */
  ds_annotator_fn callback;
  void* user;
} ds_train_options;

void ds_train_options_init(ds_train_options* options);
ds_status ds_train(const ds_train_options* options, ds_model** out);

ds_status ds_model_save(const ds_model* model, const char* dir);
ds_status ds_model_load(const char* dir, ds_model** out);
void ds_model_free(ds_model* model);
/* The model.json document. */
ds_status ds_model_json(const ds_model* model, char** out_json);
/* The .pl text of one entity's programs. */
ds_status ds_model_programs(const ds_model* model, const char* entity, char** out_text);

/* ---- extraction and evaluation ---------------------------------------- */

typedef struct ds_extract_options {
  double entropy_threshold;
  int entropy_includes_null;
} ds_extract_options;

void ds_extract_options_init(ds_extract_options* options);

/* options may be NULL for defaults. */
ds_status ds_extract(const ds_model* model, const ds_facts* facts, const ds_extract_options* options,
                     char** out_json);

/* Any of the out pointers may be NULL. */
ds_status ds_evaluate(const ds_model* model, const char* corpus_dir, const char* lexicon_dir,
                      const ds_extract_options* options, char** out_json, char** out_csv,
                      char** out_cases_csv);

typedef struct ds_sweep_options {
  const char* corpus_dir;
  const char* lexicon_dir;
  const char* sizes; /* e.g. "1,2,3,4,5" */
  const char* modes; /* e.g. "raw,os,ns" */
  size_t pool;
  int depth;
  uint64_t seed;
  ds_extract_options extract;
} ds_sweep_options;

void ds_sweep_options_init(ds_sweep_options* options);
ds_status ds_sweep(const ds_sweep_options* options, char** out_json, char** out_csv);

/* ---- HTTP service ----------------------------------------------------- */

typedef struct ds_serve_options {
  const char* host;
  int port; /* 0 picks a free port */
  const char* corpus_dir;
  const char* model_dir;     /* serve a trained model, or */
  const char* train_doc;     /* run a TrainNS session on this document */
  const char* pool;          /* comma-separated pool document ids */
  const char* annotations_path;
  const char* save_model_to;
  const char* lexicon_dir;
  int depth;
  uint64_t seed;
  ds_extract_options extract;
} ds_serve_options;

void ds_serve_options_init(ds_serve_options* options);
/* Starts serving in the background; *bound_port receives the port. */
ds_status ds_server_start(const ds_serve_options* options, ds_server** out, int* bound_port);
/* Blocks until the training session has finished. */
ds_status ds_server_wait_model(ds_server* server);
void ds_server_stop(ds_server* server);
void ds_server_free(ds_server* server);
/* Serves in the calling thread until the process is stopped. */
ds_status ds_serve(const ds_serve_options* options);

#ifdef __cplusplus
}
#endif

#endif /* DOCSYNTH_H */
