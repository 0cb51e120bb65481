/* C interface to the IPv6 target-generation library.
 *
 * All functions return sv_status; on failure sv_last_error() holds a
 * human-readable message until the next failing call on the same thread.
 * Strings returned through char** are heap-allocated and must be released
 * with sv_free_string(). Handles are opaque and freed with their _free()
 * function; passing NULL to a _free() is a no-op.
 */
#ifndef SIXVISION_H
#define SIXVISION_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sv_status {
  SV_OK = 0,
  SV_ERR_MALFORMED_ADDRESS,
  SV_ERR_MALFORMED_PREFIX,
  SV_ERR_EMPTY_SEED_SET,
  SV_ERR_EMPTY_SET,
  SV_ERR_EMPTY_SUBCLASS,
  SV_ERR_EMPTY_CORPUS,
  SV_ERR_EMPTY_CANDIDATES,
  SV_ERR_SHAPE_MISMATCH,
  SV_ERR_ODD_CHANNEL_COUNT,
  SV_ERR_GRAPH_CONSUMED,
  SV_ERR_INSUFFICIENT_DATA,
  SV_ERR_TOO_FEW_POINTS,
  SV_ERR_GENERATION_STALLED,
  SV_ERR_BUDGET_EXHAUSTED,
  SV_ERR_INVALID_SPEC,
  SV_ERR_ZERO_BASELINE,
  SV_ERR_SCANNER_UNAVAILABLE,
  SV_ERR_SCANNER_PARSE,
  SV_ERR_INVALID_ARGUMENT,
  SV_ERR_IO,
  SV_ERR_UNKNOWN
} sv_status;

/* Message of the most recent failure on this thread; never NULL. */
const char* sv_last_error(void);
void sv_free_string(char* s);

typedef struct sv_seedset sv_seedset;
typedef struct sv_universe sv_universe;

/* -------- address codec -------- */

/* Parses any textual IPv6 form into 16 network-order bytes. */
sv_status sv_parse_address(const char* text, uint8_t out_bytes[16]);
/* Canonical lowercase fully-compressed text form. */
sv_status sv_format_address(const uint8_t bytes[16], char** out_text);

/* 8x16 binary image of one address, row-major, as 128 '0'/'1' chars + NUL. */
sv_status sv_encode_bits(const uint8_t bytes[16], char out_bits[129]);
sv_status sv_decode_bits(const char* bits, uint8_t out_bytes[16]);
/* Same image as a PGM (P2) document or a CSV of 0/1 values. */
sv_status sv_encode_pgm(const uint8_t bytes[16], char** out_pgm);
sv_status sv_encode_csv(const uint8_t bytes[16], char** out_csv);

/* -------- seed sets -------- */

/* Loads a hitlist (one address per line, '#' comments) plus a prefix table
 * ("prefix/len" per line). prefix_table_path may be NULL for a bare
 * catch-all table. */
sv_status sv_seedset_load(const char* hitlist_path, const char* prefix_table_path,
                          sv_seedset** out);
void sv_seedset_free(sv_seedset* s);
size_t sv_seedset_size(const sv_seedset* s);

/* -------- entropy & census -------- */

/* mode: 0 = standard per-bit entropy (max 1.0), 1 = quarter-scaled (max 0.25).
 * out_ce receives the mean over all 128 bits; either output may be NULL. */
sv_status sv_entropy_csv(const sv_seedset* s, int mode, char** out_csv,
                         double* out_ce);
sv_status sv_entropy_pgm(const sv_seedset* s, int mode, char** out_pgm);

/* Per-prefix seed counts and the few-seed ratio, as JSON. */
sv_status sv_census_json(const sv_seedset* s, size_t threshold, char** out_json);

/* -------- synthetic universe -------- */

sv_status sv_universe_from_json(const char* spec_json, sv_universe** out);
sv_status sv_universe_load_file(const char* path, sv_universe** out);
void sv_universe_free(sv_universe* u);

/* The biased seed sample the universe reveals, as a seed set handle. */
sv_status sv_universe_seeds(const sv_universe* u, sv_seedset** out);
/* Writes the revealed seeds as a hitlist and the universe's prefix table. */
sv_status sv_universe_materialize(const sv_universe* u, const char* hitlist_path,
                                  const char* prefix_table_path);
sv_status sv_universe_is_active(const sv_universe* u, const uint8_t bytes[16],
                                int* out_active);
sv_status sv_universe_summary_json(const sv_universe* u, char** out_json);

/* -------- pipeline --------
 *
 * config_json is a run-config document; NULL or "" means all defaults.
 * Recognized keys include budget, k, seed, feedback_cadence, train_epochs,
 * vae_epochs, fine_tune_epochs, stitch_fanout, p_pct, use_stitching,
 * use_feedback, entropy_mode ("standard"|"quarter"), hidden, blocks,
 * latent_dim, temperature.
 */

/* VAE + k-means cluster assignment of a seed set: "address,subclass_id" CSV. */
sv_status sv_cluster_csv(const sv_seedset* s, const char* config_json,
                         char** out_csv);

/* Clusters the seeds and trains one generative model per subclass; writes
 * model_<id>.ckpt files and clusters.csv under out_dir. out_summary_json
 * (optional) receives per-subclass final losses. */
sv_status sv_train(const sv_seedset* s, const char* config_json,
                   const char* out_dir, char** out_summary_json);

/* Samples `count` fresh addresses from a saved model checkpoint; newline
 * separated text. */
sv_status sv_generate(const char* checkpoint_path, size_t count, uint64_t seed,
                      double temperature, char** out_addresses);

/* Full generation / probe / feedback campaign; artifacts (report.json,
 * rounds.csv, actives.txt, candidates.txt, clusters.csv, checkpoints,
 * manifest.json) land under out_dir (skipped when out_dir is NULL).
 * out_report_json (optional) receives the final report. */
sv_status sv_run(const sv_seedset* s, const sv_universe* u,
                 const char* config_json, const char* out_dir,
                 char** out_report_json);

/* Detector stage then tree-baseline stage at the p_pct budget split; returns
 * the gain and both stage hit rates as JSON. */
sv_status sv_two_stage(const sv_seedset* s, const sv_universe* u,
                       const char* config_json, char** out_json);

/* The four stitching/feedback configurations; CSV rows
 * config,hitrate,cover_num,actives. */
sv_status sv_ablate(const sv_seedset* s, const sv_universe* u,
                    const char* config_json, char** out_csv);

/* Runs a campaign and exports the resulting dataset (actives with aliased
 * prefixes collapsed to 10 retained addresses each, per-prefix counts, CR
 * summary) under out_dir. */
sv_status sv_export(const sv_seedset* s, const sv_universe* u,
                    const char* config_json, const char* out_dir,
                    char** out_summary_json);

/* Optional adapter to a real scanner binary (newline addresses on stdin,
 * newline responders on stdout). Never required by any pipeline path; the
 * synthetic universe answers all built-in probing. out_responders receives
 * newline-separated responding addresses. */
sv_status sv_external_scan(const char* candidates_path, const char* scanner_path,
                           int rate_mbps, char** out_responders);

/* Hit rate / coverage metrics over address files produced elsewhere.
 * prefix_table_path and seeds_path may be NULL. */
sv_status sv_eval_json(const char* candidates_path, const char* actives_path,
                       const char* seeds_path, const char* prefix_table_path,
                       char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* SIXVISION_H */
