/* Copyright 2025 The rlbf Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the rlbf core: streaming transducer, reward scoring,
 * annotation parsers, pipeline runs, and the NDJSON service. All structured
 * values cross the boundary as JSON strings; all handles are opaque.
 *
 * Every function returning int yields RLBF_OK (0) on success or a nonzero
 * status; rlbf_last_error() returns a thread-local message for the most
 * recent failure on the calling thread. Strings returned through char**
 * are owned by the caller and released with rlbf_string_free().
 */

#ifndef RLBF_RLBF_H_
#define RLBF_RLBF_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RLBF_API __declspec(dllexport)
#else
#define RLBF_API __attribute__((visibility("default")))
#endif

typedef enum rlbf_status {
  RLBF_OK = 0,
  RLBF_ERR_PARSE = 1,
  RLBF_ERR_RANGE = 2,
  RLBF_ERR_UNKNOWN_CATEGORY = 3,
  RLBF_ERR_GRAMMAR = 4,
  RLBF_ERR_LOOKUP = 5,
  RLBF_ERR_FORMAT = 6,
  RLBF_ERR_TRANSPORT = 7,
  RLBF_ERR_IO = 8,
  RLBF_ERR_USAGE = 9,
  RLBF_ERR_STATE = 10,
  RLBF_ERR_INVALID_ARGUMENT = 11
} rlbf_status;

RLBF_API const char* rlbf_version(void);

/* Message for the last failed call on this thread; empty string if none. */
RLBF_API const char* rlbf_last_error(void);

RLBF_API void rlbf_string_free(char* s);

/* ---- tokens ---------------------------------------------------------- */

/* token JSON: {"t":"content","sym":n} | {"t":"cat","name":...} |
 *             {"t":"bt","x":n} | {"t":"eor"}                             */

/* Exact inverse pair over control-token surface forms ("[CATEGORY_X]",
 * "[BACKTRACK_BY_x]", "[EOR]"); parsing falls back to a vocabulary-free
 * error for anything else. */
RLBF_API int rlbf_token_parse(const char* text, char** out_token_json);
RLBF_API int rlbf_token_render(const char* token_json, char** out_text);

/* ---- streaming transducer -------------------------------------------- */

typedef struct rlbf_transducer rlbf_transducer;

/* config_json may be NULL for defaults; see the config wire form:
 * {"hold_back":n,"downstream":"retraction_capable"|"append_only",
 *  "overlong":"clamp"|"error","grammar":"strict"|"lenient",
 *  "disabled_categories":[...]}                                          */
RLBF_API int rlbf_transducer_new(const char* config_json,
                                 rlbf_transducer** out);
RLBF_API void rlbf_transducer_free(rlbf_transducer* t);

/* Feeds one token; *out_events_json is a JSON array of events in order:
 * {"e":"emit",...} | {"e":"retract",...} | {"e":"note",...} |
 * {"e":"fault",...}                                                      */
RLBF_API int rlbf_transducer_feed(rlbf_transducer* t, const char* token_json,
                                  char** out_events_json);
RLBF_API int rlbf_transducer_finish(rlbf_transducer* t,
                                    char** out_events_json);

/* {"tokens_in":n,"tokens_emitted":n,"retractions":n,"faults":n}          */
RLBF_API int rlbf_transducer_stats(const rlbf_transducer* t,
                                   char** out_stats_json);

/* Reference semantics over a whole stream; tokens_json is a JSON array.
 * Result: {"visible":[...],"notes":[...],"faults":[...]}                 */
RLBF_API int rlbf_transduce_offline(const char* tokens_json,
                                    const char* config_json,
                                    char** out_result_json);

/* ---- reward ----------------------------------------------------------- */

/* raw_tokens_json: JSON array of tokens (the full generated stream).
 * reward_config_json: {"lexicon":{"CATEGORY":[sym,...]},
 *                      "quality":{"min_len":n,"min_content":n,
 *                                 "sentence_end_sym":n},
 *                      "known_violations":[[token,...],...]}
 * Result: {"reward":x,"case":...,"quality":{...}}                        */
RLBF_API int rlbf_reward(const char* raw_tokens_json,
                         const char* reward_config_json,
                         char** out_breakdown_json);

/* ---- annotation parsers ----------------------------------------------- */

/* Result: {"is_no":bool,"segments":[{"kind":"plain"|"violation"|"edit",
 *          "text":...},...]}                                             */
RLBF_API int rlbf_parse_critic_annotation(const char* text,
                                          char** out_json);

/* Result: {"refusal":bool,"pre":...,"harmful":...,"categories":[...]}    */
RLBF_API int rlbf_parse_harmful_generation(const char* text,
                                           char** out_json);

/* ---- pipeline runs ----------------------------------------------------- */

RLBF_API int rlbf_run_datagen(const char* config_json, const char* out_path);
RLBF_API int rlbf_run_sft(const char* dataset_path, const char* config_json,
                          const char* out_path);
RLBF_API int rlbf_run_train(const char* dataset_path, const char* config_json,
                            const char* out_path, int baseline);
RLBF_API int rlbf_run_eval(const char* checkpoint_path,
                           const char* config_json, const char* format,
                           const char* out_path);
RLBF_API int rlbf_run_transduce(const char* in_path, const char* mode,
                                const char* config_json,
                                const char* out_path);
RLBF_API int rlbf_run_reward(const char* traj_path, const char* dataset_path,
                             const char* out_path);

/* ---- streaming service -------------------------------------------------*/

typedef struct rlbf_service rlbf_service;

/* config_json may be NULL for defaults; port 0 picks an ephemeral port.  */
RLBF_API int rlbf_service_start(const char* config_json, const char* host,
                                int port, rlbf_service** out);
RLBF_API int rlbf_service_port(const rlbf_service* s);
RLBF_API int rlbf_service_stats(const rlbf_service* s, char** out_stats_json);
RLBF_API int rlbf_service_stop(rlbf_service* s);
RLBF_API void rlbf_service_free(rlbf_service* s);

#ifdef __cplusplus
}
#endif

#endif /* RLBF_RLBF_H_ */
