/* Copyright 2026 The prulab developers
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the prulab experiment engine. All functions return a
 * prulab_status; on failure, prulab_last_error() describes the problem
 * (thread-local). Objects are opaque and freed with their _free function.
 * Strings returned through char** are owned by the caller and released
 * with prulab_string_free. */

#ifndef PRULAB_PRULAB_H
#define PRULAB_PRULAB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum prulab_status {
  PRULAB_OK = 0,
  PRULAB_ERR_INVALID = 1,  /* bad arguments, unknown keys, malformed input */
  PRULAB_ERR_CAPACITY = 2, /* a desk-scale cap was exceeded */
  PRULAB_ERR_INTERNAL = 3  /* anything else */
} prulab_status;

typedef struct prulab_config prulab_config;
typedef struct prulab_report prulab_report;

const char* prulab_version(void);
const char* prulab_last_error(void);
void prulab_string_free(char* s);

/* Configuration: a key = value table initialized to defaults. */
prulab_status prulab_config_create(prulab_config** out);
void prulab_config_free(prulab_config* cfg);
prulab_status prulab_config_load_file(prulab_config* cfg, const char* path);
prulab_status prulab_config_set(prulab_config* cfg, const char* key,
                                const char* value);
prulab_status prulab_config_defaults(char** out);

/* Experiment entry points. `suite` is one of identities, isometries,
 * twirls, invariance, strong, restricted, gluing, or all. */
prulab_status prulab_verify(const prulab_config* cfg, const char* suite,
                            prulab_report** out);
prulab_status prulab_distinguish(const prulab_config* cfg, prulab_report** out);

/* Reports. */
void prulab_report_free(prulab_report* rep);
prulab_status prulab_report_json(const prulab_report* rep, char** out);
prulab_status prulab_report_csv(const prulab_report* rep, char** out);
int prulab_report_passed(const prulab_report* rep);
size_t prulab_report_check_count(const prulab_report* rep);
/* One human-readable "PASS/FAIL suite/name ..." line per check. */
prulab_status prulab_report_check_line(const prulab_report* rep, size_t index,
                                       char** out);
prulab_status prulab_report_parse_json(const char* text, prulab_report** out);
prulab_status prulab_report_merge(const prulab_report* const* reports,
                                  size_t count, prulab_report** out);

#ifdef __cplusplus
}
#endif

#endif /* PRULAB_PRULAB_H */
