/**
 * Copyright 2026 The treebft Authors
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

#ifndef _TREEBFT_HARNESS_H
#define _TREEBFT_HARNESS_H

#include <ostream>
#include <string>
#include <vector>

#include "treebft/scenario.h"

namespace treebft {

struct RunMetrics {
    uint64_t blocks_decided = 0;
    double ops_per_s = 0;
    double mean_latency_s = 0;
    uint64_t view_changes = 0;
    /** Operations decided in each 1 s bucket of the run. */
    std::vector<double> timeline;
    std::vector<uint64_t> bytes_sent;
    uint64_t max_bytes_sent_process = 0;

    unsigned stretch = 1;
    double phi_s = 0;
    unsigned max_inflight = 0;
    uint64_t invalid_partials = 0;
    uint64_t qcs_below_quorum = 0;
    uint64_t aborted_instances = 0;
    /** Payload blocks of the final view still undecided after draining. */
    uint64_t undecided_started = 0;
    bool final_config_robust = false;
    /** Every correct process received every decided payload proposal of the final view. */
    bool dissemination_complete = false;
};

struct RunOptions {
    std::ostream *trace = nullptr;
};

/** Simulates the scenario; throws agreement_violation if safety is broken. */
RunMetrics run(const ScenarioConfig &cfg, const RunOptions &opts = {});

std::string format_fixed(double v);

/** One header line and one row describing the run and its results. */
std::string metrics_csv(const ScenarioConfig &cfg, const RunMetrics &m);
std::string timeline_csv(const RunMetrics &m);

/** One run per value; header `axis,ops_per_s,mean_latency_s,view_changes`. */
std::string sweep(const ScenarioConfig &base, const std::string &axis,
                  const std::vector<std::string> &values, unsigned workers = 1);

struct CompareReport {
    double ops_a = 0;
    double ops_b = 0;
    double measured_ratio = 0;
    double model_ratio = 0;
};

/** Compares two metrics CSVs written by metrics_csv (a over b). */
CompareReport compare(const std::string &csv_a, const std::string &csv_b);
std::string format_compare(const CompareReport &r);

}

#endif
