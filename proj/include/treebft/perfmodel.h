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

#ifndef _TREEBFT_PERFMODEL_H
#define _TREEBFT_PERFMODEL_H

#include <cstddef>

#include "treebft/collections.h"

namespace treebft {

/**
 * Inputs of the closed-form pipelining model. Times are in seconds, sizes
 * in bits. `height` counts node levels, so a star has height 2.
 */
struct ModelInputs {
    size_t n = 100;
    unsigned height = 3;
    unsigned fanout = 10;
    double block_bits = 102400;
    double bandwidth_bps = 25e6;
    double rtt_s = 0.2;
    double phi_s = 0;
    Scheme scheme = Scheme::Aggregate;
    /** Add the quorum certificate carried by every proposal to its size. */
    bool signature_overhead = true;
    double share_wire_bytes = 64;
    double aggregate_wire_bytes = 96;

    bool valid() const;
};

/** Bits of one disseminated message: block plus certificate. */
double message_bits(const ModelInputs &in);

/** Root transmission plus processing time per instance: mB/b + phi. */
double busy_time(const ModelInputs &in);

/** Time the root waits for the last response: (height - 1) * RTT. */
double idle_time(const ModelInputs &in);

struct PipelineDepth {
    double ratio = 0;        // IT / BT
    unsigned stretch = 1;    // instances per round the root can start
    unsigned instances = 4;  // base depth * stretch
};

PipelineDepth pipeline_depth(const ModelInputs &in, unsigned base_depth = 4);

/** Upper bound of a tree with root fanout m over a star: (N-1)/m. */
double max_speedup(size_t n, unsigned fanout);

/** Steady-state seconds per decided block: max(BT, IT / stretch). */
double block_interval(const ModelInputs &in);

/** Ratio of the star's block interval to the tree's. */
double estimated_speedup(const ModelInputs &tree, const ModelInputs &star);

}

#endif
