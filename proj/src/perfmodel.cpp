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

#include "treebft/perfmodel.h"

#include <algorithm>
#include <cmath>

#include "treebft/error.h"
#include "treebft/tree.h"

namespace treebft {

bool ModelInputs::valid() const {
    return n >= 2 && height >= 2 && fanout >= 1 && block_bits > 0 &&
           bandwidth_bps > 0 && rtt_s > 0 && phi_s >= 0 &&
           share_wire_bytes >= 0 && aggregate_wire_bytes >= 0;
}

static void require(const ModelInputs &in) {
    if (!in.valid())
        throw error(errc::out_of_domain, "model inputs must be positive with height >= 2");
}

double message_bits(const ModelInputs &in) {
    require(in);
    if (!in.signature_overhead) return in.block_bits;
    double sig_bytes = in.scheme == Scheme::NaiveSet
        ? double(2 * max_faults(in.n) + 1) * in.share_wire_bytes
        : in.aggregate_wire_bytes;
    return in.block_bits + 8 * sig_bytes;
}

double busy_time(const ModelInputs &in) {
    return in.fanout * message_bits(in) / in.bandwidth_bps + in.phi_s;
}

double idle_time(const ModelInputs &in) {
    require(in);
    return (in.height - 1) * in.rtt_s;
}

PipelineDepth pipeline_depth(const ModelInputs &in, unsigned base_depth) {
    double bt = busy_time(in);
    if (bt <= 0) throw error(errc::out_of_domain, "busy time must be positive");
    PipelineDepth d;
    d.ratio = idle_time(in) / bt;
    // round up: a fractional instance still keeps the root busy during IT
    d.stretch = unsigned(std::max(1.0, std::ceil(d.ratio - 1e-9)));
    d.instances = base_depth * d.stretch;
    return d;
}

double max_speedup(size_t n, unsigned fanout) {
    if (fanout < 1 || n < 2) throw error(errc::out_of_domain, "need N >= 2 and m >= 1");
    return double(n - 1) / fanout;
}

double block_interval(const ModelInputs &in) {
    double bt = busy_time(in);
    return std::max(bt, idle_time(in) / pipeline_depth(in).stretch);
}

double estimated_speedup(const ModelInputs &tree, const ModelInputs &star) {
    return block_interval(star) / block_interval(tree);
}

}
