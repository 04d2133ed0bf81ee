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

#ifndef _TREEBFT_SCENARIO_H
#define _TREEBFT_SCENARIO_H

#include <optional>
#include <string>
#include <vector>

#include "treebft/consensus.h"
#include "treebft/perfmodel.h"

namespace treebft {

enum class Topology { Star, Tree };

/** A fault as written in a scenario; the target may be the root of a view. */
struct FaultSpec {
    FaultKind kind = FaultKind::CrashSilent;
    uint32_t target = 0;
    bool target_is_view_root = false;
    double at_s = 0;
};

/**
 * Full description of one experiment.
 *
 * Files are flat `key = value` lines grouped by `[section]` headers; `#`
 * starts a comment. Every key belongs to exactly one section, so a key may
 * also be given without its header (as sweep axes are).
 */
struct ScenarioConfig {
    std::string name = "scenario";

    // [system]
    size_t n = 100;
    Topology topology = Topology::Tree;
    unsigned height = 3;
    unsigned fanout = 10;
    Scheme scheme = Scheme::Aggregate;

    // [network]
    double rtt_s = 0.2;
    double bandwidth_bps = 25e6;
    std::optional<double> delta_s;  // default: height * RTT plus send and verify time at the widest node
    double gst_s = 0;

    // [crypto]; unset fields take the scheme's defaults
    std::optional<std::string> crypto_preset;
    std::optional<int64_t> sign_us, verify_us, aggregate_per_element_us;
    std::optional<uint64_t> share_wire_bytes, aggregate_wire_bytes;

    // [block]
    uint64_t block_bits = 102400;
    uint32_t ops_per_block = 400;

    // [pipeline]
    std::optional<unsigned> stretch;  // unset: derived from the model
    unsigned base_depth = 4;
    std::optional<double> phi_s;      // unset: estimated from the crypto costs

    // [run]
    double duration_s = 100;
    uint64_t seed = 1;
    double view_timeout_s = 0.3;
    double drain_s = 0;

    // [faults]
    std::vector<FaultSpec> faults;

    /** Sets one key; throws config_error naming the key on bad input. */
    void set(const std::string &key, const std::string &value);

    /** Checks consistency; throws shape_infeasible, fault_budget_exceeded or config_error. */
    void validate() const;

    /** Effective root fanout (N-1 for a star). */
    unsigned root_fanout() const { return topology == Topology::Star ? unsigned(n - 1) : fanout; }
    unsigned levels() const { return topology == Topology::Star ? 2 : height; }

    CryptoCostModel crypto() const;
    /** Root CPU per instance: own signature plus verifying partials up to a quorum. */
    double estimated_phi_s() const;
    double effective_phi_s() const { return phi_s ? *phi_s : estimated_phi_s(); }
    ModelInputs model_inputs() const;
    unsigned effective_stretch() const;
    SimTime effective_delta_us() const;

    ProtocolConfig protocol() const;
    NetParams net() const;
    /** Resolves view-root targets against the evolving graph. */
    FaultSchedule fault_schedule() const;
};

/** Applies a named network preset: large-scale, regional or national. */
void apply_preset(ScenarioConfig &cfg, const std::string &preset);

ScenarioConfig parse_scenario(const std::string &text);
ScenarioConfig load_scenario(const std::string &path);

/** Known keys, for sweep axis validation and help text. */
const std::vector<std::string> &scenario_keys();

}

#endif
