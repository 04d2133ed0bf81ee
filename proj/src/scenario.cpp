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

#include "treebft/scenario.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "treebft/error.h"

namespace treebft {

namespace {

const std::map<std::string, std::string> &key_sections() {
    static const std::map<std::string, std::string> keys{
        {"name", "scenario"},
        {"n", "system"}, {"topology", "system"}, {"height", "system"},
        {"fanout", "system"}, {"scheme", "system"},
        {"preset", "network"}, {"rtt_ms", "network"}, {"bandwidth_mbps", "network"},
        {"delta_ms", "network"}, {"gst_s", "network"},
        {"crypto", "crypto"}, {"sign_us", "crypto"}, {"verify_us", "crypto"},
        {"aggregate_per_element_us", "crypto"}, {"share_wire_bytes", "crypto"},
        {"aggregate_wire_bytes", "crypto"},
        {"block_bits", "block"}, {"ops_per_block", "block"},
        {"stretch", "pipeline"}, {"base_depth", "pipeline"}, {"phi_ms", "pipeline"},
        {"duration_s", "run"}, {"seed", "run"}, {"view_timeout_s", "run"}, {"drain_s", "run"},
        {"crash", "faults"}, {"omit", "faults"}, {"omit_aggregates", "faults"},
        {"crash_root", "faults"},
    };
    return keys;
}

std::string trim(std::string_view s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    size_t b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

[[noreturn]] void bad(const std::string &key, const std::string &value, const char *want) {
    throw error(errc::config_error, key + ": expected " + want + ", got '" + value + "'");
}

template <class T>
T parse_uint(const std::string &key, const std::string &v) {
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "a non-negative integer");
    return out;
}

double parse_double(const std::string &key, const std::string &v) {
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) bad(key, v, "a number");
    return out;
}

double parse_nonneg(const std::string &key, const std::string &v) {
    double d = parse_double(key, v);
    if (d < 0) bad(key, v, "a non-negative number");
    return d;
}

void parse_faults(std::vector<FaultSpec> &out, FaultKind kind, bool view_root,
                  const std::string &key, const std::string &value) {
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        auto at = item.find('@');
        if (at == std::string::npos) bad(key, item, "target@seconds");
        FaultSpec f;
        f.kind = kind;
        f.target_is_view_root = view_root;
        f.target = parse_uint<uint32_t>(key, trim(item.substr(0, at)));
        f.at_s = parse_nonneg(key, trim(item.substr(at + 1)));
        out.push_back(f);
    }
}

}

const std::vector<std::string> &scenario_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto &[name, _]: key_sections()) k.push_back(name);
        return k;
    }();
    return keys;
}

void apply_preset(ScenarioConfig &cfg, const std::string &preset) {
    if (preset == "large-scale") {
        cfg.rtt_s = 0.2;
        cfg.bandwidth_bps = 25e6;
    } else if (preset == "regional") {
        cfg.rtt_s = 0.1;
        cfg.bandwidth_bps = 100e6;
    } else if (preset == "national") {
        cfg.rtt_s = 0.02;
        cfg.bandwidth_bps = 100e6;
    } else {
        bad("preset", preset, "large-scale, regional or national");
    }
}

void ScenarioConfig::set(const std::string &key, const std::string &value) {
    const std::string &v = value;
    if (key == "name") name = v;
    else if (key == "n") n = parse_uint<size_t>(key, v);
    else if (key == "topology") {
        if (v == "star") topology = Topology::Star;
        else if (v == "tree") topology = Topology::Tree;
        else bad(key, v, "star or tree");
    }
    else if (key == "height") height = parse_uint<unsigned>(key, v);
    else if (key == "fanout") fanout = parse_uint<unsigned>(key, v);
    else if (key == "scheme") {
        if (v == "naive") scheme = Scheme::NaiveSet;
        else if (v == "aggregate") scheme = Scheme::Aggregate;
        else bad(key, v, "naive or aggregate");
    }
    else if (key == "preset") apply_preset(*this, v);
    else if (key == "rtt_ms") rtt_s = parse_nonneg(key, v) / 1e3;
    else if (key == "bandwidth_mbps") bandwidth_bps = parse_nonneg(key, v) * 1e6;
    else if (key == "delta_ms") {
        if (v == "auto") delta_s.reset();
        else delta_s = parse_nonneg(key, v) / 1e3;
    }
    else if (key == "gst_s") gst_s = parse_nonneg(key, v);
    else if (key == "crypto") {
        if (v != "secp" && v != "bls" && v != "auto") bad(key, v, "secp, bls or auto");
        crypto_preset = v;
    }
    else if (key == "sign_us") sign_us = parse_uint<int64_t>(key, v);
    else if (key == "verify_us") verify_us = parse_uint<int64_t>(key, v);
    else if (key == "aggregate_per_element_us") aggregate_per_element_us = parse_uint<int64_t>(key, v);
    else if (key == "share_wire_bytes") share_wire_bytes = parse_uint<uint64_t>(key, v);
    else if (key == "aggregate_wire_bytes") aggregate_wire_bytes = parse_uint<uint64_t>(key, v);
    else if (key == "block_bits") block_bits = parse_uint<uint64_t>(key, v);
    else if (key == "ops_per_block") ops_per_block = parse_uint<uint32_t>(key, v);
    else if (key == "stretch") {
        if (v == "auto") stretch.reset();
        else stretch = parse_uint<unsigned>(key, v);
    }
    else if (key == "base_depth") base_depth = parse_uint<unsigned>(key, v);
    else if (key == "phi_ms") {
        if (v == "auto") phi_s.reset();
        else phi_s = parse_nonneg(key, v) / 1e3;
    }
    else if (key == "duration_s") duration_s = parse_nonneg(key, v);
    else if (key == "seed") seed = parse_uint<uint64_t>(key, v);
    else if (key == "view_timeout_s") view_timeout_s = parse_nonneg(key, v);
    else if (key == "drain_s") drain_s = parse_nonneg(key, v);
    else if (key == "crash") parse_faults(faults, FaultKind::CrashSilent, false, key, v);
    else if (key == "omit") parse_faults(faults, FaultKind::OmitAll, false, key, v);
    else if (key == "omit_aggregates") parse_faults(faults, FaultKind::OmitAggregates, false, key, v);
    else if (key == "crash_root") parse_faults(faults, FaultKind::CrashSilent, true, key, v);
    else throw error(errc::config_error, "unknown key '" + key + "'");
}

CryptoCostModel ScenarioConfig::crypto() const {
    CryptoCostModel m = CryptoCostModel::defaults_for(scheme);
    if (crypto_preset == "secp") m = CryptoCostModel::secp_like();
    else if (crypto_preset == "bls") m = CryptoCostModel::bls_like();
    if (sign_us) m.sign_us = *sign_us;
    if (verify_us) m.verify_us = *verify_us;
    if (aggregate_per_element_us) m.aggregate_per_element_us = *aggregate_per_element_us;
    if (share_wire_bytes) m.share_wire_bytes = *share_wire_bytes;
    if (aggregate_wire_bytes) m.aggregate_wire_bytes = *aggregate_wire_bytes;
    return m;
}

double ScenarioConfig::estimated_phi_s() const {
    const CryptoCostModel m = crypto();
    const unsigned fan = root_fanout();
    const size_t quorum = 2 * max_faults(n) + 1;
    // votes arrive in partials covering one child subtree each
    double subtree = double(n - 1) / fan;
    size_t k = std::max<size_t>(1, size_t(std::lround(subtree)));
    size_t partials = size_t(std::ceil(double(quorum - 1) / subtree - 1e-9));
    partials = std::min<size_t>(partials, fan);
    int64_t per = cpu_cost(CryptoOp::Verify, k, scheme, m) + cpu_cost(CryptoOp::Combine, 1, scheme, m);
    int64_t us = cpu_cost(CryptoOp::Sign, 1, scheme, m) + int64_t(partials) * per;
    return double(us) / 1e6;
}

ModelInputs ScenarioConfig::model_inputs() const {
    const CryptoCostModel m = crypto();
    ModelInputs in;
    in.n = n;
    in.height = levels();
    in.fanout = root_fanout();
    in.block_bits = double(block_bits);
    in.bandwidth_bps = bandwidth_bps;
    in.rtt_s = rtt_s;
    in.phi_s = effective_phi_s();
    in.scheme = scheme;
    in.share_wire_bytes = double(m.share_wire_bytes);
    in.aggregate_wire_bytes = double(m.aggregate_wire_bytes);
    return in;
}

unsigned ScenarioConfig::effective_stretch() const {
    if (stretch) return *stretch;
    return pipeline_depth(model_inputs(), base_depth).stretch;
}

SimTime ScenarioConfig::effective_delta_us() const {
    if (delta_s) return seconds(*delta_s);
    // one round at the widest node: send to every child, then verify every child's partial
    ModelInputs in = model_inputs();
    TreeConfig t = make_balanced_tree(process_range(n), levels(), root_fanout());
    size_t widest = 0, largest = 1;
    for (size_t i = 0; i < n; i++) {
        widest = std::max(widest, t.children[i].size());
        if (ProcessId(uint32_t(i)) != t.root && !t.children[i].empty())
            largest = std::max(largest, t.children[i].size() + 1);
    }
    const CryptoCostModel m = crypto();
    double transmit = widest * message_bits(in) / in.bandwidth_bps;
    double per_child = double(cpu_cost(CryptoOp::Verify, largest, scheme, m) + cpu_cost(CryptoOp::Combine, 1, scheme, m));
    double cpu = (widest * per_child + cpu_cost(CryptoOp::Sign, 1, scheme, m)) / 1e6;
    return seconds(levels() * rtt_s + transmit + cpu);
}

void ScenarioConfig::validate() const {
    if (n < 2) throw error(errc::config_error, "n: need at least 2 processes");
    if (topology == Topology::Tree && height < 2)
        throw error(errc::shape_infeasible, "height: a tree needs at least 2 levels");
    if (topology == Topology::Tree && fanout < 1)
        throw error(errc::shape_infeasible, "fanout: must be at least 1");
    if (rtt_s <= 0) throw error(errc::config_error, "rtt_ms: must be positive");
    if (bandwidth_bps <= 0) throw error(errc::config_error, "bandwidth_mbps: must be positive");
    if (duration_s <= 0) throw error(errc::config_error, "duration_s: must be positive");
    if (view_timeout_s <= 0) throw error(errc::config_error, "view_timeout_s: must be positive");
    if (stretch && *stretch < 1) throw error(errc::config_error, "stretch: must be at least 1");
    if (base_depth < 1) throw error(errc::config_error, "base_depth: must be at least 1");
    if (!crypto().valid()) throw error(errc::config_error, "crypto: costs must be non-negative");
    if (delta_s && *delta_s < rtt_s) throw error(errc::config_error, "delta_ms: must be at least the RTT");

    ViewPlan plan(n, TreeShape{levels(), root_fanout()});
    std::set<uint32_t> faulty;
    for (const auto &f: faults) {
        uint32_t p = f.target_is_view_root ? plan.root(f.target).index : f.target;
        if (p >= n)
            throw error(errc::config_error, "faults: process " + std::to_string(p) + " out of range");
        faulty.insert(p);
    }
    if (faulty.size() > max_faults(n))
        throw error(errc::fault_budget_exceeded,
                    "faults: " + std::to_string(faulty.size()) + " faulty processes exceed f = " +
                    std::to_string(max_faults(n)));
}

ProtocolConfig ScenarioConfig::protocol() const {
    ProtocolConfig p;
    p.n = n;
    p.shape = TreeShape{levels(), root_fanout()};
    p.scheme = scheme;
    p.crypto = crypto();
    p.pipeline.base_depth = base_depth;
    p.pipeline.stretch = effective_stretch();
    p.block_bits = block_bits;
    p.ops_per_block = ops_per_block;
    p.view_timeout_us = seconds(view_timeout_s);
    p.stop_at = drain_s > 0 ? seconds(duration_s) : INT64_MAX;
    return p;
}

NetParams ScenarioConfig::net() const {
    NetParams p;
    p.rtt_us = seconds(rtt_s);
    p.bandwidth_bps = uint64_t(std::llround(bandwidth_bps));
    p.delta_us = effective_delta_us();
    p.gst_us = seconds(gst_s);
    return p;
}

FaultSchedule ScenarioConfig::fault_schedule() const {
    ViewPlan plan(n, TreeShape{levels(), root_fanout()});
    FaultSchedule s;
    for (const auto &f: faults) {
        ProcessId p = f.target_is_view_root ? plan.root(f.target) : ProcessId(f.target);
        s.entries.push_back({p, f.kind, seconds(f.at_s)});
    }
    return s;
}

ScenarioConfig parse_scenario(const std::string &text) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto where = [&] { return "line " + std::to_string(lineno) + ": "; };
        if (line.front() == '[') {
            if (line.back() != ']') throw error(errc::config_error, where() + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            static const std::set<std::string> sections{"scenario", "system", "network", "crypto",
                                                        "block", "pipeline", "run", "faults"};
            if (!sections.count(section))
                throw error(errc::config_error, where() + "unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw error(errc::config_error, where() + "expected key = value");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        auto it = key_sections().find(key);
        if (it == key_sections().end()) throw error(errc::config_error, where() + "unknown key '" + key + "'");
        if (!section.empty() && it->second != section)
            throw error(errc::config_error,
                        where() + "key '" + key + "' belongs in [" + it->second + "], not [" + section + "]");
        try {
            cfg.set(key, value);
        } catch (const error &e) {
            throw error(e.code(), where() + e.detail());
        }
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw error(errc::config_error, "cannot read scenario file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str());
}

}
