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

#include "treebft/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "treebft/error.h"

namespace treebft {

namespace {

/** Ledgers of all replicas must be prefixes of the global decision sequence. */
void check_ledgers(const Cluster &cl) {
    const auto &entries = cl.decisions().entries();
    for (size_t i = 0; i < cl.size(); i++) {
        const auto &ledger = cl.replica(i).ledger();
        if (ledger.size() > entries.size())
            throw error(errc::agreement_violation, "ledger longer than the decision log");
        for (size_t h = 0; h < ledger.size(); h++)
            if (ledger[h]->id != entries[h].block->id)
                throw error(errc::agreement_violation,
                            "process " + std::to_string(i) + " diverges at height " + std::to_string(h + 1));
    }
}

const char *topology_name(Topology t) { return t == Topology::Star ? "star" : "tree"; }

}

std::string format_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

RunMetrics run(const ScenarioConfig &cfg, const RunOptions &opts) {
    cfg.validate();
    Cluster cl(cfg.protocol(), cfg.net(), cfg.fault_schedule(), cfg.seed);
    if (opts.trace) cl.network().set_trace(opts.trace);

    const SimTime end = seconds(cfg.duration_s);
    cl.run_until(end);

    RunMetrics m;
    m.stretch = cl.config().pipeline.stretch;
    m.phi_s = cfg.effective_phi_s();
    for (size_t i = 0; i < cfg.n; i++) {
        uint64_t bytes = cl.network().bits_sent(ProcessId(uint32_t(i))) / 8;
        m.bytes_sent.push_back(bytes);
        m.max_bytes_sent_process = std::max(m.max_bytes_sent_process, bytes);
    }
    if (cfg.drain_s > 0) cl.drain(end + seconds(cfg.drain_s));
    check_ledgers(cl);

    m.timeline.assign(size_t(std::ceil(cfg.duration_s)), 0.0);
    double ops = 0, latency = 0;
    for (const auto &e: cl.decisions().entries()) {
        if (e.first_decided > end) continue;
        m.view_changes = std::max(m.view_changes, e.block->view);
        if (e.block->op_count == 0) continue;
        m.blocks_decided++;
        ops += e.block->op_count;
        latency += to_seconds(e.first_decided - e.block->proposed_at);
        size_t bucket = std::min(size_t(e.first_decided / us_per_s), m.timeline.size() - 1);
        m.timeline[bucket] += e.block->op_count;
    }
    m.ops_per_s = ops / cfg.duration_s;
    m.mean_latency_s = m.blocks_decided ? latency / m.blocks_decided : 0;

    const auto &st = cl.stats();
    m.max_inflight = st.max_inflight;
    m.invalid_partials = st.invalid_partials;
    m.qcs_below_quorum = st.qcs_below_quorum;

    const auto &entries = cl.decisions().entries();
    for (const auto &b: cl.blocks().all()) {
        if (b.op_count == 0) continue;
        bool decided = b.height <= entries.size() && entries[b.height - 1].block == &b;
        if (!decided) m.aborted_instances++;
    }
    m.undecided_started = cl.undecided_started();
    m.final_config_robust = cl.final_config_robust() && cfg.gst_s < cfg.duration_s;

    size_t correct = 0;
    for (size_t i = 0; i < cfg.n; i++) correct += cl.correct(ProcessId(uint32_t(i)));
    const uint64_t top = cl.current_view();
    m.dissemination_complete = true;
    for (const auto &e: entries) {
        if (e.block->view != top || e.block->op_count == 0) continue;
        auto it = st.proposal_receipts.find(e.block->seq);
        if (it == st.proposal_receipts.end() || it->second != correct) m.dissemination_complete = false;
    }
    return m;
}

std::string metrics_csv(const ScenarioConfig &cfg, const RunMetrics &m) {
    const CryptoCostModel crypto = cfg.crypto();
    std::ostringstream out;
    out << "name,n,topology,height,fanout,scheme,stretch,rtt_s,bandwidth_bps,block_bits,"
           "share_wire_bytes,aggregate_wire_bytes,phi_s,duration_s,seed,blocks_decided,"
           "ops_per_s,mean_latency_s,view_changes,max_bytes_sent_process\n";
    out << cfg.name << ',' << cfg.n << ',' << topology_name(cfg.topology) << ',' << cfg.levels() << ','
        << cfg.root_fanout() << ',' << (cfg.scheme == Scheme::NaiveSet ? "naive" : "aggregate") << ','
        << m.stretch << ',' << format_fixed(cfg.rtt_s) << ',' << format_fixed(cfg.bandwidth_bps) << ','
        << cfg.block_bits << ',' << crypto.share_wire_bytes << ',' << crypto.aggregate_wire_bytes << ','
        << format_fixed(m.phi_s) << ',' << format_fixed(cfg.duration_s) << ',' << cfg.seed << ','
        << m.blocks_decided << ',' << format_fixed(m.ops_per_s) << ',' << format_fixed(m.mean_latency_s)
        << ',' << m.view_changes << ',' << m.max_bytes_sent_process << '\n';
    return out.str();
}

std::string timeline_csv(const RunMetrics &m) {
    std::ostringstream out;
    out << "second,ops_per_s\n";
    for (size_t i = 0; i < m.timeline.size(); i++) out << i << ',' << format_fixed(m.timeline[i]) << '\n';
    return out.str();
}

std::string sweep(const ScenarioConfig &base, const std::string &axis,
                  const std::vector<std::string> &values, unsigned workers) {
    const auto &keys = scenario_keys();
    if (std::find(keys.begin(), keys.end(), axis) == keys.end())
        throw error(errc::config_error, "unknown sweep axis '" + axis + "'");

    std::vector<ScenarioConfig> cfgs;
    for (const auto &v: values) {
        ScenarioConfig c = base;
        c.set(axis, v);
        c.validate();
        cfgs.push_back(std::move(c));
    }

    std::vector<RunMetrics> results(cfgs.size());
    std::vector<std::exception_ptr> failures(cfgs.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i; (i = next++) < cfgs.size();) {
            try {
                results[i] = run(cfgs[i]);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    workers = std::max(1u, std::min<unsigned>(workers, unsigned(cfgs.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; w++) pool.emplace_back(worker);
    worker();
    for (auto &t: pool) t.join();
    for (auto &f: failures)
        if (f) std::rethrow_exception(f);

    std::ostringstream out;
    out << "axis,ops_per_s,mean_latency_s,view_changes\n";
    for (size_t i = 0; i < cfgs.size(); i++)
        out << values[i] << ',' << format_fixed(results[i].ops_per_s) << ','
            << format_fixed(results[i].mean_latency_s) << ',' << results[i].view_changes << '\n';
    return out.str();
}

namespace {

std::map<std::string, std::string> csv_record(const std::string &csv) {
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    auto split = [](const std::string &s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    auto h = split(header), r = split(row);
    if (h.empty() || h.size() != r.size())
        throw error(errc::config_error, "metrics CSV needs a header and one row of equal width");
    std::map<std::string, std::string> rec;
    for (size_t i = 0; i < h.size(); i++) rec[h[i]] = r[i];
    return rec;
}

double field(const std::map<std::string, std::string> &rec, const std::string &key) {
    auto it = rec.find(key);
    if (it == rec.end()) throw error(errc::config_error, "metrics CSV lacks column '" + key + "'");
    try {
        return std::stod(it->second);
    } catch (const std::exception &) {
        throw error(errc::config_error, "column '" + key + "' is not numeric: " + it->second);
    }
}

ModelInputs inputs_of(const std::map<std::string, std::string> &rec) {
    ModelInputs in;
    in.n = size_t(field(rec, "n"));
    in.height = unsigned(field(rec, "height"));
    in.fanout = unsigned(field(rec, "fanout"));
    in.block_bits = field(rec, "block_bits");
    in.bandwidth_bps = field(rec, "bandwidth_bps");
    in.rtt_s = field(rec, "rtt_s");
    in.phi_s = field(rec, "phi_s");
    in.share_wire_bytes = field(rec, "share_wire_bytes");
    in.aggregate_wire_bytes = field(rec, "aggregate_wire_bytes");
    in.scheme = rec.at("scheme") == "naive" ? Scheme::NaiveSet : Scheme::Aggregate;
    return in;
}

}

CompareReport compare(const std::string &csv_a, const std::string &csv_b) {
    auto a = csv_record(csv_a), b = csv_record(csv_b);
    CompareReport r;
    r.ops_a = field(a, "ops_per_s");
    r.ops_b = field(b, "ops_per_s");
    r.measured_ratio = r.ops_b > 0 ? r.ops_a / r.ops_b : 0;
    r.model_ratio = estimated_speedup(inputs_of(a), inputs_of(b));
    return r;
}

std::string format_compare(const CompareReport &r) {
    std::ostringstream out;
    out << "ops_per_s_a,ops_per_s_b,measured_ratio,model_ratio\n"
        << format_fixed(r.ops_a) << ',' << format_fixed(r.ops_b) << ',' << format_fixed(r.measured_ratio)
        << ',' << format_fixed(r.model_ratio) << '\n';
    return out.str();
}

}
