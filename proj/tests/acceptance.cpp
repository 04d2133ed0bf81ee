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


/*
 * Acceptance suite: prints one PASS/FAIL line per criterion and exits
 * non-zero if any fails. Usage: acceptance <scenario-dir>
 */

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <set>
#include <string>
#include <vector>

#include "golden_tables.h"
#include "properties.h"
#include "treebft/error.h"
#include "treebft/harness.h"

using namespace treebft;
namespace tt = treebft::testing;

namespace {

std::string scenario_dir = "scenarios";

struct Outcome {
    bool pass = false;
    std::string detail;
    /** Everything the criterion measured, rendered as CSV; compared by criterion 10. */
    std::string csv;
};

struct Criterion {
    int id;
    const char *name;
    std::function<Outcome()> check;
};

double elapsed_s(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string fmt(const char *f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

ScenarioConfig scenario(const std::string &file) { return load_scenario(scenario_dir + "/" + file); }

// ------------------------------------------------------------------ 1

Outcome collection_algebra() {
    auto start = std::chrono::steady_clock::now();
    auto r = tt::check_collection_laws(10000, 2026);
    double secs = elapsed_s(start);
    Outcome o;
    o.pass = r.failures() == 0 && r.cases >= 20000 && secs < 10;
    o.detail = "cases=" + std::to_string(r.cases) + " failures=" + std::to_string(r.failures()) +
               " time=" + fmt("%.1fs", secs) + " (limit 10s)";
    o.csv = std::to_string(r.cases) + ',' + std::to_string(r.commutativity) + ',' +
            std::to_string(r.associativity) + ',' + std::to_string(r.idempotency) + ',' +
            std::to_string(r.integrity) + ',' + std::to_string(r.verify_failures) + '\n';
    return o;
}

// ------------------------------------------------------------------ 2

Outcome robust_fraction_oracle() {
    auto r = tt::check_robust_fraction(10, 4, 3);
    const size_t big = 1000000;
    double i4 = robust_fraction(big, 4, max_faults(big));
    double i10 = robust_fraction(big, 10, max_faults(big));
    Outcome o;
    o.pass = r.mismatches == 0 && r.cases > 0 && std::fabs(i4 - 0.20) <= 0.01 && std::fabs(i10 - 0.017) <= 0.002;
    o.detail = "exact cases=" + std::to_string(r.cases) + " mismatches=" + std::to_string(r.mismatches) +
               " I=4:" + fmt("%.4f", i4) + " (0.20+-0.01) I=10:" + fmt("%.4f", i10) + " (0.017+-0.002)";
    o.csv = std::to_string(r.cases) + ',' + std::to_string(r.mismatches) + ',' + format_fixed(i4) + ',' +
            format_fixed(i10) + '\n';
    return o;
}

// ------------------------------------------------------------------ 3

Outcome optimal_conformity() {
    auto start = std::chrono::steady_clock::now();
    auto small = tt::check_conformity_exhaustive(12, TreeShape{3, 2}, 3);
    auto sampled = tt::check_conformity_sampled(100, TreeShape{3, 9}, 9, 10000, 2026);
    double secs = elapsed_s(start);
    Outcome o;
    o.pass = small.placements == 220 && small.within_bound == small.placements &&
             sampled.placements == 10000 && sampled.within_bound == sampled.placements && secs < 60;
    o.detail = "N=12: " + std::to_string(small.within_bound) + "/" + std::to_string(small.placements) +
               " max_k=" + std::to_string(small.max_k) + " N=100: " + std::to_string(sampled.within_bound) + "/" +
               std::to_string(sampled.placements) + " max_k=" + std::to_string(sampled.max_k) +
               " time=" + fmt("%.1fs", secs) + " (limit 60s)";
    o.csv = std::to_string(small.within_bound) + ',' + std::to_string(small.max_k) + ',' +
            std::to_string(sampled.within_bound) + ',' + std::to_string(sampled.max_k) + '\n';
    return o;
}

// ------------------------------------------------------------------ 4

Outcome linear_rotation() {
    auto r = tt::check_linear_rotation(7, 3, 2);
    Outcome o;
    o.pass = r.placements == 21 && r.covered == 21 && r.worst_index < 5;
    o.detail = "placements=" + std::to_string(r.placements) + " covered=" + std::to_string(r.covered) +
               " candidates=" + std::to_string(r.candidates) + " worst=" + std::to_string(r.worst_index + 1) +
               " (limit 5)";
    o.csv = std::to_string(r.covered) + ',' + std::to_string(r.candidates) + ',' + std::to_string(r.worst_index) + '\n';
    return o;
}

// ------------------------------------------------------------------ 5

Outcome perf_tables() {
    size_t bad = 0, checked = 0;
    std::ostringstream csv;
    for (const auto &r: tt::example_rows) {
        ModelInputs in = tt::example_inputs(r);
        double bt = busy_time(in), it = idle_time(in), ratio = pipeline_depth(in).ratio;
        // the table prints BT/IT exactly and the ratio to one decimal
        bad += std::fabs(bt - r.bt) > 1e-12;
        bad += std::fabs(it - r.it) > 1e-12;
        bad += std::fabs(ratio - r.ratio) > 0.05;
        checked += 3;
        csv << format_fixed(bt) << ',' << format_fixed(it) << ',' << format_fixed(ratio) << '\n';
    }
    for (const auto &r: tt::phi_rows) {
        ModelInputs in = tt::phi_inputs(r);
        double mbb = in.fanout * message_bits(in) / in.bandwidth_bps * 1e3;
        double bt = busy_time(in) * 1e3;
        bad += tt::rel_err(mbb, r.mbb_ms) > 0.02;
        bad += tt::rel_err(bt, r.bt_ms) > 0.02;
        checked += 2;
        csv << format_fixed(mbb) << ',' << format_fixed(bt);
        if (r.speedup > 0) {
            double est = estimated_speedup(in, tt::phi_inputs(*tt::star_row(r.n)));
            bad += tt::rel_err(est, r.speedup) > 0.05;
            checked++;
            csv << ',' << format_fixed(est);
        }
        csv << '\n';
    }
    Outcome o;
    o.pass = bad == 0;
    o.detail = "values=" + std::to_string(checked) + " out_of_tolerance=" + std::to_string(bad) +
               " (exact / +-2% / speedup +-5%)";
    o.csv = csv.str();
    return o;
}

// ------------------------------------------------------------------ 6

Outcome pipelining_sweep() {
    auto start = std::chrono::steady_clock::now();
    ScenarioConfig base = scenario("kauri-100-large.ini");
    std::vector<std::string> values{"1", "2", "3", "4", "5", "6", "7", "8"};
    std::string table = sweep(base, "stretch", values, 1);
    double secs = elapsed_s(start);

    std::vector<double> ops;
    std::istringstream in(table);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        auto a = line.find(',');
        ops.push_back(std::stod(line.substr(a + 1, line.find(',', a + 1) - a - 1)));
    }
    bool monotone = true;
    for (size_t i = 1; i < 6; i++) monotone &= ops[i] > ops[i - 1];
    double gain = ops[5] / ops[0];
    // "plateau" means stretch 8 gains at most 3% over stretch 7
    double tail = ops[7] / ops[6];
    Outcome o;
    o.pass = monotone && gain >= 5 && tail <= 1.03 && secs < 300;
    std::string series;
    for (double v: ops) series += (series.empty() ? "" : "/") + fmt("%.0f", v);
    o.detail = "ops/s " + series + " monotone_1_6=" + (monotone ? "yes" : "no") + " s6/s1=" +
               fmt("%.2f", gain) + " (>=5) s8/s7=" + fmt("%.3f", tail) + " (<=1.03) time=" + fmt("%.0fs", secs);
    o.csv = table;
    return o;
}

// ------------------------------------------------------------------ 7

Outcome throughput_crossover() {
    ScenarioConfig k400 = scenario("kauri-400-large.ini"), h400 = scenario("hotstuff-400-large.ini");
    ScenarioConfig k100 = scenario("kauri-100-national-serial.ini"), h100 = scenario("hotstuff-100-national.ini");
    std::string ck = metrics_csv(k400, run(k400)), ch = metrics_csv(h400, run(h400));
    std::string nk = metrics_csv(k100, run(k100)), nh = metrics_csv(h100, run(h100));
    CompareReport large = compare(ck, ch), national = compare(nh, nk);
    double band = tt::rel_err(large.measured_ratio, large.model_ratio);
    bool ten = large.measured_ratio >= 10, model = band <= 0.30, small = national.measured_ratio >= 1;
    Outcome o;
    o.pass = ten && model && small;
    o.detail = "N=400 large: ratio " + fmt("%.2f", large.measured_ratio) + " (>=10 " + (ten ? "ok" : "FAIL") +
               "), model " + fmt("%.2f", large.model_ratio) + " off by " + fmt("%.1f%%", band * 100) + " (<=30% " +
               (model ? "ok" : "FAIL") + "); N=100 national stretch 1: HotStuff/Kauri " +
               fmt("%.3f", national.measured_ratio) + " (>=1 " + (small ? "ok" : "FAIL") + ")";
    o.csv = ck + ch + nk + nh;
    return o;
}

// ------------------------------------------------------------------ 8

ScenarioConfig random_fault_scenario(uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](size_t n) { return size_t(std::uniform_int_distribution<size_t>(0, n - 1)(rng)); };
    auto unif = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    static const size_t sizes[] = {7, 10, 13, 16, 22, 31, 40, 64};
    static const char *presets[] = {"large-scale", "regional", "national"};
    static const double timeouts[] = {0.1, 0.2, 0.3};

    ScenarioConfig c;
    c.name = "faults-" + std::to_string(seed);
    c.n = sizes[pick(8)];
    c.topology = pick(4) == 0 ? Topology::Star : Topology::Tree;
    c.height = 3;
    c.fanout = c.n >= 22 ? 3 : 2;
    c.scheme = c.topology == Topology::Tree || pick(2) ? Scheme::Aggregate : Scheme::NaiveSet;
    apply_preset(c, presets[pick(3)]);
    c.stretch = unsigned(1 + pick(3));
    c.duration_s = 10;
    c.drain_s = 30;
    c.view_timeout_s = timeouts[pick(3)];
    c.gst_s = pick(2) ? 0 : unif(1, 5);
    c.seed = seed;

    const size_t f = max_faults(c.n);
    std::set<uint32_t> used;
    for (size_t k = pick(f + 1); k > 0; k--) {
        FaultSpec s;
        s.kind = std::array{FaultKind::CrashSilent, FaultKind::OmitAll, FaultKind::OmitAggregates}[pick(3)];
        s.at_s = unif(0, 8);
        if (pick(5) == 0) {
            s.target_is_view_root = true;
            s.target = uint32_t(pick(3));
        } else {
            s.target = uint32_t(pick(c.n));
        }
        ScenarioConfig trial = c;
        trial.faults.push_back(s);
        FaultSchedule fs = trial.fault_schedule();
        if (!used.insert(fs.entries.back().process.index).second) continue;
        c.faults.push_back(s);
    }
    c.validate();
    return c;
}

Outcome safety_liveness() {
    size_t violations = 0, robust = 0, stuck = 0, incomplete = 0, faults = 0;
    std::string csv;
    std::string first_problem;
    for (uint64_t i = 0; i < 50; i++) {
        ScenarioConfig c = random_fault_scenario(9000 + i);
        faults += c.faults.size();
        try {
            RunMetrics m = run(c);
            csv += metrics_csv(c, m);
            if (m.final_config_robust) {
                robust++;
                if (m.undecided_started != 0) {
                    stuck++;
                    if (first_problem.empty()) first_problem = c.name + " left " + std::to_string(m.undecided_started) + " undecided";
                }
                if (!m.dissemination_complete) incomplete++;
            }
        } catch (const error &e) {
            if (e.code() != errc::agreement_violation) throw;
            violations++;
            if (first_problem.empty()) first_problem = c.name + ": " + e.what();
        }
    }
    Outcome o;
    o.pass = violations == 0 && stuck == 0 && incomplete == 0;
    o.detail = "runs=50 faults=" + std::to_string(faults) + " agreement_violations=" + std::to_string(violations) +
               " robust_runs=" + std::to_string(robust) + " undecided_in_robust=" + std::to_string(stuck) +
               " incomplete_dissemination=" + std::to_string(incomplete) +
               (first_problem.empty() ? "" : " first: " + first_problem);
    o.csv = csv;
    return o;
}

// ------------------------------------------------------------------ 9

struct Recovery {
    double pre_mean = 0;
    double seconds = -1;  // -1: never recovered
    uint64_t view_changes = 0;
};

Recovery recovery_of(const RunMetrics &m, double fault_s) {
    Recovery r;
    double sum = 0;
    for (size_t b = 10; b < size_t(fault_s); b++) sum += m.timeline[b];
    r.pre_mean = sum / (fault_s - 10);
    for (size_t b = size_t(fault_s); b < m.timeline.size(); b++)
        if (m.timeline[b] >= 0.9 * r.pre_mean) {
            r.seconds = double(b + 1) - fault_s;
            break;
        }
    r.view_changes = m.view_changes;
    return r;
}

Outcome leader_replacement() {
    ScenarioConfig one = scenario("kauri-100-crash-1.ini"), three = scenario("kauri-100-crash-3.ini");
    RunMetrics m1 = run(one), m3 = run(three);
    Recovery r1 = recovery_of(m1, 60), r3 = recovery_of(m3, 60);
    bool ok1 = r1.seconds >= 0 && r1.seconds <= 5 && r1.view_changes >= 1;
    bool ok3 = r3.seconds >= 0 && r3.seconds <= 8 && r3.view_changes >= 3;
    Outcome o;
    o.pass = ok1 && ok3 && one.view_timeout_s == 0.3 && three.view_timeout_s == 0.3;
    o.detail = "one fault: " + fmt("%.0fs", r1.seconds) + " (<=5s), views " + std::to_string(r1.view_changes) +
               "; three faulty roots: " + fmt("%.0fs", r3.seconds) + " (<=8s), views " +
               std::to_string(r3.view_changes) + "; pre-fault " + fmt("%.0f", r1.pre_mean) + " ops/s";
    o.csv = metrics_csv(one, m1) + timeline_csv(m1) + metrics_csv(three, m3) + timeline_csv(m3);
    return o;
}

}

int main(int argc, char **argv) {
    if (argc > 1) scenario_dir = argv[1];
    std::vector<Criterion> criteria{
        {1, "collection algebra", collection_algebra},
        {2, "robust fraction oracle", robust_fraction_oracle},
        {3, "optimal conformity", optimal_conformity},
        {4, "linear-conformity rotation", linear_rotation},
        {5, "perf-model golden tables", perf_tables},
        {6, "pipelining sweep", pipelining_sweep},
        {7, "throughput crossover", throughput_crossover},
        {8, "safety and liveness under faults", safety_liveness},
        {9, "leader replacement", leader_replacement},
    };
    // optional trailing ids select a subset
    if (argc > 2) {
        std::set<int> only;
        for (int i = 2; i < argc; i++) only.insert(std::atoi(argv[i]));
        std::erase_if(criteria, [&](const Criterion &c) { return !only.count(c.id); });
    }
    int failed = 0;
    std::vector<std::string> first_csv;
    for (const auto &c: criteria) {
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception &e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        first_csv.push_back(o.csv);
        failed += !o.pass;
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
    }

    size_t differing = 0;
    std::string which;
    for (size_t i = 0; i < criteria.size(); i++) {
        std::string again;
        try {
            again = criteria[i].check().csv;
        } catch (const std::exception &) {
            again = "error";
        }
        if (again != first_csv[i] || again.empty()) {
            differing++;
            which += " " + std::to_string(criteria[i].id);
        }
    }
    bool det = differing == 0;
    failed += !det;
    std::printf("%s 10 determinism: %zu criteria re-run, %zu with differing CSV%s\n", det ? "PASS" : "FAIL",
                criteria.size(), differing, which.c_str());
    return failed == 0 ? 0 : 1;
}
