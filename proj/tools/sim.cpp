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

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "treebft/error.h"
#include "treebft/harness.h"
#include "treebft/perfmodel.h"

using namespace treebft;

namespace {

enum exit_code { ok = 0, validation = 2, invariant = 3 };

int exit_for(const error &e) {
    switch (e.code()) {
        case errc::agreement_violation:
        case errc::causality_violation:
        case errc::drained:
            return invariant;
        default:
            return validation;
    }
}

std::string slurp(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw error(errc::config_error, "cannot read '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string &path, const std::string &text) {
    std::ofstream f(path);
    if (!f) throw error(errc::config_error, "cannot write '" + path + "'");
    f << text;
}

std::vector<std::string> split_values(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string v;
    while (std::getline(ss, v, ','))
        if (!v.empty()) out.push_back(v);
    return out;
}

/** `key=value` pairs: n h m B b rtt phi scheme overhead. */
ModelInputs model_from(const std::vector<std::string> &params) {
    ModelInputs in;
    for (const auto &p: params) {
        auto eq = p.find('=');
        if (eq == std::string::npos) throw error(errc::config_error, "expected key=value, got '" + p + "'");
        std::string k = p.substr(0, eq), v = p.substr(eq + 1);
        try {
            if (k == "n") in.n = std::stoul(v);
            else if (k == "h") in.height = unsigned(std::stoul(v));
            else if (k == "m") in.fanout = unsigned(std::stoul(v));
            else if (k == "B") in.block_bits = std::stod(v);
            else if (k == "b") in.bandwidth_bps = std::stod(v);
            else if (k == "rtt") in.rtt_s = std::stod(v);
            else if (k == "phi") in.phi_s = std::stod(v);
            else if (k == "scheme") in.scheme = v == "naive" ? Scheme::NaiveSet : Scheme::Aggregate;
            else if (k == "overhead") in.signature_overhead = v != "0" && v != "false";
            else throw error(errc::config_error, "unknown model parameter '" + k + "'");
        } catch (const std::logic_error &) {
            throw error(errc::config_error, "bad value for '" + k + "': " + v);
        }
    }
    if (!in.valid()) throw error(errc::out_of_domain, "model inputs must be positive with h >= 2");
    return in;
}

}

int main(int argc, char **argv) {
    CLI::App app{"Tree-based BFT consensus simulator"};
    app.require_subcommand(1);

    std::string scenario, csv_path, trace_path, timeline_path, axis, values;
    std::optional<uint64_t> seed;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());

    auto *run_cmd = app.add_subcommand("run", "simulate one scenario");
    run_cmd->add_option("scenario", scenario, "scenario file")->required();
    run_cmd->add_option("--seed", seed, "override the scenario seed");
    run_cmd->add_option("--csv", csv_path, "write the metrics row here");
    run_cmd->add_option("--trace", trace_path, "write the event trace here");
    run_cmd->add_option("--timeline", timeline_path, "write per-second throughput here");

    auto *sweep_cmd = app.add_subcommand("sweep", "run one scenario over several values of a key");
    sweep_cmd->add_option("scenario", scenario, "scenario file")->required();
    sweep_cmd->add_option("--axis", axis, "scenario key to vary")->required();
    sweep_cmd->add_option("--values", values, "comma separated values")->required();
    sweep_cmd->add_option("--csv", csv_path, "write the table here as well");
    sweep_cmd->add_option("--workers", workers, "parallel simulations");

    std::vector<std::string> params;
    auto *model_cmd = app.add_subcommand("model", "evaluate the analytic pipelining model");
    model_cmd->add_option("params", params, "n= h= m= B= b= rtt= phi= scheme= overhead=");

    std::string csv_a, csv_b;
    auto *cmp_cmd = app.add_subcommand("compare", "compare two metrics CSVs (a over b)");
    cmp_cmd->add_option("a", csv_a, "metrics CSV")->required();
    cmp_cmd->add_option("b", csv_b, "metrics CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? ok : validation;
    }

    try {
        if (*run_cmd) {
            ScenarioConfig cfg = load_scenario(scenario);
            if (seed) cfg.seed = *seed;
            std::ofstream trace;
            RunOptions opts;
            if (!trace_path.empty()) {
                trace.open(trace_path);
                if (!trace) throw error(errc::config_error, "cannot write '" + trace_path + "'");
                opts.trace = &trace;
            }
            RunMetrics m = run(cfg, opts);
            std::string csv = metrics_csv(cfg, m);
            std::cout << csv;
            if (!csv_path.empty()) write_file(csv_path, csv);
            if (!timeline_path.empty()) write_file(timeline_path, timeline_csv(m));
        } else if (*sweep_cmd) {
            ScenarioConfig cfg = load_scenario(scenario);
            std::string table = sweep(cfg, axis, split_values(values), workers);
            std::cout << table;
            if (!csv_path.empty()) write_file(csv_path, table);
        } else if (*model_cmd) {
            ModelInputs in = model_from(params);
            PipelineDepth d = pipeline_depth(in);
            std::cout << "n,height,fanout,message_bits,busy_time_s,idle_time_s,ratio,stretch,instances,max_speedup\n"
                      << in.n << ',' << in.height << ',' << in.fanout << ',' << format_fixed(message_bits(in))
                      << ',' << format_fixed(busy_time(in)) << ',' << format_fixed(idle_time(in)) << ','
                      << format_fixed(d.ratio) << ',' << d.stretch << ',' << d.instances << ','
                      << format_fixed(max_speedup(in.n, in.fanout)) << '\n';
        } else if (*cmp_cmd) {
            std::cout << format_compare(compare(slurp(csv_a), slurp(csv_b)));
        }
    } catch (const error &e) {
        std::cerr << "sim: " << e.what() << '\n';
        return exit_for(e);
    }
    return ok;
}
