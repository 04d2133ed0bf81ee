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

#include "treebft/tree.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "treebft/error.h"

namespace treebft {

namespace {

size_t ipow(size_t base, unsigned exp) {
    size_t r = 1;
    while (exp--) r *= base;
    return r;
}

size_t max_index(const std::vector<ProcessId> &ps) {
    size_t n = 0;
    for (auto p: ps) n = std::max(n, size_t(p.index) + 1);
    return n;
}

/**
 * Lays out a tree from an ordered list of internal nodes (breadth-first
 * slots) and a list of leaves. round_robin spreads leaves one at a time
 * over the last internal level; otherwise each gets a contiguous run.
 */
TreeConfig layout(const std::vector<ProcessId> &internal,
                  const std::vector<ProcessId> &leaves,
                  const TreeShape &shape, size_t universe, bool round_robin) {
    TreeConfig t;
    t.height = shape.height;
    t.parent.assign(universe, std::nullopt);
    t.children.assign(universe, {});
    t.root = internal.front();
    t.internal.insert(internal.begin(), internal.end());

    // levels of internal slots: 1, m, m^2, ..., m^(h-2)
    std::vector<std::vector<ProcessId>> levels;
    size_t pos = 0;
    for (unsigned lvl = 0; lvl + 1 < shape.height; lvl++) {
        size_t width = ipow(shape.root_fanout, lvl);
        levels.emplace_back(internal.begin() + pos, internal.begin() + pos + width);
        pos += width;
    }
    for (size_t lvl = 1; lvl < levels.size(); lvl++) {
        const auto &above = levels[lvl - 1];
        for (size_t i = 0; i < levels[lvl].size(); i++) {
            ProcessId parent = above[i / shape.root_fanout];
            ProcessId child = levels[lvl][i];
            t.parent[child.index] = parent;
            t.children[parent.index].push_back(child);
        }
    }
    const auto &last = levels.back();
    const size_t slots = last.size();
    if (round_robin) {
        for (size_t i = 0; i < leaves.size(); i++) {
            ProcessId parent = last[i % slots];
            t.parent[leaves[i].index] = parent;
            t.children[parent.index].push_back(leaves[i]);
        }
    } else {
        size_t base = leaves.size() / slots, extra = leaves.size() % slots;
        size_t next = 0;
        for (size_t s = 0; s < slots; s++) {
            size_t take = base + (s < extra ? 1 : 0);
            for (size_t j = 0; j < take; j++, next++) {
                t.parent[leaves[next].index] = last[s];
                t.children[last[s].index].push_back(leaves[next]);
            }
        }
    }
    return t;
}

void check_shape(size_t n, const TreeShape &shape) {
    if (shape.height < 2)
        throw error(errc::shape_infeasible, "height must be at least 2");
    if (shape.root_fanout < 1)
        throw error(errc::shape_infeasible, "fanout must be at least 1");
    if (shape.height == 2) {
        if (n != size_t(shape.root_fanout) + 1)
            throw error(errc::shape_infeasible,
                        "a height-2 tree needs exactly fanout+1 processes");
        return;
    }
    size_t need = shape.internal_count() + ipow(shape.root_fanout, shape.height - 2);
    if (n < need)
        throw error(errc::shape_infeasible,
                    "height " + std::to_string(shape.height) + " fanout " +
                    std::to_string(shape.root_fanout) + " needs at least " +
                    std::to_string(need) + " processes, got " + std::to_string(n));
}

}

unsigned TreeConfig::depth_of(ProcessId p) const {
    unsigned d = 0;
    while (parent[p.index]) {
        p = *parent[p.index];
        d++;
    }
    return d;
}

std::string TreeConfig::to_text() const {
    std::ostringstream out;
    for (size_t i = 0; i < children.size(); i++) {
        out << i << ":";
        for (size_t j = 0; j < children[i].size(); j++)
            out << (j ? "," : " ") << children[i][j].index;
        out << "\n";
    }
    return out.str();
}

size_t TreeShape::internal_count() const {
    size_t total = 0;
    for (unsigned lvl = 0; lvl + 1 < height; lvl++)
        total += ipow(root_fanout, lvl);
    return total;
}

std::vector<ProcessId> process_range(size_t n) {
    std::vector<ProcessId> ps;
    ps.reserve(n);
    for (size_t i = 0; i < n; i++) ps.emplace_back(uint32_t(i));
    return ps;
}

TreeConfig make_balanced_tree(const std::vector<ProcessId> &processes,
                              unsigned height, unsigned root_fanout) {
    TreeShape shape{height, root_fanout};
    check_shape(processes.size(), shape);
    size_t icount = shape.internal_count();
    std::vector<ProcessId> internal(processes.begin(), processes.begin() + icount);
    std::vector<ProcessId> leaves(processes.begin() + icount, processes.end());
    return layout(internal, leaves, shape, max_index(processes), false);
}

TreeConfig make_star(const std::vector<ProcessId> &processes) {
    if (processes.size() < 2)
        throw error(errc::shape_infeasible, "a star needs at least two processes");
    return make_balanced_tree(processes, 2, unsigned(processes.size() - 1));
}

BinPartition partition_bins(const std::vector<ProcessId> &processes,
                            size_t bin_size, size_t f) {
    if (bin_size == 0)
        throw error(errc::insufficient_bins, "bin size must be positive");
    size_t count = processes.size() / bin_size;
    if (count < f + 1)
        throw error(errc::insufficient_bins,
                    std::to_string(count) + " bins of " + std::to_string(bin_size) +
                    " cannot cover f+1 = " + std::to_string(f + 1));
    BinPartition p;
    p.bin_size = bin_size;
    for (size_t b = 0; b < count; b++)
        p.bins.emplace_back(processes.begin() + b * bin_size,
                            processes.begin() + (b + 1) * bin_size);
    p.leftover.assign(processes.begin() + count * bin_size, processes.end());
    return p;
}

TreeConfig build(uint64_t k, const BinPartition &partition, const TreeShape &shape) {
    if (partition.bins.empty())
        throw error(errc::insufficient_bins, "empty partition");
    if (partition.bin_size != shape.internal_count())
        throw error(errc::shape_infeasible, "bin size does not match the shape's internal count");
    const auto &bin = partition.bins[k % partition.bins.size()];

    std::vector<ProcessId> all;
    for (const auto &b: partition.bins) all.insert(all.end(), b.begin(), b.end());
    all.insert(all.end(), partition.leftover.begin(), partition.leftover.end());
    check_shape(all.size(), shape);

    std::set<ProcessId> chosen(bin.begin(), bin.end());
    std::vector<ProcessId> leaves;
    for (auto p: all)
        if (!chosen.count(p)) leaves.push_back(p);
    std::sort(leaves.begin(), leaves.end());
    return layout(bin, leaves, shape, max_index(all), true);
}

bool is_robust(const TreeConfig &tree, const FaultSet &faults) {
    if (faults.contains(tree.root)) return false;
    for (size_t i = 0; i < tree.size(); i++) {
        ProcessId p{uint32_t(i)};
        if (faults.contains(p)) continue;
        if (p != tree.root && !tree.parent[i]) continue;  // not part of the tree
        for (auto cur = tree.parent[i]; cur; cur = tree.parent[cur->index])
            if (faults.contains(*cur)) return false;
    }
    return true;
}

bool internal_fault_free(const TreeConfig &tree, const FaultSet &faults) {
    for (auto p: tree.internal)
        if (faults.contains(p)) return false;
    return true;
}

Rational robust_fraction_exact(size_t n, size_t internal, size_t f) {
    if (internal == 0 || internal > n || f > n || n - f < internal)
        throw error(errc::out_of_domain,
                    "robust fraction needs 0 < I <= N and N - f >= I");
    Rational r(1);
    for (size_t j = 0; j < internal; j++)
        r *= Rational(n - f - j, n - j);
    return r;
}

double robust_fraction(size_t n, size_t internal, size_t f) {
    if (internal == 0 || internal > n || f > n || n - f < internal)
        throw error(errc::out_of_domain,
                    "robust fraction needs 0 < I <= N and N - f >= I");
    long double r = 1.0L;
    for (size_t j = 0; j < internal; j++)
        r *= (long double)(n - f - j) / (long double)(n - j);
    return double(r);
}

size_t conformity_bound_check(const BinPartition &partition, const TreeShape &shape,
                              const FaultSet &faults) {
    for (size_t k = 0; k < partition.bins.size(); k++)
        if (internal_fault_free(build(k, partition, shape), faults))
            return k;
    return partition.bins.size();
}

std::vector<std::vector<ProcessId>> plan_linear_rotation(const BinPartition &partition,
                                                         size_t f) {
    const size_t I = partition.bin_size;
    const auto &left = partition.leftover;
    if (partition.bins.empty() || partition.bins.size() < f)
        throw error(errc::infeasible, "linear rotation needs floor(N/I) >= f");
    if (left.empty())
        throw error(errc::infeasible, "linear rotation needs leftover processes");
    if (left.size() > I)
        throw error(errc::infeasible, "more leftover processes than bin slots");

    std::vector<std::vector<ProcessId>> plan(partition.bins.begin(), partition.bins.end());
    // bin 0 with leftovers replacing slots [start, start+L), window clamped to the bin
    const size_t L = left.size();
    const size_t steps = (I + L - 1) / L;
    for (size_t s = 0; s < steps; s++) {
        size_t start = std::min(s * L, I - L);
        auto cand = partition.bins.front();
        for (size_t j = 0; j < L; j++) cand[start + j] = left[j];
        plan.push_back(std::move(cand));
    }
    return plan;
}

}
