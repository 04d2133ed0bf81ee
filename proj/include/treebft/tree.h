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

#ifndef _TREEBFT_TREE_H
#define _TREEBFT_TREE_H

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "treebft/collections.h"

namespace treebft {

/**
 * One static communication graph over processes [0, N).
 *
 * parent/children are indexed by ProcessId::index. A star is the height-2
 * instance, so the same engine runs both topologies.
 */
struct TreeConfig {
    ProcessId root;
    std::vector<std::optional<ProcessId>> parent;
    std::vector<std::vector<ProcessId>> children;
    unsigned height = 2;
    std::set<ProcessId> internal;

    size_t size() const { return parent.size(); }
    bool is_internal(ProcessId p) const { return internal.count(p) != 0; }
    bool is_leaf(ProcessId p) const { return children[p.index].empty() && p != root; }
    unsigned depth_of(ProcessId p) const;

    /** Canonical adjacency text: one `id: child,child,...` line per node. */
    std::string to_text() const;

    bool operator==(const TreeConfig &) const = default;
};

/** Desired shape: node levels (star = 2) and root fanout. */
struct TreeShape {
    unsigned height = 3;
    unsigned root_fanout = 10;

    /** Internal nodes including the root for this shape. */
    size_t internal_count() const;
    bool operator==(const TreeShape &) const = default;
};

struct BinPartition {
    std::vector<std::vector<ProcessId>> bins;
    size_t bin_size = 0;
    std::vector<ProcessId> leftover;
};

struct FaultSet {
    std::set<ProcessId> faulty;

    bool contains(ProcessId p) const { return faulty.count(p) != 0; }
    size_t size() const { return faulty.size(); }
};

inline size_t max_faults(size_t n) { return n == 0 ? 0 : (n - 1) / 3; }

std::vector<ProcessId> process_range(size_t n);

/**
 * Balanced tree: the first process is the root, the next root_fanout
 * processes its children, each further internal level has fanout m, and the
 * remaining processes are spread in contiguous runs over the last internal
 * level so sibling fanouts differ by at most one. Throws shape_infeasible.
 */
TreeConfig make_balanced_tree(const std::vector<ProcessId> &processes,
                              unsigned height, unsigned root_fanout);

TreeConfig make_star(const std::vector<ProcessId> &processes);

/** floor(N/I) disjoint bins of I processes; throws insufficient_bins. */
BinPartition partition_bins(const std::vector<ProcessId> &processes,
                            size_t bin_size, size_t f);

/** Tree of configuration k: internal nodes drawn from bin k mod |bins|. */
TreeConfig build(uint64_t k, const BinPartition &partition, const TreeShape &shape);

/** Root correct and no faulty vertex on the path root -> any correct node. */
bool is_robust(const TreeConfig &tree, const FaultSet &faults);

/** Stricter criterion guaranteed by the bin construction. */
bool internal_fault_free(const TreeConfig &tree, const FaultSet &faults);

using Rational = boost::multiprecision::cpp_rational;

/** Fraction of I-subsets of N processes that avoid all f faulty ones. */
Rational robust_fraction_exact(size_t n, size_t internal, size_t f);
double robust_fraction(size_t n, size_t internal, size_t f);

/** Smallest k whose tree has a fault-free internal set. */
size_t conformity_bound_check(const BinPartition &partition, const TreeShape &shape,
                              const FaultSet &faults);

/**
 * Candidate internal sets for the regime floor(N/I) >= f with leftovers:
 * every bin in order, then bin 0 with a window of leftover processes slid
 * across it. Throws infeasible outside that regime.
 */
std::vector<std::vector<ProcessId>> plan_linear_rotation(const BinPartition &partition,
                                                         size_t f);

}

#endif
