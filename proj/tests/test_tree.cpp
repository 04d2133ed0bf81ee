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


#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "properties.h"
#include "treebft/error.h"
#include "treebft/tree.h"

using namespace treebft;
namespace tt = treebft::testing;

namespace {

ProcessId P(uint32_t i) { return ProcessId(i); }

void expect_sibling_fanouts(const TreeConfig &t, size_t lo, size_t hi) {
    for (auto c: t.children[t.root.index]) {
        size_t k = t.children[c.index].size();
        EXPECT_GE(k, lo);
        EXPECT_LE(k, hi);
    }
}

FaultSet faults(std::initializer_list<uint32_t> ids) {
    FaultSet f;
    for (auto i: ids) f.faulty.insert(P(i));
    return f;
}

template <class Fn>
errc code_of(Fn fn) {
    try {
        fn();
    } catch (const error &e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return errc::config_error;
}

}

TEST(Tree, BalancedFanouts) {
    TreeConfig t100 = make_balanced_tree(process_range(100), 3, 10);
    EXPECT_EQ(t100.children[t100.root.index].size(), 10u);
    expect_sibling_fanouts(t100, 8, 9);
    EXPECT_EQ(t100.internal.size(), 11u);
    EXPECT_EQ(t100.height, 3u);

    TreeConfig t400 = make_balanced_tree(process_range(400), 3, 20);
    EXPECT_EQ(t400.children[t400.root.index].size(), 20u);
    expect_sibling_fanouts(t400, 18, 19);
}

TEST(Tree, SevenNodeExample) {
    TreeConfig t = make_balanced_tree(process_range(7), 3, 2);
    EXPECT_EQ(t.root, P(0));
    EXPECT_EQ(t.children[0].size(), 2u);
    EXPECT_EQ(t.children[1].size(), 2u);
    EXPECT_EQ(t.children[2].size(), 2u);
    EXPECT_EQ(t.depth_of(P(6)), 2u);
    EXPECT_EQ(t.to_text(), make_balanced_tree(process_range(7), 3, 2).to_text());
}

TEST(Tree, CanonicalText) {
    TreeConfig s = make_star(process_range(3));
    EXPECT_EQ(s.to_text(), "0: 1,2\n1:\n2:\n");
}

TEST(Tree, ShapeInfeasible) {
    EXPECT_EQ(code_of([] { make_balanced_tree(process_range(10), 3, 10); }), errc::shape_infeasible);
    EXPECT_EQ(code_of([] { make_balanced_tree(process_range(10), 1, 3); }), errc::shape_infeasible);
    EXPECT_EQ(code_of([] { make_star(process_range(1)); }), errc::shape_infeasible);
}

TEST(Tree, Star) {
    for (size_t n: {2u, 7u, 50u}) {
        TreeConfig s = make_star(process_range(n));
        EXPECT_EQ(s.children[s.root.index].size(), n - 1);
        EXPECT_EQ(s.internal.size(), 1u);
        EXPECT_EQ(s.height, 2u);
    }
    // star robustness reduces to a correct root
    TreeConfig s = make_star(process_range(7));
    tt::for_each_placement(7, 2, [&](const FaultSet &fs) {
        EXPECT_EQ(is_robust(s, fs), !fs.contains(s.root));
    });
}

TEST(Tree, Robustness) {
    TreeConfig t = make_balanced_tree(process_range(7), 3, 2);
    EXPECT_FALSE(is_robust(t, faults({0})));
    EXPECT_TRUE(is_robust(t, faults({3, 4, 6})));
    // faulty internal node with only faulty children cuts no correct path
    EXPECT_TRUE(is_robust(t, faults({1, 3, 4})));
    EXPECT_FALSE(is_robust(t, faults({1, 3})));
    EXPECT_FALSE(internal_fault_free(t, faults({1, 3, 4})));
}

TEST(Tree, PartitionBins) {
    BinPartition p = partition_bins(process_range(12), 3, 3);
    EXPECT_EQ(p.bins.size(), 4u);
    EXPECT_TRUE(p.leftover.empty());

    BinPartition q = partition_bins(process_range(421), 21, 19);
    EXPECT_EQ(q.bins.size(), 20u);
    EXPECT_EQ(q.leftover.size(), 1u);
    EXPECT_EQ(max_faults(421), 140u);  // the full BFT bound is far above the bin count

    EXPECT_EQ(code_of([] { partition_bins(process_range(10), 4, 3); }), errc::insufficient_bins);
}

TEST(Tree, BuildRotatesBins) {
    BinPartition p = partition_bins(process_range(12), 3, 3);
    TreeShape shape{3, 2};
    for (uint64_t k = 0; k < 8; k++) {
        TreeConfig t = build(k, p, shape);
        EXPECT_EQ(t.internal, build(k + p.bins.size(), p, shape).internal);
        std::set<ProcessId> bin(p.bins[k % 4].begin(), p.bins[k % 4].end());
        EXPECT_EQ(t.internal, bin);
        EXPECT_EQ(t.to_text(), build(k, p, shape).to_text());
        size_t placed = 0;
        for (size_t i = 0; i < t.size(); i++)
            if (t.parent[i] || P(uint32_t(i)) == t.root) placed++;
        EXPECT_EQ(placed, 12u);
    }
}

TEST(Tree, ConformityExamples) {
    BinPartition p = partition_bins(process_range(12), 3, 3);
    TreeShape shape{3, 2};
    EXPECT_EQ(conformity_bound_check(p, shape, FaultSet{}), 0u);
    // one fault in each of the first three bins: the fourth build is clean
    EXPECT_EQ(conformity_bound_check(p, shape, faults({0, 4, 8})), 3u);
    EXPECT_EQ(conformity_bound_check(p, shape, faults({0, 1, 2})), 1u);
}

TEST(Tree, ConformityExhaustiveTwelve) {
    auto r = tt::check_conformity_exhaustive(12, TreeShape{3, 2}, 3);
    EXPECT_EQ(r.placements, 220u);
    EXPECT_EQ(r.within_bound, r.placements);
    EXPECT_EQ(r.max_k, 3u);
}

TEST(Tree, ConformityExhaustiveSmallGrid) {
    for (size_t n = 6; n <= 14; n++)
        for (unsigned m: {1u, 2u, 3u}) {
            TreeShape shape{3, m};
            size_t I = shape.internal_count();
            if (n / I < 2 || n < I + m) continue;
            size_t f = std::min(max_faults(n), n / I - 1);
            auto r = tt::check_conformity_exhaustive(n, shape, f);
            EXPECT_EQ(r.within_bound, r.placements) << "n=" << n << " m=" << m;
        }
}

TEST(Tree, ConformitySampledHundred) {
    auto r = tt::check_conformity_sampled(100, TreeShape{3, 9}, 9, 2000, 3);
    EXPECT_EQ(r.within_bound, r.placements);
}

TEST(Tree, RobustFractionMatchesEnumeration) {
    auto r = tt::check_robust_fraction(10, 4, 3);
    EXPECT_GT(r.cases, 100u);
    EXPECT_EQ(r.mismatches, 0u);
    EXPECT_EQ(robust_fraction_exact(9, 2, 3), tt::brute_force_fraction(9, 2, 3));
    EXPECT_EQ(robust_fraction_exact(9, 2, 3), Rational(30, 72));
}

TEST(Tree, RobustFractionAsymptotics) {
    const size_t n = 1000000;
    EXPECT_NEAR(robust_fraction(n, 4, max_faults(n)), 0.20, 0.01);
    EXPECT_NEAR(robust_fraction(n, 10, max_faults(n)), 0.017, 0.002);
    EXPECT_NEAR(robust_fraction(n, 4, max_faults(n)), std::pow(2.0 / 3.0, 4), 1e-5);
}

TEST(Tree, RobustFractionDomain) {
    EXPECT_EQ(code_of([] { robust_fraction(5, 0, 1); }), errc::out_of_domain);
    EXPECT_EQ(code_of([] { robust_fraction(5, 6, 0); }), errc::out_of_domain);
    EXPECT_EQ(code_of([] { robust_fraction_exact(5, 3, 3); }), errc::out_of_domain);
}

TEST(Tree, LinearRotationSeven) {
    auto r = tt::check_linear_rotation(7, 3, 2);
    EXPECT_EQ(r.placements, 21u);
    EXPECT_LE(r.candidates, 5u);
    EXPECT_EQ(r.covered, r.placements);
    EXPECT_LT(r.worst_index, 5u);
}

TEST(Tree, LinearRotationTrivialCases) {
    BinPartition p = tt::loose_partition(7, 3);
    auto plan = plan_linear_rotation(p, 2);
    // faults only in the leftover: first bin already clean
    FaultSet fs = faults({6});
    EXPECT_TRUE(std::none_of(plan[0].begin(), plan[0].end(), [&](ProcessId q) { return fs.contains(q); }));
    EXPECT_EQ(plan_linear_rotation(p, 0).front(), p.bins.front());
    EXPECT_EQ(code_of([&] { plan_linear_rotation(p, 3); }), errc::infeasible);
}
