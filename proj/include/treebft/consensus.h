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

#ifndef _TREEBFT_CONSENSUS_H
#define _TREEBFT_CONSENSUS_H

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <variant>
#include <vector>

#include "treebft/collections.h"
#include "treebft/simnet.h"
#include "treebft/tree.h"

namespace treebft {

enum class Phase : uint8_t { Prepare, PreCommit, Commit, NewView };

struct QuorumCert;

struct Block {
    Digest id{};
    const Block *parent = nullptr;
    uint64_t height = 0;
    uint64_t view = 0;
    uint32_t op_count = 0;
    uint64_t size_bits = 0;
    /** Creation order, unique per run. */
    uint64_t seq = 0;
    ProcessId proposer;
    SimTime proposed_at = 0;
    std::shared_ptr<const QuorumCert> justify;
};

/** (view, height) order used for locks, votes and certificates. */
using Rank = std::pair<uint64_t, uint64_t>;

inline Rank rank_of(const Block &b) { return {b.view, b.height}; }

struct QuorumCert {
    const Block *block = nullptr;
    uint64_t view = 0;
    Phase phase = Phase::Prepare;
    Collection votes;

    Rank rank() const { return {view, block ? block->height : 0}; }

    /** Memoized threshold check, shared by every replica holding this certificate. */
    bool valid(const Keyring &keyring, size_t quorum) const;

    /** Cached outcome of valid(); pre-set for the genesis certificate. */
    mutable std::optional<bool> checked;
};

Digest vote_value(const Block &b, Phase phase);
Digest new_view_value(uint64_t view);

/** Owns every block of a run; blocks never move once created. */
class BlockStore {
    std::deque<Block> blocks_;
    std::shared_ptr<const QuorumCert> genesis_qc_;

    public:
    BlockStore();

    const Block *genesis() const { return &blocks_.front(); }
    std::shared_ptr<const QuorumCert> genesis_qc() const { return genesis_qc_; }
    const Block *create(const Block *parent, uint64_t view, uint32_t ops, uint64_t size_bits,
                        ProcessId proposer, SimTime at, std::shared_ptr<const QuorumCert> justify);
    size_t size() const { return blocks_.size(); }
    const std::deque<Block> &all() const { return blocks_; }
};

/** True iff a is b or an ancestor of b. */
bool extends(const Block *b, const Block *a);

struct PipelineConfig {
    unsigned base_depth = 4;
    unsigned stretch = 1;

    unsigned max_inflight() const { return base_depth * stretch; }
};

struct ProtocolConfig {
    size_t n = 100;
    TreeShape shape{3, 10};
    Scheme scheme = Scheme::Aggregate;
    CryptoCostModel crypto = CryptoCostModel::bls_like();
    PipelineConfig pipeline;
    uint64_t block_bits = 102400;
    uint32_t ops_per_block = 400;
    SimTime view_timeout_us = 300'000;
    /** Roots stop starting payload instances here and only flush afterwards. */
    SimTime stop_at = INT64_MAX;

    size_t f() const { return max_faults(n); }
    size_t quorum() const { return 2 * f() + 1; }
};

/** The evolving graph: tree of view k is build(k) over a fixed bin partition. */
class ViewPlan {
    BinPartition partition_;
    TreeShape shape_;
    mutable std::map<size_t, TreeConfig> cache_;

    public:
    ViewPlan(size_t n, TreeShape shape);

    const TreeConfig &tree(uint64_t view) const;
    ProcessId root(uint64_t view) const { return tree(view).root; }
    const BinPartition &partition() const { return partition_; }
    const TreeShape &shape() const { return shape_; }
};

/** Global record of decisions; enforces agreement as they happen. */
class DecisionLog {
    public:
    struct Entry {
        const Block *block = nullptr;
        SimTime first_decided = 0;
        size_t deciders = 0;
    };

    /** Throws agreement_violation if another block was decided at this height. */
    void record(ProcessId p, const Block *b, SimTime t);
    const std::vector<Entry> &entries() const { return by_height_; }

    private:
    std::vector<Entry> by_height_;  // index = height - 1
};

/** Counters a run collects across replicas. */
struct EngineStats {
    uint64_t invalid_partials = 0;
    uint64_t qcs_formed = 0;
    uint64_t qcs_below_quorum = 0;
    uint64_t aborted_instances = 0;
    unsigned max_inflight = 0;
    /** Per block seq: correct processes that received its proposal. */
    std::unordered_map<uint64_t, uint32_t> proposal_receipts;
};

class Replica;

/** All replicas of one run plus their shared network and oracles. */
class Cluster {
    public:
    Cluster(ProtocolConfig cfg, NetParams net, FaultSchedule faults, uint64_t seed);
    ~Cluster();

    /** Starts view 0 and runs until `until`. */
    void run_until(SimTime until);
    /** Keeps running past stop_at until every correct replica decided what was started, or limit. */
    bool drain(SimTime limit);

    const ProtocolConfig &config() const { return cfg_; }
    Network &network() { return net_; }
    const Network &network() const { return net_; }
    const ViewPlan &plan() const { return plan_; }
    const BlockStore &blocks() const { return store_; }
    const DecisionLog &decisions() const { return log_; }
    const EngineStats &stats() const { return stats_; }
    const FaultSchedule &faults() const { return faults_; }
    const Replica &replica(size_t i) const { return *replicas_[i]; }
    size_t size() const { return replicas_.size(); }

    /** Correct = never faulty during the run so far. */
    bool correct(ProcessId p) const;
    /** Highest view any correct replica is in. */
    uint64_t max_view() const;
    /** Highest view reached by at least f+1 correct replicas. */
    uint64_t current_view() const;
    /** Payload blocks started in the current top view and not yet decided by all correct replicas. */
    size_t undecided_started() const;
    /** The tree of the current top view is robust against every scheduled fault. */
    bool final_config_robust() const;

    private:
    friend class Replica;

    ProtocolConfig cfg_;
    Network net_;
    FaultSchedule faults_;
    ViewPlan plan_;
    Keyring keyring_;
    BlockStore store_;
    DecisionLog log_;
    EngineStats stats_;
    SimTime delta_us_;
    std::vector<bool> faulty_;
    std::vector<std::unique_ptr<Replica>> replicas_;
    bool started_ = false;
};

/** One simulated process running the tree-based HotStuff engine. */
class Replica: public Node {
    public:
    Replica(Cluster &cluster, ProcessId id);

    void start(SimTime now);
    void on_message(const Message &msg, SimTime now) override;

    ProcessId id() const { return id_; }
    uint64_t view() const { return view_; }
    const std::vector<const Block *> &ledger() const { return ledger_; }
    const Block *committed() const { return committed_; }
    std::shared_ptr<const QuorumCert> high_qc() const { return high_qc_; }
    std::shared_ptr<const QuorumCert> lock() const { return lock_; }
    /** Blocks this replica proposed in its current view and has not yet decided. */
    size_t inflight() const { return proposed_.size(); }

    struct ProposalItem {
        const Block *block = nullptr;
        std::shared_ptr<const QuorumCert> view_cert;
    };
    struct VoteItem {
        const Block *block = nullptr;
        std::shared_ptr<const Collection> partial;
    };
    struct NewViewItem {
        uint64_t view = 0;
        std::shared_ptr<const QuorumCert> high;
        std::shared_ptr<const QuorumCert> lock;
        std::shared_ptr<const Collection> share;
    };
    using Item = std::variant<ProposalItem, VoteItem, NewViewItem>;

    struct Bundle: Payload {
        std::vector<Item> items;
    };

    private:
    struct Aggregation {
        const Block *block = nullptr;
        Collection acc;
        size_t pending_children = 0;
        bool own_done = false;
        bool finished = false;
        bool at_root = false;
    };
    struct NewViewState {
        Collection shares;
        std::shared_ptr<const QuorumCert> best;
        bool started = false;
    };
    using InboxKey = std::pair<uint64_t, uint32_t>;

    // message handling
    void handle(const ProposalItem &p, ProcessId from);
    void handle(const VoteItem &v, ProcessId from);
    void handle(const NewViewItem &nv, ProcessId from);
    void on_partial(uint64_t seq, std::optional<std::shared_ptr<const Collection>> partial);
    void finish_aggregation(uint64_t seq);
    void form_qc(Aggregation &agg);

    // chain rules
    bool verify_qc(const QuorumCert &qc);
    void update_chain(const std::shared_ptr<const QuorumCert> &qc);
    void commit(const Block *b);
    bool safe_to_vote(const Block &b) const;

    // views and pacemaker
    void enter_view(uint64_t v);
    void reset_timer();
    void on_timer();
    void timeout();
    void start_as_root(NewViewState &st);

    // proposing
    void schedule_propose(SimTime at);
    void try_propose();
    void arm_aggregation(const Block *b, bool at_root);

    // outbox
    void out(ProcessId dst, Item item);
    void begin(SimTime now);
    void end();
    void flush();
    void cpu(int64_t us);
    bool is_root() const { return tree_->root == id_; }

    Cluster &c_;
    ProcessId id_;
    SimTime now_ = 0;
    int depth_ = 0;
    std::vector<std::pair<ProcessId, std::vector<Item>>> outbox_;
    std::unordered_map<uint32_t, size_t> outbox_index_;

    uint64_t view_ = 0;
    const TreeConfig *tree_ = nullptr;
    std::shared_ptr<const QuorumCert> high_qc_;
    std::shared_ptr<const QuorumCert> lock_;
    Rank last_voted_{0, 0};
    const Block *committed_ = nullptr;
    std::vector<const Block *> ledger_;

    SimTime deadline_ = 0;
    bool timer_pending_ = false;
    unsigned failed_views_ = 0;
    uint64_t target_ = 0;  // latest view this replica asked for

    // root of the current view
    bool view_ready_ = false;
    const Block *tip_ = nullptr;
    std::shared_ptr<const QuorumCert> view_cert_;
    std::deque<const Block *> proposed_;
    unsigned round1_ = 0;
    bool wake_pending_ = false;
    std::map<uint64_t, NewViewState> new_views_;

    std::map<uint64_t, Aggregation> aggs_;
    ImpatientInbox<InboxKey, std::shared_ptr<const Collection>> inbox_;
};

}

#endif
