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

#include "treebft/consensus.h"

#include <algorithm>
#include <cstring>

#include "treebft/error.h"

namespace treebft {

namespace {

void put_u64(std::vector<uint8_t> &buf, uint64_t v) {
    for (int i = 0; i < 8; i++) buf.push_back(uint8_t(v >> (8 * i)));
}

}

Digest vote_value(const Block &b, Phase phase) {
    std::vector<uint8_t> buf(b.id.begin(), b.id.end());
    buf.push_back(uint8_t(phase));
    return digest_of(buf);
}

Digest new_view_value(uint64_t view) {
    std::vector<uint8_t> buf{'n', 'e', 'w', '-', 'v', 'i', 'e', 'w'};
    put_u64(buf, view);
    return digest_of(buf);
}

bool QuorumCert::valid(const Keyring &keyring, size_t quorum) const {
    if (!checked) {
        if (phase == Phase::NewView)
            checked = has(votes, new_view_value(view), quorum, keyring);
        else
            checked = block && has(votes, vote_value(*block, phase), quorum, keyring);
    }
    return *checked;
}

BlockStore::BlockStore() {
    Block g;
    g.id = digest_of(std::string_view("genesis"));
    blocks_.push_back(g);
    auto qc = std::make_shared<QuorumCert>();
    qc->block = &blocks_.front();
    qc->checked = true;
    genesis_qc_ = qc;
}

const Block *BlockStore::create(const Block *parent, uint64_t view, uint32_t ops,
                                uint64_t size_bits, ProcessId proposer, SimTime at,
                                std::shared_ptr<const QuorumCert> justify) {
    Block b;
    b.parent = parent;
    b.height = parent->height + 1;
    b.view = view;
    b.op_count = ops;
    b.size_bits = size_bits;
    b.seq = blocks_.size();
    b.proposer = proposer;
    b.proposed_at = at;
    b.justify = std::move(justify);

    std::vector<uint8_t> buf(parent->id.begin(), parent->id.end());
    put_u64(buf, view);
    put_u64(buf, b.height);
    put_u64(buf, b.seq);
    put_u64(buf, proposer.index);
    put_u64(buf, ops);
    b.id = digest_of(buf);
    blocks_.push_back(std::move(b));
    return &blocks_.back();
}

bool extends(const Block *b, const Block *a) {
    if (!a) return true;
    while (b && b->height > a->height) b = b->parent;
    return b == a;
}

ViewPlan::ViewPlan(size_t n, TreeShape shape): shape_(shape) {
    size_t internal = shape.internal_count();
    if (internal == 0 || n / internal == 0)
        throw error(errc::shape_infeasible,
                    "tree needs " + std::to_string(internal) + " internal nodes, N = " + std::to_string(n));
    size_t bins = n / internal;
    // reconfiguration guarantee covers as many faults as there are spare bins
    size_t f = std::min(max_faults(n), bins - 1);
    partition_ = partition_bins(process_range(n), internal, f);
    tree(0);  // validates the shape against N
}

const TreeConfig &ViewPlan::tree(uint64_t view) const {
    size_t k = view % partition_.bins.size();
    auto it = cache_.find(k);
    if (it == cache_.end()) it = cache_.emplace(k, build(k, partition_, shape_)).first;
    return it->second;
}

void DecisionLog::record(ProcessId p, const Block *b, SimTime t) {
    size_t idx = b->height - 1;
    if (idx == by_height_.size()) {
        by_height_.push_back({b, t, 1});
        return;
    }
    if (idx > by_height_.size())
        throw error(errc::agreement_violation, "ledger of process " + std::to_string(p.index) + " has a gap");
    Entry &e = by_height_[idx];
    if (e.block->id != b->id)
        throw error(errc::agreement_violation,
                    "process " + std::to_string(p.index) + " decided " + to_hex(b->id).substr(0, 12) +
                    " at height " + std::to_string(b->height) + " where " +
                    to_hex(e.block->id).substr(0, 12) + " was decided");
    e.deciders++;
}

// ---------------------------------------------------------------- Cluster

Cluster::Cluster(ProtocolConfig cfg, NetParams net, FaultSchedule faults, uint64_t seed)
    : cfg_(cfg), net_(cfg.n, net, seed, max_faults(cfg.n)), faults_(std::move(faults)),
      plan_(cfg.n, cfg.shape), keyring_(Keyring::generate(cfg.n, seed)),
      delta_us_(net.delta_us), faulty_(cfg.n, false) {
    if (cfg_.pipeline.stretch < 1 || cfg_.pipeline.base_depth < 1)
        throw error(errc::config_error, "pipeline stretch and base depth must be >= 1");
    if (!cfg_.crypto.valid()) throw error(errc::config_error, "crypto costs must be non-negative");
    for (const auto &e: faults_.entries) {
        net_.inject_fault(e);
        faulty_[e.process.index] = true;
    }
    for (size_t i = 0; i < cfg_.n; i++) {
        replicas_.push_back(std::make_unique<Replica>(*this, ProcessId(uint32_t(i))));
        net_.attach(ProcessId(uint32_t(i)), replicas_.back().get());
    }
}

Cluster::~Cluster() = default;

void Cluster::run_until(SimTime until) {
    if (!started_) {
        started_ = true;
        for (auto &r: replicas_) r->start(0);
    }
    net_.run_until(until);
}

bool Cluster::drain(SimTime limit) {
    // the cursor moves even when no event falls inside a step
    for (SimTime t = net_.now(); t < limit && !net_.queue().empty();) {
        if (undecided_started() == 0) return true;
        t = std::min(limit, t + 50'000);
        run_until(t);
    }
    return undecided_started() == 0;
}

bool Cluster::correct(ProcessId p) const { return !faulty_[p.index]; }

uint64_t Cluster::max_view() const {
    uint64_t v = 0;
    for (const auto &r: replicas_)
        if (correct(r->id())) v = std::max(v, r->view());
    return v;
}

uint64_t Cluster::current_view() const {
    std::vector<uint64_t> views;
    for (const auto &r: replicas_)
        if (correct(r->id())) views.push_back(r->view());
    if (views.empty()) return 0;
    // a cut-off minority can time out on its own; f+1 correct replicas cannot
    size_t k = std::min(views.size(), cfg_.f() + 1);
    std::nth_element(views.begin(), views.begin() + (k - 1), views.end(), std::greater<>());
    return views[k - 1];
}

size_t Cluster::undecided_started() const {
    uint64_t v = current_view();
    uint64_t low = UINT64_MAX;
    for (const auto &r: replicas_)
        if (correct(r->id())) low = std::min(low, r->committed()->height);
    size_t n = 0;
    for (const auto &b: store_.all())
        if (b.view == v && b.op_count > 0 && b.height > low) n++;
    return n;
}

bool Cluster::final_config_robust() const {
    FaultSet fs;
    fs.faulty = faults_.faulty_at(net_.now());
    return is_robust(plan_.tree(current_view()), fs);
}

// ---------------------------------------------------------------- Replica

Replica::Replica(Cluster &cluster, ProcessId id)
    : c_(cluster), id_(id), inbox_(cluster.net_, id) {}

void Replica::start(SimTime now) {
    begin(now);
    high_qc_ = lock_ = c_.store_.genesis_qc();
    committed_ = c_.store_.genesis();
    enter_view(0);
    if (is_root()) {
        view_ready_ = true;
        tip_ = committed_;
        schedule_propose(now_);
    }
    end();
}

void Replica::begin(SimTime now) {
    if (depth_++ == 0) now_ = now;
}

void Replica::end() {
    if (--depth_ == 0) flush();
}

void Replica::cpu(int64_t us) {
    if (us > 0) c_.net_.charge(id_, now_, us);
}

void Replica::out(ProcessId dst, Item item) {
    auto [it, fresh] = outbox_index_.try_emplace(dst.index, outbox_.size());
    if (fresh) outbox_.push_back({dst, {}});
    outbox_[it->second].second.push_back(std::move(item));
}

void Replica::flush() {
    const auto &model = c_.cfg_.crypto;
    for (auto &[dst, items]: outbox_) {
        auto bundle = std::make_shared<Bundle>();
        Message m;
        m.src = id_;
        m.dst = dst;
        bool proposal = false, new_view = false;
        for (const auto &item: items) {
            if (auto *p = std::get_if<ProposalItem>(&item)) {
                proposal = true;
                m.size_bits += p->block->size_bits + 8 * wire_size(p->block->justify->votes, model);
                if (p->view_cert) m.size_bits += 8 * wire_size(p->view_cert->votes, model);
            } else if (auto *v = std::get_if<VoteItem>(&item)) {
                m.size_bits += 8 * wire_size(*v->partial, model);
            } else {
                const auto &nv = std::get<NewViewItem>(item);
                new_view = true;
                m.size_bits += 8 * (wire_size(nv.high->votes, model) + wire_size(nv.lock->votes, model) +
                                    wire_size(*nv.share, model));
            }
        }
        m.kind = proposal ? MsgKind::Proposal : new_view ? MsgKind::NewView : MsgKind::Vote;
        bundle->items = std::move(items);
        m.payload = std::move(bundle);
        c_.net_.send(std::move(m), now_);
    }
    outbox_.clear();
    outbox_index_.clear();
}

void Replica::on_message(const Message &msg, SimTime now) {
    const auto *bundle = dynamic_cast<const Bundle *>(msg.payload.get());
    if (!bundle) return;
    begin(now);
    for (const auto &item: bundle->items)
        std::visit([&](const auto &x) { handle(x, msg.src); }, item);
    end();
}

bool Replica::verify_qc(const QuorumCert &qc) {
    if (qc.block == c_.store_.genesis() && qc.phase != Phase::NewView) return true;
    cpu(cpu_cost(CryptoOp::Verify, qc.votes.cardinality(), c_.cfg_.scheme, c_.cfg_.crypto));
    return qc.valid(c_.keyring_, c_.cfg_.quorum());
}

// ------------------------------------------------------------ dissemination

void Replica::handle(const ProposalItem &p, ProcessId from) {
    const Block *b = p.block;
    const uint64_t v = b->view;
    if (v < view_) return;
    const TreeConfig &t = c_.plan_.tree(v);
    auto parent = t.parent[id_.index];
    if (!parent || *parent != from) return;

    if (v > view_) {
        // a later view may only be joined with evidence that it started
        bool ok = false;
        if (b->justify->view == v)
            ok = verify_qc(*b->justify);
        else if (p.view_cert && p.view_cert->view == v && p.view_cert->phase == Phase::NewView)
            ok = verify_qc(*p.view_cert);
        if (!ok) return;
        enter_view(v);
    }
    if (c_.correct(id_)) c_.stats_.proposal_receipts[b->seq]++;

    const auto &children = tree_->children[id_.index];
    for (auto child: children) out(child, p);
    if (!children.empty()) {
        flush();  // relay before spending CPU on validation
        arm_aggregation(b, false);
    }

    const QuorumCert &j = *b->justify;
    bool valid = verify_qc(j) && extends(b, j.block);
    if (valid && j.view < v) {
        valid = p.view_cert && p.view_cert->view == v && p.view_cert->phase == Phase::NewView &&
                verify_qc(*p.view_cert);
    }
    bool vote = false;
    if (valid) {
        target_ = view_;
        reset_timer();
        update_chain(b->justify);
        vote = safe_to_vote(*b);
    }
    std::optional<Collection> share;
    if (vote) {
        last_voted_ = rank_of(*b);
        cpu(cpu_cost(CryptoOp::Sign, 1, c_.cfg_.scheme, c_.cfg_.crypto));
        share = new_share(id_, vote_value(*b, Phase::Prepare), c_.keyring_, c_.cfg_.scheme);
    }
    if (children.empty()) {
        if (share) out(from, VoteItem{b, std::make_shared<const Collection>(std::move(*share))});
        return;
    }
    auto it = aggs_.find(b->seq);
    if (it == aggs_.end()) return;
    if (share) it->second.acc = combine(it->second.acc, *share);
    it->second.own_done = true;
    finish_aggregation(b->seq);
}

// -------------------------------------------------------------- aggregation

void Replica::arm_aggregation(const Block *b, bool at_root) {
    Aggregation &a = aggs_[b->seq];
    a.block = b;
    a.at_root = at_root;
    a.acc = Collection(c_.cfg_.scheme);
    const auto &children = tree_->children[id_.index];
    a.pending_children = children.size();
    const uint64_t seq = b->seq;
    // One Δ per hop of the subtree below us, so a parent outwaits its children.
    const unsigned below = tree_->height - 1 - tree_->depth_of(id_);
    const SimTime wait = c_.delta_us_ * SimTime(std::max(1u, below));
    for (auto child: children) {
        inbox_.receive({seq, child.index}, now_, wait,
                       [this, seq](std::optional<std::shared_ptr<const Collection>> v, SimTime t) {
                           begin(t);
                           on_partial(seq, std::move(v));
                           end();
                       });
    }
}

void Replica::handle(const VoteItem &v, ProcessId from) {
    InboxKey key{v.block->seq, from.index};
    if (!inbox_.waiting_on(key)) return;  // late, duplicate or not our child
    inbox_.deliver(key, v.partial, now_);
}

void Replica::on_partial(uint64_t seq, std::optional<std::shared_ptr<const Collection>> partial) {
    auto it = aggs_.find(seq);
    if (it == aggs_.end() || it->second.finished) return;
    Aggregation &a = it->second;
    a.pending_children--;
    if (partial && *partial) {
        const Collection &p = **partial;
        const auto &model = c_.cfg_.crypto;
        cpu(cpu_cost(CryptoOp::Verify, p.cardinality(), c_.cfg_.scheme, model));
        Digest value = vote_value(*a.block, Phase::Prepare);
        if (p.scheme() == c_.cfg_.scheme && !p.empty() && p.count_value(value) == p.cardinality() &&
            verify(p, c_.keyring_)) {
            // an aggregate partial folds in as a single signature
            cpu(cpu_cost(CryptoOp::Combine, 1, c_.cfg_.scheme, model));
            a.acc = combine(a.acc, p);
            if (a.at_root) reset_timer();
        } else {
            c_.stats_.invalid_partials++;
        }
    }
    finish_aggregation(seq);
}

void Replica::finish_aggregation(uint64_t seq) {
    auto it = aggs_.find(seq);
    if (it == aggs_.end() || it->second.finished) return;
    Aggregation &a = it->second;
    if (a.at_root) {
        if (a.acc.count_value(vote_value(*a.block, Phase::Prepare)) >= c_.cfg_.quorum()) form_qc(a);
        return;
    }
    if (!a.own_done || a.pending_children > 0) return;
    a.finished = true;
    if (!a.acc.empty()) {
        auto parent = tree_->parent[id_.index];
        out(*parent, VoteItem{a.block, std::make_shared<const Collection>(std::move(a.acc))});
    }
    aggs_.erase(it);
}

void Replica::form_qc(Aggregation &a) {
    a.finished = true;
    auto qc = std::make_shared<QuorumCert>();
    qc->block = a.block;
    qc->view = a.block->view;
    qc->phase = Phase::Prepare;
    qc->votes = a.acc;
    c_.stats_.qcs_formed++;
    if (!qc->valid(c_.keyring_, c_.cfg_.quorum())) c_.stats_.qcs_below_quorum++;
    if (round1_ > 0) round1_--;
    update_chain(qc);
    schedule_propose(now_);
}

// -------------------------------------------------------------- chain rules

void Replica::update_chain(const std::shared_ptr<const QuorumCert> &qc) {
    if (!qc || !qc->block) return;
    if (qc->rank() > high_qc_->rank()) high_qc_ = qc;
    const Block *b2 = qc->block;
    if (!b2->justify) return;
    const auto &qc1 = b2->justify;
    if (qc1->rank() > lock_->rank()) lock_ = qc1;
    const Block *b1 = qc1->block;
    if (!b1->justify) return;
    const Block *b0 = b1->justify->block;
    if (b2->view == b1->view && b1->view == b0->view && b0->height > committed_->height) commit(b0);
}

void Replica::commit(const Block *b) {
    std::vector<const Block *> chain;
    const Block *x = b;
    for (; x && x->height > committed_->height; x = x->parent) chain.push_back(x);
    if (x != committed_)
        throw error(errc::agreement_violation,
                    "process " + std::to_string(id_.index) + " would commit a fork of its ledger");
    for (auto rit = chain.rbegin(); rit != chain.rend(); ++rit) {
        ledger_.push_back(*rit);
        c_.log_.record(id_, *rit, now_);
    }
    committed_ = b;
    failed_views_ = 0;
    inbox_.forget_below({b->seq, 0});
    aggs_.erase(aggs_.begin(), aggs_.lower_bound(b->seq));
}

bool Replica::safe_to_vote(const Block &b) const {
    if (!(rank_of(b) > last_voted_)) return false;
    return extends(&b, lock_->block) || b.justify->rank() > lock_->rank();
}

// ------------------------------------------------------- views and pacemaker

void Replica::enter_view(uint64_t v) {
    view_ = v;
    tree_ = &c_.plan_.tree(v);
    aggs_.clear();
    inbox_.clear();
    proposed_.clear();
    round1_ = 0;
    view_ready_ = false;
    tip_ = nullptr;
    view_cert_.reset();
    new_views_.erase(new_views_.begin(), new_views_.lower_bound(v));
    reset_timer();
}

void Replica::reset_timer() {
    const unsigned backoff = std::min(failed_views_, 16u);
    deadline_ = now_ + (c_.cfg_.view_timeout_us << backoff) + c_.delta_us_;
    if (timer_pending_) return;
    timer_pending_ = true;
    c_.net_.call_at(deadline_, [this] { on_timer(); }, id_);
}

void Replica::on_timer() {
    timer_pending_ = false;
    SimTime now = c_.net_.now();
    if (now < deadline_) {
        timer_pending_ = true;
        c_.net_.call_at(deadline_, [this] { on_timer(); }, id_);
        return;
    }
    begin(now);
    timeout();
    end();
}

void Replica::timeout() {
    // ask for the next view but keep serving this one until that view starts;
    // a replica that leaves early would be stranded if the others make progress
    failed_views_++;
    target_ = std::max(target_, view_) + 1;
    reset_timer();
    cpu(cpu_cost(CryptoOp::Sign, 1, c_.cfg_.scheme, c_.cfg_.crypto));
    NewViewItem nv;
    nv.view = target_;
    nv.high = high_qc_;
    nv.lock = lock_;
    nv.share = std::make_shared<const Collection>(
        new_share(id_, new_view_value(target_), c_.keyring_, c_.cfg_.scheme));
    ProcessId root = c_.plan_.root(target_);
    if (root == id_)
        handle(nv, id_);
    else
        out(root, std::move(nv));
}

void Replica::handle(const NewViewItem &nv, ProcessId from) {
    if (nv.view < view_ || c_.plan_.root(nv.view) != id_) return;
    NewViewState &st = new_views_[nv.view];
    if (st.started || !nv.share || !nv.high || nv.share->cardinality() != 1) return;
    if (nv.share->shares()[0].signer != from || st.shares.contains_signer(from)) return;
    if (from != id_) {
        cpu(cpu_cost(CryptoOp::Verify, 1, c_.cfg_.scheme, c_.cfg_.crypto));
        if (!has(*nv.share, new_view_value(nv.view), 1, c_.keyring_)) return;
        if (!verify_qc(*nv.high)) return;
    }
    st.shares = st.shares.empty() ? *nv.share : combine(st.shares, *nv.share);
    if (!st.best || nv.high->rank() > st.best->rank()) st.best = nv.high;
    if (nv.view == view_) reset_timer();
    if (st.shares.cardinality() >= c_.cfg_.quorum()) {
        if (nv.view > view_) enter_view(nv.view);
        start_as_root(new_views_[nv.view]);
    }
}

void Replica::start_as_root(NewViewState &st) {
    st.started = true;
    view_ready_ = true;
    update_chain(st.best);
    tip_ = high_qc_->block;
    auto cert = std::make_shared<QuorumCert>();
    cert->view = view_;
    cert->phase = Phase::NewView;
    cert->votes = st.shares;
    cert->valid(c_.keyring_, c_.cfg_.quorum());
    view_cert_ = cert;
    schedule_propose(now_);
}

// ---------------------------------------------------------------- proposing

void Replica::schedule_propose(SimTime at) {
    if (wake_pending_) return;
    wake_pending_ = true;
    c_.net_.call_at(at, [this] {
        wake_pending_ = false;
        begin(c_.net_.now());
        try_propose();
        end();
    }, id_);
}

void Replica::try_propose() {
    if (!is_root() || !view_ready_) return;
    SimTime busy = c_.net_.busy_until(id_);
    if (busy > now_) {
        schedule_propose(busy);
        return;
    }
    while (!proposed_.empty() && proposed_.front()->height <= committed_->height) proposed_.pop_front();
    const auto &pipe = c_.cfg_.pipeline;
    if (proposed_.size() >= pipe.max_inflight() || round1_ >= pipe.stretch) return;

    const auto &cfg = c_.cfg_;
    uint32_t ops = now_ < cfg.stop_at ? cfg.ops_per_block : 0;
    const Block *b = c_.store_.create(tip_, view_, ops, ops ? cfg.block_bits : 0, id_, now_, high_qc_);
    tip_ = b;
    proposed_.push_back(b);
    round1_++;
    c_.stats_.max_inflight = std::max<unsigned>(c_.stats_.max_inflight, unsigned(proposed_.size()));
    if (c_.correct(id_)) c_.stats_.proposal_receipts[b->seq]++;

    last_voted_ = rank_of(*b);
    cpu(cpu_cost(CryptoOp::Sign, 1, cfg.scheme, cfg.crypto));
    arm_aggregation(b, true);
    Aggregation &a = aggs_[b->seq];
    a.acc = combine(a.acc, new_share(id_, vote_value(*b, Phase::Prepare), c_.keyring_, cfg.scheme));
    a.own_done = true;

    ProposalItem p{b, high_qc_->view < view_ ? view_cert_ : nullptr};
    for (auto child: tree_->children[id_.index]) out(child, p);
    flush();
    finish_aggregation(b->seq);
    schedule_propose(now_);
}

}
