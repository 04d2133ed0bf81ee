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

#ifndef _TREEBFT_SIMNET_H
#define _TREEBFT_SIMNET_H

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "treebft/collections.h"

namespace treebft {

/** Simulated time in microseconds. */
using SimTime = int64_t;

constexpr SimTime us_per_s = 1'000'000;

inline SimTime seconds(double s) { return SimTime(s * us_per_s + (s >= 0 ? 0.5 : -0.5)); }
inline double to_seconds(SimTime t) { return double(t) / us_per_s; }

enum class MsgKind { Proposal, Vote, NewView, Other };

const char *kind_name(MsgKind k);

/** Opaque message body; the transport never looks inside. */
struct Payload {
    virtual ~Payload() = default;
};

struct Message {
    ProcessId src;
    ProcessId dst;
    uint64_t size_bits = 0;
    MsgKind kind = MsgKind::Other;
    uint64_t seq = 0;
    std::shared_ptr<const Payload> payload;
};

struct NetParams {
    SimTime rtt_us = 200'000;
    uint64_t bandwidth_bps = 25'000'000;
    /** Impatient-channel timeout. */
    SimTime delta_us = 1'000'000;
    /** Before this instant messages may suffer extra adversarial delay. */
    SimTime gst_us = 0;

    bool valid() const { return rtt_us > 0 && bandwidth_bps > 0 && delta_us >= rtt_us && gst_us >= 0; }
    SimTime transmit_us(uint64_t bits) const;
};

enum class FaultKind { CrashSilent, OmitAll, OmitAggregates };

const char *fault_kind_name(FaultKind k);

struct FaultEntry {
    ProcessId process;
    FaultKind kind = FaultKind::CrashSilent;
    SimTime activation = 0;
};

struct FaultSchedule {
    std::vector<FaultEntry> entries;

    std::set<ProcessId> faulty() const;
    /** Processes whose fault activates at or before t. */
    std::set<ProcessId> faulty_at(SimTime t) const;
};

/** Receives deliveries; one per simulated process. */
class Node {
    public:
    virtual ~Node() = default;
    virtual void on_message(const Message &msg, SimTime now) = 0;
};

/** Min-heap of events ordered by (time, seq). */
class EventQueue {
    public:
    struct Event {
        SimTime time = 0;
        uint64_t seq = 0;
        std::optional<Message> delivery;
        std::function<void()> action;
        /** Timer owner; the action is skipped once the owner has crashed. */
        std::optional<ProcessId> owner;
    };

    /** Enqueues e with a fresh sequence number; throws causality_violation if in the past. */
    uint64_t push(Event e);
    /** Pops the earliest event; throws drained when empty. */
    Event step();

    bool empty() const { return heap_.empty(); }
    size_t size() const { return heap_.size(); }
    SimTime now() const { return now_; }
    /** Time of the next event; only valid when non-empty. */
    SimTime next_time() const { return heap_.top().time; }

    private:
    struct Later {
        bool operator()(const Event &a, const Event &b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    uint64_t next_seq_ = 0;
    SimTime now_ = 0;
};

/**
 * Point-to-point network with per-sender FIFO egress.
 *
 * Each process owns one busy clock shared by its CPU and its network card:
 * crypto work and transmissions are serialized on it. A message sent at t
 * starts transmitting at max(t, busy) and is delivered size/b + RTT/2 after
 * that, plus a seeded extra delay in [0, 5 RTT] while t < GST.
 */
class Network {
    public:
    Network(size_t n, NetParams params, uint64_t seed, size_t fault_budget);

    const NetParams &params() const { return params_; }
    size_t size() const { return nodes_.size(); }
    SimTime now() const { return queue_.now(); }
    EventQueue &queue() { return queue_; }

    void attach(ProcessId p, Node *node);
    void set_trace(std::ostream *out) { trace_ = out; }

    /** Registers a fault; throws fault_budget_exceeded past the budget. */
    void inject_fault(const FaultEntry &entry);
    std::optional<FaultKind> fault_of(ProcessId p, SimTime t) const;
    bool crashed(ProcessId p, SimTime t) const;

    /** Occupies p's clock for cpu_us starting no earlier than t; returns the finish time. */
    SimTime charge(ProcessId p, SimTime t, int64_t cpu_us);
    SimTime busy_until(ProcessId p) const { return busy_[p.index]; }

    /** Schedules the delivery; nullopt when a fault swallows it. */
    std::optional<SimTime> send(Message msg, SimTime t);

    /** Runs action at t unless owner has crashed by then. */
    void call_at(SimTime t, std::function<void()> action,
                 std::optional<ProcessId> owner = std::nullopt);

    /** Processes one event; false once drained. */
    bool step();
    /** Processes every event with time <= end. */
    void run_until(SimTime end);

    uint64_t bits_sent(ProcessId p) const { return bits_sent_[p.index]; }
    SimTime egress_busy_us(ProcessId p) const { return egress_busy_[p.index]; }
    SimTime first_send_at(ProcessId p) const { return first_send_[p.index]; }
    uint64_t messages_sent() const { return sent_; }
    uint64_t messages_dropped() const { return dropped_; }

    private:
    NetParams params_;
    EventQueue queue_;
    std::vector<Node *> nodes_;
    std::vector<SimTime> busy_;
    std::vector<uint64_t> bits_sent_;
    std::vector<SimTime> egress_busy_;
    std::vector<SimTime> first_send_;
    std::map<ProcessId, FaultEntry> faults_;
    size_t fault_budget_;
    std::mt19937_64 rng_;
    std::ostream *trace_ = nullptr;
    uint64_t msg_seq_ = 0;
    uint64_t sent_ = 0;
    uint64_t dropped_ = 0;
};

/**
 * Impatient receive: a receive on `key` completes with the delivered value,
 * or with nullopt exactly at now + delta. Values delivered before anyone
 * asks for them are buffered.
 */
template <class Key, class Value>
class ImpatientInbox {
    public:
    using Handler = std::function<void(std::optional<Value>, SimTime)>;

    ImpatientInbox(Network &net, ProcessId owner): net_(net), owner_(owner) {}

    void receive(const Key &key, SimTime now, SimTime delta, Handler done) {
        auto it = buffer_.find(key);
        if (it != buffer_.end()) {
            Value v = std::move(it->second);
            buffer_.erase(it);
            done(std::move(v), now);
            return;
        }
        SimTime deadline = now + delta;
        waiting_[key] = {deadline, std::move(done)};
        if (armed_.insert(deadline).second)
            net_.call_at(deadline, [this, deadline] { expire(deadline); }, owner_);
    }

    void deliver(const Key &key, Value value, SimTime now) {
        auto it = waiting_.find(key);
        if (it == waiting_.end()) {
            buffer_.emplace(key, std::move(value));
            return;
        }
        Handler done = std::move(it->second.second);
        waiting_.erase(it);
        done(std::move(value), now);
    }

    /** Drops buffered values and pending receives with keys below bound. */
    void forget_below(const Key &bound) {
        buffer_.erase(buffer_.begin(), buffer_.lower_bound(bound));
        waiting_.erase(waiting_.begin(), waiting_.lower_bound(bound));
    }

    void clear() {
        buffer_.clear();
        waiting_.clear();
    }

    bool waiting_on(const Key &key) const { return waiting_.count(key) != 0; }
    size_t buffered() const { return buffer_.size(); }
    size_t waiting() const { return waiting_.size(); }

    private:
    void expire(SimTime now) {
        armed_.erase(now);
        std::vector<Handler> due;
        for (auto it = waiting_.begin(); it != waiting_.end();) {
            if (it->second.first <= now) {
                due.push_back(std::move(it->second.second));
                it = waiting_.erase(it);
            } else {
                ++it;
            }
        }
        for (auto &h: due) h(std::nullopt, now);
    }

    Network &net_;
    ProcessId owner_;
    std::map<Key, Value> buffer_;
    std::map<Key, std::pair<SimTime, Handler>> waiting_;
    std::set<SimTime> armed_;
};

}

#endif
