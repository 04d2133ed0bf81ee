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

#include "treebft/simnet.h"

#include <algorithm>

#include "treebft/error.h"

namespace treebft {

const char *kind_name(MsgKind k) {
    switch (k) {
        case MsgKind::Proposal: return "proposal";
        case MsgKind::Vote: return "vote";
        case MsgKind::NewView: return "newview";
        case MsgKind::Other: return "other";
    }
    return "?";
}

const char *fault_kind_name(FaultKind k) {
    switch (k) {
        case FaultKind::CrashSilent: return "crash";
        case FaultKind::OmitAll: return "omit";
        case FaultKind::OmitAggregates: return "omit_aggregates";
    }
    return "?";
}

SimTime NetParams::transmit_us(uint64_t bits) const {
    return SimTime((bits * 1'000'000 + bandwidth_bps - 1) / bandwidth_bps);
}

std::set<ProcessId> FaultSchedule::faulty() const {
    std::set<ProcessId> out;
    for (const auto &e: entries) out.insert(e.process);
    return out;
}

std::set<ProcessId> FaultSchedule::faulty_at(SimTime t) const {
    std::set<ProcessId> out;
    for (const auto &e: entries)
        if (e.activation <= t) out.insert(e.process);
    return out;
}

uint64_t EventQueue::push(Event e) {
    if (e.time < now_)
        throw error(errc::causality_violation,
                    "event at " + std::to_string(e.time) + " us scheduled at " +
                    std::to_string(now_) + " us");
    e.seq = next_seq_++;
    uint64_t seq = e.seq;
    heap_.push(std::move(e));
    return seq;
}

EventQueue::Event EventQueue::step() {
    if (heap_.empty()) throw error(errc::drained, "event queue is empty");
    Event e = heap_.top();
    heap_.pop();
    now_ = e.time;
    return e;
}

Network::Network(size_t n, NetParams params, uint64_t seed, size_t fault_budget)
    : params_(params), nodes_(n, nullptr), busy_(n, 0), bits_sent_(n, 0),
      egress_busy_(n, 0), first_send_(n, -1), fault_budget_(fault_budget), rng_(seed) {
    if (!params_.valid())
        throw error(errc::config_error, "network needs rtt > 0, bandwidth > 0 and delta >= rtt");
}

void Network::attach(ProcessId p, Node *node) { nodes_.at(p.index) = node; }

void Network::inject_fault(const FaultEntry &entry) {
    if (entry.process.index >= nodes_.size())
        throw error(errc::config_error, "fault on unknown process " + std::to_string(entry.process.index));
    if (!faults_.count(entry.process) && faults_.size() >= fault_budget_)
        throw error(errc::fault_budget_exceeded,
                    "more than " + std::to_string(fault_budget_) + " faulty processes");
    faults_[entry.process] = entry;
}

std::optional<FaultKind> Network::fault_of(ProcessId p, SimTime t) const {
    auto it = faults_.find(p);
    if (it == faults_.end() || it->second.activation > t) return std::nullopt;
    return it->second.kind;
}

bool Network::crashed(ProcessId p, SimTime t) const {
    return fault_of(p, t) == FaultKind::CrashSilent;
}

SimTime Network::charge(ProcessId p, SimTime t, int64_t cpu_us) {
    SimTime &b = busy_[p.index];
    b = std::max(b, t) + std::max<int64_t>(cpu_us, 0);
    return b;
}

std::optional<SimTime> Network::send(Message msg, SimTime t) {
    if (auto f = fault_of(msg.src, t)) {
        if (*f != FaultKind::OmitAggregates || msg.kind == MsgKind::Vote) {
            dropped_++;
            return std::nullopt;
        }
    }
    SimTime &b = busy_[msg.src.index];
    SimTime start = std::max(b, t);
    SimTime tx = params_.transmit_us(msg.size_bits);
    b = start + tx;
    bits_sent_[msg.src.index] += msg.size_bits;
    egress_busy_[msg.src.index] += tx;
    if (first_send_[msg.src.index] < 0) first_send_[msg.src.index] = start;

    SimTime at = b + params_.rtt_us / 2;
    if (t < params_.gst_us)
        at += std::uniform_int_distribution<SimTime>(0, 5 * params_.rtt_us)(rng_);
    msg.seq = msg_seq_++;
    sent_++;
    EventQueue::Event e;
    e.time = at;
    e.delivery = std::move(msg);
    queue_.push(std::move(e));
    return at;
}

void Network::call_at(SimTime t, std::function<void()> action, std::optional<ProcessId> owner) {
    EventQueue::Event e;
    e.time = t;
    e.action = std::move(action);
    e.owner = owner;
    queue_.push(std::move(e));
}

bool Network::step() {
    if (queue_.empty()) return false;
    EventQueue::Event e = queue_.step();
    if (e.delivery) {
        const Message &m = *e.delivery;
        if (crashed(m.dst, e.time)) {
            dropped_++;
            return true;
        }
        if (trace_)
            *trace_ << e.time << ' ' << kind_name(m.kind) << ' ' << m.src.index << ' '
                    << m.dst.index << ' ' << m.size_bits << '\n';
        if (Node *n = nodes_[m.dst.index]) n->on_message(m, e.time);
    } else if (e.action) {
        if (e.owner && crashed(*e.owner, e.time)) return true;
        e.action();
    }
    return true;
}

void Network::run_until(SimTime end) {
    while (!queue_.empty() && queue_.next_time() <= end) step();
}

}
