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

#include "treebft/collections.h"

#include <algorithm>
#include <cstring>
#include <iterator>

#include <sodium.h>

#include "treebft/error.h"

namespace treebft {

const char *errc_name(errc code) {
    switch (code) {
        case errc::key_not_found: return "KeyNotFound";
        case errc::scheme_mismatch: return "SchemeMismatch";
        case errc::shape_infeasible: return "ShapeInfeasible";
        case errc::insufficient_bins: return "InsufficientBins";
        case errc::out_of_domain: return "OutOfDomain";
        case errc::infeasible: return "Infeasible";
        case errc::drained: return "Drained";
        case errc::causality_violation: return "CausalityViolation";
        case errc::fault_budget_exceeded: return "FaultBudgetExceeded";
        case errc::agreement_violation: return "AgreementViolation";
        case errc::config_error: return "ConfigError";
    }
    return "Unknown";
}

namespace {

void ensure_sodium() {
    static const bool ready = [] {
        if (sodium_init() < 0)
            throw std::runtime_error("libsodium initialization failed");
        return true;
    }();
    (void)ready;
}

bool share_less(const Share &a, const Share &b) {
    if (a.signer != b.signer) return a.signer < b.signer;
    return a.value < b.value;
}

bool same_tuple(const Share &a, const Share &b) {
    return a.signer == b.signer && a.value == b.value;
}

Digest fold_tags(std::span<const Share> shares) {
    Digest acc{};
    for (const auto &s: shares)
        for (size_t i = 0; i < acc.size(); i++)
            acc[i] ^= s.tag[i];
    return acc;
}

}

Digest digest_of(std::span<const uint8_t> data) {
    ensure_sodium();
    Digest out;
    crypto_generichash(out.data(), out.size(), data.data(), data.size(), nullptr, 0);
    return out;
}

Digest digest_of(std::string_view data) {
    return digest_of(std::span<const uint8_t>(
        reinterpret_cast<const uint8_t *>(data.data()), data.size()));
}

std::string to_hex(const Digest &d) {
    static const char *hex = "0123456789abcdef";
    std::string s;
    s.reserve(d.size() * 2);
    for (auto b: d) {
        s.push_back(hex[b >> 4]);
        s.push_back(hex[b & 0xf]);
    }
    return s;
}

const char *scheme_name(Scheme s) {
    return s == Scheme::NaiveSet ? "naive" : "aggregate";
}

Keyring Keyring::generate(size_t n, uint64_t seed) {
    std::vector<Digest> keys(n);
    for (size_t i = 0; i < n; i++) {
        uint8_t buf[16];
        for (int j = 0; j < 8; j++) {
            buf[j] = uint8_t(seed >> (8 * j));
            buf[8 + j] = uint8_t(uint64_t(i) >> (8 * j));
        }
        keys[i] = digest_of(std::span<const uint8_t>(buf, sizeof(buf)));
    }
    return Keyring(std::move(keys));
}

const Digest &Keyring::key(ProcessId p) const {
    if (!contains(p))
        throw error(errc::key_not_found, "no key for process " + std::to_string(p.index));
    return keys_[p.index];
}

Digest Keyring::tag(ProcessId signer, const Digest &value) const {
    const Digest &k = key(signer);
    ensure_sodium();
    uint8_t msg[4 + 32];
    for (int j = 0; j < 4; j++)
        msg[j] = uint8_t(signer.index >> (8 * j));
    std::memcpy(msg + 4, value.data(), value.size());
    Digest out;
    crypto_generichash(out.data(), out.size(), msg, sizeof(msg), k.data(), k.size());
    return out;
}

Collection Collection::from_shares(Scheme scheme, std::vector<Share> shares) {
    Collection c(scheme);
    std::stable_sort(shares.begin(), shares.end(), share_less);
    shares.erase(std::unique(shares.begin(), shares.end(), same_tuple), shares.end());
    c.shares_ = std::move(shares);
    if (scheme == Scheme::Aggregate)
        c.aggregate_tag_ = fold_tags(c.shares_);
    return c;
}

size_t Collection::count_value(const Digest &v) const {
    // shares are sorted by signer, so equal signers are adjacent
    size_t n = 0;
    const Share *last = nullptr;
    for (const auto &s: shares_) {
        if (s.value != v) continue;
        if (last == nullptr || last->signer != s.signer) n++;
        last = &s;
    }
    return n;
}

bool Collection::contains_signer(ProcessId p) const {
    auto it = std::lower_bound(shares_.begin(), shares_.end(), p,
        [](const Share &s, ProcessId q) { return s.signer < q; });
    return it != shares_.end() && it->signer == p;
}

Collection new_share(ProcessId signer, const Digest &value,
                     const Keyring &keyring, Scheme scheme) {
    Share s{signer, value, keyring.tag(signer, value)};
    return Collection::from_shares(scheme, {s});
}

Collection combine(const Collection &a, const Collection &b) {
    if (a.scheme_ != b.scheme_)
        throw error(errc::scheme_mismatch, "cannot combine naive and aggregate collections");
    Collection c(a.scheme_);
    c.shares_.reserve(a.shares_.size() + b.shares_.size());
    std::set_union(a.shares_.begin(), a.shares_.end(),
                   b.shares_.begin(), b.shares_.end(),
                   std::back_inserter(c.shares_), share_less);
    if (c.scheme_ == Scheme::Aggregate)
        c.aggregate_tag_ = fold_tags(c.shares_);
    return c;
}

bool has(const Collection &c, const Digest &v, size_t t, const Keyring &keyring) {
    if (t == 0) return true;
    if (c.scheme() == Scheme::Aggregate && !verify(c, keyring))
        return false;
    size_t n = 0;
    const Share *last = nullptr;
    for (const auto &s: c.shares()) {
        if (s.value != v) continue;
        if (!keyring.contains(s.signer) || keyring.tag(s.signer, s.value) != s.tag)
            continue;
        if (last == nullptr || last->signer != s.signer) n++;
        last = &s;
        if (n >= t) return true;
    }
    return false;
}

bool verify(const Collection &c, const Keyring &keyring) {
    if (c.scheme() == Scheme::NaiveSet) {
        for (const auto &s: c.shares()) {
            if (!keyring.contains(s.signer) || keyring.tag(s.signer, s.value) != s.tag)
                return false;
        }
        return true;
    }
    Digest acc{};
    for (const auto &s: c.shares()) {
        if (!keyring.contains(s.signer)) return false;
        auto t = keyring.tag(s.signer, s.value);
        for (size_t i = 0; i < acc.size(); i++)
            acc[i] ^= t[i];
    }
    return acc == c.aggregate_tag();
}

CryptoCostModel CryptoCostModel::secp_like() {
    return CryptoCostModel{};
}

CryptoCostModel CryptoCostModel::bls_like() {
    CryptoCostModel m;
    m.sign_us = 1000;
    m.verify_us = 3000;
    m.aggregate_per_element_us = 50;
    return m;
}

CryptoCostModel CryptoCostModel::defaults_for(Scheme s) {
    return s == Scheme::NaiveSet ? secp_like() : bls_like();
}

bool CryptoCostModel::valid() const {
    return sign_us >= 0 && verify_us >= 0 && aggregate_per_element_us >= 0;
}

uint64_t wire_size(const Collection &c, const CryptoCostModel &model) {
    if (c.scheme() == Scheme::NaiveSet)
        return c.cardinality() * model.share_wire_bytes;
    return model.aggregate_wire_bytes;
}

int64_t cpu_cost(CryptoOp op, size_t element_count, Scheme scheme,
                 const CryptoCostModel &model) {
    const auto k = int64_t(element_count);
    if (k == 0) return 0;
    switch (op) {
        case CryptoOp::Sign:
            return k * model.sign_us;
        case CryptoOp::Verify:
            if (scheme == Scheme::NaiveSet) return k * model.verify_us;
            return model.verify_us + k * model.aggregate_per_element_us;
        case CryptoOp::Combine:
            if (scheme == Scheme::NaiveSet) return 0;
            return k * model.aggregate_per_element_us;
    }
    return 0;
}

}
