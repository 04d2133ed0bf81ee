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

#ifndef _TREEBFT_COLLECTIONS_H
#define _TREEBFT_COLLECTIONS_H

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace treebft {

/** Index of a server process, stable for the whole run. */
struct ProcessId {
    uint32_t index = 0;

    constexpr ProcessId() = default;
    constexpr explicit ProcessId(uint32_t i): index(i) {}
    constexpr auto operator<=>(const ProcessId &) const = default;
};

using Digest = std::array<uint8_t, 32>;

Digest digest_of(std::span<const uint8_t> data);
Digest digest_of(std::string_view data);
std::string to_hex(const Digest &d);

enum class Scheme { NaiveSet, Aggregate };

const char *scheme_name(Scheme s);

struct Share {
    ProcessId signer;
    Digest value{};
    Digest tag{};

    bool operator==(const Share &) const = default;
};

/** Per-process secret seeds; fixed for the lifetime of a run. */
class Keyring {
    std::vector<Digest> keys_;

    public:
    Keyring() = default;
    explicit Keyring(std::vector<Digest> keys): keys_(std::move(keys)) {}

    /** Derives n keys deterministically from a run seed. */
    static Keyring generate(size_t n, uint64_t seed);

    size_t size() const { return keys_.size(); }
    bool contains(ProcessId p) const { return p.index < keys_.size(); }
    const Digest &key(ProcessId p) const;

    /** Keyed digest of (signer, value); throws key_not_found. */
    Digest tag(ProcessId signer, const Digest &value) const;
};

/**
 * Secure set of (signer, value) shares.
 *
 * Shares are kept sorted by (signer, value) without duplicates, which is
 * what makes combine idempotent. The Aggregate scheme additionally keeps
 * the XOR fold of all member tags; that fold is the only authenticator a
 * verifier checks for it, and is what travels on the wire.
 */
class Collection {
    Scheme scheme_ = Scheme::NaiveSet;
    std::vector<Share> shares_;
    Digest aggregate_tag_{};

    public:
    Collection() = default;
    explicit Collection(Scheme scheme): scheme_(scheme) {}

    /** Builds a collection from arbitrary shares (tags are taken as given). */
    static Collection from_shares(Scheme scheme, std::vector<Share> shares);

    Scheme scheme() const { return scheme_; }
    size_t cardinality() const { return shares_.size(); }
    bool empty() const { return shares_.empty(); }
    std::span<const Share> shares() const { return shares_; }
    const Digest &aggregate_tag() const { return aggregate_tag_; }

    /** Number of distinct signers that contributed value v (unverified). */
    size_t count_value(const Digest &v) const;
    bool contains_signer(ProcessId p) const;

    bool operator==(const Collection &) const = default;

    friend Collection combine(const Collection &a, const Collection &b);
};

Collection new_share(ProcessId signer, const Digest &value,
                     const Keyring &keyring, Scheme scheme);

/** Union of two collections of the same scheme; throws scheme_mismatch. */
Collection combine(const Collection &a, const Collection &b);

/** At least t distinct signers contributed v with a valid tag. */
bool has(const Collection &c, const Digest &v, size_t t, const Keyring &keyring);

bool verify(const Collection &c, const Keyring &keyring);

/** Cost and size model of the underlying signature scheme. */
struct CryptoCostModel {
    int64_t sign_us = 50;
    int64_t verify_us = 100;
    int64_t aggregate_per_element_us = 0;
    uint64_t share_wire_bytes = 64;
    uint64_t aggregate_wire_bytes = 96;

    /** secp256k1-like: cheap, linear in the number of signatures. */
    static CryptoCostModel secp_like();
    /** bls-like: ~30x slower verify, aggregation amortizes it. */
    static CryptoCostModel bls_like();
    static CryptoCostModel defaults_for(Scheme s);

    bool valid() const;
    bool operator==(const CryptoCostModel &) const = default;
};

uint64_t wire_size(const Collection &c, const CryptoCostModel &model = {});

enum class CryptoOp { Sign, Verify, Combine };

/** Simulated CPU microseconds for an operation over element_count shares. */
int64_t cpu_cost(CryptoOp op, size_t element_count, Scheme scheme,
                 const CryptoCostModel &model);

}

#endif
