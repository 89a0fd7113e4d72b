#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "uia/record.hpp"
#include "uia/routing.hpp"
#include "uia/store.hpp"

namespace uia {

// Simulated transport messages, all in the canonical TLV encoding.

struct SummaryMsg {
    std::map<Eid, uint64_t> entries;  // author -> next needed seq
    bool operator==(const SummaryMsg&) const = default;
};

struct RequestMsg {
    Eid author;
    uint64_t from_seq = 0;
    bool operator==(const RequestMsg&) const = default;
};

struct RecordsMsg {
    std::vector<std::pair<Bytes, Signature>> records;  // payload + signature
    std::map<Eid, PublicKey> keys;                     // first-contact key material
    bool operator==(const RecordsMsg&) const = default;
};

struct SearchMsg {
    Eid origin;
    uint64_t nonce = 0;  // (origin, nonce) identifies one ring's flood
    Eid target;
    uint32_t ttl = 0;
    std::vector<Eid> path;
    bool operator==(const SearchMsg&) const = default;
};

struct FoundMsg {
    Eid origin;
    uint64_t nonce = 0;
    std::vector<Eid> path;
    Address address;  // target's current address
    bool operator==(const FoundMsg&) const = default;
};

struct RelayOpenMsg {
    Eid target;
    bool operator==(const RelayOpenMsg&) const = default;
};

struct RelayOkMsg {
    Eid target;
    bool accepted = false;
    bool operator==(const RelayOkMsg&) const = default;
};

struct RelayDataMsg {
    Eid src;
    Eid dst;
    Bytes payload;
    bool operator==(const RelayDataMsg&) const = default;
};

struct LocPingMsg {
    Address address;  // sender's current address
    bool operator==(const LocPingMsg&) const = default;
};

struct LocPongMsg {
    Address address;
    bool operator==(const LocPongMsg&) const = default;
};

struct DialMsg {
    bool operator==(const DialMsg&) const = default;
};

struct DialOkMsg {
    bool operator==(const DialOkMsg&) const = default;
};

struct EchoRequestMsg {
    std::string payload;
    bool operator==(const EchoRequestMsg&) const = default;
};

struct EchoReplyMsg {
    std::string payload;
    bool operator==(const EchoReplyMsg&) const = default;
};

using Message =
    std::variant<SummaryMsg, RequestMsg, RecordsMsg, SearchMsg, FoundMsg, RelayOpenMsg,
                 RelayOkMsg, RelayDataMsg, LocPingMsg, LocPongMsg, DialMsg, DialOkMsg,
                 EchoRequestMsg, EchoReplyMsg>;

inline const char* message_name(const Message& m) {
    static constexpr const char* names[] = {"SUMMARY",    "REQUEST",  "RECORDS",   "SEARCH",
                                            "FOUND",      "RELAY_OPEN", "RELAY_OK", "RELAY_DATA",
                                            "LOC_PING",   "LOC_PONG", "DIAL",      "DIAL_OK",
                                            "ECHO_REQ",   "ECHO_REP"};
    return names[m.index()];
}

namespace wiredetail {

inline void put_eid(ByteWriter& w, const Eid& e) { w.raw(e.bytes); }

inline Eid get_eid(ByteReader& r) {
    Eid e;
    e.bytes = r.fixed<32>();
    return e;
}

inline void put_address(ByteWriter& w, const Address& a) {
    w.u32(a.network);
    w.u32(a.host);
}

inline Address get_address(ByteReader& r) {
    Address a;
    a.network = r.u32();
    a.host = r.u32();
    return a;
}

inline void put_path(ByteWriter& w, const std::vector<Eid>& path) {
    w.u32(static_cast<uint32_t>(path.size()));
    for (const Eid& e : path) put_eid(w, e);
}

inline std::vector<Eid> get_path(ByteReader& r) {
    uint32_t n = r.u32();
    std::vector<Eid> out;
    out.reserve(n);
    for (uint32_t i = 0; i < n; ++i) out.push_back(get_eid(r));
    return out;
}

}  // namespace wiredetail

inline Bytes encode_message(const Message& msg) {
    using namespace wiredetail;
    ByteWriter w;
    w.u8(static_cast<uint8_t>(msg.index() + 0x20));
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SummaryMsg>) {
                w.u32(static_cast<uint32_t>(m.entries.size()));
                for (const auto& [eid, next] : m.entries) {
                    put_eid(w, eid);
                    w.u64(next);
                }
            } else if constexpr (std::is_same_v<T, RequestMsg>) {
                put_eid(w, m.author);
                w.u64(m.from_seq);
            } else if constexpr (std::is_same_v<T, RecordsMsg>) {
                w.u32(static_cast<uint32_t>(m.records.size()));
                for (const auto& [payload, sig] : m.records) {
                    w.field(payload);
                    w.field(std::span<const uint8_t>(sig.bytes));
                }
                w.u32(static_cast<uint32_t>(m.keys.size()));
                for (const auto& [eid, key] : m.keys) {
                    put_eid(w, eid);
                    w.raw(key.bytes);
                }
            } else if constexpr (std::is_same_v<T, SearchMsg>) {
                put_eid(w, m.origin);
                w.u64(m.nonce);
                put_eid(w, m.target);
                w.u32(m.ttl);
                put_path(w, m.path);
            } else if constexpr (std::is_same_v<T, FoundMsg>) {
                put_eid(w, m.origin);
                w.u64(m.nonce);
                put_path(w, m.path);
                put_address(w, m.address);
            } else if constexpr (std::is_same_v<T, RelayOpenMsg>) {
                put_eid(w, m.target);
            } else if constexpr (std::is_same_v<T, RelayOkMsg>) {
                put_eid(w, m.target);
                w.u8(m.accepted ? 1 : 0);
            } else if constexpr (std::is_same_v<T, RelayDataMsg>) {
                put_eid(w, m.src);
                put_eid(w, m.dst);
                w.field(m.payload);
            } else if constexpr (std::is_same_v<T, LocPingMsg>) {
                put_address(w, m.address);
            } else if constexpr (std::is_same_v<T, LocPongMsg>) {
                put_address(w, m.address);
            } else if constexpr (std::is_same_v<T, DialMsg> || std::is_same_v<T, DialOkMsg>) {
                // no fields
            } else if constexpr (std::is_same_v<T, EchoRequestMsg> ||
                                 std::is_same_v<T, EchoReplyMsg>) {
                w.field(m.payload);
            }
        },
        msg);
    return w.take();
}

inline Message decode_message(std::span<const uint8_t> bytes) {
    using namespace wiredetail;
    ByteReader r(bytes);
    uint8_t tag = r.u8();
    Message out;
    switch (tag) {
        case 0x20: {
            SummaryMsg m;
            uint32_t n = r.u32();
            for (uint32_t i = 0; i < n; ++i) {
                Eid eid = get_eid(r);
                m.entries[eid] = r.u64();
            }
            out = std::move(m);
            break;
        }
        case 0x21: {
            RequestMsg m;
            m.author = get_eid(r);
            m.from_seq = r.u64();
            out = m;
            break;
        }
        case 0x22: {
            RecordsMsg m;
            uint32_t n = r.u32();
            for (uint32_t i = 0; i < n; ++i) {
                auto payload = r.field();
                auto sig_field = r.field();
                if (sig_field.size() != crypto_sign_BYTES)
                    throw DecodeError("bad signature length");
                Signature sig;
                std::memcpy(sig.bytes.data(), sig_field.data(), sig_field.size());
                m.records.emplace_back(Bytes(payload.begin(), payload.end()), sig);
            }
            uint32_t k = r.u32();
            for (uint32_t i = 0; i < k; ++i) {
                Eid eid = get_eid(r);
                PublicKey key;
                key.bytes = r.fixed<crypto_sign_PUBLICKEYBYTES>();
                m.keys[eid] = key;
            }
            out = std::move(m);
            break;
        }
        case 0x23: {
            SearchMsg m;
            m.origin = get_eid(r);
            m.nonce = r.u64();
            m.target = get_eid(r);
            m.ttl = r.u32();
            m.path = get_path(r);
            out = std::move(m);
            break;
        }
        case 0x24: {
            FoundMsg m;
            m.origin = get_eid(r);
            m.nonce = r.u64();
            m.path = get_path(r);
            m.address = get_address(r);
            out = std::move(m);
            break;
        }
        case 0x25: out = RelayOpenMsg{get_eid(r)}; break;
        case 0x26: {
            RelayOkMsg m;
            m.target = get_eid(r);
            m.accepted = r.u8() != 0;
            out = m;
            break;
        }
        case 0x27: {
            RelayDataMsg m;
            m.src = get_eid(r);
            m.dst = get_eid(r);
            auto p = r.field();
            m.payload.assign(p.begin(), p.end());
            out = std::move(m);
            break;
        }
        case 0x28: out = LocPingMsg{get_address(r)}; break;
        case 0x29: out = LocPongMsg{get_address(r)}; break;
        case 0x2a: out = DialMsg{}; break;
        case 0x2b: out = DialOkMsg{}; break;
        case 0x2c: out = EchoRequestMsg{r.field_string()}; break;
        case 0x2d: out = EchoReplyMsg{r.field_string()}; break;
        default: throw DecodeError("unknown message tag");
    }
    r.expect_done();
    return out;
}

// Gossip helpers shared by the synchronous and simulated paths.

inline RecordsMsg records_message(const RecordStore& src, const Eid& author, uint64_t from_seq) {
    RecordsMsg msg;
    const DeviceLog* log = src.log_of(author);
    if (!log) return msg;
    for (uint64_t s = from_seq; s < log->size(); ++s) {
        const Record& rec = log->at(s);
        msg.records.emplace_back(rec.payload(), rec.signature);
    }
    if (const PublicKey* key = src.key_of(author)) msg.keys[author] = *key;
    return msg;
}

inline std::vector<Record> records_from_message(const RecordsMsg& msg) {
    std::vector<Record> out;
    out.reserve(msg.records.size());
    for (const auto& [payload, sig] : msg.records) out.push_back(record_from_wire(payload, sig));
    return out;
}

}  // namespace uia
