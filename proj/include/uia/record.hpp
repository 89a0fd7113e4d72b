#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "uia/bytes.hpp"
#include "uia/crypto.hpp"
#include "uia/identity.hpp"
#include "uia/label.hpp"

namespace uia {

// Global record reference: all three fields must agree for a match.
struct RecordPointer {
    Eid author;
    uint64_t seq = 0;
    Hash256 hash;

    auto operator<=>(const RecordPointer&) const = default;

    std::string str() const {
        return author.short_hex() + "/" + std::to_string(seq) + "/" + hash.hex().substr(0, 8);
    }
};

struct CreateNamespaceBody {
    bool operator==(const CreateNamespaceBody&) const = default;
};

struct LinkBody {
    RecordPointer parent;
    RecordPointer child;
    Label name;

    bool operator==(const LinkBody& o) const {
        return parent == o.parent && child == o.child && name.text() == o.name.text();
    }
};

struct NameDeviceBody {
    RecordPointer parent;
    Eid device_eid;
    Label name;

    bool operator==(const NameDeviceBody& o) const {
        return parent == o.parent && device_eid == o.device_eid && name.text() == o.name.text();
    }
};

struct MergeBody {
    RecordPointer local;
    RecordPointer remote;

    bool operator==(const MergeBody&) const = default;
};

struct UnlinkBody {
    RecordPointer target;  // points at a link record

    bool operator==(const UnlinkBody&) const = default;
};

struct RemoveNameBody {
    RecordPointer target;  // points at a name-device record

    bool operator==(const RemoveNameBody&) const = default;
};

struct StopMergeBody {
    RecordPointer target;  // last trusted entry in the revoked device's log
    uint64_t stop_seq = 0;
    Hash256 stop_hash;

    bool operator==(const StopMergeBody&) const = default;
};

using RecordBody = std::variant<CreateNamespaceBody, LinkBody, NameDeviceBody, MergeBody,
                                UnlinkBody, RemoveNameBody, StopMergeBody>;

enum class RecordType : uint8_t {
    CreateNamespace = 1,
    Link = 2,
    NameDevice = 3,
    Merge = 4,
    Unlink = 5,
    RemoveName = 6,
    StopMerge = 7,
};

inline RecordType record_type(const RecordBody& body) {
    return std::visit(
        [](const auto& b) -> RecordType {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, CreateNamespaceBody>) return RecordType::CreateNamespace;
            if constexpr (std::is_same_v<T, LinkBody>) return RecordType::Link;
            if constexpr (std::is_same_v<T, NameDeviceBody>) return RecordType::NameDevice;
            if constexpr (std::is_same_v<T, MergeBody>) return RecordType::Merge;
            if constexpr (std::is_same_v<T, UnlinkBody>) return RecordType::Unlink;
            if constexpr (std::is_same_v<T, RemoveNameBody>) return RecordType::RemoveName;
            if constexpr (std::is_same_v<T, StopMergeBody>) return RecordType::StopMerge;
        },
        body);
}

inline const char* record_type_name(RecordType t) {
    switch (t) {
        case RecordType::CreateNamespace: return "create-namespace";
        case RecordType::Link: return "link";
        case RecordType::NameDevice: return "name-device";
        case RecordType::Merge: return "merge";
        case RecordType::Unlink: return "unlink";
        case RecordType::RemoveName: return "remove-name";
        case RecordType::StopMerge: return "stop-merge";
    }
    return "unknown";
}

namespace detail {

inline Bytes encode_pointer(const RecordPointer& p) {
    ByteWriter w;
    w.raw(p.author.bytes);
    w.u64(p.seq);
    w.raw(p.hash.bytes);
    return w.take();
}

inline RecordPointer decode_pointer(std::span<const uint8_t> field) {
    if (field.size() != 72) throw DecodeError("pointer field must be 72 bytes");
    ByteReader r(field);
    RecordPointer p;
    p.author.bytes = r.fixed<32>();
    p.seq = r.u64();
    p.hash.bytes = r.fixed<32>();
    return p;
}

inline Label decode_label(std::span<const uint8_t> field) {
    std::string text(reinterpret_cast<const char*>(field.data()), field.size());
    auto label = Label::parse(text);
    if (!label) throw DecodeError("invalid label in record body");
    return *label;
}

}  // namespace detail

// Body fields in Table 1 column order, each behind a 4-byte length prefix.
inline void encode_body(ByteWriter& w, const RecordBody& body) {
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, CreateNamespaceBody>) {
                // no fields
            } else if constexpr (std::is_same_v<T, LinkBody>) {
                w.field(detail::encode_pointer(b.parent));
                w.field(detail::encode_pointer(b.child));
                w.field(b.name.text());
            } else if constexpr (std::is_same_v<T, NameDeviceBody>) {
                w.field(detail::encode_pointer(b.parent));
                w.field(std::span<const uint8_t>(b.device_eid.bytes));
                w.field(b.name.text());
            } else if constexpr (std::is_same_v<T, MergeBody>) {
                w.field(detail::encode_pointer(b.local));
                w.field(detail::encode_pointer(b.remote));
            } else if constexpr (std::is_same_v<T, UnlinkBody>) {
                w.field(detail::encode_pointer(b.target));
            } else if constexpr (std::is_same_v<T, RemoveNameBody>) {
                w.field(detail::encode_pointer(b.target));
            } else if constexpr (std::is_same_v<T, StopMergeBody>) {
                w.field(detail::encode_pointer(b.target));
                ByteWriter seq;
                seq.u64(b.stop_seq);
                w.field(seq.bytes());
                w.field(std::span<const uint8_t>(b.stop_hash.bytes));
            }
        },
        body);
}

// Canonical record payload:
//   type tag (1) | author EID (32) | seq (8 BE) | previous hash (32) | body fields.
// The record hash is the hash of these bytes; the signature covers them.
inline Bytes encode_payload(const Eid& author, uint64_t seq, const Hash256& prev_hash,
                            const RecordBody& body) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(record_type(body)));
    w.raw(author.bytes);
    w.u64(seq);
    w.raw(prev_hash.bytes);
    encode_body(w, body);
    return w.take();
}

struct DecodedPayload {
    Eid author;
    uint64_t seq = 0;
    Hash256 prev_hash;
    RecordBody body;
};

inline RecordBody decode_body(RecordType type, ByteReader& r) {
    switch (type) {
        case RecordType::CreateNamespace:
            return CreateNamespaceBody{};
        case RecordType::Link: {
            LinkBody b{detail::decode_pointer(r.field()), detail::decode_pointer(r.field()),
                       detail::decode_label(r.field())};
            return b;
        }
        case RecordType::NameDevice: {
            auto parent = detail::decode_pointer(r.field());
            auto eid_field = r.field();
            if (eid_field.size() != 32) throw DecodeError("EID field must be 32 bytes");
            Eid eid;
            ByteReader er(eid_field);
            eid.bytes = er.fixed<32>();
            return NameDeviceBody{parent, eid, detail::decode_label(r.field())};
        }
        case RecordType::Merge:
            return MergeBody{detail::decode_pointer(r.field()), detail::decode_pointer(r.field())};
        case RecordType::Unlink:
            return UnlinkBody{detail::decode_pointer(r.field())};
        case RecordType::RemoveName:
            return RemoveNameBody{detail::decode_pointer(r.field())};
        case RecordType::StopMerge: {
            auto target = detail::decode_pointer(r.field());
            auto seq_field = r.field();
            if (seq_field.size() != 8) throw DecodeError("stop seq field must be 8 bytes");
            ByteReader sr(seq_field);
            uint64_t stop_seq = sr.u64();
            auto hash_field = r.field();
            if (hash_field.size() != 32) throw DecodeError("stop hash field must be 32 bytes");
            Hash256 stop_hash;
            ByteReader hr(hash_field);
            stop_hash.bytes = hr.fixed<32>();
            return StopMergeBody{target, stop_seq, stop_hash};
        }
    }
    throw DecodeError("unknown record type tag");
}

inline DecodedPayload decode_payload(std::span<const uint8_t> payload) {
    ByteReader r(payload);
    uint8_t tag = r.u8();
    if (tag < 1 || tag > 7) throw DecodeError("unknown record type tag");
    DecodedPayload out;
    out.author.bytes = r.fixed<32>();
    out.seq = r.u64();
    out.prev_hash.bytes = r.fixed<32>();
    out.body = decode_body(static_cast<RecordType>(tag), r);
    r.expect_done();
    return out;
}

// One signed, hash-chained entry in a device's append-only log.
struct Record {
    Eid author;
    uint64_t seq = 0;
    Hash256 prev_hash;
    RecordBody body;
    Hash256 hash;
    Signature signature;

    Bytes payload() const { return encode_payload(author, seq, prev_hash, body); }
};

inline RecordPointer pointer_of(const Record& r) { return RecordPointer{r.author, r.seq, r.hash}; }

inline bool pointer_matches(const RecordPointer& p, const Record& r) {
    return p.author == r.author && p.seq == r.seq && p.hash == r.hash;
}

// Rebuild a record from wire bytes. The hash is recomputed from the payload;
// the signature is carried along unverified (ingest checks it against the
// author's key).
inline Record record_from_wire(std::span<const uint8_t> payload, const Signature& sig) {
    DecodedPayload d = decode_payload(payload);
    Record r;
    r.author = d.author;
    r.seq = d.seq;
    r.prev_hash = d.prev_hash;
    r.body = std::move(d.body);
    r.hash = sha256(payload);
    r.signature = sig;
    return r;
}

inline bool operator==(const Record& a, const Record& b) {
    return a.author == b.author && a.seq == b.seq && a.prev_hash == b.prev_hash &&
           a.hash == b.hash && a.signature == b.signature && a.payload() == b.payload();
}

enum class ChainErrorKind { Gap, HashMismatch, BadSignature, Fork };

inline const char* chain_error_name(ChainErrorKind k) {
    switch (k) {
        case ChainErrorKind::Gap: return "gap";
        case ChainErrorKind::HashMismatch: return "hash-mismatch";
        case ChainErrorKind::BadSignature: return "bad-signature";
        case ChainErrorKind::Fork: return "fork";
    }
    return "unknown";
}

struct ChainError {
    ChainErrorKind kind;
    uint64_t seq = 0;  // first offending sequence number
};

// Accepts iff sequence numbers are contiguous from the list's first seq,
// every prev_hash matches its predecessor, every hash recomputes, and every
// signature verifies under the author's key. A second record claiming an
// already-seen sequence number with different content is a fork.
inline std::optional<ChainError> verify_chain(std::span<const Record> records,
                                              const PublicKey& public_key) {
    if (records.empty()) return std::nullopt;
    for (size_t i = 0; i < records.size(); ++i) {
        const Record& rec = records[i];
        uint64_t expected = records[0].seq + i;
        if (rec.seq != expected) {
            if (i > 0 && rec.seq == records[i - 1].seq &&
                !(rec.hash == records[i - 1].hash))
                return ChainError{ChainErrorKind::Fork, rec.seq};
            return ChainError{ChainErrorKind::Gap, expected};
        }
        if (i > 0) {
            if (rec.prev_hash != records[i - 1].hash)
                return ChainError{ChainErrorKind::HashMismatch, rec.seq};
        } else if (rec.seq == 0 && !rec.prev_hash.is_zero()) {
            return ChainError{ChainErrorKind::HashMismatch, rec.seq};
        }
        Bytes payload = rec.payload();
        if (sha256(payload) != rec.hash)
            return ChainError{ChainErrorKind::HashMismatch, rec.seq};
        if (!verify_record(public_key, payload, rec.signature))
            return ChainError{ChainErrorKind::BadSignature, rec.seq};
    }
    return std::nullopt;
}

// Append-only per-device log. Sequence numbers run 0..len-1 with no gaps.
class DeviceLog {
public:
    DeviceLog() = default;
    explicit DeviceLog(Eid author) : author_(author) {}

    const Eid& author() const { return author_; }
    const std::vector<Record>& records() const { return records_; }
    size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const Record& at(uint64_t seq) const { return records_.at(seq); }

    const Record& append(const DeviceIdentity& identity, RecordBody body) {
        if (identity.eid != author_)
            throw std::invalid_argument("append_record: identity does not own this log");
        if (const auto* m = std::get_if<MergeBody>(&body); m && m->local == m->remote)
            throw std::invalid_argument("append_record: merge endpoints must differ");
        Record rec;
        rec.author = author_;
        rec.seq = records_.size();
        rec.prev_hash = records_.empty() ? Hash256{} : records_.back().hash;
        rec.body = std::move(body);
        Bytes payload = rec.payload();
        rec.hash = sha256(payload);
        rec.signature = sign_record(identity, payload);
        records_.push_back(std::move(rec));
        return records_.back();
    }

    // Extend with an already-verified record (ingest path).
    void push_verified(Record rec) {
        if (rec.seq != records_.size())
            throw std::invalid_argument("push_verified: sequence not contiguous");
        records_.push_back(std::move(rec));
    }

private:
    Eid author_;
    std::vector<Record> records_;
};

inline const Record& append_record(DeviceLog& log, const DeviceIdentity& identity,
                                   RecordBody body) {
    return log.append(identity, std::move(body));
}

// Log archive: for each record, a length-prefixed canonical payload followed
// by a length-prefixed signature.
inline Bytes save_archive(const DeviceLog& log) {
    ByteWriter w;
    for (const Record& rec : log.records()) {
        w.field(rec.payload());
        w.field(std::span<const uint8_t>(rec.signature.bytes));
    }
    return w.take();
}

struct ArchiveLoadResult {
    std::optional<DeviceLog> log;
    std::string error;
};

// Imports re-verify the whole chain; a tampered archive is refused.
inline ArchiveLoadResult load_archive(std::span<const uint8_t> bytes,
                                      const PublicKey& public_key) {
    std::vector<Record> records;
    try {
        ByteReader r(bytes);
        while (!r.done()) {
            auto payload = r.field();
            auto sig_field = r.field();
            if (sig_field.size() != crypto_sign_BYTES)
                return {std::nullopt, "bad signature length"};
            Signature sig;
            std::memcpy(sig.bytes.data(), sig_field.data(), sig_field.size());
            records.push_back(record_from_wire(payload, sig));
        }
    } catch (const DecodeError& e) {
        return {std::nullopt, e.what()};
    }
    if (records.empty()) return {std::nullopt, "empty archive"};
    if (records[0].seq != 0) return {std::nullopt, "archive does not start at seq 0"};
    for (const Record& rec : records)
        if (rec.author != records[0].author) return {std::nullopt, "mixed authors in archive"};
    if (eid_of(public_key) != records[0].author)
        return {std::nullopt, "public key does not match archive author"};
    if (auto err = verify_chain(records, public_key))
        return {std::nullopt, std::string("chain verification failed: ") +
                                  chain_error_name(err->kind) + " at seq " +
                                  std::to_string(err->seq)};
    DeviceLog log(records[0].author);
    for (Record& rec : records) log.push_verified(std::move(rec));
    return {std::move(log), ""};
}

}  // namespace uia
