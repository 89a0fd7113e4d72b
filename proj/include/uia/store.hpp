#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "uia/record.hpp"

namespace uia {

// Anti-entropy version vector: next-needed sequence number per author,
// which equals the stored verified prefix length.
struct StoreSummary {
    std::map<Eid, uint64_t> entries;

    bool operator==(const StoreSummary&) const = default;
};

// A device's collection of verified logs: its own plus replicas of peers'.
// Only verified prefixes are stored; out-of-order arrivals wait in a bounded
// per-author buffer until their predecessors show up.
class RecordStore {
public:
    static constexpr size_t kBufferCap = 1024;

    RecordStore() = default;

    RecordStore(Eid owner, PublicKey owner_key) : owner_(owner) {
        trusted_keys_[owner] = owner_key;
        logs_.emplace(owner, DeviceLog(owner));
    }

    const Eid& owner() const { return owner_; }
    const std::map<Eid, DeviceLog>& logs() const { return logs_; }
    const std::map<Eid, uint64_t>& fork_marks() const { return fork_marks_; }
    const std::map<Eid, PublicKey>& trusted_keys() const { return trusted_keys_; }

    DeviceLog& own_log() { return logs_.at(owner_); }
    const DeviceLog& own_log() const { return logs_.at(owner_); }

    uint64_t log_len(const Eid& author) const {
        auto it = logs_.find(author);
        return it == logs_.end() ? 0 : it->second.size();
    }

    const DeviceLog* log_of(const Eid& author) const {
        auto it = logs_.find(author);
        return it == logs_.end() ? nullptr : &it->second;
    }

    const PublicKey* key_of(const Eid& author) const {
        auto it = trusted_keys_.find(author);
        return it == trusted_keys_.end() ? nullptr : &it->second;
    }

    // A pointer matches a record iff author, seq, and hash all agree.
    const Record* find_record(const RecordPointer& ptr) const {
        auto it = logs_.find(ptr.author);
        if (it == logs_.end() || ptr.seq >= it->second.size()) return nullptr;
        const Record& rec = it->second.at(ptr.seq);
        return rec.hash == ptr.hash ? &rec : nullptr;
    }

    const Record* record_at(const Eid& author, uint64_t seq) const {
        auto it = logs_.find(author);
        if (it == logs_.end() || seq >= it->second.size()) return nullptr;
        return &it->second.at(seq);
    }

    // Keys are self-certifying: accepted only when hashing back to the EID.
    bool learn_key(const Eid& author, const PublicKey& key) {
        if (eid_of(key) != author) return false;
        trusted_keys_.emplace(author, key);
        return true;
    }

    StoreSummary summarize() const {
        StoreSummary s;
        for (const auto& [author, log] : logs_) s.entries[author] = log.size();
        return s;
    }

    void mark_fork(const Eid& author, uint64_t seq) {
        auto it = fork_marks_.find(author);
        if (it == fork_marks_.end() || seq < it->second) fork_marks_[author] = seq;
    }

    // Ingest internals (used by replication.hpp).
    DeviceLog& log_for(const Eid& author) {
        auto it = logs_.find(author);
        if (it == logs_.end()) it = logs_.emplace(author, DeviceLog(author)).first;
        return it->second;
    }

    std::map<uint64_t, Record>& buffer_for(const Eid& author) { return buffered_[author]; }

    size_t buffered_count(const Eid& author) const {
        auto it = buffered_.find(author);
        return it == buffered_.end() ? 0 : it->second.size();
    }

private:
    Eid owner_;
    std::map<Eid, DeviceLog> logs_;
    std::map<Eid, uint64_t> fork_marks_;
    std::map<Eid, PublicKey> trusted_keys_;
    std::map<Eid, std::map<uint64_t, Record>> buffered_;
};

inline StoreSummary summarize(const RecordStore& store) { return store.summarize(); }

}  // namespace uia
