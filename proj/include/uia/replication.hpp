#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "uia/store.hpp"
#include "uia/view.hpp"

namespace uia {

enum class RejectReason {
    UnknownAuthor,
    HashMismatch,
    BadSignature,
    BeyondStop,
    AtFork,
    ChainMismatch,
    Duplicate,
    BufferOverflow,
};

inline const char* reject_reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::UnknownAuthor: return "unknown-author";
        case RejectReason::HashMismatch: return "hash-mismatch";
        case RejectReason::BadSignature: return "bad-signature";
        case RejectReason::BeyondStop: return "beyond-stop";
        case RejectReason::AtFork: return "at-fork";
        case RejectReason::ChainMismatch: return "chain-mismatch";
        case RejectReason::Duplicate: return "duplicate";
        case RejectReason::BufferOverflow: return "buffer-overflow";
    }
    return "unknown";
}

struct IngestReport {
    struct Rejection {
        RecordPointer record;
        RejectReason reason;
    };

    std::vector<RecordPointer> accepted;
    std::vector<RecordPointer> buffered;  // still waiting on a predecessor
    std::vector<Rejection> rejected;
    std::vector<std::pair<Eid, uint64_t>> forks_detected;
    std::vector<std::string> notes;

    bool any_accepted() const { return !accepted.empty(); }
};

namespace detail {

// Appends the record if it extends the verified chain; assumes hash and
// signature were already checked.
inline bool try_extend(RecordStore& store, const Record& rec, IngestReport& report) {
    DeviceLog& log = store.log_for(rec.author);
    if (rec.seq < log.size()) {
        if (log.at(rec.seq).hash == rec.hash) {
            report.rejected.push_back({pointer_of(rec), RejectReason::Duplicate});
        } else {
            // Two signed records claiming one sequence number: the author
            // forked its log. Hide the suffix from naming.
            store.mark_fork(rec.author, rec.seq);
            report.forks_detected.push_back({rec.author, rec.seq});
        }
        return false;
    }
    if (rec.seq > log.size()) return false;  // caller buffers
    Hash256 expected_prev = log.empty() ? Hash256{} : log.records().back().hash;
    if (rec.prev_hash != expected_prev) {
        report.rejected.push_back({pointer_of(rec), RejectReason::ChainMismatch});
        return false;
    }
    Record copy = rec;
    log.push_verified(std::move(copy));
    report.accepted.push_back(pointer_of(rec));
    return true;
}

}  // namespace detail

// Accepts records that verifiably extend known authors' chains, buffers
// records whose predecessors are missing, and rejects everything else with a
// reason. Records beyond an active stop-merge cut or at/after a fork mark
// never enter a log. Key material rides along for first contact.
inline IngestReport ingest(RecordStore& store, const std::vector<Record>& records,
                           const std::map<Eid, PublicKey>& keys = {}) {
    IngestReport report;
    for (const auto& [eid, key] : keys) {
        if (store.key_of(eid)) continue;
        if (!store.learn_key(eid, key))
            report.notes.push_back("ignored key not hashing to " + eid.short_hex());
    }

    std::map<Eid, int64_t> cuts = compute_cuts(store);
    std::set<Eid> touched;

    auto admissible = [&](const Record& rec, IngestReport& rep) -> bool {
        const PublicKey* key = store.key_of(rec.author);
        if (!key) {
            rep.rejected.push_back({pointer_of(rec), RejectReason::UnknownAuthor});
            return false;
        }
        Bytes payload = rec.payload();
        if (sha256(payload) != rec.hash) {
            rep.rejected.push_back({pointer_of(rec), RejectReason::HashMismatch});
            return false;
        }
        if (!verify_record(*key, payload, rec.signature)) {
            rep.rejected.push_back({pointer_of(rec), RejectReason::BadSignature});
            return false;
        }
        if (auto it = cuts.find(rec.author);
            it != cuts.end() && static_cast<int64_t>(rec.seq) > it->second) {
            rep.rejected.push_back({pointer_of(rec), RejectReason::BeyondStop});
            return false;
        }
        if (auto it = store.fork_marks().find(rec.author);
            it != store.fork_marks().end() && rec.seq >= it->second) {
            rep.rejected.push_back({pointer_of(rec), RejectReason::AtFork});
            return false;
        }
        return true;
    };

    for (const Record& rec : records) {
        if (!admissible(rec, report)) continue;
        touched.insert(rec.author);
        DeviceLog& log = store.log_for(rec.author);
        if (rec.seq > log.size()) {
            auto& buf = store.buffer_for(rec.author);
            auto it = buf.find(rec.seq);
            if (it != buf.end()) {
                report.rejected.push_back({pointer_of(rec), RejectReason::Duplicate});
                continue;
            }
            if (buf.size() >= RecordStore::kBufferCap) {
                report.rejected.push_back({pointer_of(rec), RejectReason::BufferOverflow});
                continue;
            }
            buf.emplace(rec.seq, rec);
            continue;
        }
        bool appended = detail::try_extend(store, rec, report);
        if (appended && std::holds_alternative<StopMergeBody>(rec.body))
            cuts = compute_cuts(store);
    }

    // Drain buffers that have become contiguous.
    bool progress = true;
    while (progress) {
        progress = false;
        for (const Eid& author : touched) {
            auto& buf = store.buffer_for(author);
            DeviceLog& log = store.log_for(author);
            auto it = buf.find(log.size());
            while (it != buf.end()) {
                Record rec = it->second;
                buf.erase(it);
                IngestReport sub;
                if (admissible(rec, sub) && detail::try_extend(store, rec, sub)) {
                    progress = true;
                    if (std::holds_alternative<StopMergeBody>(rec.body))
                        cuts = compute_cuts(store);
                }
                for (auto& p : sub.accepted) report.accepted.push_back(p);
                for (auto& r : sub.rejected) report.rejected.push_back(r);
                for (auto& f : sub.forks_detected) report.forks_detected.push_back(f);
                it = buf.find(log.size());
            }
        }
    }

    for (const Eid& author : touched)
        for (const auto& [seq, rec] : store.buffer_for(author))
            report.buffered.push_back(pointer_of(rec));
    return report;
}

// Authors whose logs this device replicates: its merged cluster, the
// clusters its root namespace actively links to, and every author reachable
// from those logs through non-link pointers (needed to interpret merges,
// tombstones, and revocations). Link child pointers beyond the first social
// hop are not followed.
inline std::set<Eid> replication_scope(const RecordStore& store) {
    NamespaceViewResult view = build_view(store);
    std::set<Eid> scope{store.owner()};

    auto add_class_members = [&](const NamespaceClass* cls) {
        if (!cls) return;
        for (const RecordPointer& m : cls->members) scope.insert(m.author);
    };

    const NamespaceClass* own_class = cluster_of(view, store, store.owner());
    add_class_members(own_class);

    // Distance-1: child authors of visible, un-tombstoned link records whose
    // parent namespace sits in the owner's class. Record-level rather than
    // binding-level so that a not-yet-replicated child can still be fetched.
    if (own_class) {
        std::set<RecordPointer> unlinked;
        for (const auto& [author, log] : store.logs())
            for (const Record& rec : log.records())
                if (const auto* u = std::get_if<UnlinkBody>(&rec.body);
                    u && view.visible(rec.author, rec.seq))
                    unlinked.insert(u->target);
        std::set<RecordPointer> own_members(own_class->members.begin(),
                                            own_class->members.end());
        for (const auto& [author, log] : store.logs()) {
            for (const Record& rec : log.records()) {
                const auto* l = std::get_if<LinkBody>(&rec.body);
                if (!l || !view.visible(rec.author, rec.seq)) continue;
                if (unlinked.count(pointer_of(rec))) continue;
                if (!own_members.count(l->parent)) continue;
                scope.insert(l->child.author);
                add_class_members(view.class_of_pointer(l->child));
            }
        }
    }

    // Pointer closure over in-scope logs, skipping link children.
    bool grew = true;
    while (grew) {
        grew = false;
        for (const Eid& author : std::set<Eid>(scope)) {
            const DeviceLog* log = store.log_of(author);
            if (!log) continue;
            for (const Record& rec : log->records()) {
                if (!view.visible(rec.author, rec.seq)) continue;
                std::vector<RecordPointer> ptrs;
                if (const auto* l = std::get_if<LinkBody>(&rec.body)) {
                    ptrs.push_back(l->parent);
                } else if (const auto* n = std::get_if<NameDeviceBody>(&rec.body)) {
                    ptrs.push_back(n->parent);
                } else if (const auto* m = std::get_if<MergeBody>(&rec.body)) {
                    ptrs.push_back(m->local);
                    ptrs.push_back(m->remote);
                } else if (const auto* u = std::get_if<UnlinkBody>(&rec.body)) {
                    ptrs.push_back(u->target);
                } else if (const auto* r = std::get_if<RemoveNameBody>(&rec.body)) {
                    ptrs.push_back(r->target);
                } else if (const auto* s = std::get_if<StopMergeBody>(&rec.body)) {
                    ptrs.push_back(s->target);
                }
                for (const RecordPointer& p : ptrs)
                    if (scope.insert(p.author).second) grew = true;
            }
        }
    }
    return scope;
}

// One full anti-entropy exchange between two stores: summaries both ways,
// then records for whatever each side's scope is missing. Repeats until the
// pair is quiescent, since new records can widen a scope mid-exchange.
inline void gossip_round(RecordStore& a, RecordStore& b) {
    bool progress = true;
    while (progress) {
        progress = false;
        RecordStore* src = &a;
        RecordStore* dst = &b;
        for (int dir = 0; dir < 2; ++dir) {
            std::set<Eid> scope = replication_scope(*dst);
            StoreSummary summary = src->summarize();
            for (const auto& [author, len] : summary.entries) {
                if (!scope.count(author)) continue;
                uint64_t have = dst->log_len(author);
                if (len <= have) continue;
                std::vector<Record> batch;
                const DeviceLog* log = src->log_of(author);
                for (uint64_t s = have; s < len; ++s) batch.push_back(log->at(s));
                std::map<Eid, PublicKey> keys;
                if (const PublicKey* k = src->key_of(author)) keys[author] = *k;
                IngestReport rep = ingest(*dst, batch, keys);
                if (rep.any_accepted()) progress = true;
            }
            std::swap(src, dst);
        }
    }
}

}  // namespace uia
