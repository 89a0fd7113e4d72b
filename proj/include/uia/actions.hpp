#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "uia/replication.hpp"
#include "uia/resolver.hpp"

namespace uia {

class ActionError : public std::runtime_error {
public:
    explicit ActionError(const std::string& what) : std::runtime_error(what) {}
};

// A device: its identity, its record store, its designated root namespace
// (the seq-0 create-namespace record), and merge bookkeeping. Canceled
// merges are suppressed locally and never gossiped.
struct Device {
    DeviceIdentity identity;
    RecordStore store;
    RecordPointer root;
    std::set<RecordPointer> pending_merges;
    std::set<RecordPointer> suppressed_merges;

    const Eid& eid() const { return identity.eid; }

    NamespaceViewResult view() const { return build_view(store, suppressed_merges); }

    const Record& append(RecordBody body) {
        return store.own_log().append(identity, std::move(body));
    }

    // Own merge records that still lack a counterpart, recomputed from the
    // store so that completion via gossip clears them.
    void refresh_pending() {
        NamespaceViewResult v = view();
        std::set<RecordPointer> pending;
        for (const Conflict& c : v.conflicts)
            if (const auto* u = std::get_if<UnpairedMergeConflict>(&c))
                if (u->record.author == eid() && !suppressed_merges.count(u->record))
                    pending.insert(u->record);
        pending_merges = std::move(pending);
    }
};

inline ResolutionResult resolve_from(const Device& d, std::string_view name) {
    NamespaceViewResult v = d.view();
    const NamespaceClass* root = v.class_of_pointer(d.root);
    if (!root) return ResolveError{ResolveErrorKind::NotFound, "<no root>", {}};
    return resolve(v, *root, name);
}

// Bootstrap: create-namespace at seq 0, then the self name-device record.
inline Device init_device(DeviceIdentity identity, const Label& default_name) {
    Device d;
    d.identity = identity;
    d.store = RecordStore(identity.eid, identity.public_key);
    const Record& root = d.append(CreateNamespaceBody{});
    d.root = pointer_of(root);
    d.append(NameDeviceBody{d.root, identity.eid, default_name});
    return d;
}

inline Device init_device(DeviceIdentity identity, std::string_view default_name) {
    auto label = Label::parse(default_name);
    if (!label) throw ActionError("init_device: invalid label");
    return init_device(std::move(identity), *label);
}

// Exchange everything both sides care about; models a local introduction or
// an established gossip connection.
inline void sync_devices(Device& a, Device& b) {
    gossip_round(a.store, b.store);
    a.refresh_pending();
    b.refresh_pending();
}

// Writes one half of a merge pair; the counterpart must come from the peer.
inline const Record& merge_initiate(Device& a, const RecordPointer& remote_root,
                                    const std::map<Eid, PublicKey>& remote_keys = {}) {
    if (remote_root == a.root) throw ActionError("merge: cannot merge a namespace with itself");
    const Record& rec = a.append(MergeBody{a.root, remote_root});
    ingest(a.store, {}, remote_keys);
    a.pending_merges.insert(pointer_of(rec));
    return rec;
}

// Both devices write, sign, and exchange corresponding merge records. A
// repeat merge of an already-joined cluster is a no-op.
inline void merge_devices(Device& a, Device& b) {
    {
        NamespaceViewResult va = a.view();
        const NamespaceClass* ca = va.class_of_pointer(a.root);
        if (ca && va.class_of_pointer(b.root) == ca) return;
    }
    a.append(MergeBody{a.root, b.root});
    b.append(MergeBody{b.root, a.root});
    sync_devices(a, b);
}

// Completes a previously interrupted merge: the peer writes its counterpart
// and the two stores exchange records.
inline void merge_complete(Device& initiator, Device& peer) {
    bool wrote = false;
    for (const RecordPointer& ptr : initiator.pending_merges) {
        const Record* rec = initiator.store.find_record(ptr);
        if (!rec) continue;
        const auto& m = std::get<MergeBody>(rec->body);
        if (m.remote == peer.root) {
            peer.append(MergeBody{m.remote, m.local});
            wrote = true;
        }
    }
    if (!wrote) throw ActionError("merge_complete: no pending merge toward this peer");
    sync_devices(initiator, peer);
}

// Cancel is local-only: the record stays in the log but this device ignores
// it when building its own view.
inline void merge_cancel(Device& d, const RecordPointer& merge_record) {
    const Record* rec = d.store.find_record(merge_record);
    if (!rec || !std::holds_alternative<MergeBody>(rec->body))
        throw ActionError("merge_cancel: pointer is not a merge record of this device");
    d.suppressed_merges.insert(merge_record);
    d.pending_merges.erase(merge_record);
}

// Mutual social links: each side names the other's root in its own class.
// A clashing label is allowed and simply surfaces as a name conflict.
inline void link_users(Device& a, const Label& name_for_b, Device& b, const Label& name_for_a) {
    a.append(LinkBody{a.root, b.root, name_for_b});
    b.append(LinkBody{b.root, a.root, name_for_a});
    sync_devices(a, b);
}

inline void link_users(Device& a, std::string_view name_for_b, Device& b,
                       std::string_view name_for_a) {
    auto la = Label::parse(name_for_b);
    auto lb = Label::parse(name_for_a);
    if (!la || !lb) throw ActionError("link_users: invalid label");
    link_users(a, *la, b, *lb);
}

// One-way link record, no reciprocation required (unlike merges).
inline const Record& link_oneway(Device& a, const RecordPointer& remote_root,
                                 const Label& name) {
    return a.append(LinkBody{a.root, remote_root, name});
}

inline const Record& name_device(Device& d, const RecordPointer& parent, const Label& name,
                                 const Eid& target) {
    const Record* parent_rec = d.store.find_record(parent);
    if (!parent_rec || !std::holds_alternative<CreateNamespaceBody>(parent_rec->body))
        throw ActionError("name_device: parent must be a known create-namespace record");
    return d.append(NameDeviceBody{parent, target, name});
}

// New name-device record followed by a remove-name tombstone for the old
// one. Any cluster device may issue this, not only the named device.
inline std::pair<RecordPointer, RecordPointer> rename_binding(Device& d,
                                                              const RecordPointer& old_binding,
                                                              const Label& new_label) {
    const Record* old_rec = d.store.find_record(old_binding);
    if (!old_rec) throw ActionError("rename_binding: unknown record pointer");
    const auto* n = std::get_if<NameDeviceBody>(&old_rec->body);
    if (!n) throw ActionError("rename_binding: pointer is not a name-device record");
    const Record& fresh = d.append(NameDeviceBody{n->parent, n->device_eid, new_label});
    RecordPointer fresh_ptr = pointer_of(fresh);
    const Record& tomb = d.append(RemoveNameBody{old_binding});
    return {fresh_ptr, pointer_of(tomb)};
}

// Remove-name for a name-device target, unlink for a link target. The
// original record is kept; it just stops counting.
inline RecordPointer remove_binding(Device& d, const RecordPointer& target) {
    const Record* rec = d.store.find_record(target);
    if (!rec) throw ActionError("remove_binding: unknown record pointer");
    if (std::holds_alternative<NameDeviceBody>(rec->body))
        return pointer_of(d.append(RemoveNameBody{target}));
    if (std::holds_alternative<LinkBody>(rec->body))
        return pointer_of(d.append(UnlinkBody{target}));
    throw ActionError("remove_binding: pointer is neither a name-device nor a link record");
}

struct RevocationRecords {
    RecordPointer stop_merge;
    std::vector<RecordPointer> removed_names;
};

// Stop-merge at the last trusted entry of the target's log, plus remove-name
// tombstones for the target's active cluster names. Records at or before the
// cut stay effective everywhere.
inline RevocationRecords revoke_device(Device& d, const Eid& target,
                                       const RecordPointer& last_good) {
    if (last_good.author != target)
        throw ActionError("revoke_device: last_good must be authored by the target");
    NamespaceViewResult v = d.view();
    const NamespaceClass* own = cluster_of(v, d.store, d.eid());
    const NamespaceClass* theirs = cluster_of(v, d.store, target);
    if (!own || !theirs || !(*own == *theirs))
        throw ActionError("revoke_device: target is not in this device's cluster");

    RevocationRecords out;
    const Record& stop =
        d.append(StopMergeBody{last_good, last_good.seq, last_good.hash});
    out.stop_merge = pointer_of(stop);

    auto bi = v.bindings.find(own->representative);
    if (bi != v.bindings.end()) {
        std::vector<RecordPointer> sources;
        for (const auto& [label, list] : bi->second)
            for (const Binding& b : list)
                if (const Eid* e = std::get_if<Eid>(&b.target); e && *e == target)
                    sources.push_back(b.source);
        std::sort(sources.begin(), sources.end());
        for (const RecordPointer& src : sources)
            out.removed_names.push_back(pointer_of(d.append(RemoveNameBody{src})));
    }
    return out;
}

// Shared group namespace: every member creates a fresh namespace, links it
// under the group label, and the fresh namespaces are merged pairwise along
// the given spanning tree (defaults to a chain).
inline std::vector<RecordPointer> create_group(std::vector<Device*> devices, const Label& label,
                                               std::vector<std::pair<size_t, size_t>> tree = {}) {
    if (devices.empty()) return {};
    if (tree.empty())
        for (size_t i = 0; i + 1 < devices.size(); ++i) tree.push_back({i, i + 1});
    std::vector<RecordPointer> namespaces;
    for (Device* d : devices) {
        const Record& ns = d->append(CreateNamespaceBody{});
        RecordPointer ptr = pointer_of(ns);
        d->append(LinkBody{d->root, ptr, label});
        namespaces.push_back(ptr);
    }
    for (auto [i, j] : tree) {
        devices.at(i)->append(MergeBody{namespaces.at(i), namespaces.at(j)});
        devices.at(j)->append(MergeBody{namespaces.at(j), namespaces.at(i)});
    }
    for (auto [i, j] : tree) sync_devices(*devices.at(i), *devices.at(j));
    return namespaces;
}

}  // namespace uia
