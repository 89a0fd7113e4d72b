#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "uia/store.hpp"

namespace uia {

// Equivalence class of create-namespace records joined by valid merge pairs.
// The representative is the lexicographically least member pointer.
struct NamespaceClass {
    RecordPointer representative;
    std::vector<RecordPointer> members;  // sorted

    bool operator==(const NamespaceClass&) const = default;
};

// A binding target is either a device EID or a namespace class, identified
// by the class representative.
using BindingTarget = std::variant<Eid, RecordPointer>;

inline bool target_is_device(const BindingTarget& t) { return std::holds_alternative<Eid>(t); }

inline std::string target_str(const BindingTarget& t) {
    if (const Eid* e = std::get_if<Eid>(&t)) return "device(" + e->short_hex() + ")";
    return "namespace(" + std::get<RecordPointer>(t).str() + ")";
}

struct Binding {
    std::string label;  // original spelling
    RecordPointer source;
    BindingTarget target;

    bool operator==(const Binding&) const = default;
};

struct NameConflict {
    RecordPointer class_rep;
    std::string label;  // normalized
    std::vector<BindingTarget> targets;  // sorted, distinct

    bool operator==(const NameConflict&) const = default;
};

struct UnpairedMergeConflict {
    RecordPointer record;

    bool operator==(const UnpairedMergeConflict&) const = default;
};

struct ForkConflict {
    Eid author;
    uint64_t seq = 0;

    bool operator==(const ForkConflict&) const = default;
};

using Conflict = std::variant<NameConflict, UnpairedMergeConflict, ForkConflict>;

inline std::string conflict_str(const Conflict& c) {
    if (const auto* n = std::get_if<NameConflict>(&c)) {
        std::string s = "name-conflict class=" + n->class_rep.str() + " label=" + n->label +
                        " targets=[";
        for (size_t i = 0; i < n->targets.size(); ++i)
            s += (i ? "," : "") + target_str(n->targets[i]);
        return s + "]";
    }
    if (const auto* u = std::get_if<UnpairedMergeConflict>(&c))
        return "unpaired-merge record=" + u->record.str();
    const auto& f = std::get<ForkConflict>(c);
    return "fork author=" + f.author.short_hex() + " seq=" + std::to_string(f.seq);
}

// Derived namespace state: a pure function of the store's record set (plus
// the device-local suppression set for canceled merges).
struct NamespaceViewResult {
    std::vector<NamespaceClass> classes;                 // sorted by representative
    std::map<RecordPointer, size_t> class_index;         // member pointer -> classes index
    std::map<RecordPointer, std::map<std::string, std::vector<Binding>>> bindings;
        // class representative -> normalized label -> active bindings
    std::vector<Conflict> conflicts;
    std::map<Eid, int64_t> cuts;  // max visible seq, inclusive; -1 hides everything
    std::vector<std::string> anomalies;

    const NamespaceClass* class_of_pointer(const RecordPointer& ptr) const {
        auto it = class_index.find(ptr);
        return it == class_index.end() ? nullptr : &classes[it->second];
    }

    bool visible(const Eid& author, uint64_t seq) const {
        auto it = cuts.find(author);
        return it == cuts.end() || static_cast<int64_t>(seq) <= it->second;
    }

    const std::vector<Binding>* find_bindings(const RecordPointer& class_rep,
                                              const std::string& normalized_label) const {
        auto ci = bindings.find(class_rep);
        if (ci == bindings.end()) return nullptr;
        auto li = ci->second.find(normalized_label);
        return li == ci->second.end() ? nullptr : &li->second;
    }

    bool operator==(const NamespaceViewResult& o) const {
        return classes == o.classes && bindings == o.bindings && conflicts == o.conflicts &&
               cuts == o.cuts;
    }
};

namespace detail {

class PointerUnionFind {
public:
    void add(const RecordPointer& p) {
        if (!index_.count(p)) {
            index_[p] = parent_.size();
            parent_.push_back(parent_.size());
        }
    }

    bool contains(const RecordPointer& p) const { return index_.count(p) > 0; }

    void unite(const RecordPointer& a, const RecordPointer& b) {
        if (!contains(a) || !contains(b)) return;
        size_t ra = find(index_.at(a)), rb = find(index_.at(b));
        if (ra != rb) parent_[ra] = rb;
    }

    bool same(const RecordPointer& a, const RecordPointer& b) const {
        if (!contains(a) || !contains(b)) return false;
        return find(index_.at(a)) == find(index_.at(b));
    }

    // Groups of member pointers, each sorted; groups sorted by least member.
    std::vector<std::vector<RecordPointer>> groups() const {
        std::map<size_t, std::vector<RecordPointer>> by_root;
        for (const auto& [ptr, idx] : index_) by_root[find(idx)].push_back(ptr);
        std::vector<std::vector<RecordPointer>> out;
        for (auto& [root, members] : by_root) {
            std::sort(members.begin(), members.end());
            out.push_back(std::move(members));
        }
        std::sort(out.begin(), out.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
        return out;
    }

private:
    size_t find(size_t i) const {
        while (parent_[i] != i) i = parent_[i];
        return i;
    }

    std::map<RecordPointer, size_t> index_;
    mutable std::vector<size_t> parent_;
};

struct ViewBuildContext {
    const RecordStore& store;
    const std::set<RecordPointer>& suppressed;
    std::map<Eid, int64_t> cuts;

    bool visible(const Record& rec) const {
        auto it = cuts.find(rec.author);
        if (it != cuts.end() && static_cast<int64_t>(rec.seq) > it->second) return false;
        return !suppressed.count(pointer_of(rec));
    }

    // The record a pointer names, but only if present and visible.
    const Record* visible_record(const RecordPointer& ptr) const {
        const Record* rec = store.find_record(ptr);
        if (!rec || !visible(*rec)) return nullptr;
        return rec;
    }

    // A device's designated root: its own seq-0 create-namespace record.
    std::optional<RecordPointer> root_of(const Eid& device) const {
        const Record* rec = store.record_at(device, 0);
        if (!rec || !std::holds_alternative<CreateNamespaceBody>(rec->body)) return std::nullopt;
        if (!visible(*rec)) return std::nullopt;
        return pointer_of(*rec);
    }

    // Union-find over visible create-namespace records, joined by visible
    // merge PAIRS: records m1/m2 with m1.local == m2.remote and vice versa.
    PointerUnionFind build_classes() const {
        PointerUnionFind uf;
        for (const auto& [author, log] : store.logs())
            for (const Record& rec : log.records())
                if (std::holds_alternative<CreateNamespaceBody>(rec.body) && visible(rec))
                    uf.add(pointer_of(rec));
        std::set<std::pair<RecordPointer, RecordPointer>> endpoints;  // visible merges
        for (const auto& [author, log] : store.logs())
            for (const Record& rec : log.records())
                if (const auto* m = std::get_if<MergeBody>(&rec.body);
                    m && visible(rec) && !(m->local == m->remote))
                    endpoints.insert({m->local, m->remote});
        for (const auto& [local, remote] : endpoints)
            if (endpoints.count({remote, local}))  // paired
                uf.unite(local, remote);
        return uf;
    }
};

}  // namespace detail

// Computes revocation cuts as a bounded fixpoint: a stop-merge contributes
// only while it is itself visible and its author shares a root class with
// the revoked device. Forks always contribute. Returned map holds the
// maximum visible sequence number per cut author.
inline std::map<Eid, int64_t> compute_cuts(const RecordStore& store,
                                           const std::set<RecordPointer>& suppressed = {},
                                           std::vector<std::string>* anomalies = nullptr) {
    std::map<Eid, int64_t> fork_cuts;
    for (const auto& [author, seq] : store.fork_marks())
        fork_cuts[author] = static_cast<int64_t>(seq) - 1;

    size_t stop_count = 0;
    for (const auto& [author, log] : store.logs())
        for (const Record& rec : log.records())
            if (std::holds_alternative<StopMergeBody>(rec.body)) ++stop_count;

    detail::ViewBuildContext ctx{store, suppressed, fork_cuts};
    std::vector<std::string> notes;
    for (size_t round = 0; round <= stop_count + 1; ++round) {
        notes.clear();
        detail::PointerUnionFind uf = ctx.build_classes();
        std::map<Eid, int64_t> next = fork_cuts;
        for (const auto& [author, log] : store.logs()) {
            for (const Record& rec : log.records()) {
                const auto* s = std::get_if<StopMergeBody>(&rec.body);
                if (!s || !ctx.visible(rec)) continue;
                if (s->target.seq != s->stop_seq || !(s->target.hash == s->stop_hash)) {
                    notes.push_back("malformed-stop-merge " + pointer_of(rec).str());
                    continue;
                }
                const Eid& revokee = s->target.author;
                if (const Record* at = store.record_at(revokee, s->stop_seq);
                    at && !(at->hash == s->stop_hash)) {
                    notes.push_back("malformed-stop-merge " + pointer_of(rec).str());
                    continue;
                }
                auto author_root = ctx.root_of(rec.author);
                auto revokee_root = ctx.root_of(revokee);
                if (!author_root || !revokee_root || !uf.same(*author_root, *revokee_root)) {
                    notes.push_back("unauthorized-stop-merge " + pointer_of(rec).str());
                    continue;
                }
                int64_t cut = static_cast<int64_t>(s->stop_seq);
                auto it = next.find(revokee);
                if (it == next.end() || cut < it->second) next[revokee] = cut;
            }
        }
        if (next == ctx.cuts) break;
        ctx.cuts = std::move(next);
    }
    if (anomalies) anomalies->insert(anomalies->end(), notes.begin(), notes.end());
    return ctx.cuts;
}

// Pure derivation of the logical namespace from a record store: merged
// classes, active bindings, tombstones, revocation cuts, and conflicts.
inline NamespaceViewResult build_view(const RecordStore& store,
                                      const std::set<RecordPointer>& suppressed = {}) {
    NamespaceViewResult view;
    view.cuts = compute_cuts(store, suppressed, &view.anomalies);

    detail::ViewBuildContext ctx{store, suppressed, view.cuts};
    detail::PointerUnionFind uf = ctx.build_classes();

    for (auto& members : uf.groups()) {
        NamespaceClass cls;
        cls.representative = members.front();
        cls.members = std::move(members);
        view.classes.push_back(std::move(cls));
    }
    for (size_t i = 0; i < view.classes.size(); ++i)
        for (const RecordPointer& m : view.classes[i].members) view.class_index[m] = i;

    // Tombstone targets, by kind.
    std::set<RecordPointer> removed_names;
    std::set<RecordPointer> unlinked;
    for (const auto& [author, log] : store.logs()) {
        for (const Record& rec : log.records()) {
            if (!ctx.visible(rec)) continue;
            if (const auto* r = std::get_if<RemoveNameBody>(&rec.body))
                removed_names.insert(r->target);
            else if (const auto* u = std::get_if<UnlinkBody>(&rec.body))
                unlinked.insert(u->target);
        }
    }

    auto class_rep_of = [&](const RecordPointer& ptr) -> std::optional<RecordPointer> {
        auto it = view.class_index.find(ptr);
        if (it == view.class_index.end()) return std::nullopt;
        return view.classes[it->second].representative;
    };

    // Bindings: a link or name-device record binds in the whole class of its
    // parent namespace. A link needs its child namespace present to bind.
    for (const auto& [author, log] : store.logs()) {
        for (const Record& rec : log.records()) {
            if (!ctx.visible(rec)) continue;
            RecordPointer self = pointer_of(rec);
            if (const auto* l = std::get_if<LinkBody>(&rec.body)) {
                if (unlinked.count(self)) continue;
                const Record* parent = ctx.visible_record(l->parent);
                const Record* child = ctx.visible_record(l->child);
                if (!parent || !std::holds_alternative<CreateNamespaceBody>(parent->body))
                    continue;
                if (!child || !std::holds_alternative<CreateNamespaceBody>(child->body)) continue;
                auto parent_rep = class_rep_of(l->parent);
                auto child_rep = class_rep_of(l->child);
                if (!parent_rep || !child_rep) continue;
                view.bindings[*parent_rep][l->name.normalized()].push_back(
                    Binding{l->name.text(), self, BindingTarget{*child_rep}});
            } else if (const auto* n = std::get_if<NameDeviceBody>(&rec.body)) {
                if (removed_names.count(self)) continue;
                const Record* parent = ctx.visible_record(n->parent);
                if (!parent || !std::holds_alternative<CreateNamespaceBody>(parent->body))
                    continue;
                auto parent_rep = class_rep_of(n->parent);
                if (!parent_rep) continue;
                view.bindings[*parent_rep][n->name.normalized()].push_back(
                    Binding{n->name.text(), self, BindingTarget{n->device_eid}});
            }
        }
    }
    for (auto& [rep, by_label] : view.bindings)
        for (auto& [label, list] : by_label)
            std::sort(list.begin(), list.end(),
                      [](const Binding& a, const Binding& b) { return a.source < b.source; });

    // Name conflicts: >= 2 active bindings with one label but distinct targets.
    std::vector<NameConflict> name_conflicts;
    for (const auto& [rep, by_label] : view.bindings) {
        for (const auto& [label, list] : by_label) {
            std::set<BindingTarget> targets;
            for (const Binding& b : list) targets.insert(b.target);
            if (targets.size() >= 2)
                name_conflicts.push_back(
                    NameConflict{rep, label, {targets.begin(), targets.end()}});
        }
    }

    // Unpaired merges: visible merge records lacking a visible counterpart.
    std::vector<UnpairedMergeConflict> unpaired;
    {
        std::set<std::pair<RecordPointer, RecordPointer>> endpoints;
        std::vector<const Record*> merges;
        for (const auto& [author, log] : store.logs()) {
            for (const Record& rec : log.records()) {
                const auto* m = std::get_if<MergeBody>(&rec.body);
                if (!m || !ctx.visible(rec) || m->local == m->remote) continue;
                endpoints.insert({m->local, m->remote});
                merges.push_back(&rec);
            }
        }
        for (const Record* rec : merges) {
            const auto& m = std::get<MergeBody>(rec->body);
            if (!endpoints.count({m.remote, m.local}))
                unpaired.push_back(UnpairedMergeConflict{pointer_of(*rec)});
        }
        std::sort(unpaired.begin(), unpaired.end(),
                  [](const auto& a, const auto& b) { return a.record < b.record; });
    }

    std::sort(name_conflicts.begin(), name_conflicts.end(), [](const auto& a, const auto& b) {
        return std::tie(a.class_rep, a.label) < std::tie(b.class_rep, b.label);
    });
    for (auto& c : name_conflicts) view.conflicts.push_back(std::move(c));
    for (auto& c : unpaired) view.conflicts.push_back(std::move(c));
    for (const auto& [author, seq] : store.fork_marks())
        view.conflicts.push_back(ForkConflict{author, seq});

    std::sort(view.anomalies.begin(), view.anomalies.end());
    view.anomalies.erase(std::unique(view.anomalies.begin(), view.anomalies.end()),
                         view.anomalies.end());
    return view;
}

// The class containing the device's root namespace, or null when the device
// (or its root record) is unknown or hidden.
inline const NamespaceClass* cluster_of(const NamespaceViewResult& view, const RecordStore& store,
                                        const Eid& device) {
    const Record* rec = store.record_at(device, 0);
    if (!rec || !std::holds_alternative<CreateNamespaceBody>(rec->body)) return nullptr;
    return view.class_of_pointer(pointer_of(*rec));
}

inline const std::vector<Conflict>& list_conflicts(const NamespaceViewResult& view) {
    return view.conflicts;
}

// Active bindings of one class, label -> bindings.
inline std::map<std::string, std::vector<Binding>> class_bindings(const NamespaceViewResult& view,
                                                                  const NamespaceClass& cls) {
    auto it = view.bindings.find(cls.representative);
    if (it == view.bindings.end()) return {};
    return it->second;
}

// Deterministic text rendering used by the CLI and golden-file tests.
inline std::string dump_view(const NamespaceViewResult& view) {
    std::ostringstream out;
    for (const NamespaceClass& cls : view.classes) {
        out << "class " << cls.representative.str() << "\n";
        for (const RecordPointer& m : cls.members) out << "  member " << m.str() << "\n";
        auto bi = view.bindings.find(cls.representative);
        if (bi != view.bindings.end()) {
            for (const auto& [label, list] : bi->second)
                for (const Binding& b : list)
                    out << "  binding " << label << " -> " << target_str(b.target) << " via "
                        << b.source.str() << "\n";
        }
    }
    for (const Conflict& c : view.conflicts) out << "conflict " << conflict_str(c) << "\n";
    for (const auto& [author, cut] : view.cuts)
        out << "cut " << author.short_hex() << " <= " << cut << "\n";
    for (const std::string& a : view.anomalies) out << "anomaly " << a << "\n";
    return out.str();
}

}  // namespace uia
