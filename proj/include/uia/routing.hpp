#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "uia/store.hpp"
#include "uia/view.hpp"

namespace uia {

// Simulated network address.
struct Address {
    uint32_t network = 0;
    uint32_t host = 0;

    auto operator<=>(const Address&) const = default;
    std::string str() const {
        return "n" + std::to_string(network) + ":" + std::to_string(host);
    }
};

// Last known addresses of introduced peers. Every address ever observed is
// retained (newest first) up to the bound, since a moved peer may return to
// an old address.
class LocationTable {
public:
    static constexpr size_t kHistoryBound = 8;

    void update(const Eid& peer, const Address& addr) {
        auto& hist = history_[peer];
        hist.erase(std::remove(hist.begin(), hist.end(), addr), hist.end());
        hist.insert(hist.begin(), addr);
        if (hist.size() > kHistoryBound) hist.resize(kHistoryBound);
    }

    std::optional<Address> current(const Eid& peer) const {
        auto it = history_.find(peer);
        if (it == history_.end() || it->second.empty()) return std::nullopt;
        return it->second.front();
    }

    // Current address first, then older ones.
    const std::vector<Address>& addresses_for(const Eid& peer) const {
        static const std::vector<Address> empty;
        auto it = history_.find(peer);
        return it == history_.end() ? empty : it->second;
    }

    const std::map<Eid, std::vector<Address>>& entries() const { return history_; }

private:
    std::map<Eid, std::vector<Address>> history_;
};

inline void update_location(LocationTable& table, const Eid& peer, const Address& addr) {
    table.update(peer, addr);
}

// Immediate social neighborhood: the owner's cluster plus the clusters its
// root namespace actively links to. The owner itself is excluded.
inline std::set<Eid> social_neighbors(const RecordStore& store) {
    NamespaceViewResult view = build_view(store);
    std::set<Eid> out;
    const NamespaceClass* own = cluster_of(view, store, store.owner());
    if (!own) return out;
    for (const RecordPointer& m : own->members) out.insert(m.author);
    auto bi = view.bindings.find(own->representative);
    if (bi != view.bindings.end()) {
        for (const auto& [label, list] : bi->second) {
            for (const Binding& b : list) {
                const RecordPointer* rep = std::get_if<RecordPointer>(&b.target);
                if (!rep) continue;
                if (const NamespaceClass* cls = view.class_of_pointer(*rep))
                    for (const RecordPointer& m : cls->members) out.insert(m.author);
            }
        }
    }
    out.erase(store.owner());
    return out;
}

struct SearchResult {
    Eid target;
    std::vector<Eid> path;  // origin first, target last
    Address address;

    size_t hops() const { return path.empty() ? 0 : path.size() - 1; }
};

enum class ChannelMode { Direct, Relayed };

struct Channel {
    std::pair<Eid, Eid> endpoints;
    ChannelMode mode = ChannelMode::Direct;
    Eid relay;  // meaningful for Relayed: normally the next-to-last path node
    Address peer_address;
};

}  // namespace uia
