#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "uia/actions.hpp"
#include "uia/routing.hpp"
#include "uia/wire.hpp"

namespace uia {

struct SimConfig {
    uint64_t lan_delay = 1;   // ticks per hop on one network
    uint64_t wan_delay = 3;   // ticks per hop across networks
    double loss_rate = 0.0;   // applied per message send
    uint64_t ping_interval = 16;
    uint64_t dedup_ttl = 64;  // ticks a (origin, nonce) stays in the dedup cache
    int max_ttl = 6;
    bool monitoring = true;    // periodic LOC_PING to immediate neighbors
    bool gossip_policy = false;  // one random-peer SUMMARY per device per tick
};

class SimError : public std::runtime_error {
public:
    explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic discrete-event world: devices on virtual networks, a NAT
// model (private networks accept inbound only on established flows), message
// scheduling with fixed delays, and optional loss. Identical seed and
// scenario give an identical event trace.
class SimWorld {
public:
    struct Network {
        std::string name;
        bool is_public = true;
        bool internet = true;
        int partition_group = 0;
        uint32_t next_host = 1;
    };

    struct Node {
        Device dev;
        std::string alias;
        Address addr;
        LocationTable locations;
        uint64_t next_nonce = 0;
        // routing state
        std::map<std::pair<Eid, uint64_t>, Address> query_upstream;
        std::map<std::pair<Eid, uint64_t>, uint64_t> query_expiry;
        std::map<std::pair<Eid, uint64_t>, std::optional<SearchResult>> searches;
        std::map<std::pair<Eid, Eid>, std::map<Eid, Address>> relay_sessions;
        std::map<std::pair<Eid, Eid>, bool> relay_answers;  // (relay, target) -> accepted
        std::set<Address> dial_ok_from;
        std::set<std::string> echo_replies;
        std::vector<std::string> inbox;
        uint64_t pings_sent_last_sweep = 0;
    };

    explicit SimWorld(uint64_t seed, SimConfig cfg = {})
        : seed_(seed), cfg_(cfg), rng_(seed) {}

    // --- topology -----------------------------------------------------------

    uint32_t add_network(const std::string& name, bool is_public, bool internet = true) {
        if (net_ids_.count(name)) throw SimError("duplicate network: " + name);
        uint32_t id = static_cast<uint32_t>(networks_.size());
        networks_.push_back(Network{name, is_public, internet, 0, 1});
        net_ids_[name] = id;
        trace_line("net", name, "-", is_public ? "public" : "private");
        return id;
    }

    const Eid& add_device(const std::string& alias, const std::string& default_name,
                          const std::string& network) {
        if (alias_ids_.count(alias)) throw SimError("duplicate device: " + alias);
        uint32_t net = net_id(network);
        DeviceIdentity identity = generate_identity(seed_ * 1000003 + nodes_.size() + 1);
        Node node;
        node.dev = init_device(identity, default_name);
        node.alias = alias;
        node.addr = Address{net, networks_[net].next_host++};
        Eid eid = identity.eid;
        alias_ids_[alias] = eid;
        aliases_[eid] = alias;
        addr_index_[node.addr] = eid;
        order_.push_back(eid);
        nodes_.emplace(eid, std::move(node));
        trace_line("init", alias, network, "name=" + Label::normalize(default_name));
        return order_.back();
    }

    // --- lookups ------------------------------------------------------------

    uint32_t net_id(const std::string& name) const {
        auto it = net_ids_.find(name);
        if (it == net_ids_.end()) throw SimError("unknown network: " + name);
        return it->second;
    }

    const Eid& eid_of_alias(const std::string& alias) const {
        auto it = alias_ids_.find(alias);
        if (it == alias_ids_.end()) throw SimError("unknown device: " + alias);
        return it->second;
    }

    bool has_alias(const std::string& alias) const { return alias_ids_.count(alias) > 0; }

    Node& node(const Eid& eid) { return nodes_.at(eid); }
    const Node& node(const Eid& eid) const { return nodes_.at(eid); }
    Node& node(const std::string& alias) { return nodes_.at(eid_of_alias(alias)); }
    const Node& node(const std::string& alias) const { return nodes_.at(eid_of_alias(alias)); }

    const std::vector<Eid>& device_order() const { return order_; }
    uint64_t clock() const { return clock_; }
    const std::string& trace() const { return trace_; }
    const SimConfig& config() const { return cfg_; }
    std::mt19937_64& rng() { return rng_; }

    std::string alias_of(const Eid& eid) const {
        auto it = aliases_.find(eid);
        return it == aliases_.end() ? eid.short_hex() : it->second;
    }

    NamespaceViewResult view_of(const std::string& alias) const {
        return node(alias).dev.view();
    }

    // --- reachability -------------------------------------------------------

    bool can_deliver(const Address& src, const Address& dst) const {
        if (src.network == dst.network) return true;
        const Network& s = networks_.at(src.network);
        const Network& d = networks_.at(dst.network);
        if (!s.internet || !d.internet) return false;
        if (s.partition_group != d.partition_group) return false;
        if (d.is_public) return true;
        return flows_.count({dst, src}) > 0;  // inbound only on an established flow
    }

    bool pair_connectable(const Eid& a, const Eid& b) const {
        const Address& pa = nodes_.at(a).addr;
        const Address& pb = nodes_.at(b).addr;
        return can_deliver(pa, pb) || can_deliver(pb, pa);
    }

    // --- world mutation -----------------------------------------------------

    void migrate(const std::string& alias, const std::string& network) {
        Node& n = node(alias);
        uint32_t net = net_id(network);
        if (net == n.addr.network) {
            trace_line("migrate", alias, network, "no-op");
            return;
        }
        addr_index_.erase(n.addr);
        n.addr = Address{net, networks_[net].next_host++};
        addr_index_[n.addr] = nodes_.at(eid_of_alias(alias)).dev.eid();
        trace_line("migrate", alias, network, "addr=" + n.addr.str());
    }

    void partition(const std::vector<std::string>& side) {
        for (Network& n : networks_) n.partition_group = 0;
        std::string detail;
        for (const std::string& name : side) {
            networks_[net_id(name)].partition_group = 1;
            detail += (detail.empty() ? "" : ",") + name;
        }
        trace_line("partition", "-", "-", detail);
    }

    void heal() {
        for (Network& n : networks_) n.partition_group = 0;
        trace_line("heal", "-", "-", "");
    }

    // --- event queue --------------------------------------------------------

    void send_message(const Eid& src, const Address& dst, const Message& msg) {
        Node& s = nodes_.at(src);
        flows_.insert({s.addr, dst});  // outbound mapping, even if the packet dies
        if (cfg_.loss_rate > 0.0) {
            std::uniform_real_distribution<double> dist(0.0, 1.0);
            if (dist(rng_) < cfg_.loss_rate) {
                trace_line("loss", s.alias, dst.str(), message_name(msg));
                return;
            }
        }
        uint64_t delay = (s.addr.network == dst.network) ? cfg_.lan_delay : cfg_.wan_delay;
        trace_line("send", s.alias, dst.str(), message_name(msg));
        queue_.emplace(std::make_pair(clock_ + delay, event_counter_++),
                       Envelope{src, s.addr, dst, encode_message(msg)});
    }

    // Executes one tick: housekeeping sweeps, then every event due now, in
    // insertion order.
    void run_one_tick() {
        ++clock_;
        if (cfg_.monitoring && cfg_.ping_interval > 0 && clock_ % cfg_.ping_interval == 0)
            ping_sweep();
        if (cfg_.gossip_policy) gossip_policy_sweep();
        while (!queue_.empty() && queue_.begin()->first.first <= clock_) {
            Envelope env = std::move(queue_.begin()->second);
            queue_.erase(queue_.begin());
            deliver(env);
        }
    }

    void run_ticks(uint64_t n) {
        for (uint64_t i = 0; i < n; ++i) run_one_tick();
    }

    void run_until_idle(uint64_t max_ticks = 100000) {
        uint64_t end = clock_ + max_ticks;
        while (!queue_.empty() && clock_ < end) run_one_tick();
    }

    // --- device actions (scenario verbs) -------------------------------------

    void act_merge(const std::string& a, const std::string& b) {
        Node& na = node(a);
        Node& nb = node(b);
        if (na.addr.network != nb.addr.network)
            throw SimError("merge requires a shared local network");
        introduce(na, nb);
        merge_devices(na.dev, nb.dev);
        trace_line("action", a, b, "merge");
    }

    void act_merge_initiate(const std::string& a, const std::string& b) {
        Node& na = node(a);
        Node& nb = node(b);
        if (na.addr.network != nb.addr.network)
            throw SimError("merge requires a shared local network");
        introduce(na, nb);
        std::map<Eid, PublicKey> keys{{nb.dev.eid(), nb.dev.identity.public_key}};
        // Share just the peer's log so the pointer is meaningful; the
        // counterpart record never gets written (interrupted exchange).
        ingest(na.dev.store, all_records(nb.dev.store, nb.dev.eid()), keys);
        merge_initiate(na.dev, nb.dev.root);
        trace_line("action", a, b, "merge-initiate");
    }

    void act_merge_complete(const std::string& a, const std::string& b) {
        if (!pair_connectable(eid_of_alias(a), eid_of_alias(b)))
            throw SimError("merge-complete requires connectivity");
        merge_complete(node(a).dev, node(b).dev);
        trace_line("action", a, b, "merge-complete");
    }

    void act_merge_cancel(const std::string& a) {
        Node& na = node(a);
        if (na.dev.pending_merges.empty()) throw SimError("no pending merge to cancel");
        merge_cancel(na.dev, *na.dev.pending_merges.begin());
        trace_line("action", a, "-", "merge-cancel");
    }

    void act_link(const std::string& a, const std::string& name_for_b, const std::string& b,
                  const std::string& name_for_a) {
        Node& na = node(a);
        Node& nb = node(b);
        if (na.addr.network != nb.addr.network)
            throw SimError("link requires a shared local network");
        introduce(na, nb);
        link_users(na.dev, name_for_b, nb.dev, name_for_a);
        trace_line("action", a, b, "link " + name_for_b + "/" + name_for_a);
    }

    void act_name(const std::string& device, const std::string& label,
                  const std::string& target) {
        Node& n = node(device);
        auto l = Label::parse(label);
        if (!l) throw SimError("invalid label: " + label);
        name_device(n.dev, n.dev.root, *l, eid_of_alias(target));
        trace_line("action", device, target, "name " + label);
    }

    void act_rename(const std::string& issuer, const std::string& target,
                    const std::string& old_label, const std::string& new_label) {
        Node& n = node(issuer);
        auto nl = Label::parse(new_label);
        if (!nl) throw SimError("invalid label: " + new_label);
        RecordPointer source = find_name_binding(n, old_label, eid_of_alias(target));
        rename_binding(n.dev, source, *nl);
        trace_line("action", issuer, target, "rename " + old_label + "->" + new_label);
    }

    void act_remove_name(const std::string& issuer, const std::string& target,
                         const std::string& label) {
        Node& n = node(issuer);
        RecordPointer source = find_name_binding(n, label, eid_of_alias(target));
        remove_binding(n.dev, source);
        trace_line("action", issuer, target, "remove-name " + label);
    }

    void act_unlink(const std::string& issuer, const std::string& label) {
        Node& n = node(issuer);
        NamespaceViewResult v = n.dev.view();
        const NamespaceClass* own = cluster_of(v, n.dev.store, n.dev.eid());
        if (!own) throw SimError("device has no root class");
        const std::vector<Binding>* list = v.find_bindings(own->representative,
                                                           Label::normalize(label));
        if (!list || list->empty()) throw SimError("no active link named " + label);
        std::optional<RecordPointer> source;
        for (const Binding& b : *list)
            if (!target_is_device(b.target)) {
                if (source) throw SimError("ambiguous link name: " + label);
                source = b.source;
            }
        if (!source) throw SimError("no active link named " + label);
        remove_binding(n.dev, *source);
        trace_line("action", issuer, "-", "unlink " + label);
    }

    void act_revoke(const std::string& issuer, const std::string& target) {
        Node& n = node(issuer);
        const Eid& victim = eid_of_alias(target);
        const DeviceLog* log = n.dev.store.log_of(victim);
        if (!log || log->empty()) throw SimError("no records known for " + target);
        revoke_device(n.dev, victim, pointer_of(log->records().back()));
        trace_line("action", issuer, target, "revoke cut=" + std::to_string(log->size() - 1));
    }

    void act_group(const std::vector<std::string>& aliases, const std::string& label,
                   std::vector<std::pair<size_t, size_t>> tree = {}) {
        auto l = Label::parse(label);
        if (!l) throw SimError("invalid label: " + label);
        std::vector<Device*> devices;
        std::string detail = label + ":";
        for (const std::string& a : aliases) {
            devices.push_back(&node(a).dev);
            detail += " " + a;
        }
        if (tree.empty())
            for (size_t i = 0; i + 1 < aliases.size(); ++i) tree.push_back({i, i + 1});
        for (auto [i, j] : tree) {
            Node& ni = node(aliases.at(i));
            Node& nj = node(aliases.at(j));
            if (ni.addr.network != nj.addr.network)
                throw SimError("group merge edge requires a shared local network");
            introduce(ni, nj);
        }
        create_group(devices, *l, tree);
        trace_line("action", aliases.empty() ? "-" : aliases.front(), "-", "group" + detail);
    }

    void act_group_name(const std::string& device, const std::string& group_label,
                        const std::string& label, const std::string& target) {
        Node& n = node(device);
        auto l = Label::parse(label);
        if (!l) throw SimError("invalid label: " + label);
        std::string norm = Label::normalize(group_label);
        std::optional<RecordPointer> parent;
        for (const Record& rec : n.dev.store.own_log().records())
            if (const auto* link = std::get_if<LinkBody>(&rec.body))
                if (link->name.normalized() == norm && link->child.author == n.dev.eid())
                    parent = link->child;
        if (!parent) throw SimError("device has no own group namespace named " + group_label);
        name_device(n.dev, *parent, *l, eid_of_alias(target));
        trace_line("action", device, target, "group-name " + group_label + "/" + label);
    }

    // --- synchronous anti-entropy (scenario `gossip` step) -------------------

    bool gossip_pair(const std::string& a, const std::string& b) {
        Node& na = node(a);
        Node& nb = node(b);
        if (!pair_connectable(na.dev.eid(), nb.dev.eid())) return false;
        uint64_t before = total_records(na) + total_records(nb);
        sync_devices(na.dev, nb.dev);
        register_connection(na, nb);
        uint64_t after = total_records(na) + total_records(nb);
        if (after != before)
            trace_line("gossip", a, b, "moved=" + std::to_string(after - before));
        return after != before;
    }

    // Repeated pairwise exchanges between related, connectable devices until
    // nothing moves. Deterministic: pairs visit in registration order.
    void gossip_all() {
        for (int sweep = 0; sweep < 64; ++sweep) {
            bool changed = false;
            std::map<Eid, std::set<Eid>> peers;
            for (const Eid& e : order_) peers[e] = social_neighbors(nodes_.at(e).dev.store);
            for (size_t i = 0; i < order_.size(); ++i) {
                for (size_t j = i + 1; j < order_.size(); ++j) {
                    const Eid& a = order_[i];
                    const Eid& b = order_[j];
                    if (!peers[a].count(b) && !peers[b].count(a)) continue;
                    if (!pair_connectable(a, b)) continue;
                    if (gossip_pair(nodes_.at(a).alias, nodes_.at(b).alias)) {
                        changed = true;
                        peers[a] = social_neighbors(nodes_.at(a).dev.store);
                        peers[b] = social_neighbors(nodes_.at(b).dev.store);
                    }
                }
            }
            if (!changed) break;
        }
    }

    // --- expanding-ring search ------------------------------------------------

    // TTL 1, 2, ... max_ttl floods over social neighbors, current addresses
    // first and older ones as fallback; the first respondent that is the
    // target answers along the reverse path.
    std::optional<SearchResult> ring_search(const Eid& origin, const Eid& target,
                                            int max_ttl = 0) {
        if (max_ttl <= 0) max_ttl = cfg_.max_ttl;
        Node& o = nodes_.at(origin);
        if (origin == target) return SearchResult{target, {origin}, o.addr};
        for (int ttl = 1; ttl <= max_ttl; ++ttl) {
            uint64_t nonce = o.next_nonce++;
            std::pair<Eid, uint64_t> qid{origin, nonce};
            o.searches[qid] = std::nullopt;
            o.query_upstream[qid] = o.addr;
            o.query_expiry[qid] = clock_ + cfg_.dedup_ttl;
            trace_line("search", o.alias, alias_of(target), "ttl=" + std::to_string(ttl));
            SearchMsg msg{origin, nonce, target, static_cast<uint32_t>(ttl), {origin}};
            flood(o, msg, std::nullopt);
            uint64_t deadline = clock_ + ring_timeout(ttl);
            while (clock_ < deadline) {
                run_one_tick();
                auto it = nodes_.at(origin).searches.find(qid);
                if (it != nodes_.at(origin).searches.end() && it->second) {
                    SearchResult result = *it->second;
                    trace_line("found", nodes_.at(origin).alias, alias_of(target),
                               "hops=" + std::to_string(result.hops()));
                    return result;
                }
            }
        }
        trace_line("search", nodes_.at(origin).alias, alias_of(target), "not-found");
        return std::nullopt;
    }

    // --- channels --------------------------------------------------------------

    // Direct dial first; if the target cannot accept inbound connections,
    // fall back to relaying via the next-to-last search-path node, then
    // earlier path nodes in reverse order.
    std::optional<Channel> open_channel(const Eid& origin, const SearchResult& result) {
        Node& o = nodes_.at(origin);
        if (try_dial(o, result.address))
            return Channel{{origin, result.target}, ChannelMode::Direct, Eid{}, result.address};
        if (result.path.size() >= 2) {
            for (size_t idx = result.path.size() - 2; idx >= 1; --idx) {
                const Eid& relay = result.path[idx];
                std::optional<Address> addr = nodes_.at(origin).locations.current(relay);
                if (!addr) {
                    auto found = ring_search(origin, relay);
                    if (found) {
                        addr = found->address;
                        nodes_.at(origin).locations.update(relay, *addr);
                    }
                }
                if (addr && try_relay_open(origin, relay, *addr, result.target)) {
                    trace_line("channel", nodes_.at(origin).alias, alias_of(result.target),
                               "relayed via " + alias_of(relay));
                    return Channel{{origin, result.target}, ChannelMode::Relayed, relay, *addr};
                }
                if (idx == 1) break;
            }
        }
        trace_line("channel", nodes_.at(origin).alias, alias_of(result.target), "failed");
        return std::nullopt;
    }

    // End-to-end probe: sends a unique payload over the channel and waits for
    // the target's reply to come back the same way.
    bool channel_echo(const Channel& channel) {
        Node& o = nodes_.at(channel.endpoints.first);
        std::string payload = "echo-" + std::to_string(echo_counter_++);
        if (channel.mode == ChannelMode::Direct) {
            send_message(channel.endpoints.first, channel.peer_address,
                         EchoRequestMsg{payload});
        } else {
            Bytes inner = encode_message(EchoRequestMsg{payload});
            send_message(channel.endpoints.first, channel.peer_address,
                         RelayDataMsg{channel.endpoints.first, channel.endpoints.second, inner});
        }
        uint64_t deadline = clock_ + 8 * cfg_.wan_delay + 4;
        while (clock_ < deadline) {
            run_one_tick();
            if (o.echo_replies.count(payload)) return true;
        }
        return false;
    }

    // --- assorted helpers -------------------------------------------------------

    ResolutionResult resolve_on(const std::string& alias, const std::string& name) const {
        return resolve_from(node(alias).dev, name);
    }

    size_t conflict_count(const std::string& alias) const {
        return node(alias).dev.view().conflicts.size();
    }

    bool same_cluster(const std::vector<std::string>& aliases) const {
        if (aliases.size() < 2) return true;
        const Node& first = node(aliases.front());
        NamespaceViewResult v = first.dev.view();
        const NamespaceClass* c0 = cluster_of(v, first.dev.store, first.dev.eid());
        if (!c0) return false;
        for (size_t i = 1; i < aliases.size(); ++i) {
            const NamespaceClass* ci =
                cluster_of(v, first.dev.store, node(aliases[i]).dev.eid());
            if (!ci || !(*ci == *c0)) return false;
        }
        return true;
    }

    uint64_t ring_timeout(int ttl) const { return 4 * cfg_.wan_delay * ttl + 4; }

    void trace_line(const std::string& event, const std::string& src, const std::string& dst,
                    const std::string& detail) {
        trace_ += std::to_string(clock_) + "|" + event + "|" + src + "|" + dst + "|" + detail +
                  "\n";
    }

private:
    struct Envelope {
        Eid src_eid;
        Address src_addr;
        Address dst_addr;
        Bytes bytes;
    };

    struct MsgContext {
        Eid src_eid;
        Address src_addr;
        std::optional<Address> relay_addr;  // set when the payload came via a relay
    };

    static std::vector<Record> all_records(const RecordStore& store, const Eid& author) {
        std::vector<Record> out;
        if (const DeviceLog* log = store.log_of(author))
            out = log->records();
        return out;
    }

    static uint64_t total_records(const Node& n) {
        uint64_t sum = 0;
        for (const auto& [author, log] : n.dev.store.logs()) sum += log.size();
        return sum;
    }

    // A local introduction: both sides learn each other's key, address, and
    // the connection counts as an established flow in both directions.
    void introduce(Node& a, Node& b) {
        a.dev.store.learn_key(b.dev.eid(), b.dev.identity.public_key);
        b.dev.store.learn_key(a.dev.eid(), a.dev.identity.public_key);
        register_connection(a, b);
    }

    void register_connection(Node& a, Node& b) {
        a.locations.update(b.dev.eid(), b.addr);
        b.locations.update(a.dev.eid(), a.addr);
        flows_.insert({a.addr, b.addr});
        flows_.insert({b.addr, a.addr});
    }

    RecordPointer find_name_binding(Node& n, const std::string& label, const Eid& target) {
        NamespaceViewResult v = n.dev.view();
        const NamespaceClass* own = cluster_of(v, n.dev.store, n.dev.eid());
        if (!own) throw SimError("device has no root class");
        const std::vector<Binding>* list =
            v.find_bindings(own->representative, Label::normalize(label));
        if (list)
            for (const Binding& b : *list)
                if (const Eid* e = std::get_if<Eid>(&b.target); e && *e == target)
                    return b.source;
        throw SimError("no active name-device binding " + label + " for that target");
    }

    void ping_sweep() {
        for (const Eid& eid : order_) {
            Node& n = nodes_.at(eid);
            n.pings_sent_last_sweep = 0;
            for (const Eid& peer : social_neighbors(n.dev.store)) {
                if (auto addr = n.locations.current(peer)) {
                    send_message(eid, *addr, LocPingMsg{n.addr});
                    ++n.pings_sent_last_sweep;
                }
            }
        }
    }

    void gossip_policy_sweep() {
        for (const Eid& eid : order_) {
            Node& n = nodes_.at(eid);
            std::vector<Eid> peers;
            for (const Eid& peer : social_neighbors(n.dev.store))
                if (n.locations.current(peer)) peers.push_back(peer);
            if (peers.empty()) continue;
            const Eid& pick = peers[rng_() % peers.size()];
            SummaryMsg summary{n.dev.store.summarize().entries};
            send_message(eid, *n.locations.current(pick), summary);
        }
    }

    void flood(Node& from, const SearchMsg& msg, const std::optional<Eid>& skip) {
        for (const Eid& peer : social_neighbors(from.dev.store)) {
            if (skip && peer == *skip) continue;
            bool on_path = false;
            for (const Eid& p : msg.path)
                if (p == peer) on_path = true;
            if (on_path) continue;
            for (const Address& addr : from.locations.addresses_for(peer))
                send_message(from.dev.eid(), addr, msg);
        }
    }

    bool try_dial(Node& o, const Address& target_addr) {
        o.dial_ok_from.erase(target_addr);
        send_message(o.dev.eid(), target_addr, DialMsg{});
        uint64_t deadline = clock_ + 4 * cfg_.wan_delay + 2;
        const Eid origin = o.dev.eid();
        while (clock_ < deadline) {
            run_one_tick();
            if (nodes_.at(origin).dial_ok_from.count(target_addr)) return true;
        }
        return false;
    }

    bool try_relay_open(const Eid& origin, const Eid& relay, const Address& relay_addr,
                        const Eid& target) {
        nodes_.at(origin).relay_answers.erase({relay, target});
        send_message(origin, relay_addr, RelayOpenMsg{target});
        uint64_t deadline = clock_ + 4 * cfg_.wan_delay + 2;
        while (clock_ < deadline) {
            run_one_tick();
            auto it = nodes_.at(origin).relay_answers.find({relay, target});
            if (it != nodes_.at(origin).relay_answers.end()) return it->second;
        }
        return false;
    }

    void deliver(const Envelope& env) {
        auto at = addr_index_.find(env.dst_addr);
        std::string src_alias = alias_of(env.src_eid);
        if (at == addr_index_.end()) {
            trace_line("drop", src_alias, env.dst_addr.str(), "no-host");
            return;
        }
        if (!can_deliver(env.src_addr, env.dst_addr)) {
            trace_line("drop", src_alias, env.dst_addr.str(), "unreachable");
            return;
        }
        Node& self = nodes_.at(at->second);
        Message msg;
        try {
            msg = decode_message(env.bytes);
        } catch (const DecodeError&) {
            trace_line("drop", src_alias, self.alias, "undecodable");
            return;
        }
        trace_line("deliver", src_alias, self.alias, message_name(msg));
        handle(self, MsgContext{env.src_eid, env.src_addr, std::nullopt}, msg);
    }

    void handle(Node& self, const MsgContext& ctx, const Message& msg) {
        std::visit([&](const auto& m) { handle_one(self, ctx, m); }, msg);
    }

    void handle_one(Node& self, const MsgContext& ctx, const SummaryMsg& m) {
        std::set<Eid> scope = replication_scope(self.dev.store);
        for (const auto& [author, len] : m.entries) {
            if (!scope.count(author)) continue;
            uint64_t have = self.dev.store.log_len(author);
            if (len > have)
                send_message(self.dev.eid(), ctx.src_addr, RequestMsg{author, have});
        }
    }

    void handle_one(Node& self, const MsgContext& ctx, const RequestMsg& m) {
        if (self.dev.store.log_len(m.author) > m.from_seq)
            send_message(self.dev.eid(), ctx.src_addr,
                         records_message(self.dev.store, m.author, m.from_seq));
    }

    void handle_one(Node& self, const MsgContext& ctx, const RecordsMsg& m) {
        ingest(self.dev.store, records_from_message(m), m.keys);
        self.dev.refresh_pending();
        self.locations.update(ctx.src_eid, ctx.src_addr);
    }

    void handle_one(Node& self, const MsgContext& ctx, const SearchMsg& m) {
        std::pair<Eid, uint64_t> qid{m.origin, m.nonce};
        auto expiry = self.query_expiry.find(qid);
        if (expiry != self.query_expiry.end() && expiry->second >= clock_) return;
        self.query_upstream[qid] = ctx.src_addr;
        self.query_expiry[qid] = clock_ + cfg_.dedup_ttl;
        SearchMsg fwd = m;
        fwd.path.push_back(self.dev.eid());
        if (self.dev.eid() == m.target) {
            send_message(self.dev.eid(), ctx.src_addr,
                         FoundMsg{m.origin, m.nonce, fwd.path, self.addr});
            return;
        }
        if (m.ttl > 1) {
            fwd.ttl = m.ttl - 1;
            flood(self, fwd, ctx.src_eid);
        }
    }

    void handle_one(Node& self, const MsgContext& ctx, const FoundMsg& m) {
        std::pair<Eid, uint64_t> qid{m.origin, m.nonce};
        if (self.dev.eid() == m.origin) {
            auto it = self.searches.find(qid);
            if (it == self.searches.end() || it->second) return;  // stale or already answered
            if (m.path.empty()) return;
            it->second = SearchResult{m.path.back(), m.path, m.address};
            self.locations.update(m.path.back(), m.address);
            return;
        }
        auto up = self.query_upstream.find(qid);
        if (up == self.query_upstream.end()) return;
        send_message(self.dev.eid(), up->second, m);
    }

    void handle_one(Node& self, const MsgContext& ctx, const RelayOpenMsg& m) {
        std::optional<Address> target_addr = self.locations.current(m.target);
        bool ok = target_addr && can_deliver(self.addr, *target_addr);
        if (ok) {
            auto key = session_key(ctx.src_eid, m.target);
            self.relay_sessions[key][ctx.src_eid] = ctx.src_addr;
            self.relay_sessions[key][m.target] = *target_addr;
        }
        send_message(self.dev.eid(), ctx.src_addr, RelayOkMsg{m.target, ok});
    }

    void handle_one(Node& self, const MsgContext& ctx, const RelayOkMsg& m) {
        self.relay_answers[{ctx.src_eid, m.target}] = m.accepted;
    }

    void handle_one(Node& self, const MsgContext& ctx, const RelayDataMsg& m) {
        if (m.dst == self.dev.eid()) {
            try {
                Message inner = decode_message(m.payload);
                MsgContext relayed{m.src, ctx.src_addr, ctx.src_addr};
                handle(self, relayed, inner);
            } catch (const DecodeError&) {
            }
            return;
        }
        auto key = session_key(m.src, m.dst);
        auto it = self.relay_sessions.find(key);
        if (it == self.relay_sessions.end()) return;
        auto addr = it->second.find(m.dst);
        if (addr == it->second.end()) return;
        send_message(self.dev.eid(), addr->second, m);
    }

    void handle_one(Node& self, const MsgContext& ctx, const LocPingMsg& m) {
        self.locations.update(ctx.src_eid, m.address);
        send_message(self.dev.eid(), ctx.src_addr, LocPongMsg{self.addr});
    }

    void handle_one(Node& self, const MsgContext& ctx, const LocPongMsg& m) {
        self.locations.update(ctx.src_eid, m.address);
    }

    void handle_one(Node& self, const MsgContext& ctx, const DialMsg&) {
        send_message(self.dev.eid(), ctx.src_addr, DialOkMsg{});
    }

    void handle_one(Node& self, const MsgContext& ctx, const DialOkMsg&) {
        self.dial_ok_from.insert(ctx.src_addr);
    }

    void handle_one(Node& self, const MsgContext& ctx, const EchoRequestMsg& m) {
        self.inbox.push_back(m.payload);
        if (ctx.relay_addr) {
            Bytes inner = encode_message(EchoReplyMsg{m.payload});
            send_message(self.dev.eid(), *ctx.relay_addr,
                         RelayDataMsg{self.dev.eid(), ctx.src_eid, inner});
        } else {
            send_message(self.dev.eid(), ctx.src_addr, EchoReplyMsg{m.payload});
        }
    }

    void handle_one(Node& self, const MsgContext&, const EchoReplyMsg& m) {
        self.echo_replies.insert(m.payload);
    }

    static std::pair<Eid, Eid> session_key(const Eid& a, const Eid& b) {
        return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    }

    uint64_t seed_;
    SimConfig cfg_;
    std::mt19937_64 rng_;
    uint64_t clock_ = 0;
    uint64_t event_counter_ = 0;
    uint64_t echo_counter_ = 0;
    std::vector<Network> networks_;
    std::map<std::string, uint32_t> net_ids_;
    std::map<Eid, Node> nodes_;
    std::map<std::string, Eid> alias_ids_;
    std::map<Eid, std::string> aliases_;
    std::map<Address, Eid> addr_index_;
    std::vector<Eid> order_;
    std::set<std::pair<Address, Address>> flows_;
    std::map<std::pair<uint64_t, uint64_t>, Envelope> queue_;
    std::string trace_;
};

}  // namespace uia
