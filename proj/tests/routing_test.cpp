#include <gtest/gtest.h>

#include <random>

#include "testutil.hpp"
#include "uia/uia.hpp"

using namespace uia;
using testutil::label;

namespace {

// A world where everyone meets on a public rendezvous network, links or
// merges there, and then scatters to their home networks.
struct SocialWorld {
    SimWorld world{1};
    explicit SocialWorld(uint64_t seed, SimConfig cfg = {}) : world(seed, cfg) {
        world.add_network("rendezvous", true);
    }

    void device(const std::string& alias, const std::string& name = "") {
        world.add_device(alias, name.empty() ? alias : name, "rendezvous");
    }

    void link(const std::string& a, const std::string& b) {
        world.act_link(a, b, b, a);
    }
};

}  // namespace

TEST(LocationTable, NewPeerSetsCurrentAndHistory) {
    LocationTable t;
    std::mt19937_64 rng(1);
    Eid peer = testutil::random_eid(rng);
    t.update(peer, Address{1, 7});
    EXPECT_EQ(t.current(peer), (Address{1, 7}));
    EXPECT_EQ(t.addresses_for(peer), (std::vector<Address>{{1, 7}}));
}

TEST(LocationTable, ChangePushesOldToHistory) {
    LocationTable t;
    std::mt19937_64 rng(2);
    Eid peer = testutil::random_eid(rng);
    t.update(peer, Address{1, 1});
    t.update(peer, Address{2, 1});
    EXPECT_EQ(t.current(peer), (Address{2, 1}));
    EXPECT_EQ(t.addresses_for(peer), (std::vector<Address>{{2, 1}, {1, 1}}));
    // Re-observing an old address moves it back to the front, no duplicates.
    t.update(peer, Address{1, 1});
    EXPECT_EQ(t.addresses_for(peer), (std::vector<Address>{{1, 1}, {2, 1}}));
}

TEST(LocationTable, HistoryBounded) {
    LocationTable t;
    std::mt19937_64 rng(3);
    Eid peer = testutil::random_eid(rng);
    for (uint32_t i = 0; i < 10; ++i) t.update(peer, Address{1, i});
    const auto& hist = t.addresses_for(peer);
    ASSERT_EQ(hist.size(), LocationTable::kHistoryBound);
    EXPECT_EQ(hist.front(), (Address{1, 9}));
    EXPECT_EQ(hist.back(), (Address{1, 2}));
}

TEST(SocialNeighbors, LoneDeviceHasNone) {
    Device d = init_device(testutil::identity(1), "solo");
    EXPECT_TRUE(social_neighbors(d.store).empty());
}

TEST(SocialNeighbors, ClusterPlusLinkedClusters) {
    // Bob's three devices plus Alice's two, linked via the cell.
    Device laptop = init_device(testutil::identity(2), "laptop");
    Device phone = init_device(testutil::identity(3), "phone");
    Device cell = init_device(testutil::identity(4), "cell");
    Device ipod = init_device(testutil::identity(5), "ipod");
    Device pc = init_device(testutil::identity(6), "pc");
    merge_devices(ipod, pc);
    merge_devices(laptop, phone);
    link_users(cell, label("Alice"), ipod, label("Bob"));
    merge_devices(cell, phone);
    gossip_round(laptop.store, phone.store);

    std::set<Eid> expect{phone.eid(), cell.eid(), ipod.eid(), pc.eid()};
    EXPECT_EQ(social_neighbors(laptop.store), expect);
}

TEST(SocialNeighbors, MatchesDistanceOneOracle) {
    // Random link graphs; neighbors must equal a one-hop BFS over the
    // cluster-or-linked relation computed straight from the records.
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Device> devices;
        for (int i = 0; i < 6; ++i)
            devices.push_back(init_device(testutil::identity(100 + trial * 10 + i),
                                          "d" + std::to_string(i)));
        for (int e = 0; e < 5; ++e) {
            size_t i = rng() % devices.size(), j = rng() % devices.size();
            if (i == j) continue;
            if (rng() % 2)
                merge_devices(devices[i], devices[j]);
            else
                link_users(devices[i], label("l" + std::to_string(e)), devices[j],
                           label("r" + std::to_string(e)));
        }
        for (int sweep = 0; sweep < 3; ++sweep)
            for (size_t i = 0; i + 1 < devices.size(); ++i)
                gossip_round(devices[i].store, devices[i + 1].store);

        for (Device& d : devices) {
            NamespaceViewResult view = build_view(d.store);
            const NamespaceClass* own = cluster_of(view, d.store, d.eid());
            ASSERT_NE(own, nullptr);
            std::set<Eid> oracle;
            for (const RecordPointer& m : own->members) oracle.insert(m.author);
            auto bindings = class_bindings(view, *own);
            for (const auto& [lbl, list] : bindings)
                for (const Binding& b : list)
                    if (const auto* rep = std::get_if<RecordPointer>(&b.target))
                        if (const NamespaceClass* cls = view.class_of_pointer(*rep))
                            for (const RecordPointer& m : cls->members) oracle.insert(m.author);
            oracle.erase(d.eid());
            EXPECT_EQ(social_neighbors(d.store), oracle) << "trial " << trial;
        }
    }
}

TEST(RingSearch, DirectNeighborFoundAtTtlOne) {
    SocialWorld sw(11);
    sw.device("a");
    sw.device("b");
    sw.link("a", "b");
    auto result = sw.world.ring_search(sw.world.eid_of_alias("a"), sw.world.eid_of_alias("b"));
    ASSERT_TRUE(result.has_value());
    EXPECT_EQ(result->hops(), 1u);
    EXPECT_EQ(result->path.front(), sw.world.eid_of_alias("a"));
    EXPECT_EQ(result->path.back(), sw.world.eid_of_alias("b"));
    EXPECT_EQ(result->address, sw.world.node("b").addr);
}

TEST(RingSearch, FindsMovedTargetThroughNeighborKnowledge) {
    SocialWorld sw(12);
    sw.device("a");
    sw.device("b");
    sw.device("c");
    sw.link("a", "b");
    sw.link("b", "c");
    sw.world.add_network("elsewhere", true);
    sw.world.migrate("c", "elsewhere");
    // One ping interval so c re-announces from its new address and b learns it.
    sw.world.run_ticks(sw.world.config().ping_interval + 8);

    auto result = sw.world.ring_search(sw.world.eid_of_alias("a"), sw.world.eid_of_alias("c"));
    ASSERT_TRUE(result.has_value());
    EXPECT_EQ(result->hops(), 2u);
    EXPECT_EQ(result->address, sw.world.node("c").addr);
    std::vector<Eid> expect{sw.world.eid_of_alias("a"), sw.world.eid_of_alias("b"),
                            sw.world.eid_of_alias("c")};
    EXPECT_EQ(result->path, expect);
}

TEST(RingSearch, UnknownTargetNotFound) {
    SocialWorld sw(13);
    sw.device("a");
    sw.device("b");
    sw.device("hermit");
    sw.link("a", "b");
    auto result = sw.world.ring_search(sw.world.eid_of_alias("a"),
                                       sw.world.eid_of_alias("hermit"), 3);
    EXPECT_FALSE(result.has_value());
}

TEST(RingSearch, NeverLeavesSocialGraph) {
    SocialWorld sw(14);
    sw.device("a");
    sw.device("b");
    sw.device("x");
    sw.device("y");
    sw.link("a", "b");
    sw.link("x", "y");  // disjoint social component on the same network
    sw.world.ring_search(sw.world.eid_of_alias("a"), sw.world.eid_of_alias("y"), 4);
    const std::string& trace = sw.world.trace();
    EXPECT_EQ(trace.find("|x|SEARCH"), std::string::npos);
    EXPECT_EQ(trace.find("|deliver|a|y|"), std::string::npos);
}

TEST(RingSearch, OfflineTargetNotFound) {
    SocialWorld sw(15);
    sw.device("a");
    sw.device("b");
    sw.link("a", "b");
    sw.world.add_network("island", true, false);  // no internet attachment
    sw.world.migrate("b", "island");
    auto result = sw.world.ring_search(sw.world.eid_of_alias("a"), sw.world.eid_of_alias("b"), 3);
    EXPECT_FALSE(result.has_value());
}

TEST(Channel, PublicTargetDialsDirect) {
    SocialWorld sw(16);
    sw.device("a");
    sw.device("b");
    sw.link("a", "b");
    auto result = sw.world.ring_search(sw.world.eid_of_alias("a"), sw.world.eid_of_alias("b"));
    ASSERT_TRUE(result.has_value());
    auto channel = sw.world.open_channel(sw.world.eid_of_alias("a"), *result);
    ASSERT_TRUE(channel.has_value());
    EXPECT_EQ(channel->mode, ChannelMode::Direct);
    EXPECT_TRUE(sw.world.channel_echo(*channel));
}

TEST(Channel, NattedTargetRelaysViaNextToLast) {
    SocialWorld sw(17);
    sw.device("origin");
    sw.device("relay");
    sw.device("target");
    sw.link("origin", "relay");
    sw.link("relay", "target");
    sw.world.add_network("nat-o", false);
    sw.world.add_network("nat-t", false);
    sw.world.migrate("origin", "nat-o");
    sw.world.migrate("target", "nat-t");
    // Let pings re-establish addresses and flows from the private sides.
    sw.world.run_ticks(2 * sw.world.config().ping_interval + 8);

    auto result = sw.world.ring_search(sw.world.eid_of_alias("origin"),
                                       sw.world.eid_of_alias("target"));
    ASSERT_TRUE(result.has_value());
    ASSERT_EQ(result->hops(), 2u);
    auto channel = sw.world.open_channel(sw.world.eid_of_alias("origin"), *result);
    ASSERT_TRUE(channel.has_value());
    EXPECT_EQ(channel->mode, ChannelMode::Relayed);
    EXPECT_EQ(channel->relay, sw.world.eid_of_alias("relay"));  // next-to-last hop
    EXPECT_TRUE(sw.world.channel_echo(*channel));
}

TEST(Channel, SearchPathLengthMatchesBfsOracle) {
    // Random social graphs on a public network: ring_search succeeds exactly
    // when BFS over the link graph reaches the target, with equal distance.
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 8; ++trial) {
        SocialWorld sw(100 + trial);
        const int n = 8;
        for (int i = 0; i < n; ++i) sw.device("d" + std::to_string(i));
        std::set<std::pair<int, int>> edges;
        for (int e = 0; e < 9; ++e) {
            int i = static_cast<int>(rng() % n), j = static_cast<int>(rng() % n);
            if (i == j) continue;
            auto key = std::minmax(i, j);
            if (!edges.insert(key).second) continue;
            sw.link("d" + std::to_string(key.first), "d" + std::to_string(key.second));
        }
        sw.world.run_ticks(sw.world.config().ping_interval + 4);

        // BFS oracle over the explicit edge set.
        auto bfs = [&](int from, int to) -> int {
            std::vector<int> dist(n, -1);
            std::deque<int> queue{from};
            dist[from] = 0;
            while (!queue.empty()) {
                int cur = queue.front();
                queue.pop_front();
                for (const auto& [x, y] : edges) {
                    int next = -1;
                    if (x == cur) next = y;
                    else if (y == cur) next = x;
                    if (next >= 0 && dist[next] < 0) {
                        dist[next] = dist[cur] + 1;
                        queue.push_back(next);
                    }
                }
            }
            return dist[to];
        };

        for (int from = 0; from < n; ++from) {
            for (int to = 0; to < n; ++to) {
                if (from == to) continue;
                int d = bfs(from, to);
                if (d < 0 || d > 4) continue;
                auto result = sw.world.ring_search(sw.world.eid_of_alias("d" + std::to_string(from)),
                                                   sw.world.eid_of_alias("d" + std::to_string(to)),
                                                   4);
                ASSERT_TRUE(result.has_value()) << "trial " << trial << " " << from << "->" << to;
                EXPECT_EQ(result->hops(), static_cast<size_t>(d))
                    << "trial " << trial << " " << from << "->" << to;
            }
        }
    }
}

TEST(Monitoring, PingBudgetPerSweepIsNeighborBound) {
    SocialWorld sw(19);
    sw.device("a");
    sw.device("b");
    sw.device("c");
    sw.link("a", "b");
    sw.link("a", "c");
    sw.world.run_ticks(sw.world.config().ping_interval + 2);
    for (const std::string alias : {"a", "b", "c"}) {
        const auto& node = sw.world.node(alias);
        size_t neighbors = social_neighbors(node.dev.store).size();
        EXPECT_LE(node.pings_sent_last_sweep, neighbors) << alias;
    }
    EXPECT_EQ(sw.world.node("a").pings_sent_last_sweep, 2u);
}
