#include <gtest/gtest.h>

#include "testutil.hpp"
#include "uia/uia.hpp"

using namespace uia;

TEST(SimNet, LanDeliveryTakesOneTick) {
    SimWorld w(1);
    w.add_network("lan", true);
    w.add_device("a", "a", "lan");
    w.add_device("b", "b", "lan");
    w.send_message(w.eid_of_alias("a"), w.node("b").addr, EchoRequestMsg{"hi"});
    EXPECT_TRUE(w.node("b").inbox.empty());
    w.run_one_tick();
    ASSERT_EQ(w.node("b").inbox.size(), 1u);
    EXPECT_EQ(w.node("b").inbox[0], "hi");
}

TEST(SimNet, CrossNetworkDeliveryTakesWanDelay) {
    SimWorld w(2);
    w.add_network("one", true);
    w.add_network("two", true);
    w.add_device("a", "a", "one");
    w.add_device("b", "b", "two");
    w.send_message(w.eid_of_alias("a"), w.node("b").addr, EchoRequestMsg{"hi"});
    w.run_ticks(2);
    EXPECT_TRUE(w.node("b").inbox.empty());
    w.run_one_tick();
    ASSERT_EQ(w.node("b").inbox.size(), 1u);
}

TEST(SimNet, UnsolicitedInboundToPrivateDropped) {
    SimWorld w(3);
    w.add_network("pub", true);
    w.add_network("nat", false);
    w.add_device("outside", "outside", "pub");
    w.add_device("inside", "inside", "nat");
    w.send_message(w.eid_of_alias("outside"), w.node("inside").addr, EchoRequestMsg{"knock"});
    w.run_ticks(4);
    EXPECT_TRUE(w.node("inside").inbox.empty());
    EXPECT_NE(w.trace().find("drop|outside"), std::string::npos);

    // The private side can reach out, which opens the return path.
    w.send_message(w.eid_of_alias("inside"), w.node("outside").addr, EchoRequestMsg{"hello"});
    w.run_ticks(4);
    ASSERT_EQ(w.node("outside").inbox.size(), 1u);
    w.send_message(w.eid_of_alias("outside"), w.node("inside").addr, EchoRequestMsg{"reply"});
    w.run_ticks(4);
    ASSERT_EQ(w.node("inside").inbox.size(), 1u);
}

TEST(SimNet, MigrationLosesInFlightMessages) {
    SimWorld w(4);
    w.add_network("one", true);
    w.add_network("two", true);
    w.add_device("a", "a", "one");
    w.add_device("b", "b", "two");
    w.send_message(w.eid_of_alias("a"), w.node("b").addr, EchoRequestMsg{"late"});
    w.migrate("b", "one");  // address changes while the message is in flight
    w.run_ticks(4);
    EXPECT_TRUE(w.node("b").inbox.empty());
    EXPECT_NE(w.trace().find("no-host"), std::string::npos);
}

TEST(SimNet, MigrateToSameNetworkIsNoOp) {
    SimWorld w(5);
    w.add_network("one", true);
    w.add_device("a", "a", "one");
    Address before = w.node("a").addr;
    w.migrate("a", "one");
    EXPECT_EQ(w.node("a").addr, before);
}

TEST(SimNet, RemoteAccessAfterMigration) {
    // Laptop merges with the phone at home, travels, and still reaches it.
    SimWorld w(6);
    w.add_network("home", true);
    w.add_network("cafe", true);
    w.add_device("laptop", "laptop", "home");
    w.add_device("phone", "phone", "home");
    w.act_merge("laptop", "phone");
    w.migrate("laptop", "cafe");
    w.run_ticks(w.config().ping_interval + 4);

    EXPECT_TRUE(resolved_to_device(w.resolve_on("laptop", "phone"),
                                   w.eid_of_alias("phone")));
    auto result = w.ring_search(w.eid_of_alias("laptop"), w.eid_of_alias("phone"));
    ASSERT_TRUE(result.has_value());
    auto channel = w.open_channel(w.eid_of_alias("laptop"), *result);
    ASSERT_TRUE(channel.has_value());
    EXPECT_TRUE(w.channel_echo(*channel));
}

TEST(SimNet, DisconnectedNetworkKeepsLocalOperation) {
    SimWorld w(7);
    w.add_network("home", true);
    w.add_network("plane", true, false);  // ad hoc, no internet
    w.add_device("laptop", "laptop", "home");
    w.add_device("phone", "phone", "home");
    w.add_device("seatmate", "seatmate", "plane");
    w.act_merge("laptop", "phone");
    w.migrate("laptop", "plane");

    // Local (replicated) resolution is untouched.
    EXPECT_TRUE(resolved_to_device(w.resolve_on("laptop", "phone"),
                                   w.eid_of_alias("phone")));
    // But the phone is unreachable from the plane.
    auto result = w.ring_search(w.eid_of_alias("laptop"), w.eid_of_alias("phone"), 3);
    EXPECT_FALSE(result.has_value());
    // Same-network introduction still works.
    w.act_link("laptop", "seatmate", "seatmate", "laptop-guy");
    EXPECT_TRUE(resolved_to_device(w.resolve_on("laptop", "seatmate.seatmate"),
                                   w.eid_of_alias("seatmate")));
}

TEST(SimNet, PartitionedRenamesConflictOnHeal) {
    SimWorld w(8);
    w.add_network("home", true);
    w.add_network("cafe", true);
    w.add_device("laptop", "laptop", "home");
    w.add_device("phone", "phone", "home");
    w.act_merge("laptop", "phone");
    w.migrate("laptop", "cafe");
    w.partition({"cafe"});

    // Disconnected: both sides claim the label "main" for different devices.
    w.act_rename("laptop", "laptop", "laptop", "main");
    w.act_rename("phone", "phone", "phone", "main");
    w.gossip_all();  // no-op across the partition
    EXPECT_EQ(w.conflict_count("laptop"), 0u);
    EXPECT_EQ(w.conflict_count("phone"), 0u);

    w.heal();
    w.gossip_all();
    EXPECT_EQ(w.conflict_count("laptop"), 1u);
    EXPECT_EQ(w.conflict_count("phone"), 1u);

    // Resolvable from either side: rename one claimant away.
    w.act_rename("phone", "phone", "main", "homephone");
    w.gossip_all();
    EXPECT_EQ(w.conflict_count("laptop"), 0u);
    EXPECT_EQ(w.conflict_count("phone"), 0u);
    EXPECT_TRUE(resolved_to_device(w.resolve_on("laptop", "main"),
                                   w.eid_of_alias("laptop")));
    EXPECT_TRUE(resolved_to_device(w.resolve_on("laptop", "homephone"),
                                   w.eid_of_alias("phone")));
}

TEST(SimNet, PartitionHealWithoutActionsChangesNothing) {
    SimWorld w(9);
    w.add_network("home", true);
    w.add_network("away", true);
    w.add_device("a", "a", "home");
    w.add_device("b", "b", "home");
    w.act_merge("a", "b");
    w.migrate("a", "away");
    std::string before_a = dump_view(w.view_of("a"));
    std::string before_b = dump_view(w.view_of("b"));
    w.partition({"away"});
    w.heal();
    w.gossip_all();
    EXPECT_EQ(dump_view(w.view_of("a")), before_a);
    EXPECT_EQ(dump_view(w.view_of("b")), before_b);
}

TEST(SimNet, IdenticalSeedsGiveIdenticalTraces) {
    auto run = [] {
        SimWorld w(42);
        w.add_network("home", true);
        w.add_network("nat", false);
        w.add_device("a", "a", "home");
        w.add_device("b", "b", "home");
        w.add_device("c", "c", "home");
        w.act_merge("a", "b");
        w.act_link("b", "c", "c", "b");
        w.migrate("c", "nat");
        w.gossip_all();
        w.run_ticks(40);
        w.ring_search(w.eid_of_alias("a"), w.eid_of_alias("c"));
        return w.trace();
    };
    std::string one = run();
    std::string two = run();
    EXPECT_EQ(one, two);
    EXPECT_GT(one.size(), 100u);
}

TEST(SimNet, LossySoakStillConverges) {
    SimConfig cfg;
    cfg.loss_rate = 0.2;
    cfg.gossip_policy = true;
    cfg.ping_interval = 8;
    SimWorld w(10, cfg);
    w.add_network("home", true);
    w.add_network("away", true);
    w.add_device("a", "a", "home");
    w.add_device("b", "b", "home");
    w.act_merge("a", "b");
    w.migrate("b", "away");
    // Fresh records written after the split, delivered only by lossy gossip.
    for (int i = 0; i < 5; ++i)
        w.act_name("a", "x" + std::to_string(i), "a");
    w.run_ticks(10000);
    EXPECT_EQ(w.node("b").dev.store.log_len(w.eid_of_alias("a")),
              w.node("a").dev.store.log_len(w.eid_of_alias("a")));
    EXPECT_TRUE(resolved_to_device(w.resolve_on("b", "x4"), w.eid_of_alias("a")));
}

TEST(SimNet, TraceFormatIsPipeDelimited) {
    SimWorld w(11);
    w.add_network("lan", true);
    w.add_device("a", "a", "lan");
    w.add_device("b", "b", "lan");
    w.act_merge("a", "b");
    for (const std::string& line : {std::string("init|a|lan|"), std::string("action|a|b|merge")})
        EXPECT_NE(w.trace().find(line), std::string::npos) << line;
}
