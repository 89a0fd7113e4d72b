#include <gtest/gtest.h>

#include <random>

#include "testutil.hpp"
#include "uia/uia.hpp"

using namespace uia;
using testutil::key_of;
using testutil::label;
using testutil::log_records;

namespace {

Device fresh(uint64_t seed, const std::string& name) {
    return init_device(testutil::identity(seed), name);
}

bool view_has_unpaired(const Device& d) {
    for (const Conflict& c : d.view().conflicts)
        if (std::holds_alternative<UnpairedMergeConflict>(c)) return true;
    return false;
}

}  // namespace

TEST(Init, BootstrapsRootAndSelfName) {
    Device d = fresh(1, "phone");
    ASSERT_EQ(d.store.own_log().size(), 2u);
    EXPECT_TRUE(std::holds_alternative<CreateNamespaceBody>(d.store.own_log().at(0).body));
    EXPECT_TRUE(std::holds_alternative<NameDeviceBody>(d.store.own_log().at(1).body));
    EXPECT_EQ(d.root.seq, 0u);
    EXPECT_TRUE(resolved_to_device(resolve_from(d, "phone"), d.eid()));
}

TEST(Init, InvalidLabelRefused) {
    EXPECT_THROW(init_device(testutil::identity(2), "not a label"), ActionError);
}

TEST(Init, SameDefaultNamesNoConflictWhileDisjoint) {
    Device a = fresh(3, "phone");
    Device b = fresh(4, "phone");
    EXPECT_TRUE(a.view().conflicts.empty());
    EXPECT_TRUE(b.view().conflicts.empty());
}

TEST(Merge, RepeatMergeIsNoOp) {
    Device a = fresh(5, "laptop");
    Device b = fresh(6, "phone");
    merge_devices(a, b);
    size_t len_a = a.store.own_log().size();
    size_t len_b = b.store.own_log().size();
    merge_devices(a, b);
    EXPECT_EQ(a.store.own_log().size(), len_a);
    EXPECT_EQ(b.store.own_log().size(), len_b);
}

TEST(Merge, InterruptedMergeLeavesPendingConflict) {
    Device a = fresh(7, "laptop");
    Device b = fresh(8, "phone");
    ingest(a.store, log_records(b.store, b.eid()), key_of(b));
    merge_initiate(a, b.root);

    EXPECT_TRUE(view_has_unpaired(a));
    EXPECT_EQ(a.pending_merges.size(), 1u);
    // Classes unchanged: resolution still sees two separate namespaces.
    NamespaceViewResult v = a.view();
    EXPECT_EQ(v.classes.size(), 2u);

    // Completing at leisure pairs it up.
    merge_complete(a, b);
    EXPECT_FALSE(view_has_unpaired(a));
    EXPECT_TRUE(a.pending_merges.empty());
    NamespaceViewResult after = a.view();
    const NamespaceClass* ca = cluster_of(after, a.store, a.eid());
    const NamespaceClass* cb = cluster_of(after, a.store, b.eid());
    EXPECT_EQ(ca, cb);
}

TEST(Merge, CancelSuppressesLocally) {
    Device a = fresh(9, "laptop");
    Device b = fresh(10, "phone");
    ingest(a.store, log_records(b.store, b.eid()), key_of(b));
    const Record& rec = merge_initiate(a, b.root);
    ASSERT_TRUE(view_has_unpaired(a));

    merge_cancel(a, pointer_of(rec));
    EXPECT_FALSE(view_has_unpaired(a));
    EXPECT_TRUE(a.pending_merges.empty());

    // The record itself still gossips; an observer still sees it unpaired.
    Device c = fresh(11, "observer");
    testutil::pour(c.store, a.store);
    bool unpaired = false;
    for (const Conflict& conf : build_view(c.store).conflicts)
        if (std::holds_alternative<UnpairedMergeConflict>(conf)) unpaired = true;
    EXPECT_TRUE(unpaired);
}

TEST(Link, ClashingLabelStillPerformedAndConflicts) {
    Device a = fresh(12, "laptop");
    Device b = fresh(13, "bob");
    Device c = fresh(14, "carol");
    link_users(a, label("friend"), b, label("laptop-owner"));
    link_users(a, label("friend"), c, label("laptop-owner"));
    bool conflict = false;
    for (const Conflict& conf : a.view().conflicts)
        if (const auto* nc = std::get_if<NameConflict>(&conf); nc && nc->label == "friend")
            conflict = true;
    EXPECT_TRUE(conflict);
}

TEST(Link, InvalidLabelRefused) {
    Device a = fresh(15, "laptop");
    Device b = fresh(16, "phone");
    EXPECT_THROW(link_users(a, "Alice Smith", b, "Bob"), ActionError);
}

TEST(NameDevice, PropagatesAcrossCluster) {
    Device laptop = fresh(17, "laptop");
    Device phone = fresh(18, "phone");
    Device printer = fresh(19, "printer");
    merge_devices(laptop, phone);
    name_device(laptop, laptop.root, label("printer"), printer.eid());
    gossip_round(laptop.store, phone.store);
    EXPECT_TRUE(resolved_to_device(resolve_from(phone, "printer"), printer.eid()));
}

TEST(NameDevice, UnknownParentRefused) {
    Device d = fresh(20, "phone");
    std::mt19937_64 rng(21);
    EXPECT_THROW(name_device(d, testutil::random_pointer(rng), label("x"), d.eid()),
                 ActionError);
}

TEST(Rename, IssueSiteIndependence) {
    // Run the same story twice, issuing the rename from a different device,
    // and compare the converged views.
    auto build = [](bool rename_from_home) {
        Device home = fresh(22, "phone");
        Device cell = fresh(23, "phone");
        merge_devices(home, cell);
        Device& issuer = rename_from_home ? home : cell;
        NamespaceViewResult v = issuer.view();
        const NamespaceClass* cls = cluster_of(v, issuer.store, issuer.eid());
        const std::vector<Binding>* list = v.find_bindings(cls->representative, "phone");
        RecordPointer cell_binding{};
        for (const Binding& b : *list)
            if (std::get<Eid>(b.target) == cell.eid()) cell_binding = b.source;
        rename_binding(issuer, cell_binding, label("cell"));
        gossip_round(home.store, cell.store);
        return std::pair{dump_view(home.view()), dump_view(cell.view())};
    };
    auto [home_a, cell_a] = build(true);
    auto [home_b, cell_b] = build(false);

    // The record authors differ between runs, so compare resolution results
    // rather than raw dumps; both runs must agree on every name.
    EXPECT_EQ(home_a, cell_a);
    EXPECT_EQ(home_b, cell_b);
}

TEST(Rename, SameLabelIsSemanticNoOp) {
    Device d = fresh(24, "phone");
    RecordPointer binding = pointer_of(d.store.own_log().at(1));
    rename_binding(d, binding, label("phone"));
    EXPECT_TRUE(d.view().conflicts.empty());
    EXPECT_TRUE(resolved_to_device(resolve_from(d, "phone"), d.eid()));
    EXPECT_EQ(d.store.own_log().size(), 4u);  // new record + tombstone appended
}

TEST(Remove, UnlinkSeversUserName) {
    Device ipod = fresh(25, "ipod");
    Device cell = fresh(26, "cell");
    link_users(ipod, label("Bob"), cell, label("Alice"));
    ASSERT_TRUE(resolved_to_device(resolve_from(ipod, "cell.Bob"), cell.eid()));

    NamespaceViewResult v = ipod.view();
    const NamespaceClass* cls = cluster_of(v, ipod.store, ipod.eid());
    const std::vector<Binding>* list = v.find_bindings(cls->representative, "bob");
    ASSERT_NE(list, nullptr);
    remove_binding(ipod, (*list)[0].source);
    ResolutionResult r = resolve_from(ipod, "cell.Bob");
    const auto* err = std::get_if<ResolveError>(&r);
    ASSERT_NE(err, nullptr);
    EXPECT_EQ(err->kind, ResolveErrorKind::NotFound);
}

TEST(Remove, ReAddResolvesAgain) {
    Device d = fresh(27, "phone");
    Device p = fresh(28, "printer");
    const Record& rec = name_device(d, d.root, label("printer"), p.eid());
    remove_binding(d, pointer_of(rec));
    EXPECT_TRUE(std::holds_alternative<ResolveError>(resolve_from(d, "printer")));
    name_device(d, d.root, label("printer"), p.eid());
    EXPECT_TRUE(resolved_to_device(resolve_from(d, "printer"), p.eid()));
    EXPECT_TRUE(d.view().conflicts.empty());
}

TEST(Remove, DoubleRemoveIdempotent) {
    Device d = fresh(29, "phone");
    RecordPointer binding = pointer_of(d.store.own_log().at(1));
    remove_binding(d, binding);
    remove_binding(d, binding);
    EXPECT_TRUE(std::holds_alternative<ResolveError>(resolve_from(d, "phone")));
    EXPECT_TRUE(d.view().conflicts.empty());
}

TEST(Remove, KindMismatchRefused) {
    Device d = fresh(30, "phone");
    EXPECT_THROW(remove_binding(d, d.root), ActionError);  // create-namespace record
}

TEST(Revoke, OutsiderRefused) {
    Device a = fresh(31, "laptop");
    Device b = fresh(32, "stranger");
    ingest(a.store, log_records(b.store, b.eid()), key_of(b));
    RecordPointer last = pointer_of(*a.store.record_at(b.eid(), 1));
    EXPECT_THROW(revoke_device(a, b.eid(), last), ActionError);
}

TEST(Revoke, ProtectsLinkedUsersToo) {
    // Bob's laptop+cell cluster, Alice linked to the cell. After revocation
    // reaches Alice, the cell's forgeries cannot touch her view either.
    Device laptop = fresh(33, "laptop");
    Device cell = fresh(34, "cell");
    Device ipod = fresh(35, "ipod");
    merge_devices(laptop, cell);
    link_users(cell, label("Alice"), ipod, label("Bob"));
    gossip_round(laptop.store, cell.store);
    gossip_round(ipod.store, laptop.store);

    RecordPointer last_good = pointer_of(laptop.store.log_of(cell.eid())->records().back());
    revoke_device(laptop, cell.eid(), last_good);
    gossip_round(ipod.store, laptop.store);

    std::string before = dump_view(build_view(ipod.store));
    // Theft: the cell forges a name and pushes straight to Alice.
    cell.append(NameDeviceBody{cell.root, cell.eid(), label("evil")});
    ingest(ipod.store, log_records(cell.store, cell.eid()));
    EXPECT_EQ(dump_view(build_view(ipod.store)), before);
    // Pre-cut link keeps working for Bob's side.
    EXPECT_TRUE(resolved_to_device(resolve_from(laptop, "ipod.Alice"), ipod.eid()));
}

TEST(Group, SharedNamespaceResolvesEverywhere) {
    Device a = fresh(36, "a");
    Device b = fresh(37, "b");
    Device c = fresh(38, "c");
    Device printer = fresh(39, "printer");
    std::vector<Device*> members{&a, &b, &c};
    std::vector<RecordPointer> namespaces = create_group(members, label("home"));

    name_device(a, namespaces[0], label("printer"), printer.eid());
    for (int sweep = 0; sweep < 2; ++sweep) {
        gossip_round(a.store, b.store);
        gossip_round(b.store, c.store);
    }
    for (Device* d : members)
        EXPECT_TRUE(resolved_to_device(resolve_from(*d, "printer.home"), printer.eid()));
}

TEST(Group, StarAndLineShapesConverge) {
    auto build = [](std::vector<std::pair<size_t, size_t>> tree) {
        std::vector<Device> devices;
        for (int i = 0; i < 5; ++i) devices.push_back(fresh(40 + i, "g" + std::to_string(i)));
        std::vector<Device*> ptrs;
        for (Device& d : devices) ptrs.push_back(&d);
        create_group(ptrs, label("home"), tree);
        for (int sweep = 0; sweep < 3; ++sweep)
            for (size_t i = 0; i + 1 < devices.size(); ++i)
                gossip_round(devices[i].store, devices[i + 1].store);
        ResolutionResult r = resolve_from(devices[0], "home");
        NamespaceViewResult v = devices[0].view();
        const auto& ns = std::get<ResolvedNamespace>(std::get<ResolutionOutcome>(r));
        const NamespaceClass* cls = v.class_of_pointer(ns.class_rep);
        std::string fingerprint;
        for (const RecordPointer& m : cls->members) fingerprint += m.str() + ";";
        return fingerprint;
    };
    std::string star = build({{0, 1}, {0, 2}, {0, 3}, {0, 4}});
    std::string line = build({{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    EXPECT_EQ(star, line);
}

TEST(Group, SingleDeviceGroupIsPrivateSubNamespace) {
    Device a = fresh(50, "solo");
    Device p = fresh(51, "printer");
    std::vector<Device*> members{&a};
    std::vector<RecordPointer> namespaces = create_group(members, label("home"));
    ASSERT_EQ(namespaces.size(), 1u);
    name_device(a, namespaces[0], label("printer"), p.eid());
    EXPECT_TRUE(resolved_to_device(resolve_from(a, "printer.home"), p.eid()));
    EXPECT_TRUE(a.view().conflicts.empty());
}
