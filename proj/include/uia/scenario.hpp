#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "uia/resolver.hpp"
#include "uia/simnet.hpp"

namespace uia {

// Line-oriented scenario language: one step per line, `#` comments,
// `seed`/`config` header lines first, then declarations and steps.

struct AssertResolve {
    std::string device, name, target;
    bool operator==(const AssertResolve&) const = default;
};
struct AssertResolveError {
    std::string device, name;
    ResolveErrorKind kind = ResolveErrorKind::NotFound;
    bool operator==(const AssertResolveError&) const = default;
};
struct AssertConflicts {
    std::string device;
    uint64_t count = 0;
    bool operator==(const AssertConflicts&) const = default;
};
struct AssertSameCluster {
    std::vector<std::string> devices;
    bool operator==(const AssertSameCluster&) const = default;
};
struct AssertPath {
    std::string origin, target;
    uint64_t max_hops = 0;
    bool operator==(const AssertPath&) const = default;
};
struct AssertChannel {
    std::string origin, target;
    ChannelMode mode = ChannelMode::Direct;
    bool operator==(const AssertChannel&) const = default;
};
struct AssertViewUnchanged {
    std::string device, tag;
    bool operator==(const AssertViewUnchanged&) const = default;
};

using Assertion = std::variant<AssertResolve, AssertResolveError, AssertConflicts,
                               AssertSameCluster, AssertPath, AssertChannel,
                               AssertViewUnchanged>;

struct StepNetwork {
    std::string name;
    bool is_public = true;
    bool internet = true;
    bool operator==(const StepNetwork&) const = default;
};
struct StepDevice {
    std::string alias, default_name, network;
    bool operator==(const StepDevice&) const = default;
};
struct StepMerge {
    std::string a, b;
    bool operator==(const StepMerge&) const = default;
};
struct StepMergeInitiate {
    std::string a, b;
    bool operator==(const StepMergeInitiate&) const = default;
};
struct StepMergeComplete {
    std::string a, b;
    bool operator==(const StepMergeComplete&) const = default;
};
struct StepMergeCancel {
    std::string a;
    bool operator==(const StepMergeCancel&) const = default;
};
struct StepLink {
    std::string a, name_for_b, b, name_for_a;
    bool operator==(const StepLink&) const = default;
};
struct StepName {
    std::string device, label, target;
    bool operator==(const StepName&) const = default;
};
struct StepGroupName {
    std::string device, group_label, label, target;
    bool operator==(const StepGroupName&) const = default;
};
struct StepRename {
    std::string issuer, target, old_label, new_label;
    bool operator==(const StepRename&) const = default;
};
struct StepRemoveName {
    std::string issuer, target, label;
    bool operator==(const StepRemoveName&) const = default;
};
struct StepUnlink {
    std::string issuer, label;
    bool operator==(const StepUnlink&) const = default;
};
struct StepRevoke {
    std::string issuer, target;
    bool operator==(const StepRevoke&) const = default;
};
struct StepGroup {
    std::string label;
    std::vector<std::string> devices;
    bool operator==(const StepGroup&) const = default;
};
struct StepMigrate {
    std::string device, network;
    bool operator==(const StepMigrate&) const = default;
};
struct StepPartition {
    std::vector<std::string> side;
    bool operator==(const StepPartition&) const = default;
};
struct StepHeal {
    bool operator==(const StepHeal&) const = default;
};
struct StepGossip {
    std::string a, b;  // both empty = world-wide sweep
    bool operator==(const StepGossip&) const = default;
};
struct StepTick {
    uint64_t n = 0;
    bool operator==(const StepTick&) const = default;
};
struct StepSearch {
    std::string origin, target;
    bool operator==(const StepSearch&) const = default;
};
struct StepConnect {
    std::string origin, target;
    bool operator==(const StepConnect&) const = default;
};
struct StepSnapshotView {
    std::string device, tag;
    bool operator==(const StepSnapshotView&) const = default;
};
struct StepDumpView {
    std::string device;
    bool operator==(const StepDumpView&) const = default;
};
struct StepDumpLog {
    std::string device, file;
    bool operator==(const StepDumpLog&) const = default;
};
struct StepAssert {
    Assertion assertion;
    bool operator==(const StepAssert&) const = default;
};

using StepBody =
    std::variant<StepNetwork, StepDevice, StepMerge, StepMergeInitiate, StepMergeComplete,
                 StepMergeCancel, StepLink, StepName, StepGroupName, StepRename, StepRemoveName,
                 StepUnlink, StepRevoke, StepGroup, StepMigrate, StepPartition, StepHeal,
                 StepGossip, StepTick, StepSearch, StepConnect, StepSnapshotView, StepDumpView,
                 StepDumpLog, StepAssert>;

struct Step {
    size_t line = 0;
    StepBody body;

    bool operator==(const Step& o) const { return body == o.body; }
};

struct Scenario {
    uint64_t seed = 0;
    SimConfig config;
    std::vector<Step> steps;

    bool operator==(const Scenario& o) const {
        return seed == o.seed && steps == o.steps;
    }
};

struct ScenarioParseError {
    size_t line = 0;
    size_t column = 0;
    std::string message;

    std::string str() const {
        return "line " + std::to_string(line) + ":" + std::to_string(column) + ": " + message;
    }
};

using ScenarioParseResult = std::variant<Scenario, ScenarioParseError>;

namespace scenariodetail {

inline std::string strip_quotes(const std::string& tok) {
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"')
        return tok.substr(1, tok.size() - 2);
    return tok;
}

struct LineTokens {
    std::vector<std::string> tokens;
    std::vector<size_t> columns;  // 1-based column of each token
};

inline LineTokens tokenize(const std::string& line) {
    LineTokens out;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        if (i >= line.size() || line[i] == '#') break;
        size_t start = i;
        if (line[i] == '"') {
            ++i;
            while (i < line.size() && line[i] != '"') ++i;
            if (i < line.size()) ++i;
        } else {
            while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '#') ++i;
        }
        out.tokens.push_back(line.substr(start, i - start));
        out.columns.push_back(start + 1);
    }
    return out;
}

}  // namespace scenariodetail

inline ScenarioParseResult load_scenario(const std::string& text) {
    using namespace scenariodetail;
    Scenario sc;
    std::set<std::string> networks;
    std::set<std::string> devices;
    bool body_started = false;

    auto fail = [](size_t line, size_t col, const std::string& msg) {
        return ScenarioParseError{line, col, msg};
    };

    std::istringstream in(text);
    std::string raw;
    size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        LineTokens lt = tokenize(raw);
        if (lt.tokens.empty()) continue;
        auto tok = [&](size_t i) -> std::string { return strip_quotes(lt.tokens.at(i)); };
        auto col = [&](size_t i) -> size_t {
            return i < lt.columns.size() ? lt.columns[i] : raw.size() + 1;
        };
        auto need = [&](size_t n) -> bool { return lt.tokens.size() == n; };
        auto need_device = [&](size_t i) -> std::optional<ScenarioParseError> {
            if (!devices.count(tok(i)))
                return fail(line_no, col(i), "unknown device: " + tok(i));
            return std::nullopt;
        };
        auto need_network = [&](size_t i) -> std::optional<ScenarioParseError> {
            if (!networks.count(tok(i)))
                return fail(line_no, col(i), "unknown network: " + tok(i));
            return std::nullopt;
        };
        auto need_label = [&](size_t i) -> std::optional<ScenarioParseError> {
            if (Label::check(tok(i)))
                return fail(line_no, col(i), "invalid label: " + tok(i));
            return std::nullopt;
        };
        auto need_name = [&](size_t i) -> std::optional<ScenarioParseError> {
            ParseNameResult r = parse_name(tok(i));
            if (const auto* err = std::get_if<NameParseError>(&r))
                return fail(line_no, col(i), "invalid name: " + err->str());
            return std::nullopt;
        };
        auto push = [&](StepBody body) { sc.steps.push_back(Step{line_no, std::move(body)}); };

        const std::string& verb = lt.tokens[0];
        if (verb == "seed" || verb == "config") {
            if (body_started)
                return fail(line_no, col(0), verb + " must precede declarations and steps");
            if (verb == "seed") {
                if (!need(2)) return fail(line_no, col(0), "usage: seed <number>");
                try {
                    sc.seed = std::stoull(tok(1));
                } catch (...) {
                    return fail(line_no, col(1), "bad seed value");
                }
            } else {
                if (!need(3)) return fail(line_no, col(0), "usage: config <key> <value>");
                const std::string key = tok(1), value = tok(2);
                try {
                    if (key == "loss") sc.config.loss_rate = std::stod(value);
                    else if (key == "ping-interval") sc.config.ping_interval = std::stoull(value);
                    else if (key == "max-ttl") sc.config.max_ttl = std::stoi(value);
                    else if (key == "lan-delay") sc.config.lan_delay = std::stoull(value);
                    else if (key == "wan-delay") sc.config.wan_delay = std::stoull(value);
                    else if (key == "monitoring") sc.config.monitoring = (value == "on");
                    else if (key == "gossip-policy") sc.config.gossip_policy = (value == "on");
                    else return fail(line_no, col(1), "unknown config key: " + key);
                } catch (...) {
                    return fail(line_no, col(2), "bad config value");
                }
            }
            continue;
        }

        body_started = true;
        if (verb == "network") {
            if (lt.tokens.size() != 3 && lt.tokens.size() != 4)
                return fail(line_no, col(0), "usage: network <name> public|private [offline]");
            StepNetwork s;
            s.name = tok(1);
            if (tok(2) == "public") s.is_public = true;
            else if (tok(2) == "private") s.is_public = false;
            else return fail(line_no, col(2), "expected public or private");
            if (lt.tokens.size() == 4) {
                if (tok(3) != "offline") return fail(line_no, col(3), "expected offline");
                s.internet = false;
            }
            if (networks.count(s.name))
                return fail(line_no, col(1), "duplicate network: " + s.name);
            networks.insert(s.name);
            push(s);
        } else if (verb == "device") {
            if (!need(4))
                return fail(line_no, col(0), "usage: device <alias> <default-name> <network>");
            if (devices.count(tok(1)))
                return fail(line_no, col(1), "duplicate device: " + tok(1));
            if (auto e = need_label(2)) return *e;
            if (auto e = need_network(3)) return *e;
            devices.insert(tok(1));
            push(StepDevice{tok(1), tok(2), tok(3)});
        } else if (verb == "merge" || verb == "merge-initiate" || verb == "merge-complete") {
            if (!need(3)) return fail(line_no, col(0), "usage: " + verb + " <a> <b>");
            if (auto e = need_device(1)) return *e;
            if (auto e = need_device(2)) return *e;
            if (verb == "merge") push(StepMerge{tok(1), tok(2)});
            else if (verb == "merge-initiate") push(StepMergeInitiate{tok(1), tok(2)});
            else push(StepMergeComplete{tok(1), tok(2)});
        } else if (verb == "merge-cancel") {
            if (!need(2)) return fail(line_no, col(0), "usage: merge-cancel <device>");
            if (auto e = need_device(1)) return *e;
            push(StepMergeCancel{tok(1)});
        } else if (verb == "link") {
            if (!need(5))
                return fail(line_no, col(0), "usage: link <a> <name-for-b> <b> <name-for-a>");
            if (auto e = need_device(1)) return *e;
            if (auto e = need_label(2)) return *e;
            if (auto e = need_device(3)) return *e;
            if (auto e = need_label(4)) return *e;
            push(StepLink{tok(1), tok(2), tok(3), tok(4)});
        } else if (verb == "name") {
            if (!need(4)) return fail(line_no, col(0), "usage: name <device> <label> <target>");
            if (auto e = need_device(1)) return *e;
            if (auto e = need_label(2)) return *e;
            if (auto e = need_device(3)) return *e;
            push(StepName{tok(1), tok(2), tok(3)});
        } else if (verb == "group-name") {
            if (!need(5))
                return fail(line_no, col(0),
                            "usage: group-name <device> <group-label> <label> <target>");
            if (auto e = need_device(1)) return *e;
            if (auto e = need_label(2)) return *e;
            if (auto e = need_label(3)) return *e;
            if (auto e = need_device(4)) return *e;
            push(StepGroupName{tok(1), tok(2), tok(3), tok(4)});
        } else if (verb == "rename") {
            if (!need(5))
                return fail(line_no, col(0),
                            "usage: rename <issuer> <target> <old-label> <new-label>");
            if (auto e = need_device(1)) return *e;
            if (auto e = need_device(2)) return *e;
            if (auto e = need_label(3)) return *e;
            if (auto e = need_label(4)) return *e;
            push(StepRename{tok(1), tok(2), tok(3), tok(4)});
        } else if (verb == "remove-name") {
            if (!need(4))
                return fail(line_no, col(0), "usage: remove-name <issuer> <target> <label>");
            if (auto e = need_device(1)) return *e;
            if (auto e = need_device(2)) return *e;
            if (auto e = need_label(3)) return *e;
            push(StepRemoveName{tok(1), tok(2), tok(3)});
        } else if (verb == "unlink") {
            if (!need(3)) return fail(line_no, col(0), "usage: unlink <issuer> <label>");
            if (auto e = need_device(1)) return *e;
            if (auto e = need_label(2)) return *e;
            push(StepUnlink{tok(1), tok(2)});
        } else if (verb == "revoke") {
            if (!need(3)) return fail(line_no, col(0), "usage: revoke <issuer> <target>");
            if (auto e = need_device(1)) return *e;
            if (auto e = need_device(2)) return *e;
            push(StepRevoke{tok(1), tok(2)});
        } else if (verb == "group") {
            if (lt.tokens.size() < 3)
                return fail(line_no, col(0), "usage: group <label> <device>...");
            if (auto e = need_label(1)) return *e;
            StepGroup s;
            s.label = tok(1);
            for (size_t i = 2; i < lt.tokens.size(); ++i) {
                if (auto e = need_device(i)) return *e;
                s.devices.push_back(tok(i));
            }
            push(s);
        } else if (verb == "migrate") {
            if (!need(3)) return fail(line_no, col(0), "usage: migrate <device> <network>");
            if (auto e = need_device(1)) return *e;
            if (auto e = need_network(2)) return *e;
            push(StepMigrate{tok(1), tok(2)});
        } else if (verb == "partition") {
            if (lt.tokens.size() < 2)
                return fail(line_no, col(0), "usage: partition <network>...");
            StepPartition s;
            for (size_t i = 1; i < lt.tokens.size(); ++i) {
                if (auto e = need_network(i)) return *e;
                s.side.push_back(tok(i));
            }
            push(s);
        } else if (verb == "heal") {
            if (!need(1)) return fail(line_no, col(0), "usage: heal");
            push(StepHeal{});
        } else if (verb == "gossip") {
            if (need(1)) {
                push(StepGossip{});
            } else if (need(3)) {
                if (auto e = need_device(1)) return *e;
                if (auto e = need_device(2)) return *e;
                push(StepGossip{tok(1), tok(2)});
            } else {
                return fail(line_no, col(0), "usage: gossip [<a> <b>]");
            }
        } else if (verb == "tick") {
            if (!need(2)) return fail(line_no, col(0), "usage: tick <n>");
            try {
                push(StepTick{std::stoull(tok(1))});
            } catch (...) {
                return fail(line_no, col(1), "bad tick count");
            }
        } else if (verb == "search" || verb == "connect") {
            if (!need(3)) return fail(line_no, col(0), "usage: " + verb + " <origin> <target>");
            if (auto e = need_device(1)) return *e;
            if (auto e = need_device(2)) return *e;
            if (verb == "search") push(StepSearch{tok(1), tok(2)});
            else push(StepConnect{tok(1), tok(2)});
        } else if (verb == "snapshot-view") {
            if (!need(3)) return fail(line_no, col(0), "usage: snapshot-view <device> <tag>");
            if (auto e = need_device(1)) return *e;
            push(StepSnapshotView{tok(1), tok(2)});
        } else if (verb == "dump-view") {
            if (!need(2)) return fail(line_no, col(0), "usage: dump-view <device>");
            if (auto e = need_device(1)) return *e;
            push(StepDumpView{tok(1)});
        } else if (verb == "dump-log") {
            if (!need(3)) return fail(line_no, col(0), "usage: dump-log <device> <file>");
            if (auto e = need_device(1)) return *e;
            push(StepDumpLog{tok(1), tok(2)});
        } else if (verb == "assert") {
            if (lt.tokens.size() < 2) return fail(line_no, col(0), "empty assertion");
            const std::string kind = tok(1);
            if (kind == "resolve") {
                // assert resolve <device> <name> == <target>
                // assert resolve <device> <name> error <kind>
                if (lt.tokens.size() != 6)
                    return fail(line_no, col(0),
                                "usage: assert resolve <device> <name> ==|error <value>");
                if (auto e = need_device(2)) return *e;
                if (auto e = need_name(3)) return *e;
                if (tok(4) == "==") {
                    if (auto e = need_device(5)) return *e;
                    push(StepAssert{AssertResolve{tok(2), tok(3), tok(5)}});
                } else if (tok(4) == "error") {
                    ResolveErrorKind k;
                    if (tok(5) == "not-found") k = ResolveErrorKind::NotFound;
                    else if (tok(5) == "ambiguous") k = ResolveErrorKind::Ambiguous;
                    else if (tok(5) == "type-mismatch") k = ResolveErrorKind::TypeMismatch;
                    else return fail(line_no, col(5), "unknown error kind: " + tok(5));
                    push(StepAssert{AssertResolveError{tok(2), tok(3), k}});
                } else {
                    return fail(line_no, col(4), "expected == or error");
                }
            } else if (kind == "conflicts") {
                if (!need(5) || tok(3) != "==")
                    return fail(line_no, col(0), "usage: assert conflicts <device> == <n>");
                if (auto e = need_device(2)) return *e;
                try {
                    push(StepAssert{AssertConflicts{tok(2), std::stoull(tok(4))}});
                } catch (...) {
                    return fail(line_no, col(4), "bad conflict count");
                }
            } else if (kind == "same-cluster") {
                if (lt.tokens.size() < 4)
                    return fail(line_no, col(0), "usage: assert same-cluster <d1> <d2>...");
                AssertSameCluster s;
                for (size_t i = 2; i < lt.tokens.size(); ++i) {
                    if (auto e = need_device(i)) return *e;
                    s.devices.push_back(tok(i));
                }
                push(StepAssert{s});
            } else if (kind == "path") {
                if (!need(6) || tok(4) != "<=")
                    return fail(line_no, col(0),
                                "usage: assert path <origin> <target> <= <n>");
                if (auto e = need_device(2)) return *e;
                if (auto e = need_device(3)) return *e;
                try {
                    push(StepAssert{AssertPath{tok(2), tok(3), std::stoull(tok(5))}});
                } catch (...) {
                    return fail(line_no, col(5), "bad hop count");
                }
            } else if (kind == "channel") {
                if (!need(5))
                    return fail(line_no, col(0),
                                "usage: assert channel <origin> <target> direct|relayed");
                if (auto e = need_device(2)) return *e;
                if (auto e = need_device(3)) return *e;
                ChannelMode mode;
                if (tok(4) == "direct") mode = ChannelMode::Direct;
                else if (tok(4) == "relayed") mode = ChannelMode::Relayed;
                else return fail(line_no, col(4), "expected direct or relayed");
                push(StepAssert{AssertChannel{tok(2), tok(3), mode}});
            } else if (kind == "view-unchanged") {
                if (!need(4))
                    return fail(line_no, col(0), "usage: assert view-unchanged <device> <tag>");
                if (auto e = need_device(2)) return *e;
                push(StepAssert{AssertViewUnchanged{tok(2), tok(3)}});
            } else {
                return fail(line_no, col(1), "unknown assertion: " + kind);
            }
        } else {
            return fail(line_no, col(0), "unknown verb: " + verb);
        }
    }
    return sc;
}

inline std::string render_scenario(const Scenario& sc) {
    std::ostringstream out;
    out << "seed " << sc.seed << "\n";
    SimConfig def;
    if (sc.config.loss_rate != def.loss_rate) out << "config loss " << sc.config.loss_rate << "\n";
    if (sc.config.ping_interval != def.ping_interval)
        out << "config ping-interval " << sc.config.ping_interval << "\n";
    if (sc.config.max_ttl != def.max_ttl) out << "config max-ttl " << sc.config.max_ttl << "\n";
    if (sc.config.lan_delay != def.lan_delay)
        out << "config lan-delay " << sc.config.lan_delay << "\n";
    if (sc.config.wan_delay != def.wan_delay)
        out << "config wan-delay " << sc.config.wan_delay << "\n";
    if (sc.config.monitoring != def.monitoring)
        out << "config monitoring " << (sc.config.monitoring ? "on" : "off") << "\n";
    if (sc.config.gossip_policy != def.gossip_policy)
        out << "config gossip-policy " << (sc.config.gossip_policy ? "on" : "off") << "\n";
    for (const Step& step : sc.steps) {
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, StepNetwork>) {
                    out << "network " << s.name << (s.is_public ? " public" : " private")
                        << (s.internet ? "" : " offline");
                } else if constexpr (std::is_same_v<T, StepDevice>) {
                    out << "device " << s.alias << " " << s.default_name << " " << s.network;
                } else if constexpr (std::is_same_v<T, StepMerge>) {
                    out << "merge " << s.a << " " << s.b;
                } else if constexpr (std::is_same_v<T, StepMergeInitiate>) {
                    out << "merge-initiate " << s.a << " " << s.b;
                } else if constexpr (std::is_same_v<T, StepMergeComplete>) {
                    out << "merge-complete " << s.a << " " << s.b;
                } else if constexpr (std::is_same_v<T, StepMergeCancel>) {
                    out << "merge-cancel " << s.a;
                } else if constexpr (std::is_same_v<T, StepLink>) {
                    out << "link " << s.a << " " << s.name_for_b << " " << s.b << " "
                        << s.name_for_a;
                } else if constexpr (std::is_same_v<T, StepName>) {
                    out << "name " << s.device << " " << s.label << " " << s.target;
                } else if constexpr (std::is_same_v<T, StepGroupName>) {
                    out << "group-name " << s.device << " " << s.group_label << " " << s.label
                        << " " << s.target;
                } else if constexpr (std::is_same_v<T, StepRename>) {
                    out << "rename " << s.issuer << " " << s.target << " " << s.old_label << " "
                        << s.new_label;
                } else if constexpr (std::is_same_v<T, StepRemoveName>) {
                    out << "remove-name " << s.issuer << " " << s.target << " " << s.label;
                } else if constexpr (std::is_same_v<T, StepUnlink>) {
                    out << "unlink " << s.issuer << " " << s.label;
                } else if constexpr (std::is_same_v<T, StepRevoke>) {
                    out << "revoke " << s.issuer << " " << s.target;
                } else if constexpr (std::is_same_v<T, StepGroup>) {
                    out << "group " << s.label;
                    for (const std::string& d : s.devices) out << " " << d;
                } else if constexpr (std::is_same_v<T, StepMigrate>) {
                    out << "migrate " << s.device << " " << s.network;
                } else if constexpr (std::is_same_v<T, StepPartition>) {
                    out << "partition";
                    for (const std::string& n : s.side) out << " " << n;
                } else if constexpr (std::is_same_v<T, StepHeal>) {
                    out << "heal";
                } else if constexpr (std::is_same_v<T, StepGossip>) {
                    out << "gossip";
                    if (!s.a.empty()) out << " " << s.a << " " << s.b;
                } else if constexpr (std::is_same_v<T, StepTick>) {
                    out << "tick " << s.n;
                } else if constexpr (std::is_same_v<T, StepSearch>) {
                    out << "search " << s.origin << " " << s.target;
                } else if constexpr (std::is_same_v<T, StepConnect>) {
                    out << "connect " << s.origin << " " << s.target;
                } else if constexpr (std::is_same_v<T, StepSnapshotView>) {
                    out << "snapshot-view " << s.device << " " << s.tag;
                } else if constexpr (std::is_same_v<T, StepDumpView>) {
                    out << "dump-view " << s.device;
                } else if constexpr (std::is_same_v<T, StepDumpLog>) {
                    out << "dump-log " << s.device << " " << s.file;
                } else if constexpr (std::is_same_v<T, StepAssert>) {
                    out << "assert ";
                    std::visit(
                        [&](const auto& a) {
                            using A = std::decay_t<decltype(a)>;
                            if constexpr (std::is_same_v<A, AssertResolve>) {
                                out << "resolve " << a.device << " \"" << a.name << "\" == "
                                    << a.target;
                            } else if constexpr (std::is_same_v<A, AssertResolveError>) {
                                out << "resolve " << a.device << " \"" << a.name << "\" error "
                                    << resolve_error_name(a.kind);
                            } else if constexpr (std::is_same_v<A, AssertConflicts>) {
                                out << "conflicts " << a.device << " == " << a.count;
                            } else if constexpr (std::is_same_v<A, AssertSameCluster>) {
                                out << "same-cluster";
                                for (const std::string& d : a.devices) out << " " << d;
                            } else if constexpr (std::is_same_v<A, AssertPath>) {
                                out << "path " << a.origin << " " << a.target << " <= "
                                    << a.max_hops;
                            } else if constexpr (std::is_same_v<A, AssertChannel>) {
                                out << "channel " << a.origin << " " << a.target << " "
                                    << (a.mode == ChannelMode::Direct ? "direct" : "relayed");
                            } else if constexpr (std::is_same_v<A, AssertViewUnchanged>) {
                                out << "view-unchanged " << a.device << " " << a.tag;
                            }
                        },
                        s.assertion);
                }
            },
            step.body);
        out << "\n";
    }
    return out.str();
}

struct AssertionOutcome {
    size_t line = 0;
    std::string text;
    bool passed = false;
    std::string evidence;
};

struct Report {
    std::vector<AssertionOutcome> assertions;
    std::vector<std::string> outputs;
    std::string runtime_error;

    bool all_passed() const {
        if (!runtime_error.empty()) return false;
        for (const auto& a : assertions)
            if (!a.passed) return false;
        return true;
    }

    std::string render() const {
        std::ostringstream out;
        for (const std::string& o : outputs) out << o << "\n";
        for (const auto& a : assertions)
            out << (a.passed ? "PASS" : "FAIL") << " line " << a.line << ": " << a.text
                << (a.evidence.empty() ? "" : "  [" + a.evidence + "]") << "\n";
        if (!runtime_error.empty()) out << "ERROR " << runtime_error << "\n";
        size_t passed = 0;
        for (const auto& a : assertions) passed += a.passed ? 1 : 0;
        out << passed << "/" << assertions.size() << " assertions passed\n";
        return out.str();
    }
};

// Applies scenario steps to a world one at a time; also the engine behind
// the interactive CLI session.
class ScenarioEngine {
public:
    explicit ScenarioEngine(uint64_t seed, SimConfig cfg = {}) : world_(seed, cfg) {}

    SimWorld& world() { return world_; }
    const SimWorld& world() const { return world_; }
    Report& report() { return report_; }

    void execute(const Step& step) {
        std::visit([&](const auto& s) { apply(step.line, s); }, step.body);
    }

private:
    std::string render_assert_text(const Step& step) {
        Scenario tmp;
        tmp.steps.push_back(step);
        std::string text = render_scenario(tmp);
        size_t nl = text.find('\n');
        size_t start = text.find("assert");
        if (start == std::string::npos || nl == std::string::npos) return text;
        return text.substr(start, nl - start);
    }

    void apply(size_t, const StepNetwork& s) { world_.add_network(s.name, s.is_public, s.internet); }
    void apply(size_t, const StepDevice& s) { world_.add_device(s.alias, s.default_name, s.network); }
    void apply(size_t, const StepMerge& s) { world_.act_merge(s.a, s.b); }
    void apply(size_t, const StepMergeInitiate& s) { world_.act_merge_initiate(s.a, s.b); }
    void apply(size_t, const StepMergeComplete& s) { world_.act_merge_complete(s.a, s.b); }
    void apply(size_t, const StepMergeCancel& s) { world_.act_merge_cancel(s.a); }
    void apply(size_t, const StepLink& s) { world_.act_link(s.a, s.name_for_b, s.b, s.name_for_a); }
    void apply(size_t, const StepName& s) { world_.act_name(s.device, s.label, s.target); }
    void apply(size_t, const StepGroupName& s) {
        world_.act_group_name(s.device, s.group_label, s.label, s.target);
    }
    void apply(size_t, const StepRename& s) {
        world_.act_rename(s.issuer, s.target, s.old_label, s.new_label);
    }
    void apply(size_t, const StepRemoveName& s) {
        world_.act_remove_name(s.issuer, s.target, s.label);
    }
    void apply(size_t, const StepUnlink& s) { world_.act_unlink(s.issuer, s.label); }
    void apply(size_t, const StepRevoke& s) { world_.act_revoke(s.issuer, s.target); }
    void apply(size_t, const StepGroup& s) { world_.act_group(s.devices, s.label); }
    void apply(size_t, const StepMigrate& s) { world_.migrate(s.device, s.network); }
    void apply(size_t, const StepPartition& s) { world_.partition(s.side); }
    void apply(size_t, const StepHeal&) { world_.heal(); }
    void apply(size_t, const StepGossip& s) {
        if (s.a.empty()) world_.gossip_all();
        else world_.gossip_pair(s.a, s.b);
    }
    void apply(size_t, const StepTick& s) { world_.run_ticks(s.n); }

    void apply(size_t, const StepSearch& s) {
        auto result = world_.ring_search(world_.eid_of_alias(s.origin),
                                         world_.eid_of_alias(s.target));
        if (result) {
            std::string path;
            for (const Eid& e : result->path)
                path += (path.empty() ? "" : ">") + world_.alias_of(e);
            report_.outputs.push_back("search " + s.origin + " " + s.target + ": path " + path +
                                      " addr " + result->address.str());
        } else {
            report_.outputs.push_back("search " + s.origin + " " + s.target + ": not-found");
        }
    }

    void apply(size_t, const StepConnect& s) {
        auto [channel, echoed] = connect(s.origin, s.target);
        if (!channel) {
            report_.outputs.push_back("connect " + s.origin + " " + s.target + ": failed");
            return;
        }
        report_.outputs.push_back(
            "connect " + s.origin + " " + s.target + ": " +
            (channel->mode == ChannelMode::Direct ? "direct"
                                                  : "relayed via " + world_.alias_of(channel->relay)) +
            (echoed ? " echo-ok" : " echo-failed"));
    }

    void apply(size_t, const StepSnapshotView& s) {
        snapshots_[s.device + "/" + s.tag] = dump_view(world_.view_of(s.device));
    }

    void apply(size_t, const StepDumpView& s) {
        report_.outputs.push_back(dump_view(world_.view_of(s.device)));
    }

    void apply(size_t, const StepDumpLog& s) {
        const auto& node = world_.node(s.device);
        Bytes archive = save_archive(node.dev.store.own_log());
        std::ofstream out(s.file, std::ios::binary);
        out.write(reinterpret_cast<const char*>(archive.data()),
                  static_cast<std::streamsize>(archive.size()));
        report_.outputs.push_back("dump-log " + s.device + " -> " + s.file + " (" +
                                  std::to_string(archive.size()) + " bytes)");
    }

    void apply(size_t line, const StepAssert& s) {
        AssertionOutcome outcome;
        outcome.line = line;
        outcome.text = render_assert_text(Step{line, s});
        std::visit([&](const auto& a) { check(a, outcome); }, s.assertion);
        report_.assertions.push_back(std::move(outcome));
        world_.trace_line("assert",
                          report_.assertions.back().passed ? "pass" : "fail", "-",
                          report_.assertions.back().text);
    }

    void check(const AssertResolve& a, AssertionOutcome& out) {
        ResolutionResult r = world_.resolve_on(a.device, a.name);
        out.evidence = resolution_str(r);
        out.passed = resolved_to_device(r, world_.eid_of_alias(a.target));
    }

    void check(const AssertResolveError& a, AssertionOutcome& out) {
        ResolutionResult r = world_.resolve_on(a.device, a.name);
        out.evidence = resolution_str(r);
        const auto* err = std::get_if<ResolveError>(&r);
        out.passed = err && err->kind == a.kind;
    }

    void check(const AssertConflicts& a, AssertionOutcome& out) {
        size_t n = world_.conflict_count(a.device);
        out.evidence = "conflicts=" + std::to_string(n);
        out.passed = (n == a.count);
    }

    void check(const AssertSameCluster& a, AssertionOutcome& out) {
        out.passed = world_.same_cluster(a.devices);
        out.evidence = out.passed ? "one class" : "distinct classes";
    }

    void check(const AssertPath& a, AssertionOutcome& out) {
        auto result = world_.ring_search(world_.eid_of_alias(a.origin),
                                         world_.eid_of_alias(a.target));
        if (!result) {
            out.evidence = "not-found";
            out.passed = false;
            return;
        }
        out.evidence = "hops=" + std::to_string(result->hops());
        out.passed = result->hops() <= a.max_hops;
    }

    void check(const AssertChannel& a, AssertionOutcome& out) {
        auto [channel, echoed] = connect(a.origin, a.target);
        if (!channel) {
            out.evidence = "channel failed";
            out.passed = false;
            return;
        }
        out.evidence = std::string(channel->mode == ChannelMode::Direct ? "direct" : "relayed") +
                       (echoed ? " echo-ok" : " echo-failed");
        out.passed = (channel->mode == a.mode) && echoed;
    }

    void check(const AssertViewUnchanged& a, AssertionOutcome& out) {
        auto it = snapshots_.find(a.device + "/" + a.tag);
        if (it == snapshots_.end()) {
            out.evidence = "no snapshot " + a.tag;
            out.passed = false;
            return;
        }
        std::string now = dump_view(world_.view_of(a.device));
        out.passed = (now == it->second);
        out.evidence = out.passed ? "identical" : "differs";
    }

    std::pair<std::optional<Channel>, bool> connect(const std::string& origin,
                                                    const std::string& target) {
        auto result = world_.ring_search(world_.eid_of_alias(origin),
                                         world_.eid_of_alias(target));
        if (!result) return {std::nullopt, false};
        auto channel = world_.open_channel(world_.eid_of_alias(origin), *result);
        if (!channel) return {std::nullopt, false};
        bool echoed = world_.channel_echo(*channel);
        return {channel, echoed};
    }

    SimWorld world_;
    Report report_;
    std::map<std::string, std::string> snapshots_;
};

struct ScenarioRun {
    Report report;
    std::string trace;
};

// Executes all steps against a fresh world. Step-level failures (not
// assertion failures) abort the run and are reported as a runtime error.
inline ScenarioRun run_scenario(const Scenario& sc) {
    ScenarioEngine engine(sc.seed, sc.config);
    for (const Step& step : sc.steps) {
        try {
            engine.execute(step);
        } catch (const std::exception& e) {
            engine.report().runtime_error =
                "line " + std::to_string(step.line) + ": " + e.what();
            break;
        }
    }
    return ScenarioRun{engine.report(), engine.world().trace()};
}

}  // namespace uia
