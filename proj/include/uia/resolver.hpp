#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "uia/label.hpp"
#include "uia/view.hpp"

namespace uia {

// Dotted user-relative name, labels kept in written (left-to-right) order.
struct DottedName {
    std::vector<Label> labels;

    std::string str() const {
        std::string out;
        for (size_t i = 0; i < labels.size(); ++i) {
            if (i) out.push_back('.');
            out += labels[i].text();
        }
        return out;
    }
};

enum class NameParseErrorKind { EmptyLabel, BadCharacter, TooLong };

struct NameParseError {
    NameParseErrorKind kind;
    size_t position = 0;  // 1-based label position; 0 means the whole name

    std::string str() const {
        const char* k = kind == NameParseErrorKind::EmptyLabel     ? "empty-label"
                        : kind == NameParseErrorKind::BadCharacter ? "bad-character"
                                                                   : "too-long";
        return std::string(k) + " at position " + std::to_string(position);
    }
};

using ParseNameResult = std::variant<DottedName, NameParseError>;

// Splits on dots and validates every label; order is preserved.
inline ParseNameResult parse_name(std::string_view text) {
    if (text.size() > 255) return NameParseError{NameParseErrorKind::TooLong, 0};
    DottedName name;
    size_t start = 0;
    size_t position = 1;
    while (true) {
        size_t dot = text.find('.', start);
        std::string_view piece =
            dot == std::string_view::npos ? text.substr(start) : text.substr(start, dot - start);
        if (auto err = Label::check(piece)) {
            NameParseErrorKind kind;
            switch (*err) {
                case LabelError::Empty: kind = NameParseErrorKind::EmptyLabel; break;
                case LabelError::TooLong: kind = NameParseErrorKind::TooLong; break;
                default: kind = NameParseErrorKind::BadCharacter; break;
            }
            return NameParseError{kind, position};
        }
        name.labels.push_back(*Label::parse(piece));
        if (dot == std::string_view::npos) break;
        start = dot + 1;
        ++position;
    }
    return name;
}

struct ResolvedDevice {
    Eid eid;
    bool operator==(const ResolvedDevice&) const = default;
};

struct ResolvedNamespace {
    RecordPointer class_rep;
    bool operator==(const ResolvedNamespace&) const = default;
};

using ResolutionOutcome = std::variant<ResolvedDevice, ResolvedNamespace>;

enum class ResolveErrorKind { NotFound, Ambiguous, TypeMismatch };

inline const char* resolve_error_name(ResolveErrorKind k) {
    switch (k) {
        case ResolveErrorKind::NotFound: return "not-found";
        case ResolveErrorKind::Ambiguous: return "ambiguous";
        case ResolveErrorKind::TypeMismatch: return "type-mismatch";
    }
    return "unknown";
}

struct ResolveError {
    ResolveErrorKind kind;
    std::string label;  // normalized label at which resolution stopped
    std::vector<BindingTarget> targets;  // populated for Ambiguous
};

using ResolutionResult = std::variant<ResolutionOutcome, ResolveError>;

inline bool resolved_to_device(const ResolutionResult& r, const Eid& eid) {
    const auto* out = std::get_if<ResolutionOutcome>(&r);
    if (!out) return false;
    const auto* dev = std::get_if<ResolvedDevice>(out);
    return dev && dev->eid == eid;
}

inline std::string resolution_str(const ResolutionResult& r) {
    if (const auto* out = std::get_if<ResolutionOutcome>(&r)) {
        if (const auto* dev = std::get_if<ResolvedDevice>(out))
            return "device(" + dev->eid.short_hex() + ")";
        return "namespace(" + std::get<ResolvedNamespace>(*out).class_rep.str() + ")";
    }
    const auto& err = std::get<ResolveError>(r);
    return std::string("error(") + resolve_error_name(err.kind) + " at \"" + err.label + "\")";
}

// Right-to-left traversal from the given root class, entirely local to the
// view. A device target is only valid at the final (leftmost) label; a label
// under an active name conflict resolves as Ambiguous.
inline ResolutionResult resolve(const NamespaceViewResult& view, const NamespaceClass& root,
                                const DottedName& name) {
    RecordPointer current = root.representative;
    for (size_t i = name.labels.size(); i-- > 0;) {
        const std::string label = name.labels[i].normalized();
        const std::vector<Binding>* bindings = view.find_bindings(current, label);
        if (!bindings || bindings->empty())
            return ResolveError{ResolveErrorKind::NotFound, label, {}};
        std::set<BindingTarget> targets;
        for (const Binding& b : *bindings) targets.insert(b.target);
        if (targets.size() > 1)
            return ResolveError{ResolveErrorKind::Ambiguous, label,
                                {targets.begin(), targets.end()}};
        const BindingTarget& target = *targets.begin();
        bool final_label = (i == 0);
        if (const Eid* device = std::get_if<Eid>(&target)) {
            if (!final_label) return ResolveError{ResolveErrorKind::TypeMismatch, label, {}};
            return ResolutionOutcome{ResolvedDevice{*device}};
        }
        const RecordPointer& next = std::get<RecordPointer>(target);
        if (final_label) return ResolutionOutcome{ResolvedNamespace{next}};
        current = next;
    }
    // Unreachable for nonempty names; an empty name resolves to the root.
    return ResolutionOutcome{ResolvedNamespace{current}};
}

inline ResolutionResult resolve(const NamespaceViewResult& view, const NamespaceClass& root,
                                std::string_view text) {
    ParseNameResult parsed = parse_name(text);
    if (const auto* err = std::get_if<NameParseError>(&parsed))
        return ResolveError{ResolveErrorKind::NotFound, "<parse: " + err->str() + ">", {}};
    return resolve(view, root, std::get<DottedName>(parsed));
}

}  // namespace uia
