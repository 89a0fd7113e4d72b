#pragma once

#include <cctype>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace uia {

// Why a label failed validation. Positions are 1-based character offsets
// within the label.
enum class LabelError {
    Empty,
    TooLong,
    BadCharacter,
    LeadingHyphen,
    TrailingHyphen,
};

inline const char* label_error_name(LabelError e) {
    switch (e) {
        case LabelError::Empty: return "empty";
        case LabelError::TooLong: return "too-long";
        case LabelError::BadCharacter: return "bad-character";
        case LabelError::LeadingHyphen: return "leading-hyphen";
        case LabelError::TrailingHyphen: return "trailing-hyphen";
    }
    return "unknown";
}

// DNS-style label: 1-63 ASCII letters, digits, or hyphens, with no hyphen
// at either end. The original spelling is kept; comparisons lowercase.
class Label {
public:
    static std::optional<LabelError> check(std::string_view text) {
        if (text.empty()) return LabelError::Empty;
        if (text.size() > 63) return LabelError::TooLong;
        if (text.front() == '-') return LabelError::LeadingHyphen;
        if (text.back() == '-') return LabelError::TrailingHyphen;
        for (char c : text) {
            bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-';
            if (!ok) return LabelError::BadCharacter;
        }
        return std::nullopt;
    }

    static std::optional<Label> parse(std::string_view text) {
        if (check(text)) return std::nullopt;
        return Label(std::string(text));
    }

    static std::string normalize(std::string_view text) {
        std::string out(text);
        for (char& c : out)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        return out;
    }

    const std::string& text() const { return text_; }
    std::string normalized() const { return normalize(text_); }

    // Equality and ordering are case-insensitive.
    friend bool operator==(const Label& a, const Label& b) {
        return a.normalized() == b.normalized();
    }
    friend auto operator<=>(const Label& a, const Label& b) {
        return a.normalized() <=> b.normalized();
    }

private:
    explicit Label(std::string text) : text_(std::move(text)) {}
    std::string text_;
};

}  // namespace uia
