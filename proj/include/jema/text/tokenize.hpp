#pragma once

#include <string>
#include <vector>

namespace jema {

// Lowercased alphanumeric tokens. Punctuation (hyphens included) splits, so
// "stir-fry" becomes two tokens; digits survive as their own tokens. Bytes
// above 0x7F are kept verbatim, which leaves UTF-8 sequences intact.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (const char ch : text) {
        const unsigned char u = static_cast<unsigned char>(ch);
        const bool keep = (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') ||
                          (u >= '0' && u <= '9') || u >= 0x80;
        if (keep) {
            cur.push_back((u >= 'A' && u <= 'Z') ? static_cast<char>(u - 'A' + 'a')
                                                 : ch);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens, char sep) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(sep);
        out += tokens[i];
    }
    return out;
}

// Canonical multi-word term form: lowercase, underscore-joined.
inline std::string normalize_term(const std::string& raw) {
    return join_tokens(tokenize(raw), '_');
}

} // namespace jema
