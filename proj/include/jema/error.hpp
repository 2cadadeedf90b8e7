#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace jema {

// Every recoverable failure in the library throws Error. The message carries
// the full context (op name, shapes, offending value, ...) so callers never
// need to re-derive it.
class Error : public std::runtime_error {
public:
    explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

namespace detail {

inline void str_append(std::ostringstream&) {}

template <typename T, typename... Rest>
void str_append(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    str_append(os, rest...);
}

} // namespace detail

// cat("rows=", 3, " cols=", 4) -> "rows=3 cols=4"
template <typename... Parts>
std::string cat(const Parts&... parts) {
    std::ostringstream os;
    detail::str_append(os, parts...);
    return os.str();
}

template <typename... Parts>
[[noreturn]] void fail(const Parts&... parts) {
    throw Error(cat(parts...));
}

} // namespace jema
