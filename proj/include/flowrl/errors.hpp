#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace flowrl {

namespace detail {
inline void append_all(std::ostringstream&) {}

template <typename T, typename... Rest>
void append_all(std::ostringstream& os, const T& head, const Rest&... rest) {
    os << head;
    append_all(os, rest...);
}
}  // namespace detail

template <typename... Parts>
std::string msg(const Parts&... parts) {
    std::ostringstream os;
    detail::append_all(os, parts...);
    return os.str();
}

template <typename... Parts>
[[noreturn]] void fail(const Parts&... parts) {
    throw std::runtime_error(msg(parts...));
}

template <typename... Parts>
void require(bool cond, const Parts&... parts) {
    if (!cond) fail(parts...);
}

}  // namespace flowrl
