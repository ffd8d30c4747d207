#pragma once

#include <stdexcept>
#include <string>

namespace pcahn {

/// Domain or numerical failure surfaced to callers (CLI maps these to exit code 2).
struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw error(what);
}

} // namespace pcahn
