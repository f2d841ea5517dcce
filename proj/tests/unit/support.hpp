// Shared helpers for the unit tests.
#pragma once

#include "lagdrift/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <string>
#include <unistd.h>

namespace testing {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() /
             ("lagdrift_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Runs f and returns the error code it throws; fails the test if nothing is thrown.
template <typename F>
lagdrift::ErrorCode error_of(F&& f) {
    try {
        f();
    } catch (const lagdrift::Error& e) {
        return e.code();
    }
    FAIL("expected lagdrift::Error");
    return lagdrift::ErrorCode::InvalidArgument;
}

}  // namespace testing
