#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "ndlab/errors.hpp"

namespace support {

inline nlohmann::json golden(const std::string& name) {
    std::ifstream in(std::string(NDLAB_GOLDEN_DIR) + "/" + name);
    REQUIRE_MESSAGE(in.good(), "missing golden file " << name);
    return nlohmann::json::parse(in);
}

inline double rel(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

template <class Fn>
ndlab::ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const ndlab::LabError& e) {
        return e.code();
    }
    FAIL("expected a LabError");
    return ndlab::ErrorCode::InvalidArgument;
}

}  // namespace support
