#pragma once

#include <array>
#include <string_view>

#include "avsl/errors.hpp"

namespace avsl {

// The three negative-audio conditions every evaluation item carries.
enum class Condition { silence = 0, noise = 1, offscreen = 2 };

inline constexpr std::array<Condition, 3> kAllConditions = {
    Condition::silence, Condition::noise, Condition::offscreen};

inline std::string_view condition_name(Condition c) {
    switch (c) {
        case Condition::silence: return "silence";
        case Condition::noise: return "noise";
        case Condition::offscreen: return "offscreen";
    }
    return "unknown";
}

inline Condition condition_from_name(std::string_view name) {
    for (Condition c : kAllConditions) {
        if (condition_name(c) == name) return c;
    }
    raise(ErrorKind::config_error, "unknown condition name: " + std::string(name));
}

} // namespace avsl
