#pragma once

#include <stdexcept>
#include <string>

namespace specboot {

inline constexpr const char* kSchemaVersion = "1.0";

// Error hierarchy. CLI maps input_error -> exit 2, numerical_error -> exit 3.
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct parameter_error : input_error {
    using input_error::input_error;
};

struct domain_error : input_error {
    using input_error::input_error;
};

struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace specboot
