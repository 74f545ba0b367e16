#pragma once

#include <stdexcept>
#include <string>

namespace winnow {

// Error categories map onto CLI exit codes: usage=2, data=3, io=4.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace winnow
