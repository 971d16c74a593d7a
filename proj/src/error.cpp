#include "floodtwin/error.hpp"

namespace floodtwin {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace floodtwin
