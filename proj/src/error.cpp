#include "neoface/error.hpp"

namespace neoface {

namespace {

std::string join_violations(const std::vector<std::string>& v) {
    std::string msg = std::to_string(v.size()) + " validation error(s)";
    for (const auto& s : v) msg += "\n  " + s;
    return msg;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

}  // namespace neoface
