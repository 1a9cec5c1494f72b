#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace cfsat {

// Bool-sorted variables range over {0, 1} and appear in linear terms like
// any other variable.
enum class Sort { Bool, Int, Real };

std::string_view sort_name(Sort s);

struct Var {
    std::string name;
    Sort sort = Sort::Real;

    friend bool operator==(const Var&, const Var&) = default;
    friend auto operator<=>(const Var& a, const Var& b) { return a.name <=> b.name; }
};

inline bool is_integral(Sort s) { return s != Sort::Real; }

} // namespace cfsat
