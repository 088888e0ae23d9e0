#pragma once

#include <compare>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace antic {

// Order of a Renyi entropy. Any value in [0, inf]; 0, 1 and inf have closed forms.
class Alpha {
public:
    constexpr Alpha() = default;
    explicit Alpha(double value);

    static constexpr Alpha zero() { return Alpha(Raw{0.0}); }
    static constexpr Alpha shannon() { return Alpha(Raw{1.0}); }
    static constexpr Alpha infinity() { return Alpha(Raw{std::numeric_limits<double>::infinity()}); }

    // Accepts decimal numbers and "inf".
    static Alpha parse(std::string_view text);

    constexpr double value() const { return value_; }
    constexpr bool is_zero() const { return value_ == 0.0; }
    constexpr bool is_shannon() const { return value_ == 1.0; }
    constexpr bool is_infinite() const { return value_ == std::numeric_limits<double>::infinity(); }

    // Shortest text that parses back to the same value ("0.5", "1", "inf").
    std::string to_string() const;

    friend constexpr auto operator<=>(const Alpha&, const Alpha&) = default;

private:
    struct Raw {
        double v;
    };
    constexpr explicit Alpha(Raw r) : value_(r.v) {}

    double value_ = 1.0;
};

std::vector<Alpha> default_alpha_grid();

}  // namespace antic
