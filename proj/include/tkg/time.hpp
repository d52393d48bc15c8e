#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tkg {

// UTC seconds since the Unix epoch, or Unknown. Ordering comparisons that
// involve Unknown throw ValidationError instead of picking a default.
class Timestamp {
public:
    constexpr Timestamp() = default;
    constexpr explicit Timestamp(std::int64_t seconds) : value_(seconds) {}

    static constexpr Timestamp unknown() { return Timestamp{}; }
    static Timestamp from_date(int year, unsigned month = 1, unsigned day = 1,
                               int hour = 0, int minute = 0, int second = 0);

    // Accepts YYYY, YYYY-MM, YYYY-MM-DD and YYYY-MM-DDTHH:MM[:SS][Z|+HH:MM|-HH:MM].
    static Timestamp parse_iso8601(std::string_view text);

    constexpr bool known() const noexcept { return value_.has_value(); }
    std::int64_t seconds() const;

    // "YYYY-MM-DDTHH:MM:SSZ"; throws on Unknown.
    std::string iso8601() const;
    // "YYYY-MM-DD", or "unknown time" for Unknown.
    std::string date_label() const;
    int year() const;

    friend constexpr bool operator==(const Timestamp&, const Timestamp&) = default;
    friend std::strong_ordering operator<=>(const Timestamp& a, const Timestamp& b);

private:
    std::optional<std::int64_t> value_;
};

struct TemporalInterval {
    Timestamp start;
    Timestamp end;

    // Throws IntervalError when both ends are known and start > end.
    void validate() const;

    friend bool operator==(const TemporalInterval&, const TemporalInterval&) = default;
};

// Strict-weak order usable for sorting and map keys; Unknown sorts first.
bool interval_less(const TemporalInterval& a, const TemporalInterval& b);

} // namespace tkg
