#include "tkg/time.hpp"

#include "tkg/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace tkg {

namespace {

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
    std::int64_t year;
    unsigned month;
    unsigned day;
};

Civil civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {y + (m <= 2), m, d};
}

bool leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int64_t y, unsigned m) {
    static constexpr std::array<unsigned, 12> kDays{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && leap(y) ? 29 : kDays[m - 1];
}

int read_fixed(std::string_view text, std::size_t& pos, std::size_t width) {
    if (pos + width > text.size()) {
        throw ValidationError("malformed timestamp '" + std::string(text) + "'");
    }
    int value = 0;
    for (std::size_t i = 0; i < width; ++i) {
        const char c = text[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            throw ValidationError("malformed timestamp '" + std::string(text) + "'");
        }
        value = value * 10 + (c - '0');
    }
    pos += width;
    return value;
}

void expect(std::string_view text, std::size_t& pos, char c) {
    if (pos >= text.size() || text[pos] != c) {
        throw ValidationError("malformed timestamp '" + std::string(text) + "'");
    }
    ++pos;
}

} // namespace

Timestamp Timestamp::from_date(int year, unsigned month, unsigned day, int hour, int minute, int second) {
    if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month) || hour < 0 || hour > 23 ||
        minute < 0 || minute > 59 || second < 0 || second > 60) {
        throw ValidationError("date out of range");
    }
    return Timestamp{days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second};
}

Timestamp Timestamp::parse_iso8601(std::string_view text) {
    std::size_t pos = 0;
    const int year = read_fixed(text, pos, 4);
    unsigned month = 1, day = 1;
    int hour = 0, minute = 0, second = 0;
    std::int64_t offset = 0;
    if (pos < text.size()) {
        expect(text, pos, '-');
        month = static_cast<unsigned>(read_fixed(text, pos, 2));
    }
    if (pos < text.size()) {
        expect(text, pos, '-');
        day = static_cast<unsigned>(read_fixed(text, pos, 2));
    }
    if (pos < text.size()) {
        if (text[pos] != 'T' && text[pos] != ' ') {
            throw ValidationError("malformed timestamp '" + std::string(text) + "'");
        }
        ++pos;
        hour = read_fixed(text, pos, 2);
        expect(text, pos, ':');
        minute = read_fixed(text, pos, 2);
        if (pos < text.size() && text[pos] == ':') {
            ++pos;
            second = read_fixed(text, pos, 2);
        }
        if (pos < text.size()) {
            if (text[pos] == 'Z') {
                ++pos;
            } else if (text[pos] == '+' || text[pos] == '-') {
                const int sign = text[pos] == '+' ? 1 : -1;
                ++pos;
                const int oh = read_fixed(text, pos, 2);
                expect(text, pos, ':');
                const int om = read_fixed(text, pos, 2);
                offset = sign * (oh * 3600 + om * 60);
            }
        }
    }
    if (pos != text.size()) {
        throw ValidationError("malformed timestamp '" + std::string(text) + "'");
    }
    const Timestamp local = from_date(year, month, day, hour, minute, second);
    return Timestamp{local.seconds() - offset};
}

std::int64_t Timestamp::seconds() const {
    if (!value_) {
        throw ValidationError("unknown timestamp has no value");
    }
    return *value_;
}

std::string Timestamp::iso8601() const {
    const std::int64_t s = seconds();
    std::int64_t days = s / 86400;
    std::int64_t rem = s % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const Civil c = civil_from_days(days);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02dZ", static_cast<long long>(c.year), c.month,
                  c.day, static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
    return buf;
}

std::string Timestamp::date_label() const {
    if (!known()) {
        return "unknown time";
    }
    return iso8601().substr(0, 10);
}

int Timestamp::year() const {
    std::int64_t days = seconds() / 86400;
    if (seconds() % 86400 < 0) {
        --days;
    }
    return static_cast<int>(civil_from_days(days).year);
}

std::strong_ordering operator<=>(const Timestamp& a, const Timestamp& b) {
    if (!a.known() || !b.known()) {
        throw ValidationError("ordering comparison involving an unknown timestamp");
    }
    return *a.value_ <=> *b.value_;
}

void TemporalInterval::validate() const {
    if (start.known() && end.known() && start > end) {
        throw IntervalError("interval start " + start.iso8601() + " is after end " + end.iso8601());
    }
}

bool interval_less(const TemporalInterval& a, const TemporalInterval& b) {
    auto key = [](const Timestamp& t) {
        return t.known() ? std::pair<int, std::int64_t>{1, t.seconds()} : std::pair<int, std::int64_t>{0, 0};
    };
    return std::pair{key(a.start), key(a.end)} < std::pair{key(b.start), key(b.end)};
}

} // namespace tkg
