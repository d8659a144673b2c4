#include "marginrisk/price_series.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace marginrisk {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

Date Date::parse(const std::string& text) {
    const std::string s = trim(text);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        throw InputError("bad date '" + text + "' (expected YYYY-MM-DD)");
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i])))
            throw InputError("bad date '" + text + "' (expected YYYY-MM-DD)");
    Date d;
    d.year = std::stoi(s.substr(0, 4));
    d.month = std::stoi(s.substr(5, 2));
    d.day = std::stoi(s.substr(8, 2));
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month))
        throw InputError("invalid calendar date '" + s + "'");
    return d;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

Date Date::next_weekday() const {
    Date d = *this;
    auto advance = [](Date x) {
        x.day += 1;
        if (x.day > days_in_month(x.year, x.month)) {
            x.day = 1;
            x.month += 1;
            if (x.month > 12) {
                x.month = 1;
                x.year += 1;
            }
        }
        return x;
    };
    d = advance(d);
    // Sakamoto's congruence for the day of the week, 0 = Sunday.
    auto weekday = [](const Date& x) {
        static const int t[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
        int y = x.year - (x.month < 3 ? 1 : 0);
        return (y + y / 4 - y / 100 + y / 400 + t[x.month - 1] + x.day) % 7;
    };
    while (weekday(d) == 0 || weekday(d) == 6) d = advance(d);
    return d;
}

std::vector<double> PriceSeries::closes() const {
    std::vector<double> out;
    out.reserve(observations.size());
    for (const auto& o : observations) out.push_back(o.close);
    return out;
}

PriceSeries load_price_series(const std::string& path, const std::string& symbol,
                              std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");

    struct Row {
        Date date;
        double close;
        std::size_t file_row;
    };
    std::vector<Row> rows;

    std::string line;
    std::size_t file_row = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++file_row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (file_row == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
            static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
            line.erase(0, 3);
        if (trim(line).empty()) continue;

        if (!saw_header) {
            if (lower(trim(line)) != "date,close")
                throw InputError(path + ": row 1: expected header 'date,close'");
            saw_header = true;
            continue;
        }

        const std::size_t comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw InputError(path + ": row " + std::to_string(file_row) +
                             ": expected exactly two fields");
        const std::string date_text = trim(line.substr(0, comma));
        const std::string close_text = trim(line.substr(comma + 1));

        Row row;
        row.file_row = file_row;
        try {
            row.date = Date::parse(date_text);
        } catch (const InputError& e) {
            throw InputError(path + ": row " + std::to_string(file_row) + ": " + e.what());
        }

        char* end = nullptr;
        row.close = std::strtod(close_text.c_str(), &end);
        if (close_text.empty() || end != close_text.c_str() + close_text.size() ||
            !std::isfinite(row.close))
            throw InputError(path + ": row " + std::to_string(file_row) + ": bad close '" +
                             close_text + "'");
        if (row.close <= 0.0)
            throw InputError(path + ": row " + std::to_string(file_row) +
                             ": non-positive close " + close_text);
        rows.push_back(row);
    }
    if (!saw_header) throw InputError(path + ": empty file (no header)");
    if (rows.empty()) throw InputError(path + ": no data rows");

    const bool ordered = std::is_sorted(rows.begin(), rows.end(),
                                        [](const Row& a, const Row& b) { return a.date < b.date; });
    if (!ordered) {
        if (warnings)
            warnings->push_back(path + ": rows out of date order; sorted ascending");
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.date < b.date; });
    }
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].date == rows[i - 1].date)
            throw InputError(path + ": row " + std::to_string(rows[i].file_row) +
                             ": duplicate date " + rows[i].date.to_string());

    PriceSeries series;
    series.symbol = symbol;
    series.observations.reserve(rows.size());
    for (const auto& r : rows) series.observations.push_back({r.date, r.close});
    return series;
}

void save_price_series(const std::string& path, const PriceSeries& series) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << "date,close\n";
    for (const auto& o : series.observations) {
        std::ostringstream val;
        val.precision(15);
        val << o.close;
        out << o.date.to_string() << ',' << val.str() << '\n';
    }
}

SufficiencyVerdict check_window_sufficiency(const PriceSeries& series, std::size_t history,
                                            std::size_t horizon, std::size_t n_loans) {
    SufficiencyVerdict v;
    v.required = history + horizon + n_loans;
    v.actual = series.size();
    v.sufficient = v.actual >= v.required;
    return v;
}

}  // namespace marginrisk
