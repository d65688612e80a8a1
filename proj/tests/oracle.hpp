#pragma once

// Brute-force information quantities straight from sample tuples. Written
// independently of the library: no contingency tables, no sorting tricks.

#include <cmath>
#include <map>
#include <vector>

namespace oracle {

using Sample = std::vector<int>;

inline double entropy_of(const std::vector<Sample>& xs)
{
    std::map<Sample, double> c;
    for (const auto& x : xs) {
        c[x] += 1.0;
    }
    const double n = static_cast<double>(xs.size());
    double h = 0.0;
    for (const auto& [_, k] : c) {
        const double p = k / n;
        h -= p * std::log2(p);
    }
    return h;
}

inline std::vector<Sample> project(const std::vector<Sample>& rows, const std::vector<int>& cols)
{
    std::vector<Sample> out;
    for (const auto& r : rows) {
        Sample s;
        for (int c : cols) {
            s.push_back(r[static_cast<std::size_t>(c)]);
        }
        out.push_back(s);
    }
    return out;
}

inline double mi(const std::vector<Sample>& rows, const std::vector<int>& src, const std::vector<int>& tgt)
{
    std::vector<int> both = src;
    both.insert(both.end(), tgt.begin(), tgt.end());
    return entropy_of(project(rows, src)) + entropy_of(project(rows, tgt)) - entropy_of(project(rows, both));
}

// Williams-Beer specific information of column `s` about value t of column `tc`.
inline double specific(const std::vector<Sample>& rows, const std::vector<int>& src, int tc, int t)
{
    std::map<Sample, double> ns;
    std::map<Sample, double> nst;
    double nt = 0.0;
    for (const auto& r : rows) {
        Sample s;
        for (int c : src) {
            s.push_back(r[static_cast<std::size_t>(c)]);
        }
        ns[s] += 1.0;
        if (r[static_cast<std::size_t>(tc)] == t) {
            nst[s] += 1.0;
            nt += 1.0;
        }
    }
    const double n = static_cast<double>(rows.size());
    const double pt = nt / n;
    double out = 0.0;
    for (const auto& [s, k] : nst) {
        const double p_s_given_t = k / nt;
        const double p_t_given_s = k / ns[s];
        out += p_s_given_t * std::log2(p_t_given_s / pt);
    }
    return out;
}

struct Atoms {
    double red, ui_x, ui_y, syn, total;
};

// Two-source I_min PID over sample rows (x, y, t).
inline Atoms imin_pid(const std::vector<Sample>& rows)
{
    std::map<int, double> ct;
    for (const auto& r : rows) {
        ct[r[2]] += 1.0;
    }
    double red = 0.0;
    for (const auto& [t, k] : ct) {
        const double pt = k / static_cast<double>(rows.size());
        red += pt * std::min(specific(rows, {0}, 2, t), specific(rows, {1}, 2, t));
    }
    const double ix = mi(rows, {0}, {2});
    const double iy = mi(rows, {1}, {2});
    const double total = mi(rows, {0, 1}, {2});
    return {red, ix - red, iy - red, total - ix - iy + red, total};
}

}  // namespace oracle
