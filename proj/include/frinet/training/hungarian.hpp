// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "frinet/ndgrad/array2.hpp"

namespace frinet::training {

/// Minimum-cost perfect assignment on a square cost matrix.
/// Returns assignment[row] = column. Among all optimal assignments the
/// lexicographically smallest one (by row order) is returned, so ties go to
/// the lowest predicted-slot index first.
inline std::vector<std::size_t> hungarian(const ndgrad::Array2<double>& cost) {
    const std::size_t n = cost.rows();
    if (cost.cols() != n) throw ShapeError("hungarian: cost matrix must be square, got " + cost.shape());
    if (n == 0) return {};

    // Shortest augmenting path with potentials, 1-based internal indexing.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<std::size_t> match(n), owner(n);
    for (std::size_t j = 1; j <= n; ++j) {
        match[p[j] - 1] = j - 1;
        owner[j - 1] = p[j] - 1;
    }

    // Canonicalize: every optimal assignment lives on the tight edges of the
    // optimal dual, so walk rows in order and move each to its smallest tight
    // column that still admits a perfect matching of the remaining rows.
    double scale = 0.0;
    for (double c : cost) scale = std::max(scale, std::abs(c));
    const double tol = 1e-12 * (1.0 + scale) * double(n);
    auto tight = [&](std::size_t r, std::size_t c) { return cost(r, c) - u[r + 1] - v[c + 1] <= tol; };

    std::vector<std::size_t> prev_col(n);
    std::vector<char> seen(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < match[i]; ++k) {
            if (!tight(i, k) || owner[k] < i) continue;
            // Alternating path from owner[k] to the column match[i] through free rows > i.
            const std::size_t target = match[i];
            std::fill(seen.begin(), seen.end(), 0);
            std::vector<std::size_t> queue{owner[k]};
            seen[owner[k]] = 1;
            std::vector<std::size_t> via_row(n, n); // column -> row that reached it
            std::size_t found = n;
            for (std::size_t qi = 0; qi < queue.size() && found == n; ++qi) {
                const std::size_t r = queue[qi];
                for (std::size_t c = 0; c < n; ++c) {
                    if (c == k || owner[c] < i || !tight(r, c)) continue;
                    if (c == target) {
                        via_row[c] = r;
                        found = c;
                        break;
                    }
                    const std::size_t r2 = owner[c];
                    if (r2 == i || seen[r2]) continue;
                    seen[r2] = 1;
                    via_row[c] = r;
                    queue.push_back(r2);
                }
            }
            if (found == n) continue;
            // Rotate along the path: each row on it takes the column it reached.
            std::size_t c = target;
            while (true) {
                const std::size_t r = via_row[c];
                const std::size_t old = match[r];
                match[r] = c;
                owner[c] = r;
                if (old == k) break;
                c = old;
            }
            match[i] = k;
            owner[k] = i;
            break;
        }
    }
    return match;
}

inline double assignment_cost(const ndgrad::Array2<double>& cost, const std::vector<std::size_t>& assignment) {
    double s = 0.0;
    for (std::size_t i = 0; i < assignment.size(); ++i) s += cost(i, assignment[i]);
    return s;
}

} // namespace frinet::training
