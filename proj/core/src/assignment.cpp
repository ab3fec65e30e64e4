#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "subterra/auction.hpp"

namespace subterra::auction {

namespace {

// Hungarian method (shortest augmenting path with potentials) for a dense
// rows <= cols cost matrix; returns the column matched to every row.
std::vector<std::size_t> hungarian_min_cost(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    const std::size_t m = n ? cost.front().size() : 0;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    std::vector<bool> used(m + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
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
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j]) {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    return row_to_col;
}

// Optimal total profit over the active rows/columns. Non-edges weigh zero,
// which is equivalent to leaving the row unmatched since all profits are > 0.
double optimum(const ProfitMatrix& w, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    if (rows.empty() || cols.empty()) {
        return 0.0;
    }
    const std::size_t n = std::max(rows.size(), cols.size());
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (const auto& rho = w.at(rows[r], cols[c])) {
                cost[r][c] = -*rho;
            }
        }
    }
    const auto match = hungarian_min_cost(cost);
    double total = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (match[r] < cols.size()) {
            if (const auto& rho = w.at(rows[r], cols[match[r]])) {
                total += *rho;
            }
        }
    }
    return total;
}

bool same_value(double a, double b) {
    return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

std::optional<std::size_t> Assignment::task_of(std::size_t agent) const {
    for (const auto& [a, t] : pairs) {
        if (a == agent) {
            return t;
        }
    }
    return std::nullopt;
}

Assignment solve_assignment(const ProfitMatrix& profits) {
    Assignment result;
    std::vector<std::size_t> rows(profits.n_agents());
    std::vector<std::size_t> cols(profits.n_tasks());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    for (std::size_t c = 0; c < cols.size(); ++c) cols[c] = c;

    const double best = optimum(profits, rows, cols);
    double fixed = 0.0;

    // Fix agents in index order to the lowest task that preserves the optimum.
    for (std::size_t agent = 0; agent < profits.n_agents(); ++agent) {
        rows.erase(std::find(rows.begin(), rows.end(), agent));
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const std::size_t task = cols[c];
            const auto& rho = profits.at(agent, task);
            if (!rho) {
                continue;
            }
            std::vector<std::size_t> rest = cols;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(c));
            if (same_value(fixed + *rho + optimum(profits, rows, rest), best)) {
                result.pairs.emplace_back(agent, task);
                fixed += *rho;
                cols = std::move(rest);
                break;
            }
        }
    }
    result.objective = fixed;
    return result;
}

bool satisfies_constraints(const Assignment& assignment, std::size_t n_agents, std::size_t n_tasks) {
    std::vector<int> per_agent(n_agents, 0);
    std::vector<int> per_task(n_tasks, 0);
    for (const auto& [a, t] : assignment.pairs) {
        if (a >= n_agents || t >= n_tasks) {
            return false;
        }
        if (++per_agent[a] > 1 || ++per_task[t] > 1) {
            return false;
        }
    }
    return true;
}

}  // namespace subterra::auction
