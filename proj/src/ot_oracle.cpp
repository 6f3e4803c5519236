#include "emdloss/ot_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "emdloss/errors.hpp"

namespace emdloss {
namespace {

constexpr double kPerturb = 1e-12;       // added to each supply entry
constexpr double kReducedCostTol = 1e-11;

// Basis spanning tree on the bipartite node set: rows are nodes [0, m),
// columns are nodes [m, m+n).
struct Basis {
    std::size_t m = 0, n = 0;
    std::vector<std::vector<std::size_t>> adj;  // node -> incident edge ids
    std::vector<std::size_t> edge_row, edge_col;
    std::vector<double> edge_flow;

    std::size_t col_node(std::size_t j) const { return m + j; }

    std::size_t add_edge(std::size_t i, std::size_t j, double flow) {
        std::size_t id = edge_row.size();
        edge_row.push_back(i);
        edge_col.push_back(j);
        edge_flow.push_back(flow);
        adj[i].push_back(id);
        adj[col_node(j)].push_back(id);
        return id;
    }

    void remove_edge(std::size_t id) {
        auto detach = [&](std::size_t node) {
            auto& edges = adj[node];
            edges.erase(std::find(edges.begin(), edges.end(), id));
        };
        detach(edge_row[id]);
        detach(col_node(edge_col[id]));
        // swap-with-last keeps edge ids dense
        std::size_t last = edge_row.size() - 1;
        if (id != last) {
            edge_row[id] = edge_row[last];
            edge_col[id] = edge_col[last];
            edge_flow[id] = edge_flow[last];
            auto relabel = [&](std::size_t node) {
                for (auto& e : adj[node])
                    if (e == last) e = id;
            };
            relabel(edge_row[id]);
            relabel(col_node(edge_col[id]));
        }
        edge_row.pop_back();
        edge_col.pop_back();
        edge_flow.pop_back();
    }

    std::size_t other_end(std::size_t edge, std::size_t node) const {
        std::size_t r = edge_row[edge], c = col_node(edge_col[edge]);
        return node == r ? c : r;
    }

    // Unique tree path between two nodes, as edge ids.
    std::vector<std::size_t> path(std::size_t from, std::size_t to) const {
        std::vector<std::size_t> parent_edge(m + n, SIZE_MAX);
        std::vector<std::size_t> parent_node(m + n, SIZE_MAX);
        std::vector<char> seen(m + n, 0);
        std::vector<std::size_t> stack{from};
        seen[from] = 1;
        while (!stack.empty()) {
            std::size_t node = stack.back();
            stack.pop_back();
            if (node == to) break;
            for (std::size_t e : adj[node]) {
                std::size_t next = other_end(e, node);
                if (!seen[next]) {
                    seen[next] = 1;
                    parent_edge[next] = e;
                    parent_node[next] = node;
                    stack.push_back(next);
                }
            }
        }
        std::vector<std::size_t> edges;
        for (std::size_t node = to; node != from; node = parent_node[node])
            edges.push_back(parent_edge[node]);
        std::reverse(edges.begin(), edges.end());
        return edges;
    }

    // Duals from c_ij = u_i + v_j on basic cells, rooted at u_0 = 0.
    void compute_duals(const Mat& cost, Vec& u, Vec& v) const {
        u.assign(m, 0.0);
        v.assign(n, 0.0);
        std::vector<char> seen(m + n, 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            std::size_t node = stack.back();
            stack.pop_back();
            for (std::size_t e : adj[node]) {
                std::size_t next = other_end(e, node);
                if (seen[next]) continue;
                seen[next] = 1;
                std::size_t i = edge_row[e], j = edge_col[e];
                if (next >= m)
                    v[j] = cost(i, j) - u[i];
                else
                    u[i] = cost(i, j) - v[j];
                stack.push_back(next);
            }
        }
    }

    // Re-solve basic flows for given marginals by leaf elimination. The tree
    // determines them uniquely; degenerate ones may come out as tiny
    // negatives, which the caller clamps.
    std::vector<double> solve_flows(const Vec& a, const Vec& b) const {
        std::vector<double> residual(m + n);
        for (std::size_t i = 0; i < m; ++i) residual[i] = a[i];
        for (std::size_t j = 0; j < n; ++j) residual[m + j] = b[j];
        std::vector<std::size_t> degree(m + n);
        for (std::size_t node = 0; node < m + n; ++node) degree[node] = adj[node].size();
        std::vector<char> edge_done(edge_row.size(), 0), node_done(m + n, 0);
        std::vector<double> flow(edge_row.size(), 0.0);
        std::vector<std::size_t> leaves;
        for (std::size_t node = 0; node < m + n; ++node)
            if (degree[node] == 1) leaves.push_back(node);
        while (!leaves.empty()) {
            std::size_t node = leaves.back();
            leaves.pop_back();
            if (node_done[node]) continue;
            std::size_t pending = SIZE_MAX;
            for (std::size_t e : adj[node])
                if (!edge_done[e]) pending = e;
            if (pending == SIZE_MAX) {
                node_done[node] = 1;
                continue;
            }
            flow[pending] = residual[node];
            edge_done[pending] = 1;
            node_done[node] = 1;
            std::size_t next = other_end(pending, node);
            residual[next] -= residual[node];
            if (--degree[next] == 1 && !node_done[next]) leaves.push_back(next);
        }
        return flow;
    }
};

struct Working {
    std::size_t m, n;
    Vec a, b;   // balanced, unperturbed marginals
    Mat cost;   // m x n, slack entries zero-cost
};

Working balance(const TransportProblem& p) {
    Working w;
    const std::size_t m0 = p.supply.size(), n0 = p.demand.size();
    const double total_supply = vec_sum(p.supply);
    const double total_demand = vec_sum(p.demand);
    const double scale = std::max({total_supply, total_demand, 1.0});
    const double gap = total_supply - total_demand;

    w.m = m0;
    w.n = n0;
    w.a = p.supply;
    w.b = p.demand;
    if (gap > 1e-12 * scale) {
        w.b.push_back(gap);  // slack consumer absorbs excess supply
        w.n = n0 + 1;
    } else if (gap < -1e-12 * scale) {
        w.a.push_back(-gap);  // slack supplier covers excess demand
        w.m = m0 + 1;
    } else if (gap != 0.0) {
        // negligible imbalance: fold into the largest marginal
        if (gap > 0)
            w.b[std::max_element(w.b.begin(), w.b.end()) - w.b.begin()] += gap;
        else
            w.a[std::max_element(w.a.begin(), w.a.end()) - w.a.begin()] -= gap;
    }
    w.cost = Mat(w.m, w.n, 0.0);
    for (std::size_t i = 0; i < m0; ++i)
        for (std::size_t j = 0; j < n0; ++j) w.cost(i, j) = p.cost(i, j);
    return w;
}

Basis northwest_corner(const Vec& a, const Vec& b) {
    const std::size_t m = a.size(), n = b.size();
    Basis basis;
    basis.m = m;
    basis.n = n;
    basis.adj.assign(m + n, {});
    Vec rem_a = a, rem_b = b;
    std::size_t i = 0, j = 0;
    while (true) {
        double f = std::min(rem_a[i], rem_b[j]);
        basis.add_edge(i, j, f);
        rem_a[i] -= f;
        rem_b[j] -= f;
        if (i == m - 1 && j == n - 1) break;
        // advance exactly one index per step so the basis has m+n-1 cells
        if (i < m - 1 && (rem_a[i] <= rem_b[j] || j == n - 1))
            ++i;
        else
            ++j;
    }
    return basis;
}

}  // namespace

void TransportProblem::validate() const {
    const std::size_t m = supply.size(), n = demand.size();
    if (m == 0 || n == 0) throw invalid_input_error("transport problem: empty marginals");
    if (cost.rows() != m || cost.cols() != n)
        throw invalid_input_error("transport problem: cost must be " + std::to_string(m) + "x" +
                                  std::to_string(n));
    for (double x : supply)
        if (!(x >= 0.0) || !std::isfinite(x))
            throw invalid_input_error("transport problem: bad supply entry");
    for (double x : demand)
        if (!(x >= 0.0) || !std::isfinite(x))
            throw invalid_input_error("transport problem: bad demand entry");
    for (double x : cost.data())
        if (!(x >= 0.0) || !std::isfinite(x))
            throw invalid_input_error("transport problem: bad cost entry");
    if (vec_sum(supply) <= 0.0 && vec_sum(demand) <= 0.0)
        throw invalid_input_error("transport problem: zero total mass on both sides");
}

TransportPlan solve_transport(const TransportProblem& problem) {
    problem.validate();
    const std::size_t m0 = problem.supply.size(), n0 = problem.demand.size();

    Working w = balance(problem);
    const std::size_t m = w.m, n = w.n;

    // perturbed marginals drive pivoting; clean ones produce the final flows
    Vec pa = w.a, pb = w.b;
    for (std::size_t i = 0; i < m; ++i) pa[i] += kPerturb;
    pb[n - 1] += kPerturb * static_cast<double>(m);

    Basis basis = northwest_corner(pa, pb);

    Vec u, v;
    std::vector<char> is_basic(m * n, 0);
    auto rebuild_basic_flags = [&] {
        std::fill(is_basic.begin(), is_basic.end(), 0);
        for (std::size_t e = 0; e < basis.edge_row.size(); ++e)
            is_basic[basis.edge_row[e] * n + basis.edge_col[e]] = 1;
    };
    rebuild_basic_flags();

    const std::size_t max_pivots = 200 * m * n + 2000;
    std::size_t stalled = 0;
    bool use_bland = false;

    for (std::size_t pivot = 0;; ++pivot) {
        if (pivot > max_pivots)
            throw numerical_error("transportation simplex: pivot limit exceeded");
        basis.compute_duals(w.cost, u, v);

        // entering cell: most negative reduced cost; Bland's rule (first
        // negative in row-major order) once the objective stalls
        std::size_t enter_i = SIZE_MAX, enter_j = SIZE_MAX;
        double best = -kReducedCostTol;
        for (std::size_t i = 0; i < m && !(use_bland && enter_i != SIZE_MAX); ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (is_basic[i * n + j]) continue;
                double r = w.cost(i, j) - u[i] - v[j];
                if (use_bland) {
                    if (r < -kReducedCostTol) {
                        enter_i = i;
                        enter_j = j;
                        break;
                    }
                } else if (r < best) {
                    best = r;
                    enter_i = i;
                    enter_j = j;
                }
            }
        }
        if (enter_i == SIZE_MAX) break;  // dual feasible: optimal

        // cycle = entering cell + tree path col(enter_j) -> row(enter_i);
        // even path positions lose flow
        auto path = basis.path(basis.col_node(enter_j), enter_i);
        double theta = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < path.size(); k += 2)
            theta = std::min(theta, basis.edge_flow[path[k]]);
        std::size_t leave = SIZE_MAX;
        for (std::size_t k = 0; k < path.size(); k += 2) {
            std::size_t e = path[k];
            if (basis.edge_flow[e] > theta) continue;
            if (leave == SIZE_MAX ||
                std::make_pair(basis.edge_row[e], basis.edge_col[e]) <
                    std::make_pair(basis.edge_row[leave], basis.edge_col[leave]))
                leave = e;
        }
        if (leave == SIZE_MAX) throw numerical_error("transportation simplex: broken cycle");

        for (std::size_t k = 0; k < path.size(); ++k)
            basis.edge_flow[path[k]] += (k % 2 == 0) ? -theta : theta;

        is_basic[basis.edge_row[leave] * n + basis.edge_col[leave]] = 0;
        basis.remove_edge(leave);
        basis.add_edge(enter_i, enter_j, theta);
        is_basic[enter_i * n + enter_j] = 1;

        if (theta <= kPerturb) {
            if (++stalled > m * n + 10) use_bland = true;
        } else {
            stalled = 0;
        }
    }

    // final basis is optimal for the unperturbed problem too (same duals);
    // re-solve its flows exactly and clamp degenerate negatives
    std::vector<double> flows = basis.solve_flows(w.a, w.b);
    TransportPlan plan;
    plan.flow = Mat(m0, n0, 0.0);
    plan.total_cost = 0.0;
    for (std::size_t e = 0; e < basis.edge_row.size(); ++e) {
        std::size_t i = basis.edge_row[e], j = basis.edge_col[e];
        double f = flows[e];
        if (f < 0.0) {
            if (f < -1e-7) throw numerical_error("transportation simplex: infeasible basis flow");
            f = 0.0;
        }
        if (i < m0 && j < n0) {
            plan.flow(i, j) = f;
            plan.total_cost += w.cost(i, j) * f;
        }
    }
    plan.u.assign(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(m0));
    plan.v.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n0));
    return plan;
}

double emd_exact(const Vec& p, const Vec& t, const Mat& cost) {
    TransportProblem problem{p, t, cost};
    problem.validate();
    const double flow = std::min(vec_sum(p), vec_sum(t));
    if (flow <= 0.0)
        throw invalid_input_error("emd: undefined distance, total flow is zero");
    TransportPlan plan = solve_transport(problem);
    return plan.total_cost / flow;
}

}  // namespace emdloss
